"""Exception hierarchy shared by all flowcodec modules."""


class CodecError(Exception):
    """Base class for all recoverable coding errors."""


class SymbolOutOfTable(CodecError):
    """Symbol index outside the table's [symbol_base, symbol_base + n) range."""


class ReservoirExhausted(CodecError):
    """Strict-mode stream ran out of auxiliary words during a decode."""


class DegenerateStddev(CodecError):
    """Gaussian bin spec with stddev * 2**k below the representable floor."""


class WindowTooLarge(CodecError):
    """Single-level table would need more bins than 2**r, so a minimum
    mass of 1 per bin cannot be honoured."""


class OutOfSupport(CodecError):
    """Encode-side symbol fell outside the table's support window.

    This signals inconsistent (sigma, T, k) choices rather than bad data;
    coding aborts instead of silently degrading.
    """


class DimensionMismatch(CodecError):
    """Vector length does not match the layer/model dimension."""


class NonInvertible(CodecError):
    """Linear layer whose determinant magnitude is below 1e-12."""


class UnsupportedLayer(CodecError):
    """Operation not defined for this layer variant."""


class NotPositiveDefinite(CodecError):
    """J @ J.T had no Cholesky factor; no jitter is applied on purpose."""


class OutOfRange(CodecError):
    """Integer datapoint exceeds the declared bit depth."""


class FormatError(CodecError):
    """Base class for file-format errors."""


class BadMagic(FormatError):
    """File does not start with the expected magic bytes."""


class VersionMismatch(FormatError):
    """File version not supported by this reader."""


class CorruptTensor(FormatError):
    """Tensor payload truncated or inconsistent with its header."""


class HashMismatch(FormatError):
    """Archive was produced with a different model file."""


class CorruptArchive(FormatError):
    """Archive container is structurally invalid."""
