"""Deterministic integer tables for Gaussians discretized to width 2**-k.

Grid convention
---------------
Coordinate ``x`` lives in bin ``n = floor(x * 2**k)`` whose center is
``(n + 1/2) * 2**-k``.  Bin centers are exact in float64 for ``|n| < 2**52``,
so quantize/value round-trips are bit-exact.

Table construction
------------------
A ``GaussianBinSpec`` names a window of bins reaching ``T`` standard
deviations either side of the mean.  Each window bin gets the exact CDF mass
``Phi(hi) - Phi(lo)`` (not the density-times-width approximation), computed
through ``erfc`` on the half-line so that mirrored windows produce
bit-identical mirrored masses.  Masses are normalised to exactly ``2**r`` by
largest-remainder rounding with stable index-order tie-breaking; bins that
would round to zero are clamped to mass 1, with the deficit taken from the
largest bins (water-filling, again index-stable).

Wide windows
------------
``stddev * 2**k`` can reach 2**32, far beyond any materialisable table, so
the scalar coder splits the bin index into a coarse Gaussian-coded part and
``offset_bits`` raw uniform bits whenever the window would exceed
``SPLIT_BINS_PER_SD`` bins per standard deviation.  Within a coarse bin the
conditional distribution is uniform to O((coarse width / stddev)**2), which
at 64 bins per standard deviation costs under 2**-14 bits per coordinate.
Both endpoints derive the split from the spec alone, so the scheme stays
bit-exact and lossless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from .ans import AnsStream, SymbolTable
from .errors import DegenerateStddev, OutOfSupport, SymbolOutOfTable, WindowTooLarge

__all__ = [
    "GridPoint",
    "quantize",
    "GaussianBinSpec",
    "build_table",
    "encode_gaussian",
    "decode_gaussian",
    "gaussian_cost_bits",
]

SPLIT_BINS_PER_SD = 64
_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class GridPoint:
    """Fixed-point vector: signed bin indices at precision k."""

    __slots__ = ("indices", "k")

    def __init__(self, indices, k: int):
        self.indices = np.asarray(indices, dtype=np.int64)
        self.k = int(k)

    def value(self) -> np.ndarray:
        """Bin centers ``(n + 1/2) * 2**-k`` (exact for |n| < 2**52)."""
        return (self.indices.astype(np.float64) + 0.5) * math.ldexp(1.0, -self.k)

    def __eq__(self, other) -> bool:
        return (isinstance(other, GridPoint) and self.k == other.k
                and np.array_equal(self.indices, other.indices))

    def __repr__(self) -> str:
        return f"GridPoint(k={self.k}, indices={self.indices!r})"


def quantize(x, k: int) -> GridPoint:
    """Map real coordinates to their bin indices ``floor(x * 2**k)``."""
    x = np.asarray(x, dtype=np.float64)
    scaled = x * math.ldexp(1.0, k)
    if not np.all(np.abs(scaled) < float(1 << 62)):
        raise OverflowError("|x| * 2**k exceeds the 62-bit index budget")
    return GridPoint(np.floor(scaled).astype(np.int64), k)


@dataclass(frozen=True)
class GaussianBinSpec:
    """Gaussian N(mean, stddev**2) discretized to width 2**-k, coded with a
    2**r-mass table over a window of +-T standard deviations."""

    mean: float
    stddev: float
    k: int
    r: int = 24
    T: float = 16.0

    def __post_init__(self):
        if not (self.stddev > 0.0 and math.isfinite(self.stddev)):
            raise DegenerateStddev(f"stddev {self.stddev} not positive finite")
        if not math.isfinite(self.mean):
            raise DegenerateStddev("mean must be finite")
        if self.bins_per_sd < math.ldexp(1.0, -20):
            raise DegenerateStddev("stddev * 2**k below 2**-20")

    @property
    def bins_per_sd(self) -> float:
        return self.stddev * math.ldexp(1.0, self.k)

    @property
    def offset_bits(self) -> int:
        """Raw low bits split off so the coarse table stays small."""
        m = max(0, math.ceil(math.log2(self.bins_per_sd / SPLIT_BINS_PER_SD)))
        return min(m, self.k + 62)  # keep the coarse grid meaningful

    def coarse(self) -> "GaussianBinSpec":
        return GaussianBinSpec(self.mean, self.stddev, self.k - self.offset_bits,
                               self.r, self.T)

    def window(self) -> tuple[int, int]:
        """(first bin index, bin count), symmetric about the mean in value."""
        scale = math.ldexp(1.0, self.k)
        lo = math.floor((self.mean - self.T * self.stddev) * scale)
        hi = math.ceil((self.mean + self.T * self.stddev) * scale) - 1
        if hi < lo:
            hi = lo
        return lo, hi - lo + 1


def _window_masses(spec: GaussianBinSpec) -> tuple[int, np.ndarray]:
    lo, count = spec.window()
    w = math.ldexp(1.0, -spec.k)
    edges = (np.arange(lo, lo + count + 1, dtype=np.int64).astype(np.float64) * w
             - spec.mean) / spec.stddev
    a, b = edges[:-1], edges[1:]
    # half-line evaluation keeps mirrored bins bit-identical
    right = 0.5 * (erfc(a * _INV_SQRT2) - erfc(b * _INV_SQRT2))
    left = 0.5 * (erfc(-b * _INV_SQRT2) - erfc(-a * _INV_SQRT2))
    masses = np.where(a + b >= 0.0, right, left)
    return lo, np.maximum(masses, 0.0)


def _waterfill_steal(freq: np.ndarray, deficit: int) -> None:
    """Remove ``deficit`` units from the largest entries in place, keeping
    every entry >= 1; ties resolved by index order."""
    order = np.argsort(-freq, kind="stable")
    v = freq[order]
    prefix = np.cumsum(v)

    def removable(level: int) -> int:
        c = int(np.searchsorted(-v, -level, side="left"))  # entries > level
        return int(prefix[c - 1]) - c * level if c else 0

    if removable(1) < deficit:
        raise WindowTooLarge("cannot keep minimum mass 1 after stealing")
    lo_l, hi_l = 1, int(v[0])
    while lo_l < hi_l:  # largest level still covering the deficit
        mid = (lo_l + hi_l + 1) // 2
        if removable(mid) >= deficit:
            lo_l = mid
        else:
            hi_l = mid - 1
    level = lo_l
    c = int(np.searchsorted(-v, -level, side="left"))
    surplus = removable(level) - deficit
    idx = order[:c]
    freq[idx] = level
    if surplus:
        freq[idx[:surplus]] += 1


def _build_table_uncached(spec: GaussianBinSpec) -> SymbolTable:
    lo, count = spec.window()
    if count > (1 << spec.r):
        raise WindowTooLarge(f"{count} window bins exceed 2**{spec.r}")
    _, masses = _window_masses(spec)
    total = float(masses.sum())
    if not (total > 0.0 and math.isfinite(total)):
        raise DegenerateStddev("window carries no probability mass")
    ideal = masses / total * float(1 << spec.r)
    freq = np.floor(ideal).astype(np.int64)
    remainder = ideal - freq
    missing = (1 << spec.r) - int(freq.sum())
    if missing > 0:
        take = np.argsort(-remainder, kind="stable")[:missing]
        freq[take] += 1
    zeros = int((freq == 0).sum())
    if zeros:
        freq[freq == 0] = 1
        _waterfill_steal(freq, zeros)
    return SymbolTable.from_freqs(freq, spec.r, symbol_base=lo)


@lru_cache(maxsize=512)
def _build_table_cached(spec: GaussianBinSpec) -> SymbolTable:
    return _build_table_uncached(spec)


def build_table(spec: GaussianBinSpec) -> SymbolTable:
    """Single-level table over the spec's window (pure and deterministic)."""
    return _build_table_cached(spec)


def _uniform_encode(stream: AnsStream, value: int, nbits: int) -> None:
    while nbits > 0:
        take = min(nbits, 16)
        stream.encode_bits(value & ((1 << take) - 1), take)
        value >>= take
        nbits -= take


def _uniform_decode(stream: AnsStream, nbits: int) -> int:
    chunks = []
    n = nbits
    while n > 0:
        chunks.append(min(n, 16))
        n -= chunks[-1]
    # chunks were pushed LSB-first, so they pop MSB-first
    value = 0
    for take in reversed(chunks):
        value = (value << take) | stream.decode_bits(take)
    return value


def encode_gaussian(stream: AnsStream, spec: GaussianBinSpec, index: int) -> None:
    """Push one bin index drawn on spec's grid; raises OutOfSupport when the
    index falls outside the +-T window."""
    index = int(index)
    m = spec.offset_bits
    if m == 0:
        try:
            stream.encode_symbol(build_table(spec), index)
        except SymbolOutOfTable as exc:
            raise OutOfSupport(str(exc)) from exc
        return
    coarse_spec = spec.coarse()
    q, offset = index >> m, index & ((1 << m) - 1)
    _uniform_encode(stream, offset, m)
    try:
        stream.encode_symbol(build_table(coarse_spec), q)
    except SymbolOutOfTable as exc:
        raise OutOfSupport(str(exc)) from exc


def decode_gaussian(stream: AnsStream, spec: GaussianBinSpec) -> int:
    """Pop one bin index; always lands inside the support window."""
    m = spec.offset_bits
    if m == 0:
        return stream.decode_symbol(build_table(spec))
    q = stream.decode_symbol(build_table(spec.coarse()))
    offset = _uniform_decode(stream, m)
    return (q << m) | offset


def gaussian_cost_bits(spec: GaussianBinSpec, index: int) -> float:
    """Ideal codelength of ``index`` under the (possibly split) table."""
    m = spec.offset_bits
    if m == 0:
        return build_table(spec).cost_bits(int(index))
    return build_table(spec.coarse()).cost_bits(int(index) >> m) + m
