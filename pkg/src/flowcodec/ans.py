"""Stack-based rANS coder with an auxiliary-bit reservoir.

State convention
----------------
The coder keeps a 64-bit integer state ``x`` plus a stack of 32-bit words.
``x`` starts at ``STATE_LOW = 2**32`` and stays in ``[2**32, 2**64)`` between
operations.  Encoding a symbol with mass ``freq`` out of ``2**r`` performs

    renormalise: while x >= freq << (64 - r): push low 32 bits, x >>= 32
    x = (x // freq) << r | (x % freq + cum)

and decoding is the exact inverse.  Decoding past the bottom of the word
stack draws fresh words from the seeded reservoir PRNG (lenient mode, the
default) or raises ``ReservoirExhausted`` (strict mode).

Bit accounting
--------------
``total_bits()`` is ``32 * len(words) + ceil(log2(x))``; a fresh stream with
``aux_words`` reservoir words therefore starts at ``32 * aux_words + 32``
bits.  ``net_bits()`` subtracts the auxiliary bits provided so far, so it is
0 on a fresh stream, may go negative mid-session, and equals the payload
size once a bits-back session is balanced.  If the reservoir grows on demand
the subtracted term grows with it.

Reservoir PRNG
--------------
xoshiro256** seeded through splitmix64 (Blackman & Vigna's reference
constants).  Each 64-bit output contributes its top 32 bits as one reservoir
word.  Both endpoints can regenerate the reservoir from (seed, word count);
the receiver never needs to, because unconsumed reservoir words travel at
the bottom of the flushed stack, but regeneration is the bit-exact
losslessness witness used by the tests and the decompressor.

Flush format
------------
``flush()`` emits the 8-byte little-endian final state followed by the word
stack bottom-first, each word little-endian 32-bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ReservoirExhausted, SymbolOutOfTable

__all__ = ["STATE_LOW", "SymbolTable", "AnsStream", "new_stream", "Xoshiro256"]

STATE_LOW = 1 << 32
_WORD_MASK = (1 << 32) - 1
_U64 = (1 << 64) - 1


class Xoshiro256:
    """xoshiro256** with splitmix64 seeding; ``next_word`` yields 32 bits."""

    def __init__(self, seed: int):
        s = seed & _U64
        state = []
        for _ in range(4):
            s = (s + 0x9E3779B97F4A7C15) & _U64
            z = s
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
            state.append(z ^ (z >> 31))
        self._s = state

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (((s1 * 5) & _U64) << 7 | ((s1 * 5) & _U64) >> 57) & _U64
        result = (result * 9) & _U64
        t = (s1 << 17) & _U64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = (s3 << 45 | s3 >> 19) & _U64
        self._s = [s0, s1, s2, s3]
        return result

    def next_word(self) -> int:
        return self.next_u64() >> 32


@dataclass(frozen=True)
class SymbolTable:
    """Integer probability table: ``freq[i]`` out of ``2**precision_r`` for
    symbol ``symbol_base + i``; ``cum`` holds the n+1 cumulative masses."""

    precision_r: int
    symbol_base: int
    freq: np.ndarray
    cum: np.ndarray

    @classmethod
    def from_freqs(cls, freqs, precision_r: int, symbol_base: int = 0) -> "SymbolTable":
        freq = np.asarray(freqs, dtype=np.int64)
        if freq.ndim != 1 or freq.size == 0:
            raise ValueError("freqs must be a non-empty 1-d array")
        if freq.min() < 1:
            raise ValueError("every symbol needs mass >= 1")
        if int(freq.sum()) != 1 << precision_r:
            raise ValueError(f"masses must sum to 2**{precision_r}")
        cum = np.zeros(freq.size + 1, dtype=np.int64)
        np.cumsum(freq, out=cum[1:])
        return cls(precision_r, symbol_base, freq, cum)

    def __len__(self) -> int:
        return self.freq.size

    def cost_bits(self, symbol: int) -> float:
        """Ideal codelength of ``symbol`` under this table."""
        i = symbol - self.symbol_base
        if not 0 <= i < self.freq.size:
            raise SymbolOutOfTable(f"symbol {symbol} outside table")
        return self.precision_r - float(np.log2(self.freq[i]))


class AnsStream:
    """Single-owner rANS stack; see the module docstring for conventions."""

    def __init__(self, seed: int = 0, aux_words: int = 0, strict: bool = False):
        if aux_words < 0:
            raise ValueError("aux_words must be >= 0")
        self.seed = seed
        self.strict = strict
        self.state = STATE_LOW
        self._prng = Xoshiro256(seed)
        draws = [self._prng.next_word() for _ in range(aux_words)]
        # stack top is the end of the list; pops must yield draws in order
        self.words: list[int] = draws[::-1]
        self.generated = aux_words
        self._peak_aux = 0

    # -- accounting ---------------------------------------------------------

    def total_bits(self) -> int:
        return 32 * len(self.words) + (self.state - 1).bit_length()

    @property
    def initial_bits(self) -> int:
        """Auxiliary bits provided so far (reservoir words plus state)."""
        return 32 * self.generated + 32

    def net_bits(self) -> int:
        return self.total_bits() - self.initial_bits

    @property
    def peak_aux_bits(self) -> int:
        """Deepest reservoir consumption seen so far, in bits."""
        return self._peak_aux

    def _note(self) -> None:
        depth = self.initial_bits - self.total_bits()
        if depth > self._peak_aux:
            self._peak_aux = depth

    # -- word stack ---------------------------------------------------------

    def _pop_word(self) -> int:
        if self.words:
            return self.words.pop()
        if self.strict:
            raise ReservoirExhausted("auxiliary reservoir depleted")
        self.generated += 1
        return self._prng.next_word()

    # -- symbol coding ------------------------------------------------------

    def encode_symbol(self, table: SymbolTable, symbol: int) -> None:
        i = symbol - table.symbol_base
        if not 0 <= i < table.freq.size:
            raise SymbolOutOfTable(f"symbol {symbol} outside table")
        f = int(table.freq[i])
        c = int(table.cum[i])
        r = table.precision_r
        x = self.state
        limit = f << (64 - r)
        while x >= limit:
            self.words.append(x & _WORD_MASK)
            x >>= 32
        self.state = ((x // f) << r) + (x % f) + c
        self._note()

    def decode_symbol(self, table: SymbolTable) -> int:
        r = table.precision_r
        slot = self.state & ((1 << r) - 1)
        i = int(np.searchsorted(table.cum, slot, side="right")) - 1
        f = int(table.freq[i])
        c = int(table.cum[i])
        x = f * (self.state >> r) + slot - c
        while x < STATE_LOW:
            x = (x << 32) | self._pop_word()
        self.state = x
        self._note()
        return table.symbol_base + i

    # -- raw uniform bits (freq-1 table fast path) ---------------------------

    def encode_bits(self, value: int, nbits: int) -> None:
        """Push ``nbits`` raw bits; identical to a uniform table of size
        ``2**nbits`` with unit masses."""
        if not 0 < nbits <= 32:
            raise ValueError("nbits must be in [1, 32]")
        if not 0 <= value < (1 << nbits):
            raise SymbolOutOfTable(f"{value} does not fit in {nbits} bits")
        x = self.state
        limit = 1 << (64 - nbits)
        while x >= limit:
            self.words.append(x & _WORD_MASK)
            x >>= 32
        self.state = (x << nbits) | value
        self._note()

    def decode_bits(self, nbits: int) -> int:
        if not 0 < nbits <= 32:
            raise ValueError("nbits must be in [1, 32]")
        value = self.state & ((1 << nbits) - 1)
        x = self.state >> nbits
        while x < STATE_LOW:
            x = (x << 32) | self._pop_word()
        self.state = x
        self._note()
        return value

    # -- serialisation and the losslessness witness --------------------------

    def flush(self) -> bytes:
        out = bytearray(struct.pack("<Q", self.state))
        for w in self.words:
            out += struct.pack("<I", w)
        return bytes(out)

    @classmethod
    def from_payload(cls, payload: bytes, seed: int = 0, generated: int = 0,
                     strict: bool = True) -> "AnsStream":
        if len(payload) < 8 or (len(payload) - 8) % 4 != 0:
            raise ValueError("payload must be 8 + 4*n bytes")
        stream = cls(seed=seed, aux_words=0, strict=strict)
        stream.state = struct.unpack("<Q", payload[:8])[0]
        stream.words = [w[0] for w in struct.iter_unpack("<I", payload[8:])]
        stream.generated = generated
        # replay the PRNG so lenient extension would continue the sequence
        for _ in range(generated):
            stream._prng.next_word()
        return stream

    def reservoir_restored(self) -> bool:
        """True iff the stream is bit-exactly the reservoir that a fresh
        stream with ``aux_words = self.generated`` would hold."""
        if self.state != STATE_LOW:
            return False
        ref = Xoshiro256(self.seed)
        expect = [ref.next_word() for _ in range(self.generated)][::-1]
        return self.words == expect


def new_stream(seed: int = 0, aux_words: int = 0, strict: bool = False) -> AnsStream:
    """Fresh stream seeded with ``aux_words`` reservoir words."""
    return AnsStream(seed=seed, aux_words=aux_words, strict=strict)
