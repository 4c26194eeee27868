"""Fibonacci LFSRs and the shrinking generator.

Register state is held in an int: bit ``i`` is ``s_i`` and ``s_0`` is the
oldest bit, the next one to be emitted. A feedback polynomial
``x^n + ... + c_1 x + 1`` drives the recurrence

    s_{t+n} = XOR of s_{t+i} over all 0 <= i < n with c_{n-i} = 1,

so the term ``x^k`` taps the bit ``k`` places behind the incoming one. This
is the convention under which the two registers ``x^2+x+1`` (input) and
``x^5+x^3+x^2+x+1`` (control) produce the well-known 48-bit keystream with a
unique window size of 15.
"""

from __future__ import annotations

from typing import Iterator, Sequence, Union

import numpy as np

from .errors import ResourceError
from .gf2poly import BinaryPolynomial, is_primitive

DEFAULT_BIT_BUDGET = 1 << 26

Seed = Union[int, Sequence[int], None]


def _tap_mask(poly: BinaryPolynomial) -> int:
    n = poly.degree
    taps = 0
    for i in range(n):
        if (poly.mask >> (n - i)) & 1:
            taps |= 1 << i
    return taps


def seed_to_int(seed: Seed, n: int) -> int:
    """Normalise a seed (bit sequence ``s_0..s_{n-1}`` or int) to an int state.

    ``None`` selects the all-ones state.
    """
    if seed is None:
        return (1 << n) - 1
    if isinstance(seed, (int, np.integer)):
        state = int(seed)
        if state >> n:
            raise ValueError(f"seed {state:#x} does not fit a {n}-bit register")
        return state
    bits = list(seed)
    if len(bits) != n:
        raise ValueError(f"seed has {len(bits)} bits, register has {n}")
    state = 0
    for i, b in enumerate(bits):
        if b not in (0, 1):
            raise ValueError(f"seed bits must be 0 or 1, got {b!r}")
        state |= b << i
    return state


class Lfsr:
    def __init__(self, feedback: BinaryPolynomial, seed: Seed = None):
        n = feedback.degree
        if n < 2 or not feedback.mask & 1:
            raise ValueError(f"feedback polynomial {feedback} needs degree >= 2 and constant term 1")
        state = seed_to_int(seed, n)
        if state == 0:
            raise ValueError("LFSR state must be nonzero")
        self.feedback = feedback
        self.n = n
        self.state = state
        self._taps = _tap_mask(feedback)

    @property
    def bits(self) -> list[int]:
        """Current state as ``[s_0, ..., s_{n-1}]``."""
        return [(self.state >> i) & 1 for i in range(self.n)]

    def next(self) -> int:
        s = self.state
        out = s & 1
        fb = bin(s & self._taps).count("1") & 1
        self.state = (s >> 1) | (fb << (self.n - 1))
        return out

    def __iter__(self) -> Iterator[int]:
        while True:
            yield self.next()

    def take(self, count: int) -> np.ndarray:
        out = np.empty(count, dtype=np.uint8)
        for i in range(count):
            out[i] = self.next()
        return out


def lfsr_next(lfsr: Lfsr) -> int:
    return lfsr.next()


class ShrinkingGenerator:
    """Two LFSRs clocked together; the control register decides which input bits survive."""

    def __init__(self, input_poly: BinaryPolynomial, control_poly: BinaryPolynomial,
                 input_seed: Seed = None, control_seed: Seed = None):
        self.input_lfsr = Lfsr(input_poly, input_seed)
        self.control_lfsr = Lfsr(control_poly, control_seed)

    @property
    def sg_degree(self) -> int:
        return self.input_lfsr.n + self.control_lfsr.n

    def clock(self) -> int | None:
        """Clock both registers once; return the keystream bit or ``None`` if discarded."""
        a = self.input_lfsr.next()
        b = self.control_lfsr.next()
        return a if b else None

    def next(self) -> int:
        while True:
            bit = self.clock()
            if bit is not None:
                return bit

    def take(self, count: int) -> np.ndarray:
        out = np.empty(count, dtype=np.uint8)
        for i in range(count):
            out[i] = self.next()
        return out


def sg_next(sg: ShrinkingGenerator) -> int:
    return sg.next()


def sg_period_length(input_degree: int, control_degree: int) -> int:
    return ((1 << input_degree) - 1) << (control_degree - 1)


def sg_period_array(input_poly: BinaryPolynomial, control_poly: BinaryPolynomial,
                    input_seed: Seed = None, control_seed: Seed = None,
                    bit_budget: int = DEFAULT_BIT_BUDGET) -> np.ndarray:
    """One full shrinking-generator period as a ``uint8`` array.

    Equivalent to clocking both registers ``(2^a - 1)(2^b - 1)`` times, but
    computed from one period of each m-sequence: at clock ``t`` the input bit
    is ``A[t mod Pa]`` and the control bit is ``B[t mod Pb]``.
    """
    for role, poly in (("input", input_poly), ("control", control_poly)):
        if not is_primitive(poly):
            raise ValueError(f"{role} polynomial {poly} is not primitive")
    a, b = input_poly.degree, control_poly.degree
    length = sg_period_length(a, b)
    if length > bit_budget:
        raise ResourceError(
            f"period of {length} bits for ({input_poly}, {control_poly}) exceeds budget {bit_budget}")
    pa, pb = (1 << a) - 1, (1 << b) - 1
    seq_a = Lfsr(input_poly, input_seed).take(pa)
    seq_b = Lfsr(control_poly, control_seed).take(pb)
    selected = np.flatnonzero(seq_b).astype(np.int64)
    out = np.empty(length, dtype=np.uint8)
    # clock t = k*pb + j for k in [0, pa), j in selected
    rows_per_chunk = max(1, (1 << 22) // max(1, selected.size))
    pos = 0
    for k0 in range(0, pa, rows_per_chunk):
        k = np.arange(k0, min(pa, k0 + rows_per_chunk), dtype=np.int64)
        idx = (k[:, None] * pb + selected[None, :]) % pa
        chunk = seq_a[idx.ravel()]
        out[pos:pos + chunk.size] = chunk
        pos += chunk.size
    return out


def sg_full_period(input_poly: BinaryPolynomial, control_poly: BinaryPolynomial,
                   input_seed: Seed = None, control_seed: Seed = None,
                   bit_budget: int = DEFAULT_BIT_BUDGET) -> str:
    """One full output period, ``(2^a - 1) * 2^(b-1)`` bits, as an ASCII 0/1 string."""
    arr = sg_period_array(input_poly, control_poly, input_seed, control_seed, bit_budget)
    return bits_to_str(arr)


def bits_to_str(arr: np.ndarray) -> str:
    return (np.asarray(arr, dtype=np.uint8) + ord("0")).tobytes().decode("ascii")


def canonical_rotation(bits: str) -> str:
    """Lexicographically least rotation (Booth's algorithm, linear time)."""
    if not bits:
        raise ValueError("canonical_rotation of an empty string")
    s = bits + bits
    n = len(s)
    f = [-1] * n
    k = 0
    for j in range(1, n):
        c = s[j]
        i = f[j - k - 1]
        while i != -1 and c != s[k + i + 1]:
            if c < s[k + i + 1]:
                k = j - i - 1
            i = f[i]
        if c != s[k + i + 1]:
            if c < s[k]:
                k = j
            f[j - k] = -1
        else:
            f[j - k] = i + 1
    return s[k:k + len(bits)]
