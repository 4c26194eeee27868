"""Unique window size (UWS) of binary sequences.

The UWS of a sequence is the smallest window length ``w`` for which every
length-``w`` sliding window is distinct. A window length fails exactly when
some factor of that length occurs twice, so the UWS is one more than the
length of the longest repeated factor. That length is read off a suffix
automaton in linear time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import numba
import numpy as np

from .errors import ResourceError

Mode = Literal["linear", "cyclic"]

BRUTE_FORCE_MAX_LENGTH = 1 << 16
# inputs up to this length build the automaton in the interpreter; longer ones use the JIT
JIT_THRESHOLD = 64


@dataclass(frozen=True)
class UwsResult:
    uws: int
    longest_repeated_factor_length: int
    witness: Optional[str] = None
    mode: str = "linear"

    def __post_init__(self):
        assert self.uws == self.longest_repeated_factor_length + 1


def as_bit_array(bits) -> np.ndarray:
    """Coerce an ASCII ``"0101"`` string, bytes, or 0/1 sequence to a ``uint8`` array."""
    if isinstance(bits, str):
        bits = bits.encode("ascii")
    if isinstance(bits, (bytes, bytearray)):
        arr = np.frombuffer(bytes(bits), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1:
            raise ValueError("bit sequence must be one-dimensional")
    if arr.size and arr.max() > 1:
        raise ValueError("bit sequence may contain only 0 and 1")
    return arr


def _build_sam(s, n, length, link, nxt, firstpos, clone_flag):
    # Suffix automaton over {0, 1}; nxt is flat with nxt[2*v + c].
    # Works on Python lists or numpy arrays alike. Returns the state count.
    size = 1
    last = 0
    link[0] = -1
    for i in range(n):
        c = s[i]
        cur = size
        size += 1
        length[cur] = length[last] + 1
        firstpos[cur] = i
        p = last
        while p != -1 and nxt[2 * p + c] == -1:
            nxt[2 * p + c] = cur
            p = link[p]
        if p == -1:
            link[cur] = 0
        else:
            q = nxt[2 * p + c]
            if length[p] + 1 == length[q]:
                link[cur] = q
            else:
                cl = size
                size += 1
                length[cl] = length[p] + 1
                nxt[2 * cl] = nxt[2 * q]
                nxt[2 * cl + 1] = nxt[2 * q + 1]
                link[cl] = link[q]
                firstpos[cl] = firstpos[q]
                clone_flag[cl] = 1
                while p != -1 and nxt[2 * p + c] == q:
                    nxt[2 * p + c] = cl
                    p = link[p]
                link[q] = cl
                link[cur] = cl
        last = cur
    return size


_build_sam_jit = numba.njit(cache=True, nogil=True)(_build_sam)


def _automaton(arr: np.ndarray, backend: str):
    n = int(arr.size)
    cap = 2 * n + 1
    if backend == "auto":
        backend = "python" if n <= JIT_THRESHOLD else "jit"
    if backend == "python":
        length = [0] * cap
        link = [0] * cap
        nxt = [-1] * (2 * cap)
        firstpos = [0] * cap
        clone_flag = [0] * cap
        size = _build_sam(arr.tolist(), n, length, link, nxt, firstpos, clone_flag)
        return (size, np.array(length[:size], dtype=np.int64), np.array(link[:size], dtype=np.int64),
                np.array(firstpos[:size], dtype=np.int64), np.array(clone_flag[:size], dtype=np.uint8))
    if backend != "jit":
        raise ValueError(f"unknown backend {backend!r}")
    length = np.zeros(cap, dtype=np.int32)
    link = np.zeros(cap, dtype=np.int32)
    nxt = np.full(2 * cap, -1, dtype=np.int32)
    firstpos = np.zeros(cap, dtype=np.int32)
    clone_flag = np.zeros(cap, dtype=np.uint8)
    size = _build_sam_jit(arr, n, length, link, nxt, firstpos, clone_flag)
    return size, length[:size], link[:size], firstpos[:size], clone_flag[:size]


def _lrf(arr: np.ndarray, want_witness: bool = True, backend: str = "auto") -> tuple[int, Optional[str]]:
    if arr.size == 0:
        return 0, ("" if want_witness else None)
    size, length, link, firstpos, clone_flag = _automaton(arr, backend)
    # A state's end-position set has >= 2 members iff it is a clone or some
    # other state links to it.
    repeated = clone_flag.astype(bool)
    repeated[link[1:]] = True
    repeated[0] = False
    if not repeated.any():
        return 0, ("" if want_witness else None)
    best = int(length[repeated].max())
    if not want_witness:
        return best, None
    ends = firstpos[repeated & (length == best)]
    raw = arr.tobytes()
    witness = min(raw[e - best + 1:e + 1] for e in ends.tolist())
    return best, bytes(b + 48 for b in witness).decode("ascii")


def longest_repeated_factor(bits, backend: str = "auto") -> tuple[int, str]:
    """Length of the longest factor occurring at least twice (overlaps allowed).

    When several factors attain the maximum, the lexicographically least is
    returned as the witness.
    """
    return _lrf(as_bit_array(bits), True, backend)


def uws_linear(bits, witness: bool = True, backend: str = "auto") -> UwsResult:
    arr = as_bit_array(bits)
    if arr.size == 0:
        raise ValueError("UWS of an empty sequence is undefined")
    lrf, wit = _lrf(arr, witness, backend)
    return UwsResult(lrf + 1, lrf, wit, "linear")


def is_primitive_word(arr: np.ndarray) -> bool:
    """True when the word is not a power of a shorter word, i.e. its cyclic period is its length."""
    raw = arr.tobytes()
    return (raw + raw).find(raw, 1) == len(raw)


def uws_cyclic(bits, witness: bool = True, backend: str = "auto") -> UwsResult:
    """UWS with windows wrapping around the end of the sequence.

    Starting from the linear UWS as a lower bound ``w``, the automaton is
    built on the sequence extended by its first ``w - 1`` symbols. Every
    repeat of length >= ``w`` found there is a genuine repeat between two
    distinct cyclic windows, so ``w`` is raised past it until no such repeat
    remains.
    """
    arr = as_bit_array(bits)
    n = arr.size
    if n == 0:
        raise ValueError("UWS of an empty sequence is undefined")
    if not is_primitive_word(arr):
        raise ValueError("sequence is not aperiodic over its length")
    w, _ = _lrf(arr, False, backend)
    w += 1
    while True:
        ext = np.concatenate([arr, arr[:w - 1]])
        lrf, _ = _lrf(ext, False, backend)
        if lrf < w:
            break
        w = lrf + 1
    wit = None
    if witness:
        if w == 1:
            wit = ""
        else:
            # windows of length w-1 on this extension start only at 0..n-1
            lrf, wit = _lrf(np.concatenate([arr, arr[:w - 2]]), True, backend)
            assert lrf == w - 1
    return UwsResult(w, w - 1, wit, "cyclic")


def brute_force_uws(bits, mode: Mode = "linear") -> UwsResult:
    """Reference UWS: try window lengths 1, 2, ... and look for duplicates in a set."""
    arr = as_bit_array(bits)
    n = arr.size
    if n == 0:
        raise ValueError("UWS of an empty sequence is undefined")
    if n > BRUTE_FORCE_MAX_LENGTH:
        raise ResourceError(f"brute force is limited to {BRUTE_FORCE_MAX_LENGTH} bits, got {n}")
    s = arr.tobytes()
    if mode == "linear":
        text, starts = s, n
    elif mode == "cyclic":
        if not is_primitive_word(arr):
            raise ValueError("sequence is not aperiodic over its length")
        text, starts = s + s, n
    else:
        raise ValueError(f"unknown mode {mode!r}")

    def distinct(w):
        count = starts if mode == "cyclic" else n - w + 1
        return len({text[i:i + w] for i in range(count)}) == count

    for w in range(1, n + 1):
        if distinct(w):
            # uniqueness is monotone in the window length
            assert w == n or distinct(w + 1)
            witness = _brute_witness(text, w - 1, starts if mode == "cyclic" else n - w + 2)
            return UwsResult(w, w - 1, witness, mode)
    raise AssertionError("unreachable: the full-length window is always unique")


def _brute_witness(text: bytes, length: int, count: int) -> str:
    if length == 0:
        return ""
    seen, repeats = set(), set()
    for i in range(count):
        f = text[i:i + length]
        if f in seen:
            repeats.add(f)
        seen.add(f)
    return bytes(b + 48 for b in min(repeats)).decode("ascii")
