"""Polynomials over GF(2) stored as integer bit masks.

Bit ``i`` of the mask is the coefficient of ``x^i``, so ``x^4 + x + 1`` is
``0b10011``. Arithmetic is carry-less: addition is XOR, multiplication is
shift-and-XOR, reduction is long division with XOR.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

from .errors import ParseError

MAX_PRIMITIVE_TEST_DEGREE = 32
MAX_ENUMERATION_DEGREE = 24

_TERM_RE = re.compile(r"^(?:x(?:\^(\d+))?|1)$")


@dataclass(frozen=True, order=True)
class BinaryPolynomial:
    mask: int

    def __post_init__(self):
        if self.mask < 0:
            raise ValueError("coefficient mask must be non-negative")

    @property
    def degree(self) -> int:
        """Index of the highest set bit; -1 for the zero polynomial."""
        return self.mask.bit_length() - 1

    @property
    def weight(self) -> int:
        """Number of nonzero coefficients, constant term included."""
        return bin(self.mask).count("1")

    def exponents(self) -> list[int]:
        """Exponents with a nonzero coefficient, highest first."""
        return [i for i in range(self.degree, -1, -1) if (self.mask >> i) & 1]

    def __str__(self) -> str:
        return format_polynomial(self)


X = BinaryPolynomial(0b10)
ONE = BinaryPolynomial(1)


@dataclass(frozen=True)
class MersenneFactorization:
    n: int
    prime_factors: frozenset

    @property
    def value(self) -> int:
        return (1 << self.n) - 1

    def totient(self) -> int:
        """Euler's phi of 2^n - 1."""
        phi = self.value
        for p in self.prime_factors:
            phi = phi // p * (p - 1)
        return phi


def parse_polynomial(text: str) -> BinaryPolynomial:
    """Parse ``"x^5+x^3+x^2+x+1"`` style notation into a polynomial.

    Whitespace and an upper-case ``X`` are accepted. Each exponent may appear
    only once.
    """
    cleaned = re.sub(r"\s+", "", text).lower()
    if not cleaned:
        raise ParseError("empty polynomial")
    mask = 0
    for term in cleaned.split("+"):
        m = _TERM_RE.match(term)
        if m is None:
            raise ParseError(f"cannot parse term {term!r} in {text!r}")
        if term == "1":
            exp = 0
        elif m.group(1) is None:
            exp = 1
        else:
            exp = int(m.group(1))
        if (mask >> exp) & 1:
            raise ParseError(f"duplicate exponent {exp} in {text!r}")
        mask |= 1 << exp
    poly = BinaryPolynomial(mask)
    if poly.degree < 1:
        raise ValueError(f"polynomial {text!r} has degree < 1")
    return poly


def format_polynomial(p: BinaryPolynomial) -> str:
    if p.mask == 0:
        return "0"
    terms = []
    for e in p.exponents():
        if e == 0:
            terms.append("1")
        elif e == 1:
            terms.append("x")
        else:
            terms.append(f"x^{e}")
    return "+".join(terms)


def _mod(a: int, m: int) -> int:
    dm = m.bit_length() - 1
    while True:
        shift = a.bit_length() - 1 - dm
        if shift < 0:
            return a
        a ^= m << shift


def _mulmod(a: int, b: int, m: int) -> int:
    # a and b must already be reduced modulo m
    n = m.bit_length() - 1
    top = 1 << n
    r = 0
    for i in range(b.bit_length() - 1, -1, -1):
        r <<= 1
        if r & top:
            r ^= m
        if (b >> i) & 1:
            r ^= a
    return r


def _powmod(base: int, e: int, m: int) -> int:
    result = _mod(1, m)
    base = _mod(base, m)
    for i in range(e.bit_length() - 1, -1, -1):
        result = _mulmod(result, result, m)
        if (e >> i) & 1:
            result = _mulmod(result, base, m)
    return result


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, _mod(a, b)
    return a


def _check_modulus(m: BinaryPolynomial):
    if m.mask == 0:
        raise ZeroDivisionError("modulus is the zero polynomial")
    if m.degree < 1:
        raise ValueError("modulus must have degree >= 1")


def poly_mod_mul(a: BinaryPolynomial, b: BinaryPolynomial, m: BinaryPolynomial) -> BinaryPolynomial:
    _check_modulus(m)
    return BinaryPolynomial(_mulmod(_mod(a.mask, m.mask), _mod(b.mask, m.mask), m.mask))


def poly_mod_pow(base: BinaryPolynomial, e: int, m: BinaryPolynomial) -> BinaryPolynomial:
    """``base^e mod m`` by left-to-right square-and-multiply."""
    _check_modulus(m)
    if e < 0:
        raise ValueError("exponent must be non-negative")
    return BinaryPolynomial(_powmod(base.mask, e, m.mask))


def _prime_divisors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


@lru_cache(maxsize=None)
def factor_mersenne(n: int) -> MersenneFactorization:
    """Distinct prime factors of ``2^n - 1`` by trial division."""
    if not 1 <= n <= MAX_PRIMITIVE_TEST_DEGREE:
        raise ValueError(f"factor_mersenne supports 1 <= n <= {MAX_PRIMITIVE_TEST_DEGREE}, got {n}")
    return MersenneFactorization(n, frozenset(_prime_divisors((1 << n) - 1)))


def is_irreducible(p: BinaryPolynomial) -> bool:
    """Rabin's test: ``x^(2^n) = x mod p`` and ``gcd(x^(2^(n/q)) - x, p) = 1`` for primes ``q | n``."""
    n = p.degree
    if n < 1:
        raise ValueError("irreducibility is defined for degree >= 1")
    m = p.mask
    x = _mod(0b10, m)

    def frobenius(k):
        # x^(2^k) mod p by k squarings
        r = x
        for _ in range(k):
            r = _mulmod(r, r, m)
        return r

    if frobenius(n) != x:
        return False
    for q in _prime_divisors(n):
        if _gcd(m, frobenius(n // q) ^ x) != 1:
            return False
    return True


def is_primitive(p: BinaryPolynomial) -> bool:
    n = p.degree
    if not 2 <= n <= MAX_PRIMITIVE_TEST_DEGREE:
        raise ValueError(f"primitivity test supports degrees 2..{MAX_PRIMITIVE_TEST_DEGREE}, got {n}")
    m = p.mask
    if not m & 1:
        return False
    order = (1 << n) - 1
    if _powmod(0b10, order, m) != 1:
        return False
    for q in factor_mersenne(n).prime_factors:
        if _powmod(0b10, order // q, m) == 1:
            return False
    return is_irreducible(p)


def primitive_count(n: int) -> int:
    """Closed form phi(2^n - 1) / n."""
    return factor_mersenne(n).totient() // n


@lru_cache(maxsize=None)
def _enumerate_masks(n: int) -> tuple[int, ...]:
    base = (1 << n) | 1
    out = []
    for middle in range(1 << (n - 1)):
        mask = base | (middle << 1)
        # even weight means x + 1 divides the polynomial
        if bin(mask).count("1") % 2 == 0:
            continue
        if is_primitive(BinaryPolynomial(mask)):
            out.append(mask)
    return tuple(out)


def enumerate_primitive(n: int, max_degree: int = MAX_ENUMERATION_DEGREE) -> list[BinaryPolynomial]:
    """All primitive polynomials of degree ``n``, ascending by mask."""
    if not 2 <= n <= max_degree:
        raise ValueError(f"enumeration supports degrees 2..{max_degree}, got {n}")
    return [BinaryPolynomial(m) for m in _enumerate_masks(n)]
