"""Exact scalars for matrix entries and exact recognition of spectral log-ratios.

Matrix entries are rationals or rational multiples of square roots.  When a
decision sits on an equality such as ``n == ln|det A| / ln lambda_max * n*``
the floating spectrum cannot settle it, so we try to certify the moduli
involved as ``c**(1/m)`` with ``c`` rational, verify that claim symbolically
and compare logarithms through prime factorizations.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

import sympy

from .errors import ParseError
from .exponents import to_fraction

_SURD_RE = re.compile(r"^\s*([+-])?\s*(?:(\d+(?:/\d+)?)\s*\*\s*)?sqrt\(\s*(\d+)\s*\)\s*$")

# Factorization is only attempted on modestly sized integers.
_MAX_FACTOR = 10**30


@dataclass(frozen=True)
class Surd:
    """``coeff * sqrt(radicand)`` with a square-free radicand > 1."""

    coeff: Fraction
    radicand: int

    def __float__(self) -> float:
        return float(self.coeff) * math.sqrt(self.radicand)

    def __str__(self) -> str:
        c = self.coeff
        if c == 1:
            return f"sqrt({self.radicand})"
        if c == -1:
            return f"-sqrt({self.radicand})"
        return f"{c}*sqrt({self.radicand})"


Scalar = Union[Fraction, Surd]


def make_surd(coeff: Fraction, k: int) -> Scalar:
    if k < 0:
        raise ParseError("negative radicand")
    if k == 0 or coeff == 0:
        return Fraction(0)
    # pull out square factors
    outer, inner = 1, k
    f = 2
    while f * f <= inner:
        while inner % (f * f) == 0:
            inner //= f * f
            outer *= f
        f += 1
    if inner == 1:
        return coeff * outer
    return Surd(coeff * outer, inner)


def parse_scalar(value) -> Scalar:
    """Read a matrix entry: JSON number, ``"p/q"``, decimal string or ``"sqrt(k)"``."""
    if isinstance(value, str):
        m = _SURD_RE.match(value)
        if m:
            sign, coeff, k = m.groups()
            c = Fraction(coeff) if coeff else Fraction(1)
            return make_surd(-c if sign == "-" else c, int(k))
    return to_fraction(value)


def format_scalar(x: Scalar) -> str:
    if isinstance(x, Surd):
        return str(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def to_sympy(x: Scalar):
    if isinstance(x, Surd):
        return sympy.Rational(x.coeff.numerator, x.coeff.denominator) * sympy.sqrt(x.radicand)
    return sympy.Rational(x.numerator, x.denominator)


def _as_rational(expr) -> Fraction | None:
    expr = sympy.expand(expr)
    if expr.is_Rational:
        return Fraction(int(expr.p), int(expr.q))
    return None


def _sym_matrix(rows: Sequence[Sequence[Scalar]]) -> sympy.Matrix:
    return sympy.Matrix([[to_sympy(x) for x in row] for row in rows])


def _is_singular(M: sympy.Matrix) -> bool:
    return sympy.expand(M.det(method="berkowitz")) == 0


def exact_abs_det(rows: Sequence[Sequence[Scalar]]) -> tuple[Fraction, int] | None:
    """``|det A|`` as ``(c, m)`` meaning ``c**(1/m)``, if ``|det|`` or ``det**2`` is rational."""
    det = sympy.expand(_sym_matrix(rows).det(method="berkowitz"))
    q = _as_rational(det)
    if q is not None:
        return (abs(q), 1) if q != 0 else None
    q2 = _as_rational(det**2)
    if q2 is not None and q2 > 0:
        return (q2, 2)
    return None


def _recognize(x: float, max_den: int = 10_000, rel: float = 1e-9) -> Fraction | None:
    if not math.isfinite(x):
        return None
    c = Fraction(x).limit_denominator(max_den)
    if abs(float(c) - x) <= rel * max(abs(x), 1.0):
        return c
    return None


def exact_modulus(
    rows: Sequence[Sequence[Scalar]],
    eigenvalues: Sequence[complex],
    max_power: int = 4,
) -> tuple[Fraction, int] | None:
    """Certify a common eigenvalue modulus ``rho`` as ``c**(1/m)`` with rational ``c``.

    ``eigenvalues`` are floating approximations of eigenvalues sharing the
    modulus.  A guess is accepted only after checking symbolically that
    ``A**m - (+-c) I`` (real eigenvalue) or ``A**2 - 2 Re(l) A + |l|**2 I``
    (complex pair) is singular.
    """
    M = _sym_matrix(rows)
    d = M.shape[0]
    eye = sympy.eye(d)
    for lam in eigenvalues:
        lam = complex(lam)
        rho = abs(lam)
        if abs(lam.imag) <= 1e-12 * max(rho, 1.0):
            sign = 1 if lam.real > 0 else -1
            power = eye
            for m in range(1, max_power + 1):
                power = power * M
                c = _recognize(rho**m)
                if c is None or c <= 0:
                    continue
                target = sympy.Rational(c.numerator, c.denominator) * (sign**m)
                if _is_singular(power - target * eye):
                    return (c, m)
        else:
            b = _recognize(2 * lam.real)
            c2 = _recognize(rho * rho)
            if b is None or c2 is None:
                continue
            Q = M * M - sympy.Rational(b.numerator, b.denominator) * M
            Q = Q + sympy.Rational(c2.numerator, c2.denominator) * eye
            if _is_singular(Q):
                return (c2, 2)
    return None


@lru_cache(maxsize=4096)
def _prime_exponents(c: Fraction) -> dict[int, int] | None:
    if c.numerator > _MAX_FACTOR or c.denominator > _MAX_FACTOR:
        return None
    out: dict[int, int] = {}
    for p, e in sympy.factorint(c.numerator).items():
        out[int(p)] = out.get(int(p), 0) + int(e)
    for p, e in sympy.factorint(c.denominator).items():
        out[int(p)] = out.get(int(p), 0) - int(e)
    return {p: e for p, e in out.items() if e != 0}


def log_ratio(num: tuple[Fraction, int], den: tuple[Fraction, int]) -> Fraction | None:
    """Exact ``ln(c1**(1/m1)) / ln(c2**(1/m2))`` when it is rational, else ``None``.

    Logarithms of distinct primes are linearly independent over Q, so the
    ratio is rational exactly when the prime-exponent vectors are parallel.
    """
    (c1, m1), (c2, m2) = num, den
    v1, v2 = _prime_exponents(c1), _prime_exponents(c2)
    if v1 is None or v2 is None or not v2:
        return None
    if not v1:
        return Fraction(0)
    p0 = next(iter(v2))
    k = Fraction(v1.get(p0, 0), v2[p0])
    for p in set(v1) | set(v2):
        if Fraction(v1.get(p, 0)) != k * v2.get(p, 0):
            return None
    return k * Fraction(m2, m1)
