"""Extended-real exponents and the scalar quantities derived from them.

Exponents ``p, q, r, t`` live in ``(0, inf]``.  Finite values are kept as
:class:`fractions.Fraction` so that every comparison the decision tables make
(``r <= q``, ``n == threshold``, ...) is exact; infinity is ``math.inf``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import ParseError

INF = math.inf

ExtReal = Union[Fraction, float]
"""A positive Fraction, or ``math.inf``."""

Real = Union[Fraction, float]

_INF_WORDS = {"inf", "+inf", "infinity", "∞", "oo"}
_SQRT_RE = re.compile(r"^\s*([+-])?\s*(?:(\d+(?:/\d+)?)\s*\*\s*)?sqrt\(\s*(\d+)\s*\)\s*$")


def is_inf(x) -> bool:
    return isinstance(x, float) and math.isinf(x) and x > 0


def to_fraction(value) -> Fraction:
    """Promote an int, float, Fraction or numeric string to an exact Fraction.

    Floats are expanded exactly in binary; strings are read as written
    (``"0.1"`` becomes ``1/10``).
    """
    if isinstance(value, bool):
        raise ParseError(f"not a number: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ParseError(f"non-finite value {value!r}")
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"cannot read {value!r} as a rational number") from exc
    raise ParseError(f"unsupported numeric value {value!r}")


def parse_exponent(value) -> ExtReal:
    """Read an exponent in ``(0, inf]`` from text or a JSON number."""
    if isinstance(value, str) and value.strip().lower() in _INF_WORDS:
        return INF
    if isinstance(value, float) and math.isinf(value) and value > 0:
        return INF
    x = to_fraction(value)
    if x <= 0:
        raise ParseError(f"exponent must be positive, got {value!r}")
    return x


def parse_real(value) -> Real:
    """Read a real parameter such as the smoothness ``alpha``.

    Accepts everything :func:`to_fraction` does plus ``"sqrt(k)"`` surds
    (optionally ``"-c*sqrt(k)"``), which are returned as floats unless ``k``
    is a perfect square.
    """
    if isinstance(value, str):
        m = _SQRT_RE.match(value)
        if m:
            sign, coeff, radicand = m.groups()
            c = Fraction(coeff) if coeff else Fraction(1)
            k = int(radicand)
            root = math.isqrt(k)
            if root * root == k:
                out = c * root
            else:
                out = float(c) * math.sqrt(k)
            return -out if sign == "-" else out
    if isinstance(value, float) and not math.isfinite(value):
        raise ParseError(f"non-finite value {value!r}")
    return to_fraction(value)


def format_ext(x) -> str:
    """Render an exponent or derived value for reports."""
    if is_inf(x):
        return "inf"
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def reciprocal(x: ExtReal) -> Fraction | float:
    """``1/x`` with the convention ``1/inf = 0``."""
    if is_inf(x):
        return Fraction(0)
    if isinstance(x, Fraction):
        return 1 / x
    return 1.0 / x


def conjugate(q: ExtReal) -> ExtReal:
    """Conjugate exponent: ``1/q + 1/q' = 1`` for ``q >= 1``, and ``inf`` for ``q <= 1``."""
    if is_inf(q):
        return Fraction(1)
    if q <= 0:
        raise ValueError(f"exponent must be positive, got {q!r}")
    if q <= 1:
        return INF
    return q / (q - 1)


def q_nabla(q: ExtReal) -> ExtReal:
    """``min(q, q')``; never exceeds 2."""
    return min(q, conjugate(q))


def composite_exponent(t: ExtReal, r: ExtReal) -> ExtReal:
    """The summability exponent ``t * (r/t)'``.

    Infinite exactly when ``r <= t``; an infinite ``t`` therefore always
    gives ``inf`` (``r/inf = 0`` has conjugate ``inf``).
    """
    if is_inf(t) or r <= t:
        return INF
    if is_inf(r):
        return t
    return t * r / (r - t)


@dataclass(frozen=True)
class EmbeddingParams:
    """Query tuple for ``B^alpha_{p,r}(A) -> W^{n,q}``."""

    p: ExtReal
    q: ExtReal
    r: ExtReal
    alpha: Real
    n: int

    def __post_init__(self):
        for name in ("p", "q", "r"):
            v = getattr(self, name)
            if not (is_inf(v) or v > 0):
                raise ParseError(f"{name} must lie in (0, inf], got {v!r}")
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 0:
            raise ParseError(f"n must be a nonnegative integer, got {self.n!r}")

    @classmethod
    def parse(cls, p, q, r, alpha, n) -> "EmbeddingParams":
        try:
            n_int = int(n)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"n must be an integer, got {n!r}") from exc
        if isinstance(n, float) and n != n_int or isinstance(n, str) and str(n_int) != n.strip():
            raise ParseError(f"n must be an integer, got {n!r}")
        return cls(parse_exponent(p), parse_exponent(q), parse_exponent(r), parse_real(alpha), n_int)

    @property
    def exact(self) -> bool:
        return isinstance(self.alpha, Fraction)

    def to_json(self) -> dict:
        return {
            "p": format_ext(self.p),
            "q": format_ext(self.q),
            "r": format_ext(self.r),
            "alpha": format_ext(self.alpha),
            "n": self.n,
        }


def n_star(params: EmbeddingParams) -> Real:
    """``alpha + 1/q - 1/p``; exact whenever alpha is rational."""
    return params.alpha + reciprocal(params.q) - reciprocal(params.p)


def exponent_coeff(params: EmbeddingParams, t: ExtReal) -> Real:
    """``1/p - 1/t - alpha``, the per-step determinant exponent of the criterion sequence."""
    return reciprocal(params.p) - reciprocal(t) - params.alpha


@dataclass(frozen=True)
class DerivedExponents:
    q_conj: ExtReal
    q_nabla: ExtReal
    n_star: Real
    iso_degree: float
    threshold: Real
    iso_exact: Fraction | None = None

    @property
    def threshold_exact(self) -> bool:
        return isinstance(self.threshold, Fraction)

    def to_json(self) -> dict:
        return {
            "n_star": format_ext(self.n_star),
            "q_nabla": format_ext(self.q_nabla),
            "iso_degree": format_ext(self.iso_exact if self.iso_exact is not None else self.iso_degree),
            "threshold": format_ext(self.threshold),
        }


def derive(params: EmbeddingParams, iso_degree: float, iso_exact: Fraction | None = None) -> DerivedExponents:
    """Bundle the conjugate, ``q^nabla``, ``n*`` and the threshold ``iso_degree * n*``.

    The threshold stays exact when ``n*`` is exactly zero or when both ``n*``
    and the isotropy degree are known as rationals.
    """
    ns = n_star(params)
    if isinstance(ns, Fraction) and ns == 0:
        threshold: Real = Fraction(0)
    elif isinstance(ns, Fraction) and iso_exact is not None:
        threshold = iso_exact * ns
    else:
        threshold = float(iso_degree) * float(ns)
    return DerivedExponents(
        q_conj=conjugate(params.q),
        q_nabla=q_nabla(params.q),
        n_star=ns,
        iso_degree=float(iso_degree),
        threshold=threshold,
        iso_exact=iso_exact,
    )


def compare(x: Real, y: Real, tol: float) -> int | None:
    """Three-way comparison; exact for rationals, otherwise ``None`` inside ``tol``."""
    if is_inf(x) or is_inf(y):
        return (x > y) - (x < y)
    if isinstance(x, (Fraction, int)) and isinstance(y, (Fraction, int)):
        return (x > y) - (x < y)
    diff = float(x) - float(y)
    if abs(diff) < tol:
        return None
    return 1 if diff > 0 else -1
