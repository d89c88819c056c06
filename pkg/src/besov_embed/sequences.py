"""The criterion sequences ``a_j = |det A|**(j c) * (1 + ||A**j||**n)``.

``c = 1/p - 1/t - alpha``.  Membership in ``l^s`` is decided in closed form
from growth envelopes: along each tail the sequence is a sum of two terms,
each a polynomial times a geometric factor, and the verdict only depends on
the sign of each geometric log-rate and on the polynomial degree.
:func:`numeric_probe` is an independent check that sums the actual terms.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exponents import EmbeddingParams, ExtReal, Real, exponent_coeff, format_ext, is_inf
from .spectral import (
    AnalyzedMatrix,
    NormOverflow,
    _require_expansive,
    log_matrix_power_norm,
    log_power_norm_sequence,
)

DEFAULT_TOL = 1e-9
# log-domain floor below which a term counts as numerically zero
LOG_FLOOR = -690.0
# per-step log-ratio slack of the probe's non-decay test
PROBE_EPS = 1e-6
CERTIFY_REL = 1e-12


class Domain(enum.Enum):
    INTEGERS = "Z"
    NATURALS = "N0"


class Membership(enum.Enum):
    IN = "in"
    OUT = "out"
    BOUNDARY = "boundary_uncertain"


@dataclass(frozen=True)
class Tail:
    """Growth envelope of ``||A**j||`` along one direction.

    ``rate`` is ``lambda_max`` (j -> +inf) or ``lambda_min`` (j -> -inf, where
    the norm decays like ``rate**j``); ``log_ratio`` is ``ln|det A| / ln rate``,
    exact when certified.
    """

    rate: float
    poly_degree: int
    log_ratio: float
    log_ratio_exact: Fraction | None = None


@dataclass(frozen=True)
class SequenceSpec:
    det_abs: float
    log_det: float
    exponent_coeff: Real
    norm_power: int
    plus_tail: Tail
    minus_tail: Tail
    domain: Domain

    def describe(self) -> str:
        return (
            f"|det|^(j*{format_ext(self.exponent_coeff)})*(1+||A^j||^{self.norm_power}) "
            f"on {self.domain.value}"
        )


@dataclass(frozen=True)
class TermEnvelope:
    tail: str
    log_rate: float  # in units of ln(rate): the sign decides
    poly_degree: int
    sign: int | None  # exact or tolerance-resolved sign of the log-rate; None on the boundary


@dataclass(frozen=True)
class MembershipResult:
    status: Membership
    witness: tuple[TermEnvelope, ...]

    def detail(self) -> str:
        parts = [
            f"{w.tail}: rate exponent {w.log_rate:+.6g} (degree {w.poly_degree})" for w in self.witness
        ]
        return "; ".join(parts)


def build_sequence_spec(a: AnalyzedMatrix, params: EmbeddingParams, t: ExtReal, domain: Domain) -> SequenceSpec:
    _require_expansive(a)
    n = params.n
    lam_max, lam_min = a.lambda_max, a.lambda_min
    iso_plus = a.log_det_abs / math.log(lam_max)
    iso_minus = a.log_det_abs / math.log(lam_min)
    return SequenceSpec(
        det_abs=a.det_abs,
        log_det=a.log_det_abs,
        exponent_coeff=exponent_coeff(params, t),
        norm_power=n,
        plus_tail=Tail(lam_max, n * (a.top.max_jordan_block - 1), iso_plus, a.exact_isotropy),
        minus_tail=Tail(lam_min, n * (a.bottom.max_jordan_block - 1), iso_minus, a.exact_log_ratio_min),
        domain=domain,
    )


def term_value(spec: SequenceSpec, a: AnalyzedMatrix, j: int, log: bool = False) -> float:
    """``a_j`` evaluated from the actual matrix norm."""
    c = float(spec.exponent_coeff)
    if spec.norm_power == 0:
        value = math.log(2.0) + j * c * spec.log_det
    else:
        value = j * c * spec.log_det + np.logaddexp(0.0, spec.norm_power * log_matrix_power_norm(a, j))
    value = float(value)
    if log:
        return value
    if value > 709.78:
        raise NormOverflow(f"a_{j} = exp({value:.6g}) exceeds the float range")
    return math.exp(value)


def _sign(x: Real, tol: float) -> int | None:
    if isinstance(x, (Fraction, int)):
        return (x > 0) - (x < 0)
    if abs(x) < tol:
        return None
    return 1 if x > 0 else -1


def _envelopes(spec: SequenceSpec, tol: float) -> list[TermEnvelope]:
    """Log-rates, in units of ``ln(rate)`` of each tail, of the two summands.

    Plus tail: ``c * L`` and ``c * L + n`` with ``L = ln|det| / ln lambda_max``.
    Minus tail (``k = -j``): ``-c * L'`` and ``-(c * L' + n)`` with ``lambda_min``.
    """
    c, n = spec.exponent_coeff, spec.norm_power
    tails = [("plus", spec.plus_tail, 1)]
    if spec.domain is Domain.INTEGERS:
        tails.append(("minus", spec.minus_tail, -1))
    out = []
    for name, tail, direction in tails:
        ratio: Real = tail.log_ratio_exact if tail.log_ratio_exact is not None else tail.log_ratio
        exact_c = isinstance(c, Fraction)
        if exact_c and c == 0:
            first: Real = Fraction(0)
        elif exact_c and isinstance(ratio, Fraction):
            first = c * ratio
        else:
            first = float(c) * float(ratio)
        first_sign = _sign(c, tol) if exact_c else _sign(first, tol)
        first_sign = None if first_sign is None else direction * first_sign
        out.append(TermEnvelope(name, direction * float(first), 0, first_sign))
        if n > 0:
            second = first + n
            out.append(
                TermEnvelope(
                    name,
                    direction * float(second),
                    tail.poly_degree,
                    None if _sign(second, tol) is None else direction * _sign(second, tol),
                )
            )
    return out


def classify_membership(spec: SequenceSpec, s: ExtReal, tol: float = DEFAULT_TOL) -> MembershipResult:
    """Closed-form ``l^s`` membership; only ``s < inf`` versus ``s = inf`` matters."""
    env = _envelopes(spec, tol)
    infinite = is_inf(s)
    out = unsure = False
    for term in env:
        if term.sign is None:
            unsure = True
        elif term.sign > 0:
            out = True
        elif term.sign == 0 and (not infinite or term.poly_degree > 0):
            out = True
    if out:
        status = Membership.OUT
    elif unsure:
        status = Membership.BOUNDARY
    else:
        status = Membership.IN
    return MembershipResult(status, tuple(env))


@dataclass(frozen=True)
class ProbeResult:
    kind: str  # "convergent" | "divergent" | "inconclusive"
    value: float | None = None  # partial sum (finite s) or supremum (s = inf)
    at_j: int | None = None
    tail_bound: float | None = None

    @property
    def convergent(self) -> bool:
        return self.kind == "convergent"

    @property
    def divergent(self) -> bool:
        return self.kind == "divergent"


def log_terms(spec: SequenceSpec, a: AnalyzedMatrix, j_max: int) -> tuple[np.ndarray, np.ndarray | None]:
    """``log a_j`` for ``j = 0..j_max`` and, on Z, for ``j = 0, -1, ..., -j_max``."""
    c = float(spec.exponent_coeff)
    n = spec.norm_power
    js = np.arange(j_max + 1)

    def build(norms: np.ndarray, sign: int) -> np.ndarray:
        base = sign * js * c * spec.log_det
        if n == 0:
            return base + math.log(2.0)
        return base + np.logaddexp(0.0, n * norms)

    plus = build(log_power_norm_sequence(a, j_max) if n else js * 0.0, 1)
    minus = None
    if spec.domain is Domain.INTEGERS:
        minus = build(log_power_norm_sequence(a, j_max, inverse=True) if n else js * 0.0, -1)
    return plus, minus


def _tail_verdict(L: np.ndarray, window: int, infinite: bool, eps: float):
    steps = np.diff(L[-(window + 1):])
    if infinite:
        if np.all(steps > eps):
            return "divergent", None
        if np.all(steps <= eps):
            return "convergent", None
        return "inconclusive", None
    if np.all(steps >= -eps) and L[-1] > LOG_FLOOR:
        return "divergent", None
    rho = float(np.exp(np.max(steps)))
    if rho < 1.0:
        # geometric tail bound, in log form
        return "bounded", L[-1] + math.log(rho) - math.log1p(-rho)
    return "inconclusive", None


def numeric_probe(
    spec: SequenceSpec,
    a: AnalyzedMatrix,
    s: ExtReal,
    j_max: int = 400,
    ratio_window: int = 16,
    eps: float = PROBE_EPS,
) -> ProbeResult:
    """Sum ``a_j**s`` for ``|j| <= j_max`` in log space and judge convergence.

    Divergence: over the last ``ratio_window`` steps of some tail the terms
    never decay by more than ``eps`` in log-ratio while staying above the
    numerical floor.  Convergence: on every tail the largest windowed ratio
    ``rho < 1`` and the geometric tail bound ``term * rho / (1 - rho)`` is
    below ``1e-12`` of the partial sum.  For ``s = inf`` the window instead
    tests for sustained growth and reports the supremum when bounded.
    """
    if ratio_window < 2 or j_max < ratio_window:
        raise ValueError("need j_max >= ratio_window >= 2")
    plus, minus = log_terms(spec, a, j_max)
    tails = [("plus", plus)] + ([("minus", minus)] if minus is not None else [])
    infinite = is_inf(s)
    if infinite:
        verdicts = [(name, _tail_verdict(L, ratio_window, True, eps)) for name, L in tails]
        for name, (kind, _) in verdicts:
            if kind == "divergent":
                return ProbeResult("divergent", at_j=j_max if name == "plus" else -j_max)
        if all(kind == "convergent" for _, (kind, _) in verdicts):
            sup = max(float(np.max(L)) for _, L in tails)
            return ProbeResult("convergent", value=math.exp(min(sup, 709.0)))
        return ProbeResult("inconclusive")

    sf = float(s)
    powered = [(name, sf * L) for name, L in tails]
    all_terms = np.concatenate([powered[0][1]] + [L[1:] for _, L in powered[1:]])
    log_sum = float(np.logaddexp.reduce(all_terms))
    bounds = []
    for name, L in powered:
        kind, log_bound = _tail_verdict(L, ratio_window, False, eps)
        if kind == "divergent":
            return ProbeResult("divergent", at_j=j_max if name == "plus" else -j_max)
        if kind != "bounded":
            return ProbeResult("inconclusive")
        bounds.append(log_bound)
    log_tail = float(np.logaddexp.reduce(bounds))
    if log_tail - log_sum <= math.log(CERTIFY_REL):
        return ProbeResult("convergent", value=math.exp(min(log_sum, 709.0)), tail_bound=math.exp(log_tail))
    return ProbeResult("inconclusive", value=math.exp(min(log_sum, 709.0)), tail_bound=math.exp(min(log_tail, 709.0)))


def probe_trace(spec: SequenceSpec, a: AnalyzedMatrix, s: ExtReal, j_max: int) -> list[tuple[int, float, float]]:
    """Rows ``(j, a_j, partial sum of a_j**s)`` in the order 0, 1, -1, 2, -2, ...

    Terms are evaluated in linear scale while they fit in a float, so that
    exactly representable sequences (constants, powers of two) sum exactly;
    the log domain takes over only past the float range.
    """
    plus, minus = log_terms(spec, a, j_max)
    order = [(0, plus[0])]
    for k in range(1, j_max + 1):
        order.append((k, plus[k]))
        if minus is not None:
            order.append((-k, minus[k]))
    rows = []
    infinite = is_inf(s)
    running = -math.inf if infinite else 0.0
    log_running = -math.inf
    for j, L in order:
        value = _linear_term(spec, a, j, L)
        if infinite:
            running = max(running, value)
        else:
            power = value ** float(s) if math.isfinite(value) else math.inf
            log_running = float(np.logaddexp(log_running, float(s) * L))
            running = running + power if math.isfinite(running + power) else _exp(log_running)
        rows.append((j, value, running))
    return rows


def _linear_term(spec: SequenceSpec, a: AnalyzedMatrix, j: int, log_value: float) -> float:
    if log_value > 709.0 or log_value < -700.0:
        return _exp(log_value)
    c = float(spec.exponent_coeff)
    try:
        scale = spec.det_abs ** (j * c)
    except OverflowError:
        return _exp(log_value)
    if spec.norm_power == 0:
        return 2.0 * scale
    norm = math.exp(log_matrix_power_norm(a, j))
    return scale * (1.0 + norm**spec.norm_power)


def _exp(x: float) -> float:
    return math.exp(x) if x < 709.78 else math.inf
