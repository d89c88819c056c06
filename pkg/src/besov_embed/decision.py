"""Tri-state embedding verdicts with a full trace of the conditions checked.

Two independent routes are offered.  The closed-form route applies the
decision tables in terms of ``n``, ``n*``, the isotropy degree and the AND
property.  The summability route evaluates the underlying sequence
conditions directly through :mod:`besov_embed.sequences`.  Both always
evaluate every check; necessary checks come first in the trace.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .exponents import (
    INF,
    DerivedExponents,
    EmbeddingParams,
    ExtReal,
    compare,
    composite_exponent,
    conjugate,
    derive,
    format_ext,
    is_inf,
)
from .sequences import Domain, Membership, build_sequence_spec, classify_membership
from .spectral import AnalyzedMatrix, _require_expansive, expansive_normal_form, isotropy_degree

DEFAULT_BOUNDARY_TOL = 1e-9


class Outcome(enum.Enum):
    EMBEDS = "embeds"
    DOES_NOT_EMBED = "does_not_embed"
    UNDECIDED = "undecided"


class Variant(enum.Enum):
    HOMOGENEOUS = "homogeneous"
    INHOMOGENEOUS = "inhomogeneous"


class Route(enum.Enum):
    CLOSED_FORM = "closed_form"
    SUMMABILITY = "summability"


class Status(enum.Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    NOT_APPLICABLE = "not_applicable"
    BOUNDARY = "boundary"


NECESSARY = "necessary"
SUFFICIENT = "sufficient"


@dataclass(frozen=True)
class ConditionCheck:
    label: str
    clause_ref: str
    status: Status
    detail: str
    kind: str = NECESSARY

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "clause_ref": self.clause_ref,
            "status": self.status.value,
            "detail": self.detail,
            "kind": self.kind,
        }


@dataclass(frozen=True)
class Warning_:
    code: str
    detail: str

    def to_json(self) -> dict:
        return {"code": self.code, "detail": self.detail}


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    variant: Variant
    route: Route
    trace: tuple[ConditionCheck, ...]
    warnings: tuple[Warning_, ...]
    derived: DerivedExponents

    def necessary(self) -> list[ConditionCheck]:
        return [c for c in self.trace if c.kind == NECESSARY]

    def sufficient(self) -> list[ConditionCheck]:
        return [c for c in self.trace if c.kind == SUFFICIENT]

    @property
    def warning_codes(self) -> list[str]:
        return [w.code for w in self.warnings]

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "variant": self.variant.value,
            "route": self.route.value,
            "trace": [c.to_json() for c in self.trace],
            "warnings": [w.to_json() for w in self.warnings],
            "derived": self.derived.to_json(),
        }


def _bool_status(flag: bool | None) -> Status:
    if flag is None:
        return Status.BOUNDARY
    return Status.SATISFIED if flag else Status.VIOLATED


def _implies(premise: bool, conclusion: bool | None) -> Status:
    if not premise:
        return Status.NOT_APPLICABLE
    return _bool_status(conclusion)


def _le(x: ExtReal, y: ExtReal) -> bool:
    return x <= y


def _is_zero(x, tol: float) -> bool | None:
    c = compare(x, Fraction(0), tol)
    return None if c is None else c == 0


def _and3(*flags: bool | None) -> bool | None:
    if any(f is False for f in flags):
        return False
    if any(f is None for f in flags):
        return None
    return True


def _matrix_warnings(a: AnalyzedMatrix) -> list[Warning_]:
    out = []
    for w in a.warnings:
        code, _, detail = w.partition(": ")
        out.append(Warning_(code, detail))
    return out


def _derived(a: AnalyzedMatrix, params: EmbeddingParams) -> DerivedExponents:
    return derive(params, isotropy_degree(a), a.exact_isotropy)


def _outcome(trace: list[ConditionCheck], embeds: bool) -> Outcome:
    if any(c.kind == NECESSARY and c.status is Status.VIOLATED for c in trace):
        return Outcome.DOES_NOT_EMBED
    if embeds:
        return Outcome.EMBEDS
    return Outcome.UNDECIDED


def decide_homogeneous(
    a: AnalyzedMatrix, params: EmbeddingParams, tol: float = DEFAULT_BOUNDARY_TOL
) -> Verdict:
    """Homogeneous spaces: the verdict depends on ``A`` only through expansiveness."""
    _require_expansive(a)
    derived = _derived(a, params)
    p, q, r, n = params.p, params.q, params.r, params.n
    ns = derived.n_star
    qn = derived.q_nabla
    ns_zero = _is_zero(ns, tol)
    fmt = format_ext

    trace = [
        ConditionCheck(
            "n = 0 and n* = 0",
            "hom-nec-i",
            _bool_status(_and3(n == 0, ns_zero)),
            f"n = {n}, n* = {fmt(ns)}",
        ),
        ConditionCheck(
            "p <= q and r <= q",
            "hom-nec-ii",
            _bool_status(_le(p, q) and _le(r, q)),
            f"p = {fmt(p)}, q = {fmt(q)}, r = {fmt(r)}",
        ),
        ConditionCheck(
            "q = inf implies r <= 1",
            "hom-nec-iii",
            _implies(is_inf(q), _le(r, Fraction(1))),
            f"q = {fmt(q)}, r = {fmt(r)}",
        ),
        ConditionCheck(
            "p = q implies r <= 2",
            "hom-nec-iv",
            _implies(p == q, _le(r, Fraction(2))),
            f"p = {fmt(p)}, q = {fmt(q)}, r = {fmt(r)}",
        ),
    ]
    suff = [
        ConditionCheck(
            "n = n* = 0", "hom-suf-i", _bool_status(_and3(n == 0, ns_zero)), f"n = {n}, n* = {fmt(ns)}", SUFFICIENT
        ),
        ConditionCheck("p <= q", "hom-suf-ii", _bool_status(_le(p, q)), f"p = {fmt(p)}, q = {fmt(q)}", SUFFICIENT),
        ConditionCheck(
            "r <= q_nabla", "hom-suf-ii", _bool_status(_le(r, qn)), f"r = {fmt(r)}, q_nabla = {fmt(qn)}", SUFFICIENT
        ),
    ]
    trace += suff
    embeds = all(c.status is Status.SATISFIED for c in suff)
    warnings = _boundary_warnings(trace)
    return Verdict(
        _outcome(trace, embeds), Variant.HOMOGENEOUS, Route.CLOSED_FORM, tuple(trace), tuple(warnings), derived
    )


def _boundary_warnings(trace: list[ConditionCheck]) -> list[Warning_]:
    hits = [c.label for c in trace if c.status is Status.BOUNDARY]
    if not hits:
        return []
    return [Warning_("Boundary", "undecidable within tolerance: " + "; ".join(hits))]


def decide_inhomogeneous(
    a: AnalyzedMatrix, params: EmbeddingParams, tol: float = DEFAULT_BOUNDARY_TOL
) -> Verdict:
    """Inhomogeneous spaces, decided on the expansive normal form's spectral data.

    ``T = iso_degree * n*``.  ``n > T`` refutes, ``n < T`` (with ``p <= q``)
    proves the embedding, and ``n = T`` falls through to the equality regime
    where the AND property and ``r`` against ``q`` and ``q_nabla`` decide.
    """
    _require_expansive(a)
    nf = expansive_normal_form(a)
    derived = _derived(a, params)
    p, q, r, n = params.p, params.q, params.r, params.n
    ns, T, qn = derived.n_star, derived.threshold, derived.q_nabla
    is_and = nf.is_and
    fmt = format_ext
    cmp = compare(n, T, tol)  # -1: n < T, 0: n = T, 1: n > T, None: unresolved
    ns_zero = _is_zero(ns, tol)
    t_detail = f"n = {n}, T = iso_degree * n* = {fmt(derived.iso_exact or derived.iso_degree)} * {fmt(ns)} = {fmt(T)}"

    trace = [
        ConditionCheck("p <= q", "inh-nec-a", _bool_status(_le(p, q)), f"p = {fmt(p)}, q = {fmt(q)}"),
        ConditionCheck("n <= T", "inh-nec-b", _bool_status(None if cmp is None else cmp <= 0), t_detail),
    ]

    on_equality = cmp == 0 or cmp is None

    def regime(flag: bool | None, premise: bool = True) -> Status:
        if not on_equality:
            return Status.NOT_APPLICABLE
        status = _implies(premise, flag)
        # when n = T is itself unresolved, a violation here is not conclusive
        if cmp is None and status is Status.VIOLATED:
            return Status.BOUNDARY
        return status

    trace += [
        ConditionCheck("at n = T: r <= q", "inh-nec-c-i", regime(_le(r, q)), f"r = {fmt(r)}, q = {fmt(q)}"),
        ConditionCheck(
            "at n = T: q = inf implies r <= 1",
            "inh-nec-c-ii",
            regime(_le(r, Fraction(1)), is_inf(q)),
            f"q = {fmt(q)}, r = {fmt(r)}",
        ),
        ConditionCheck(
            "at n = T: p = q implies r <= 2",
            "inh-nec-c-iii",
            regime(_le(r, Fraction(2)), p == q),
            f"p = {fmt(p)}, q = {fmt(q)}, r = {fmt(r)}",
        ),
        ConditionCheck(
            "at n = T: A not AND implies n = n* = 0",
            "inh-nec-c-iv",
            regime(_and3(n == 0, ns_zero), not is_and),
            f"AND = {is_and}, n = {n}, n* = {fmt(ns)}",
        ),
    ]
    suff_b = ConditionCheck(
        "p <= q and n < T",
        "inh-suf-b",
        _bool_status(_and3(_le(p, q), None if cmp is None else cmp < 0)),
        t_detail,
        SUFFICIENT,
    )
    suff_b1 = ConditionCheck(
        "p <= q, n = n* = 0 and r <= q_nabla",
        "inh-suf-b1",
        _bool_status(_and3(_le(p, q), n == 0, ns_zero, _le(r, qn))),
        f"n = {n}, n* = {fmt(ns)}, r = {fmt(r)}, q_nabla = {fmt(qn)}",
        SUFFICIENT,
    )
    suff_b2 = ConditionCheck(
        "p <= q, A is AND, n = T and r <= q_nabla",
        "inh-suf-b2",
        _bool_status(_and3(_le(p, q), is_and, None if cmp is None else cmp == 0, _le(r, qn))),
        f"AND = {is_and}, {t_detail}, r = {fmt(r)}, q_nabla = {fmt(qn)}",
        SUFFICIENT,
    )
    suff = [suff_b, suff_b1, suff_b2]
    trace += suff
    embeds = any(c.status is Status.SATISFIED for c in suff)

    warnings = _matrix_warnings(a)
    warnings += _boundary_warnings(trace)
    if a.merge_affects_and:
        warnings.append(
            Warning_(
                "NormalFormMergeAffectsAND",
                "eigenvalues of modulus lambda_max with different Jordan structure were merged into one class",
            )
        )
    return Verdict(
        _outcome(trace, embeds), Variant.INHOMOGENEOUS, Route.CLOSED_FORM, tuple(trace), tuple(warnings), derived
    )


def decide_via_summability(
    a: AnalyzedMatrix,
    params: EmbeddingParams,
    variant: Variant,
    tol: float = DEFAULT_BOUNDARY_TOL,
) -> Verdict:
    """Check the sequence-summability conditions directly on ``A``."""
    _require_expansive(a)
    derived = _derived(a, params)
    p, q, r = params.p, params.q, params.r
    qn = derived.q_nabla
    fmt = format_ext
    homogeneous = variant is Variant.HOMOGENEOUS
    full_domain = Domain.INTEGERS if homogeneous else Domain.NATURALS
    seq_name = "a^(q)" if homogeneous else "a_+^(q)"
    tag = "sum-hom" if homogeneous else "sum-inh"

    def member(t: ExtReal, domain: Domain, s: ExtReal) -> tuple[bool | None, str]:
        spec = build_sequence_spec(a, params, t, domain)
        res = classify_membership(spec, s, tol)
        flag = {Membership.IN: True, Membership.OUT: False, Membership.BOUNDARY: None}[res.status]
        return flag, f"{spec.describe()} in l^{fmt(s)}: {res.status.value} [{res.detail()}]"

    trace = [ConditionCheck("p <= q", f"{tag}-nec-p", _bool_status(_le(p, q)), f"p = {fmt(p)}, q = {fmt(q)}")]

    s_nec = composite_exponent(q, r)
    flag, detail = member(q, full_domain, s_nec)
    trace.append(ConditionCheck(f"{seq_name} in l^(q*(r/q)')", f"{tag}-nec-q", _bool_status(flag), detail))

    if is_inf(q):
        flag, detail = member(q, full_domain, conjugate(r))
        status = _bool_status(flag)
    else:
        detail, status = "q < inf", Status.NOT_APPLICABLE
    trace.append(ConditionCheck(f"q = inf implies {seq_name} in l^(r')", f"{tag}-nec-qinf", status, detail))

    s2 = composite_exponent(Fraction(2), r)
    if not is_inf(q):
        flag, detail = member(p, Domain.NATURALS, s2)
        status = _bool_status(flag)
    else:
        detail, status = "q = inf", Status.NOT_APPLICABLE
    trace.append(ConditionCheck("q < inf implies a_+^(p) in l^(2*(r/2)')", f"{tag}-nec-p2", status, detail))

    if not homogeneous:
        if not is_inf(q) and q >= 2:
            flag, detail = member(Fraction(2), Domain.NATURALS, s2)
            status = _bool_status(flag)
        else:
            detail, status = f"q = {fmt(q)} outside [2, inf)", Status.NOT_APPLICABLE
        trace.append(ConditionCheck("q in [2, inf) implies a_+^(2) in l^(2*(r/2)')", f"{tag}-nec-22", status, detail))

    s_suf = composite_exponent(qn, r)
    flag, detail = member(q, full_domain, s_suf)
    suff = ConditionCheck(
        f"p <= q and {seq_name} in l^(q_nabla*(r/q_nabla)')",
        f"{tag}-suf",
        _bool_status(_and3(_le(p, q), flag)),
        detail,
        SUFFICIENT,
    )
    trace.append(suff)

    warnings = _matrix_warnings(a) + _boundary_warnings(trace)
    return Verdict(
        _outcome(trace, suff.status is Status.SATISFIED), variant, Route.SUMMABILITY, tuple(trace), tuple(warnings), derived
    )


def decide(
    a: AnalyzedMatrix,
    params: EmbeddingParams,
    variant: Variant,
    route: Route = Route.CLOSED_FORM,
    tol: float = DEFAULT_BOUNDARY_TOL,
) -> Verdict:
    if route is Route.SUMMABILITY:
        return decide_via_summability(a, params, variant, tol)
    if variant is Variant.HOMOGENEOUS:
        return decide_homogeneous(a, params, tol)
    return decide_inhomogeneous(a, params, tol)


def _provably_not_natural(x, tol: float) -> bool:
    if isinstance(x, Fraction):
        return x < 0 or x.denominator != 1
    x = float(x)
    if x < -tol:
        return True
    return abs(x - round(x)) >= tol


def sharpness_region(
    a: AnalyzedMatrix, params: EmbeddingParams, variant: Variant, tol: float = DEFAULT_BOUNDARY_TOL
) -> bool:
    """Whether the criteria are provably complete for these parameters.

    Homogeneous: ``q`` in ``(0, 2]`` or ``inf``.  Inhomogeneous additionally when
    ``iso_degree * n*`` is not a nonnegative integer, or ``A`` is not AND and
    ``n* != 0``.
    """
    _require_expansive(a)
    q = params.q
    if is_inf(q) or q <= 2:
        return True
    if variant is Variant.HOMOGENEOUS:
        return False
    derived = _derived(a, params)
    if _provably_not_natural(derived.threshold, tol):
        return True
    ns_zero = _is_zero(derived.n_star, tol)
    return (not expansive_normal_form(a).is_and) and ns_zero is False
