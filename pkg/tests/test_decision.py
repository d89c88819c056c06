import itertools
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from besov_embed.decision import (
    Outcome,
    Route,
    Status,
    Variant,
    decide,
    decide_homogeneous,
    decide_inhomogeneous,
    decide_via_summability,
    sharpness_region,
)
from besov_embed.exponents import INF, EmbeddingParams
from besov_embed.spectral import InputMatrix, spectral_analyze
from matgen import block_diag, jordan_block, random_expansive, well_conditioned
import oracle

A = spectral_analyze(InputMatrix.from_rows([["sqrt(2)", 0], [0, "sqrt(2)"]]))
B = spectral_analyze(InputMatrix.from_rows([["sqrt(2)", 1], [0, "sqrt(2)"]]))

WORKED = [
    # (label, alpha, n, r, outcome for A, outcome for B)
    ("a", "5/3", 2, "2", "embeds", "embeds"),
    ("b", "5/3", 4, "1", "does_not_embed", "does_not_embed"),
    ("c", "5/3", 3, "1", "embeds", "does_not_embed"),
    ("d", "5/3", 3, "2", "undecided", "does_not_embed"),
    ("e", "1/6", 0, "2", "undecided", "undecided"),
]


@pytest.mark.parametrize("label, alpha, n, r, out_a, out_b", WORKED)
@pytest.mark.parametrize("route", [Route.CLOSED_FORM, Route.SUMMABILITY])
def test_worked_example_table(label, alpha, n, r, out_a, out_b, route):
    params = EmbeddingParams.parse("2", "3", r, alpha, n)
    assert decide(A, params, Variant.INHOMOGENEOUS, route).outcome.value == out_a
    assert decide(B, params, Variant.INHOMOGENEOUS, route).outcome.value == out_b


def test_trace_and_derived_case_c():
    v = decide_inhomogeneous(B, EmbeddingParams.parse("2", "3", "1", "5/3", 3))
    assert v.derived.threshold == 3 and v.derived.n_star == F(3, 2)
    violated = [c.clause_ref for c in v.trace if c.status is Status.VIOLATED and c.kind == "necessary"]
    assert violated == ["inh-nec-c-iv"]
    assert all(c.clause_ref for c in v.trace)
    out = v.to_json()
    assert out["derived"] == {"n_star": "3/2", "q_nabla": "3/2", "iso_degree": "2", "threshold": "3"}


def test_sharpness_examples():
    params = EmbeddingParams.parse("2", "3", "2", "5/3", 3)
    assert sharpness_region(A, params, Variant.INHOMOGENEOUS) is False
    assert sharpness_region(B, params, Variant.INHOMOGENEOUS) is True
    for a in (A, B):
        assert sharpness_region(a, EmbeddingParams.parse("2", "2", "2", "5/3", 3), Variant.INHOMOGENEOUS)


def test_homogeneous_examples():
    # n = n* = 0 with p <= q and r <= q_nabla
    assert decide_homogeneous(A, EmbeddingParams.parse("2", "3", "1", "1/6", 0)).outcome is Outcome.EMBEDS
    assert decide_homogeneous(A, EmbeddingParams.parse("2", "3", "1", "1/6", 1)).outcome is Outcome.DOES_NOT_EMBED
    assert decide_homogeneous(A, EmbeddingParams.parse("2", "3", "2", "1/6", 0)).outcome is Outcome.UNDECIDED
    assert decide_homogeneous(A, EmbeddingParams.parse("2", "inf", "2", "1/2", 0)).outcome is Outcome.DOES_NOT_EMBED


def test_negative_n_star_refutes():
    v = decide_inhomogeneous(A, EmbeddingParams.parse("2", "3", "1", "-1", 0))
    assert v.outcome is Outcome.DOES_NOT_EMBED


def test_boundary_flag_on_irrational_threshold():
    a = spectral_analyze(InputMatrix.from_rows([[2, 0], [0, 3]]))
    import math

    iso = math.log(6) / math.log(3)
    # n* chosen so that T = iso * n* is 1 to float precision
    alpha = 1 / iso - F(1, 3) + F(1, 2)
    v = decide_inhomogeneous(a, EmbeddingParams(F(2), F(3), F(1), alpha, 1))
    assert "Boundary" in v.warning_codes
    assert v.outcome is not Outcome.EMBEDS


# exact rational matrices whose moduli are integer powers of a common base,
# conjugated by unimodular integer matrices, so the isotropy degree is certified

def unimodular(rng, d):
    U = np.eye(d, dtype=int) + np.triu(rng.integers(-2, 3, size=(d, d)), 1)
    L = np.eye(d, dtype=int) + np.tril(rng.integers(-1, 2, size=(d, d)), -1)
    return U @ L


def dyadic_matrix(rng, d):
    base = int(rng.choice([2, 3]))
    exps = sorted(rng.integers(1, 4, size=d).tolist(), reverse=True)
    blocks, sizes = [], []
    i = 0
    while i < d:
        size = 1
        if rng.random() < 0.4 and i + 1 < d and exps[i + 1] == exps[i]:
            size = 2
        blocks.append(jordan_block(base ** exps[i], size))
        sizes.append((exps[i], size))
        i += size
    J = block_diag(*blocks).round().astype(int)
    C = unimodular(rng, d)
    C_inv = np.round(np.linalg.inv(C)).astype(int)
    M = C @ J @ C_inv
    rows = [[F(int(x)) for x in row] for row in M]
    top = exps[0]
    is_and = all(size == 1 for e, size in sizes if e == top)
    return InputMatrix.from_rows(rows), F(sum(exps), top), is_and


ALPHAS = [F(-1, 2), F(0), F(1, 6), F(1, 3), F(1, 2), F(2, 3), F(1), F(5, 3), F(2)]
EXPS = [F(1, 2), F(1), F(3, 2), F(2), F(3), F(4), INF]


@settings(max_examples=150, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.integers(2, 4),
    st.sampled_from(EXPS),
    st.sampled_from(EXPS),
    st.sampled_from(EXPS),
    st.sampled_from(ALPHAS),
    st.integers(0, 5),
)
def test_closed_form_matches_oracle(seed, d, p, q, r, alpha, n):
    m, iso, is_and = dyadic_matrix(np.random.default_rng(seed), d)
    a = spectral_analyze(m)
    assert a.exact_isotropy == iso
    params = EmbeddingParams(p, q, r, alpha, n)
    assert decide_inhomogeneous(a, params).outcome.value == oracle.inhomogeneous(p, q, r, alpha, n, iso, is_and)
    assert decide_homogeneous(a, params).outcome.value == oracle.homogeneous(p, q, r, alpha, n)


@settings(max_examples=100, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.integers(2, 4),
    st.sampled_from(EXPS),
    st.sampled_from(EXPS),
    st.sampled_from(EXPS),
    st.sampled_from(ALPHAS),
    st.integers(0, 5),
    st.sampled_from(list(Variant)),
)
def test_routes_never_contradict(seed, d, p, q, r, alpha, n, variant):
    a = spectral_analyze(random_expansive(np.random.default_rng(seed), d))
    params = EmbeddingParams(p, q, r, alpha, n)
    cf = decide(a, params, variant, Route.CLOSED_FORM).outcome
    sm = decide_via_summability(a, params, variant).outcome
    assert {cf, sm} != {Outcome.EMBEDS, Outcome.DOES_NOT_EMBED}


@settings(max_examples=100, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.integers(2, 4),
    st.sampled_from(EXPS),
    st.sampled_from(EXPS),
    st.sampled_from(EXPS),
    st.sampled_from(ALPHAS),
    st.integers(0, 5),
)
def test_undecided_only_outside_sharpness_region(seed, d, p, q, r, alpha, n):
    a = spectral_analyze(random_expansive(np.random.default_rng(seed), d))
    params = EmbeddingParams(p, q, r, alpha, n)
    for variant in Variant:
        v = decide(a, params, variant)
        if v.outcome is Outcome.UNDECIDED and not v.warnings:
            assert not sharpness_region(a, params, variant)
    if decide_homogeneous(a, params).outcome is Outcome.UNDECIDED:
        assert q != INF and q > 2


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_homogeneous_matrix_independent(s1, d, s2):
    a = spectral_analyze(random_expansive(np.random.default_rng(s1), d))
    b = spectral_analyze(random_expansive(np.random.default_rng(s2), d))
    for p, q, r, alpha, n in itertools.product([F(1), F(3)], [F(2), F(3), INF], [F(1), F(3)], [F(0), F(1, 3)], [0, 1]):
        params = EmbeddingParams(p, q, r, alpha, n)
        va, vb = decide_homogeneous(a, params), decide_homogeneous(b, params)
        assert va.outcome is vb.outcome
        assert [(c.clause_ref, c.status) for c in va.trace] == [(c.clause_ref, c.status) for c in vb.trace]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3), st.sampled_from(EXPS), st.sampled_from(ALPHAS))
def test_similarity_invariance_of_inhomogeneous(seed, d, r, alpha):
    rng = np.random.default_rng(seed)
    m = random_expansive(rng, d, conjugate=False)
    C = well_conditioned(rng, d)
    a = spectral_analyze(m)
    b = spectral_analyze(InputMatrix.from_array(C @ m.array @ np.linalg.inv(C)))
    if a.warnings or b.warnings:
        return
    for n in range(4):
        params = EmbeddingParams(F(2), F(3), r, alpha, n)
        va, vb = decide_inhomogeneous(a, params), decide_inhomogeneous(b, params)
        if "Boundary" in va.warning_codes or "Boundary" in vb.warning_codes:
            continue
        assert va.outcome is vb.outcome
