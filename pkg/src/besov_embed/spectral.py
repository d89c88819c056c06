"""Spectral analysis of expansive dilation matrices.

Eigenvalues come from LAPACK in floating point.  Multiplicities and Jordan
block sizes are read off rank chains of the nilpotent part of each
eigenvalue, isolated by a reordered Schur decomposition so that unrelated
eigenvalues cannot pollute the ranks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg

from . import exact
from .errors import (
    ClusterAmbiguity,
    EigenSolverFailure,
    IllConditioned,
    NormOverflow,
    NotAnEigenvalue,
    NotExpansive,
    ParseError,
    SingularMatrix,
)
from .exact import Scalar

DEFAULT_TOL = 1e-8
# merges farther apart than this are reported as possibly distinct
AMBIGUITY_FLOOR = 1e-12
# how far apart split copies of a defective eigenvalue may be searched for
LOOSE_RADIUS = 1e-2
# slack on the expected (eps * ||A||)**(1/k) splitting of a size-k Jordan block
SPLIT_SLACK = 1e4
COND_CAP = 1e12
_LOG_FLOAT_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class InputMatrix:
    """A real square matrix with exactly known entries."""

    rows: tuple[tuple[Scalar, ...], ...]

    def __post_init__(self):
        d = len(self.rows)
        if d == 0:
            raise ParseError("matrix must have at least one row")
        for row in self.rows:
            if len(row) != d:
                raise ParseError(f"matrix is not square: expected {d} columns, got {len(row)}")

    @classmethod
    def from_rows(cls, rows) -> "InputMatrix":
        try:
            parsed = tuple(tuple(exact.parse_scalar(x) for x in row) for row in rows)
        except TypeError as exc:
            raise ParseError("matrix rows must be lists of numbers") from exc
        return cls(parsed)

    @classmethod
    def from_array(cls, array) -> "InputMatrix":
        arr = np.asarray(array, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ParseError(f"expected a square 2-d array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ParseError("matrix entries must be finite")
        return cls(tuple(tuple(Fraction(float(x)) for x in row) for row in arr))

    @classmethod
    def from_json(cls, obj) -> "InputMatrix":
        if not isinstance(obj, dict) or "rows" not in obj:
            raise ParseError('matrix JSON must be an object with a "rows" field')
        m = cls.from_rows(obj["rows"])
        if "dim" in obj and obj["dim"] != m.dim:
            raise ParseError(f'"dim" is {obj["dim"]} but the matrix has {m.dim} rows')
        return m

    def to_json(self) -> dict:
        return {"dim": self.dim, "rows": [[exact.format_scalar(x) for x in row] for row in self.rows]}

    @property
    def dim(self) -> int:
        return len(self.rows)

    @cached_property
    def array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.rows], dtype=float)


@dataclass(frozen=True)
class Eigenvalue:
    """One distinct eigenvalue; a complex one stands for its conjugate pair."""

    value: complex
    paired: bool
    algebraic: int
    geometric: int
    max_block: int

    @property
    def count(self) -> int:
        return 2 if self.paired else 1

    @property
    def is_semisimple(self) -> bool:
        return self.algebraic == self.geometric


@dataclass(frozen=True)
class EigenCluster:
    modulus: float
    members: tuple[Eigenvalue, ...]

    @property
    def representative_values(self) -> tuple[complex, ...]:
        return tuple(e.value for e in self.members)

    @property
    def algebraic_multiplicity(self) -> int:
        return sum(e.algebraic * e.count for e in self.members)

    @property
    def geometric_multiplicity(self) -> int:
        return sum(e.geometric * e.count for e in self.members)

    @property
    def max_jordan_block(self) -> int:
        return max(e.max_block for e in self.members)

    def to_json(self) -> dict:
        return {
            "modulus": self.modulus,
            "values": [
                {"re": e.value.real, "im": e.value.imag, "conjugate_pair": e.paired} for e in self.members
            ],
            "algebraic_multiplicity": self.algebraic_multiplicity,
            "geometric_multiplicity": self.geometric_multiplicity,
            "max_jordan_block": self.max_jordan_block,
        }


@dataclass(frozen=True)
class AnalyzedMatrix:
    matrix: InputMatrix
    clusters: tuple[EigenCluster, ...]
    det_abs: float
    lambda_max: float
    is_expansive: bool
    is_and: bool | None
    warnings: tuple[str, ...] = ()
    merge_affects_and: bool = False
    log_det_abs: float = field(default=0.0)

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @property
    def top(self) -> EigenCluster:
        return self.clusters[0]

    @property
    def bottom(self) -> EigenCluster:
        return self.clusters[-1]

    @property
    def lambda_min(self) -> float:
        return self.bottom.modulus

    @cached_property
    def exact_abs_det(self) -> tuple[Fraction, int] | None:
        return exact.exact_abs_det(self.matrix.rows)

    def _exact_cluster_modulus(self, cluster: EigenCluster) -> tuple[Fraction, int] | None:
        return exact.exact_modulus(self.matrix.rows, cluster.representative_values)

    @cached_property
    def _exact_top(self):
        return self._exact_cluster_modulus(self.top)

    @cached_property
    def _exact_bottom(self):
        if len(self.clusters) == 1:
            return self._exact_top
        return self._exact_cluster_modulus(self.bottom)

    def _ratio(self, modulus) -> Fraction | None:
        det = self.exact_abs_det
        if det is None or modulus is None:
            return None
        return exact.log_ratio(det, modulus)

    @cached_property
    def exact_isotropy(self) -> Fraction | None:
        """``ln|det A| / ln lambda_max`` as a certified rational, when it is one."""
        if self.dim == 1:
            return Fraction(1)
        return self._ratio(self._exact_top)

    @cached_property
    def exact_log_ratio_min(self) -> Fraction | None:
        """``ln|det A| / ln lambda_min`` as a certified rational, when it is one."""
        if self.dim == 1:
            return Fraction(1)
        return self._ratio(self._exact_bottom)

    def to_json(self) -> dict:
        out = {
            "dim": self.dim,
            "clusters": [c.to_json() for c in self.clusters],
            "det_abs": self.det_abs,
            "lambda_max": self.lambda_max,
            "is_expansive": self.is_expansive,
            "is_and": self.is_and,
            "warnings": list(self.warnings),
        }
        if self.is_expansive:
            out["isotropy_degree"] = isotropy_degree(self)
            nf = expansive_normal_form(self)
            out["normal_form"] = nf.to_json()
        return out


@dataclass(frozen=True)
class NormalFormEntry:
    original_modulus: float
    eigenvalue: float
    algebraic: int
    geometric: int
    max_block: int


@dataclass(frozen=True)
class NormalForm:
    """Spectral description of the expansive normal form (no explicit matrix)."""

    scaling_exponent: float
    eigenvalue_map: tuple[NormalFormEntry, ...]
    det_check: float

    @property
    def lambda_max(self) -> float:
        return max(e.eigenvalue for e in self.eigenvalue_map)

    @property
    def is_and(self) -> bool:
        top = max(self.eigenvalue_map, key=lambda e: e.eigenvalue)
        return top.algebraic == top.geometric

    @property
    def eigenvalues(self) -> list[float]:
        return [e.eigenvalue for e in self.eigenvalue_map for _ in range(e.algebraic)]

    def isotropy_degree(self) -> float:
        if sum(e.algebraic for e in self.eigenvalue_map) == 1:
            return 1.0
        log_det = sum(e.algebraic * math.log(e.eigenvalue) for e in self.eigenvalue_map)
        return log_det / math.log(self.lambda_max)

    def to_json(self) -> dict:
        return {
            "scaling_exponent": self.scaling_exponent,
            "det_check": self.det_check,
            "eigenvalues": [
                {
                    "original_modulus": e.original_modulus,
                    "eigenvalue": e.eigenvalue,
                    "algebraic_multiplicity": e.algebraic,
                    "geometric_multiplicity": e.geometric,
                    "max_jordan_block": e.max_block,
                }
                for e in self.eigenvalue_map
            ],
        }


def _as_array(m) -> np.ndarray:
    if isinstance(m, InputMatrix):
        return m.array
    if isinstance(m, AnalyzedMatrix):
        return m.matrix.array
    return np.asarray(m, dtype=float)


def _rank(M: np.ndarray, threshold: float) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > threshold))


def _rank_chain(N: np.ndarray, scale: float, tol: float) -> tuple[int, int]:
    """Nullity of ``N`` and the first ``k`` where ``rank(N**k)`` stops dropping."""
    g = N.shape[0]
    ranks = [g]
    P = np.eye(g, dtype=N.dtype)
    for k in range(1, g + 2):
        P = P @ N
        ranks.append(_rank(P, tol * scale**k))
        if ranks[-1] == ranks[-2]:
            return g - ranks[1], k - 1
    return g - ranks[1], g


def _nilpotent_data(
    A: np.ndarray, mu: complex, members: np.ndarray, others: np.ndarray, tol: float
) -> tuple[int, int] | None:
    """(geometric multiplicity, max block) for ``mu`` from its Schur block.

    ``others`` are the remaining eigenvalues; the selection disc reaches
    halfway to the nearest of them.  Returns None when the Schur reordering
    does not isolate exactly the expected number of eigenvalues.
    """
    g = len(members)
    radius = max(np.max(np.abs(members - mu)) * 1.5, tol * max(abs(mu), 1.0))
    if len(others):
        radius = max(radius, 0.5 * float(np.min(np.abs(others - mu))))
    else:
        radius = np.inf
    T, _, sdim = scipy.linalg.schur(A.astype(complex), output="complex", sort=lambda x: abs(x - mu) <= radius)
    if sdim != g:
        return None
    N = np.triu(T[:g, :g], 1)
    scale = max(np.linalg.norm(A, 2), 1.0)
    return _rank_chain(N, scale, tol)


def _full_rank_data(A: np.ndarray, mu: complex, g: int, tol: float) -> tuple[int, int]:
    d = A.shape[0]
    X = A.astype(complex) - mu * np.eye(d)
    scale = max(np.linalg.norm(X, 2), 1e-300)
    ranks = [d]
    P = np.eye(d, dtype=complex)
    for k in range(1, g + 2):
        P = P @ X
        ranks.append(_rank(P, tol * scale**k))
        if ranks[-1] == ranks[-2]:
            return d - ranks[1], k - 1
    return d - ranks[1], g


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)

    def groups(self) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for i in range(len(self.parent)):
            out.setdefault(self.find(i), []).append(i)
        return list(out.values())


def _spread(vals: np.ndarray) -> float:
    mu = vals.mean()
    return float(np.max(np.abs(vals - mu))) if len(vals) > 1 else 0.0


def _distinct_eigenvalues(A: np.ndarray, eigs: np.ndarray, tol: float, warnings: list[str]):
    """Group numerically split copies of the same eigenvalue.

    Tight groups are eigenvalues within ``tol`` (relative).  Tight groups
    closer than ``LOOSE_RADIUS`` are merged further when their combined
    spread matches the splitting a defective eigenvalue of the detected
    Jordan size would produce.
    """
    d = len(eigs)
    scale = max(float(np.max(np.abs(eigs))), 1.0)
    eps = np.finfo(float).eps
    norm_a = max(np.linalg.norm(A, 2), 1.0)

    tight = _UnionFind(d)
    for i in range(d):
        for j in range(i + 1, d):
            if abs(eigs[i] - eigs[j]) <= tol * max(abs(eigs[i]), abs(eigs[j]), 1.0):
                tight.union(i, j)
    groups = tight.groups()

    loose = _UnionFind(len(groups))
    centers = [eigs[g].mean() for g in groups]
    for a in range(len(groups)):
        for b in range(a + 1, len(groups)):
            if abs(centers[a] - centers[b]) <= LOOSE_RADIUS * scale:
                loose.union(a, b)

    result = []  # (members_idx, mu, geometric, max_block)
    for comp in loose.groups():
        idx = [i for a in comp for i in groups[a]]
        vals = eigs[idx]
        if len(comp) > 1:
            mu = vals.mean()
            data = _nilpotent_data(A, mu, vals, np.delete(eigs, idx), tol)
            if data is not None:
                geom, block = data
                allowed = SPLIT_SLACK * (eps * norm_a) ** (1.0 / block) * scale
                if geom < len(idx) and _spread(vals) <= allowed:
                    warnings.append(
                        f"ClusterAmbiguity: eigenvalues {np.round(vals, 12).tolist()} merged as one "
                        f"defective eigenvalue (spread {_spread(vals):.3g})"
                    )
                    result.append((idx, mu, geom, block))
                    continue
            sep = min(
                abs(centers[a] - centers[b]) for a in comp for b in comp if a < b
            )
            if sep <= 100 * tol * scale:
                warnings.append(f"ClusterAmbiguity: eigenvalues {sep:.3g} apart kept distinct")
        for a in comp:
            g_idx = groups[a]
            vals_a = eigs[g_idx]
            mu = vals_a.mean()
            if _spread(vals_a) > AMBIGUITY_FLOOR * max(abs(mu), 1.0):
                warnings.append(
                    f"ClusterAmbiguity: eigenvalues merged at distance {_spread(vals_a):.3g} within tolerance"
                )
            data = _nilpotent_data(A, mu, vals_a, np.delete(eigs, g_idx), tol) if len(g_idx) > 1 else (1, 1)
            if data is None:
                data = _full_rank_data(A, mu, len(g_idx), tol)
            result.append((g_idx, mu, data[0], data[1]))
    return result


def spectral_analyze(m: InputMatrix, tol: float = DEFAULT_TOL, strict: bool = False) -> AnalyzedMatrix:
    """Eigenvalue clusters, Jordan data, determinant, ``lambda_max`` and AND status."""
    if not isinstance(m, InputMatrix):
        m = InputMatrix.from_array(m)
    A = m.array
    d = m.dim
    if not np.all(np.isfinite(A)):
        raise ParseError("matrix entries must be finite")
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= d * np.finfo(float).eps * sv[0]:
        raise SingularMatrix("matrix is singular to working precision")
    try:
        eigs = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverFailure(str(exc)) from exc
    if not np.all(np.isfinite(eigs)):
        raise EigenSolverFailure("eigenvalue iteration produced non-finite values")

    warnings: list[str] = []
    distinct = _distinct_eigenvalues(A, eigs, tol, warnings)

    # fold conjugate pairs into single entries
    scale = max(float(np.max(np.abs(eigs))), 1.0)
    entries: list[Eigenvalue] = []
    used = [False] * len(distinct)
    for i, (idx, mu, geom, block) in enumerate(distinct):
        if used[i]:
            continue
        used[i] = True
        if abs(mu.imag) <= tol * max(abs(mu), 1.0):
            entries.append(Eigenvalue(complex(mu.real, 0.0), False, len(idx), geom, block))
            continue
        partner = None
        for j in range(i + 1, len(distinct)):
            if not used[j] and abs(distinct[j][1] - np.conj(mu)) <= max(LOOSE_RADIUS * scale, tol):
                partner = j
                break
        if partner is not None:
            used[partner] = True
        value = complex(mu.real, abs(mu.imag))
        entries.append(Eigenvalue(value, partner is not None, len(idx), geom, block))

    # cluster by modulus
    entries.sort(key=lambda e: -abs(e.value))
    uf = _UnionFind(len(entries))
    mods = [abs(e.value) for e in entries]
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            gap = abs(mods[i] - mods[j])
            rel = max(mods[i], mods[j])
            if gap <= tol * rel:
                uf.union(i, j)
                if gap > AMBIGUITY_FLOOR * rel:
                    warnings.append(f"ClusterAmbiguity: moduli {mods[i]!r} and {mods[j]!r} merged")
            elif gap <= 100 * tol * rel:
                warnings.append(f"ClusterAmbiguity: moduli {mods[i]!r} and {mods[j]!r} straddle the tolerance band")
    clusters = []
    for grp in uf.groups():
        members = tuple(entries[i] for i in grp)
        weight = sum(e.algebraic * e.count for e in members)
        modulus = sum(abs(e.value) * e.algebraic * e.count for e in members) / weight
        clusters.append(EigenCluster(float(modulus), members))
    clusters.sort(key=lambda c: -c.modulus)

    if strict and warnings:
        raise ClusterAmbiguity("; ".join(warnings))

    sign, logdet = np.linalg.slogdet(A)
    lambda_max = clusters[0].modulus
    is_expansive = all(c.modulus > 1.0 + tol for c in clusters)
    is_and = None
    merge_affects = False
    if is_expansive:
        top = clusters[0]
        is_and = top.algebraic_multiplicity == top.geometric_multiplicity
        statuses = {e.is_semisimple for e in top.members}
        merge_affects = len(statuses) > 1
    return AnalyzedMatrix(
        matrix=m,
        clusters=tuple(clusters),
        det_abs=float(math.exp(logdet)),
        lambda_max=float(lambda_max),
        is_expansive=is_expansive,
        is_and=is_and,
        warnings=tuple(dict.fromkeys(warnings)),
        merge_affects_and=merge_affects,
        log_det_abs=float(logdet),
    )


def _locate(m, lam: complex, tol: float) -> tuple[np.ndarray, np.ndarray]:
    A = _as_array(m)
    eigs = np.linalg.eigvals(A)
    warnings: list[str] = []
    for idx, mu, geom, block in _distinct_eigenvalues(A, eigs, tol, warnings):
        vals = eigs[idx]
        reach = max(tol * max(abs(mu), 1.0), 1.5 * _spread(vals))
        if abs(complex(lam) - mu) <= reach:
            return A, (geom, block)
    raise NotAnEigenvalue(f"{lam!r} is not an eigenvalue within tolerance {tol}")


def geometric_multiplicity(m, lam: complex, tol: float = DEFAULT_TOL) -> int:
    """``d - rank(A - lam I)``, the rank taken on the eigenvalue's isolated Schur block."""
    return _locate(m, lam, tol)[1][0]


def max_jordan_block_size(m, lam: complex, tol: float = DEFAULT_TOL) -> int:
    """Smallest ``k`` with ``rank((A - lam I)**k) == rank((A - lam I)**(k+1))``."""
    return _locate(m, lam, tol)[1][1]


def _normalized(M: np.ndarray) -> tuple[np.ndarray, float]:
    s = float(np.max(np.abs(M)))
    if s == 0.0 or not math.isfinite(s):
        raise NormOverflow("matrix power degenerated")
    return M / s, math.log(s)


def log_matrix_power_norm(m, j: int, cond_cap: float = COND_CAP) -> float:
    """Natural log of ``||A**j||_2`` via renormalized repeated squaring."""
    A = _as_array(m)
    d = A.shape[0]
    j = int(j)
    if j == 0:
        return 0.0
    if j < 0:
        cond = np.linalg.cond(A)
        if not cond <= cond_cap:
            raise IllConditioned(f"condition number {cond:.3g} exceeds cap {cond_cap:.3g}")
        A = np.linalg.solve(A, np.eye(d))
        j = -j
    base, base_log = _normalized(A)
    acc, acc_log = None, 0.0
    while True:
        if j & 1:
            if acc is None:
                acc, acc_log = base, base_log
            else:
                acc, s = _normalized(acc @ base)
                acc_log += base_log + s
        j >>= 1
        if not j:
            break
        base, s = _normalized(base @ base)
        base_log = 2 * base_log + s
    return acc_log + math.log(np.linalg.norm(acc, 2))


def matrix_power_norm(m, j: int, log: bool = False, cond_cap: float = COND_CAP) -> float:
    """Spectral norm of ``A**j`` for any integer ``j``.

    With ``log=True`` the natural logarithm is returned, which never
    overflows; otherwise :class:`NormOverflow` is raised past float range.
    """
    value = log_matrix_power_norm(m, j, cond_cap=cond_cap)
    if log:
        return value
    if value > _LOG_FLOAT_MAX:
        raise NormOverflow(f"||A^{j}|| = exp({value:.6g}) exceeds the float range")
    return math.exp(value)


def log_power_norm_sequence(m, j_max: int, inverse: bool = False, cond_cap: float = COND_CAP) -> np.ndarray:
    """``log ||A**j||`` (or of ``A**-j``) for ``j = 0..j_max`` by successive products."""
    A = _as_array(m)
    d = A.shape[0]
    if inverse:
        cond = np.linalg.cond(A)
        if not cond <= cond_cap:
            raise IllConditioned(f"condition number {cond:.3g} exceeds cap {cond_cap:.3g}")
        A = np.linalg.solve(A, np.eye(d))
    out = np.zeros(j_max + 1)
    P, log_scale = np.eye(d), 0.0
    for j in range(1, j_max + 1):
        P, s = _normalized(P @ A)
        log_scale += s
        out[j] = log_scale + math.log(np.linalg.norm(P, 2))
    return out


def _require_expansive(a: AnalyzedMatrix) -> None:
    if not a.is_expansive:
        raise NotExpansive(f"matrix has an eigenvalue of modulus {a.lambda_min:.6g} <= 1")


def expansive_normal_form(a: AnalyzedMatrix) -> NormalForm:
    """Map each modulus class ``mu`` to ``mu**s`` with ``s = ln 2 / ln|det A|``."""
    _require_expansive(a)
    s = math.log(2.0) / a.log_det_abs
    entries = tuple(
        NormalFormEntry(
            original_modulus=c.modulus,
            eigenvalue=math.exp(s * math.log(c.modulus)),
            algebraic=c.algebraic_multiplicity,
            geometric=c.geometric_multiplicity,
            max_block=c.max_jordan_block,
        )
        for c in a.clusters
    )
    log_check = sum(e.algebraic * s * math.log(e.original_modulus) for e in entries)
    return NormalForm(scaling_exponent=s, eigenvalue_map=entries, det_check=math.exp(log_check))


def isotropy_degree(a: AnalyzedMatrix) -> float:
    """``ln|det A| / ln lambda_max``; lies in ``(1, d]`` for ``d >= 2`` and is 1 for ``d = 1``."""
    _require_expansive(a)
    if a.dim == 1:
        return 1.0
    return a.log_det_abs / math.log(a.lambda_max)
