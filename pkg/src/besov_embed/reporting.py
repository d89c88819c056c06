"""Case files, run configuration, and report emission for the command line."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Any

from .decision import Outcome, Route, Variant, Verdict, decide
from .errors import (
    BesovEmbedError,
    EigenSolverFailure,
    IllConditioned,
    NormOverflow,
    NotExpansive,
    ParseError,
    SingularMatrix,
)
from .exponents import EmbeddingParams, ExtReal, format_ext, parse_exponent
from .sequences import Domain, build_sequence_spec, classify_membership, numeric_probe, probe_trace
from .spectral import InputMatrix, spectral_analyze

EXIT_OUTCOME = {Outcome.EMBEDS: 0, Outcome.DOES_NOT_EMBED: 1, Outcome.UNDECIDED: 2}
EXIT_CONTRADICTION = 3
EXIT_INTERNAL = 70
EXIT_IO = 74
EXIT_ERRORS = [
    (ParseError, 64),
    (NotExpansive, 65),
    (SingularMatrix, 66),
    (IllConditioned, 67),
    (NormOverflow, 68),
    (EigenSolverFailure, 70),
]

BOTH = "both"


def exit_code_for(exc: BaseException) -> int:
    for cls, code in EXIT_ERRORS:
        if isinstance(exc, cls):
            return code
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_INTERNAL


def error_payload(exc: BaseException) -> dict:
    kind = "IoError" if isinstance(exc, OSError) and not isinstance(exc, BesovEmbedError) else type(exc).__name__
    return {"error": {"type": kind, "message": str(exc), "exit_code": exit_code_for(exc)}}


@dataclass(frozen=True)
class RunConfig:
    cluster_tol: float = 1e-8
    boundary_tol: float = 1e-9
    probe_j_max: int = 400
    probe_window: int = 16
    output_format: str = "json"

    def __post_init__(self):
        if not (self.cluster_tol > 0 and self.boundary_tol > 0):
            raise ParseError("tolerances must be positive")
        if self.probe_window < 2 or self.probe_j_max < self.probe_window:
            raise ParseError("need probe_j_max >= probe_window >= 2")
        if self.output_format not in ("json", "text", "csv"):
            raise ParseError(f"unknown output format {self.output_format!r}")

    @classmethod
    def load(cls, path: str | Path | None, **overrides) -> "RunConfig":
        data: dict[str, Any] = {}
        if path is not None:
            try:
                data = json.loads(Path(path).read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise ParseError(f"config {path}: {exc}") from exc
            if not isinstance(data, dict):
                raise ParseError("config file must hold a JSON object")
            known = {f.name for f in fields(cls)}
            unknown = set(data) - known
            if unknown:
                raise ParseError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


@dataclass(frozen=True)
class CaseRecord:
    id: str
    matrix: InputMatrix
    params: EmbeddingParams
    variant: Variant
    route: str  # "closed_form" | "summability" | "both"
    expected: str | None = None

    @classmethod
    def from_json(cls, obj: Any, base_dir: Path | None = None) -> "CaseRecord":
        if not isinstance(obj, dict):
            raise ParseError("case record must be a JSON object")
        try:
            case_id = str(obj["id"])
            params = obj["params"]
            matrix = obj["matrix"]
        except KeyError as exc:
            raise ParseError(f"case record missing field {exc}") from exc
        if not isinstance(params, dict):
            raise ParseError('"params" must be an object')
        try:
            p = EmbeddingParams.parse(params["p"], params["q"], params["r"], params["alpha"], params["n"])
        except KeyError as exc:
            raise ParseError(f"params missing {exc}") from exc
        route = obj.get("route", "closed_form")
        if route not in ("closed_form", "summability", BOTH):
            raise ParseError(f"unknown route {route!r}")
        try:
            variant = Variant(obj.get("variant", "inhomogeneous"))
        except ValueError as exc:
            raise ParseError(f"unknown variant {obj.get('variant')!r}") from exc
        return cls(case_id, load_matrix(matrix, base_dir), p, variant, route, obj.get("expected"))


def load_matrix(source: Any, base_dir: Path | None = None) -> InputMatrix:
    """Matrix from an inline object, inline JSON text, or a path to a JSON file."""
    if isinstance(source, dict):
        return InputMatrix.from_json(source)
    if not isinstance(source, str):
        raise ParseError("matrix must be a JSON object or a file path")
    text = source.strip()
    if text.startswith("{"):
        try:
            return InputMatrix.from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(f"inline matrix: {exc}") from exc
    path = Path(text)
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    raw = path.read_text(encoding="utf-8")
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return InputMatrix.from_json(obj)


def run_single(config: RunConfig, case: CaseRecord) -> tuple[dict, int]:
    """Decide one case; returns the report object and the exit code."""
    a = spectral_analyze(case.matrix, tol=config.cluster_tol)
    if not a.is_expansive:
        raise NotExpansive(f"matrix has an eigenvalue of modulus {a.lambda_min:.6g} <= 1")
    if case.route == BOTH:
        cf = decide(a, case.params, case.variant, Route.CLOSED_FORM, config.boundary_tol)
        sm = decide(a, case.params, case.variant, Route.SUMMABILITY, config.boundary_tol)
        consistent = {cf.outcome, sm.outcome} != {Outcome.EMBEDS, Outcome.DOES_NOT_EMBED}
        report = {
            "closed_form": cf.to_json(),
            "summability": sm.to_json(),
            "consistent": consistent,
            "agree": cf.outcome is sm.outcome,
        }
        return report, EXIT_OUTCOME[cf.outcome] if consistent else EXIT_CONTRADICTION
    v = decide(a, case.params, case.variant, Route(case.route), config.boundary_tol)
    return v.to_json(), EXIT_OUTCOME[v.outcome]


def headline(report: dict) -> str:
    return report["closed_form"]["outcome"] if "closed_form" in report else report["outcome"]


def read_cases(path: Path) -> list[tuple[int, Any]]:
    """Parse a JSONL case file; malformed lines come back as exceptions."""
    out = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                out.append((lineno, json.loads(line)))
            except json.JSONDecodeError as exc:
                out.append((lineno, ParseError(f"line {lineno}: {exc}")))
    return out


def _run_row(config: RunConfig, lineno: int, obj: Any, base_dir: Path) -> dict:
    row: dict[str, Any] = {"id": obj.get("id", f"line-{lineno}") if isinstance(obj, dict) else f"line-{lineno}"}
    try:
        if isinstance(obj, Exception):
            raise obj
        case = CaseRecord.from_json(obj, base_dir)
        report, code = run_single(config, case)
        row.update(ok=True, exit_code=code, report=report)
        if case.expected is not None:
            row["expected"] = case.expected
            row["matches_expected"] = headline(report) == case.expected
    except Exception as exc:  # per-case isolation
        row.update(ok=False, **error_payload(exc))
    return row


def run_batch(config: RunConfig, path: str | Path, jobs: int = 1) -> tuple[dict, list[dict]]:
    """Run every case of a JSONL file; rows come back sorted by id."""
    path = Path(path)
    cases = read_cases(path)
    seen: set[str] = set()
    duplicate: set[str] = set()
    for _, obj in cases:
        if isinstance(obj, dict) and "id" in obj:
            key = str(obj["id"])
            (duplicate if key in seen else seen).add(key)
    work = [(lineno, obj) for lineno, obj in cases]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda item: _run_row(config, item[0], item[1], path.parent), work))
    else:
        rows = [_run_row(config, lineno, obj, path.parent) for lineno, obj in work]
    for row in rows:
        if row["id"] in duplicate:
            row.pop("report", None)
            row.update(ok=False, **error_payload(ParseError(f"duplicate case id {row['id']!r}")))
    rows.sort(key=lambda r: str(r["id"]))
    return summarize(rows), rows


def summarize(rows: list[dict]) -> dict:
    outcomes = {o.value: 0 for o in Outcome}
    disagreements, contradictions, mismatches, errors = [], [], [], []
    warnings = 0
    for row in rows:
        if not row["ok"]:
            errors.append(row["id"])
            continue
        rep = row["report"]
        outcomes[headline(rep)] += 1
        verdicts = [rep["closed_form"], rep["summability"]] if "closed_form" in rep else [rep]
        warnings += sum(len(v["warnings"]) for v in verdicts)
        if "closed_form" in rep:
            if not rep["agree"]:
                disagreements.append(row["id"])
            if not rep["consistent"]:
                contradictions.append(row["id"])
        if row.get("matches_expected") is False:
            mismatches.append(row["id"])
    return {
        "cases": len(rows),
        "outcomes": outcomes,
        "errors": errors,
        "disagreements": disagreements,
        "contradictions": contradictions,
        "expected_mismatches": mismatches,
        "warnings": warnings,
    }


def emit_probe_trace(
    config: RunConfig,
    case: CaseRecord,
    t: ExtReal,
    s: ExtReal,
    out_path: str | Path | None = None,
    j_max: int | None = None,
) -> tuple[str, dict]:
    """CSV rows ``j,a_j,partial_sum`` plus a summary of the probe and classifier."""
    a = spectral_analyze(case.matrix, tol=config.cluster_tol)
    if not a.is_expansive:
        raise NotExpansive(f"matrix has an eigenvalue of modulus {a.lambda_min:.6g} <= 1")
    domain = Domain.INTEGERS if case.variant is Variant.HOMOGENEOUS else Domain.NATURALS
    spec = build_sequence_spec(a, case.params, t, domain)
    j_max = config.probe_j_max if j_max is None else j_max
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["j", "a_j", "partial_sum"])
    for j, value, partial in probe_trace(spec, a, s, j_max):
        writer.writerow([j, format(value, ".17g"), format(partial, ".17g")])
    text = buf.getvalue()
    if out_path is not None:
        Path(out_path).write_text(text, encoding="utf-8")
    summary = {
        "sequence": spec.describe(),
        "s": format_ext(s),
        "classification": classify_membership(spec, s, config.boundary_tol).status.value,
    }
    window = min(config.probe_window, j_max)
    if window >= 2:
        res = numeric_probe(spec, a, s, j_max=j_max, ratio_window=window)
        summary["probe"] = {k: v for k, v in asdict(res).items() if v is not None}
    return text, summary


def load_schema() -> dict:
    return json.loads(resources.files("besov_embed").joinpath("data/report.schema.json").read_text(encoding="utf-8"))


def bundled_examples_path() -> Path:
    return Path(str(resources.files("besov_embed").joinpath("data/paper_examples.jsonl")))


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False, default=_json_default)


def _json_default(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    raise TypeError(f"not JSON serializable: {x!r}")


def render_verdict_text(report: dict) -> str:
    if "closed_form" in report:
        parts = [
            f"routes agree: {report['agree']}, consistent: {report['consistent']}",
            "--- closed form",
            render_verdict_text(report["closed_form"]),
            "--- summability",
            render_verdict_text(report["summability"]),
        ]
        return "\n".join(parts)
    d = report["derived"]
    lines = [
        f"outcome: {report['outcome']} ({report['variant']}, {report['route']})",
        f"derived: n*={d['n_star']} q_nabla={d['q_nabla']} iso_degree={d['iso_degree']} threshold={d['threshold']}",
    ]
    for c in report["trace"]:
        lines.append(f"  [{c['status']:<14}] {c.get('kind', ''):<10} {c['label']}  ({c['clause_ref']})  {c['detail']}")
    if report["warnings"]:
        for w in report["warnings"]:
            lines.append(f"warning {w['code']}: {w['detail']}")
    return "\n".join(lines)


def render_verdict_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["route", "label", "clause_ref", "kind", "status", "detail"])
    verdicts = [report["closed_form"], report["summability"]] if "closed_form" in report else [report]
    for v in verdicts:
        for c in v["trace"]:
            writer.writerow([v["route"], c["label"], c["clause_ref"], c.get("kind", ""), c["status"], c["detail"]])
    return buf.getvalue()


def render_batch_text(summary: dict, rows: list[dict]) -> str:
    lines = [f"{'id':<20} {'outcome':<16} expected"]
    for row in rows:
        if row["ok"]:
            exp = row.get("expected", "")
            flag = "" if row.get("matches_expected", True) else "  MISMATCH"
            lines.append(f"{row['id']:<20} {headline(row['report']):<16} {exp}{flag}")
        else:
            lines.append(f"{row['id']:<20} {'error':<16} {row['error']['type']}: {row['error']['message']}")
    o = summary["outcomes"]
    lines.append(
        f"cases={summary['cases']} embeds={o['embeds']} does_not_embed={o['does_not_embed']} "
        f"undecided={o['undecided']} errors={len(summary['errors'])} "
        f"disagreements={len(summary['disagreements'])} warnings={summary['warnings']}"
    )
    return "\n".join(lines)


def render_batch_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "status", "outcome", "expected", "matches_expected"])
    for row in rows:
        if row["ok"]:
            writer.writerow([row["id"], "ok", headline(row["report"]), row.get("expected", ""), row.get("matches_expected", "")])
        else:
            writer.writerow([row["id"], "error", row["error"]["type"], row.get("expected", ""), ""])
    return buf.getvalue()
