"""``besov-embed`` command line: decide, batch, probe, analyze."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import reporting
from .decision import Variant
from .exponents import EmbeddingParams, parse_exponent
from .reporting import CaseRecord, RunConfig, dumps, error_payload, exit_code_for, load_matrix
from .spectral import spectral_analyze


def _add_query_args(cmd: argparse.ArgumentParser, need_r: bool = True) -> None:
    cmd.add_argument("--matrix", required=True, help="matrix JSON file, or inline JSON object")
    cmd.add_argument("--p", required=True)
    cmd.add_argument("--q", required=True)
    cmd.add_argument("--r", required=need_r, default="1")
    cmd.add_argument("--alpha", required=True)
    cmd.add_argument("--n", required=True)
    cmd.add_argument("--variant", choices=[v.value for v in Variant], default="inhomogeneous")


def _add_common(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--config", type=Path, default=None, help="JSON file with RunConfig fields")
    cmd.add_argument("--format", dest="output_format", choices=["json", "text", "csv"], default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="besov-embed",
        description="Decide embeddings of anisotropic Besov spaces into Sobolev spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    dec = sub.add_parser("decide", help="decide a single embedding query")
    _add_query_args(dec)
    dec.add_argument("--route", choices=["closed_form", "summability", "both"], default="closed_form")
    _add_common(dec)

    bat = sub.add_parser("batch", help="run a JSONL file of cases")
    bat.add_argument("cases", type=Path)
    bat.add_argument("--out", type=Path, default=None, help="write per-case reports (JSONL) here")
    bat.add_argument("--jobs", type=int, default=1)
    _add_common(bat)

    prb = sub.add_parser("probe", help="write the partial-sum trace of a criterion sequence as CSV")
    _add_query_args(prb, need_r=False)
    prb.add_argument("--t", default=None, help="sequence index t (defaults to q)")
    prb.add_argument("--s", required=True, help="summability exponent")
    prb.add_argument("--j-max", type=int, default=None)
    prb.add_argument("--out", type=Path, default=None)
    _add_common(prb)

    ana = sub.add_parser("analyze", help="spectral report for a matrix")
    ana.add_argument("--matrix", required=True)
    _add_common(ana)
    return parser


def _config(args) -> RunConfig:
    return RunConfig.load(args.config, output_format=args.output_format)


def _case(args, route: str = "closed_form") -> CaseRecord:
    params = EmbeddingParams.parse(args.p, args.q, args.r, args.alpha, args.n)
    return CaseRecord("cli", load_matrix(args.matrix), params, Variant(args.variant), route)


def cmd_decide(args) -> int:
    config = _config(args)
    report, code = reporting.run_single(config, _case(args, args.route))
    if config.output_format == "text":
        print(reporting.render_verdict_text(report))
    elif config.output_format == "csv":
        sys.stdout.write(reporting.render_verdict_csv(report))
    else:
        print(dumps(report))
    return code


def cmd_batch(args) -> int:
    config = _config(args)
    summary, rows = reporting.run_batch(config, args.cases, jobs=args.jobs)
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as handle:
            for row in rows:
                handle.write(json.dumps(row, sort_keys=True) + "\n")
    if config.output_format == "text":
        print(reporting.render_batch_text(summary, rows))
    elif config.output_format == "csv":
        sys.stdout.write(reporting.render_batch_csv(rows))
    else:
        payload = {"summary": summary} if args.out is not None else {"summary": summary, "cases": rows}
        print(dumps(payload))
    return 1 if summary["errors"] else 0


def cmd_probe(args) -> int:
    config = _config(args)
    case = _case(args)
    t = parse_exponent(args.t) if args.t is not None else case.params.q
    s = parse_exponent(args.s)
    text, summary = reporting.emit_probe_trace(config, case, t, s, args.out, args.j_max)
    if args.out is None:
        sys.stdout.write(text)
        print(dumps(summary), file=sys.stderr)
    else:
        print(dumps(summary))
    return 0


def cmd_analyze(args) -> int:
    config = _config(args)
    a = spectral_analyze(load_matrix(args.matrix), tol=config.cluster_tol)
    report = a.to_json()
    if config.output_format == "text":
        print(f"dim={a.dim} |det|={a.det_abs:.17g} lambda_max={a.lambda_max:.17g}")
        print(f"expansive={a.is_expansive} AND={a.is_and}")
        for c in a.clusters:
            print(
                f"  |lambda|={c.modulus:.17g} alg={c.algebraic_multiplicity} "
                f"geom={c.geometric_multiplicity} block={c.max_jordan_block}"
            )
        if a.is_expansive:
            print(f"isotropy_degree={report['isotropy_degree']:.17g}")
        for w in a.warnings:
            print(f"warning {w}")
    else:
        print(dumps(report))
    return 0


COMMANDS = {"decide": cmd_decide, "batch": cmd_batch, "probe": cmd_probe, "analyze": cmd_analyze}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:
        payload = error_payload(exc)
        fmt = getattr(args, "output_format", None) or "json"
        if fmt == "json":
            print(dumps(payload))
        else:
            print(f"error ({payload['error']['type']}): {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
