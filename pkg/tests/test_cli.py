import json
import subprocess
import sys

import jsonschema
import pytest

from besov_embed.cli import main
from besov_embed.errors import ParseError
from besov_embed.reporting import (
    CaseRecord,
    RunConfig,
    emit_probe_trace,
    load_schema,
    bundled_examples_path,
    run_batch,
    run_single,
)

MAT_A = {"dim": 2, "rows": [["sqrt(2)", 0], [0, "sqrt(2)"]]}
MAT_B = {"dim": 2, "rows": [["sqrt(2)", 1], [0, "sqrt(2)"]]}
SCHEMA = load_schema()


def case(matrix, r="1", alpha="5/3", n=3, route="closed_form", variant="inhomogeneous", cid="x"):
    return CaseRecord.from_json(
        {"id": cid, "matrix": matrix, "params": {"p": "2", "q": "3", "r": r, "alpha": alpha, "n": n},
         "variant": variant, "route": route}
    )


def run_cli(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def decide_args(matrix, r="1", alpha="5/3", n="3", *extra):
    return ["decide", "--matrix", json.dumps(matrix), "--p", "2", "--q", "3", "--r", r, "--alpha", alpha, "--n", n, *extra]


def test_case_c_exit_codes(capsys):
    code, out = run_cli(capsys, *decide_args(MAT_A))
    assert code == 0
    jsonschema.validate(json.loads(out.out), SCHEMA)
    code, out = run_cli(capsys, *decide_args(MAT_B))
    assert code == 1
    code, _ = run_cli(capsys, *decide_args(MAT_A, "2"))
    assert code == 2


def test_route_both_case_a():
    report, code = run_single(RunConfig(), case(MAT_A, r="2", n=2, route="both"))
    assert code == 0
    assert report["consistent"] is True and report["agree"] is True
    jsonschema.validate(report, SCHEMA)


def test_malformed_matrix_file(tmp_path, capsys):
    bad = tmp_path / "m.json"
    bad.write_text("{not json")
    code, out = run_cli(capsys, "decide", "--matrix", str(bad), "--p", "2", "--q", "3", "--r", "1", "--alpha", "1", "--n", "0")
    assert code == 64
    payload = json.loads(out.out)
    assert payload["error"]["type"] == "ParseError"
    jsonschema.validate(payload, SCHEMA)


@pytest.mark.parametrize(
    "matrix, code, kind",
    [
        ({"dim": 2, "rows": [["1/2", 0], [0, 3]]}, 65, "NotExpansive"),
        ({"dim": 2, "rows": [[1, 2], [2, 4]]}, 66, "SingularMatrix"),
        ({"dim": 3, "rows": [[2, 0], [0, 2]]}, 64, "ParseError"),
    ],
)
def test_error_exit_codes(capsys, matrix, code, kind):
    got, out = run_cli(capsys, *decide_args(matrix))
    assert got == code
    assert json.loads(out.out)["error"]["type"] == kind


def test_missing_file_is_io_error(capsys, tmp_path):
    got, out = run_cli(capsys, *decide_args(str(tmp_path / "nope.json")))
    assert got == 74
    assert json.loads(out.out)["error"]["type"] == "IoError"


def test_bundled_examples():
    summary, rows = run_batch(RunConfig(), bundled_examples_path())
    assert summary["cases"] == 10
    assert summary["errors"] == [] and summary["expected_mismatches"] == []
    assert [r["id"] for r in rows] == sorted(r["id"] for r in rows)
    for row in rows:
        jsonschema.validate(row["report"], SCHEMA)


def test_empty_batch(tmp_path, capsys):
    f = tmp_path / "empty.jsonl"
    f.write_text("")
    code, out = run_cli(capsys, "batch", str(f))
    assert code == 0
    assert json.loads(out.out)["summary"]["cases"] == 0


def test_batch_isolates_errors(tmp_path):
    lines = [
        {"id": "good", "matrix": MAT_A, "params": {"p": "2", "q": "3", "r": "1", "alpha": "5/3", "n": 3}},
        {"id": "bad", "matrix": {"dim": 2, "rows": [["1/2", 0], [0, 3]]},
         "params": {"p": "2", "q": "3", "r": "1", "alpha": "5/3", "n": 3}},
        {"id": "also-good", "matrix": MAT_B, "params": {"p": "2", "q": "3", "r": "1", "alpha": "5/3", "n": 3}},
    ]
    f = tmp_path / "cases.jsonl"
    f.write_text("\n".join(json.dumps(x) for x in lines) + "\n{broken\n")
    summary, rows = run_batch(RunConfig(), f, jobs=2)
    assert summary["errors"] == ["bad", "line-4"]
    by_id = {r["id"]: r for r in rows}
    assert by_id["bad"]["error"]["type"] == "NotExpansive"
    assert by_id["good"]["exit_code"] == 0 and by_id["also-good"]["exit_code"] == 1
    assert main(["batch", str(f)]) == 1


def test_duplicate_ids_rejected(tmp_path):
    line = json.dumps({"id": "same", "matrix": MAT_A, "params": {"p": "2", "q": "3", "r": "1", "alpha": "1", "n": 0}})
    f = tmp_path / "dup.jsonl"
    f.write_text(line + "\n" + line + "\n")
    summary, rows = run_batch(RunConfig(), f)
    assert all(not r["ok"] for r in rows)


def test_matrix_file_relative_to_batch(tmp_path):
    (tmp_path / "a.json").write_text(json.dumps(MAT_A))
    f = tmp_path / "cases.jsonl"
    f.write_text(json.dumps({"id": "r", "matrix": "a.json", "params": {"p": "2", "q": "3", "r": "1", "alpha": "5/3", "n": 3}}))
    summary, rows = run_batch(RunConfig(), f)
    assert rows[0]["exit_code"] == 0


def test_determinism(capsys):
    outs = []
    for _ in range(2):
        main(decide_args(MAT_B, "1", "5/3", "3", "--route", "both"))
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]
    jsonschema.validate(json.loads(outs[0]), SCHEMA)


def test_homogeneous_schema_and_text(capsys):
    code, out = run_cli(capsys, *decide_args(MAT_A, "1", "1/6", "0", "--variant", "homogeneous", "--format", "text"))
    assert code == 0
    assert "hom-suf-ii" in out.out


def test_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"cluster_tol": 1e-6, "probe_window": 8}))
    conf = RunConfig.load(cfg)
    assert conf.cluster_tol == 1e-6 and conf.probe_window == 8
    cfg.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(ParseError):
        RunConfig.load(cfg)
    with pytest.raises(ParseError):
        RunConfig(probe_window=1)
    with pytest.raises(ParseError):
        RunConfig(cluster_tol=0)


def test_probe_csv_constant(tmp_path):
    out = tmp_path / "trace.csv"
    c = CaseRecord.from_json({"id": "k", "matrix": {"dim": 1, "rows": [[2]]},
                              "params": {"p": "1", "q": "1", "r": "1", "alpha": "0", "n": 0}})
    text, summary = emit_probe_trace(RunConfig(), c, c.params.q, 1, out, j_max=5)
    lines = out.read_text().splitlines()
    assert lines[0] == "j,a_j,partial_sum"
    assert [line.split(",")[2] for line in lines[1:]] == ["2", "4", "6", "8", "10", "12"]


def test_probe_csv_case_d_unbounded():
    c = case(MAT_A, r="2")
    text, summary = emit_probe_trace(RunConfig(), c, c.params.q, 6, None, j_max=60)
    sums = [float(line.split(",")[2]) for line in text.splitlines()[1:]]
    assert all(b > a for a, b in zip(sums, sums[1:]))
    assert sums[-1] > 60
    assert summary["classification"] == "out"


def test_probe_cli(tmp_path, capsys):
    out = tmp_path / "p.csv"
    code, res = run_cli(capsys, "probe", "--matrix", json.dumps(MAT_A), "--p", "2", "--q", "3", "--alpha", "5/3",
                        "--n", "3", "--s", "6", "--j-max", "20", "--out", str(out))
    assert code == 0
    assert out.read_text().startswith("j,a_j,partial_sum\n0,2,64\n")


def test_analyze_cli(capsys):
    code, out = run_cli(capsys, "analyze", "--matrix", json.dumps(MAT_B))
    assert code == 0
    rep = json.loads(out.out)
    assert rep["is_and"] is False


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "besov_embed", "decide", "--matrix", json.dumps(MAT_B),
         "--p", "2", "--q", "3", "--r", "1", "--alpha", "5/3", "--n", "3"],
        capture_output=True, text=True,
    )
    assert res.returncode == 1
    assert json.loads(res.stdout)["outcome"] == "does_not_embed"
