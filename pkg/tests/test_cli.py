import dataclasses
import io
import json
import subprocess
import sys

import pytest

from poincare_verifier import cli
from poincare_verifier.report import Record, Report, dumps, load_report
from poincare_verifier.suites import REGISTRY, SUITES

FAST = ["budget", "scattering", "graph", "bogoliubov"]


def run_main(tmp_path, *extra):
    return cli.main(["run", "--out", str(tmp_path), *extra])


def test_describe_lists_anchors(capsys):
    assert cli.main(["describe"]) == 0
    out = capsys.readouterr().out
    assert "Kinetic energy localization" in out
    assert "the following useful identity" in out
    lines = out.strip().splitlines()
    assert len(lines) == len(REGISTRY)
    assert len(cli.run(cli.validate({"suites": ["budget"]})).records) == sum(1 for c in REGISTRY if c.suite == "budget")
    assert [ln.split("\t")[0] for ln in lines] == [c.suite for c in REGISTRY]


def test_every_suite_registers_checks():
    assert {c.suite for c in REGISTRY} == set(SUITES)
    names = [(c.suite, c.name) for c in REGISTRY]
    assert len(names) == len(set(names))


def test_budget_run(tmp_path):
    assert run_main(tmp_path, "--set", 'suites=["budget"]') == 0
    rep = load_report(tmp_path / "report.json")
    rec = {r["check"]: r for r in rep["records"]}["feasibility_frontier"]
    assert rec["verdict"] == "pass"
    assert rec["reference"]["kappa"] == pytest.approx(2 / 11, rel=1e-15)
    assert rec["measured"]["exact_below"] and not rec["measured"]["exact_at_2_11"]
    assert rep["summary"] == {"pass": 4, "fail": 0, "info": 0, "total": 4}
    header = (tmp_path / "budget.csv").read_text().splitlines()[0]
    assert header.startswith("kappa,alpha,e1,e2,feasible")


@pytest.mark.parametrize("sets", [
    ['suites=[]'],
    ['suites=["nope"]'],
    ['bogus=1'],
    ['budget.bogus=1'],
    ['budget.K="x"'],
    ['graph.M=[1]'],
    ['workers=0'],
    ['format=xml'],
    ['noequals'],
    ['a.b.c=1'],
])
def test_config_errors(tmp_path, sets, capsys):
    args = [x for s in sets for x in ("--set", s)]
    assert run_main(tmp_path, *args) == 2
    assert "config error" in capsys.readouterr().err


def test_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"suites": ["budget"], "budget": {"kappa_steps": 10}}))
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rep = load_report(tmp_path / "o" / "report.json")
    assert rep["config"]["budget"]["kappa_steps"] == 10
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["run", "--config", str(bad)]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.json")]) == 2


def test_usage_error():
    assert cli.main(["frobnicate"]) == 2
    assert cli.main([]) == 2


def test_bad_potential_rejected():
    with pytest.raises(cli.ConfigError, match="potential"):
        cli.validate({"bogoliubov": {"potential": {"kind": "cone"}}})
    bumpy = {"kind": "tabulated", "amplitude": 1.0, "R": 0.5, "samples": [[0, 0.25, 0.5], [1.0, 2.0, 0.0]]}
    cli.validate({"bogoliubov": {"potential": bumpy}})
    with pytest.raises(cli.ConfigError, match="non-increasing"):
        cli.validate({"symmetrization": {"potential": bumpy}})


def test_json_round_trip():
    rep = cli.run(cli.validate({"suites": ["budget", "scattering"]}))
    text = dumps(rep.as_dict())
    assert dumps(json.loads(text)) == text
    # floats keep 17 significant digits
    assert json.loads(text)["records"][0]["params"] == json.loads(json.dumps(rep.as_dict()["records"][0]["params"]))


def test_summary_matches_records():
    rep = cli.run(cli.validate({"suites": ["bogoliubov"]}))
    s = rep.summary
    assert s["total"] == len(rep.records) == s["pass"] + s["fail"] + s["info"]


def test_byte_identical_reruns(tmp_path):
    sets = ["--set", "suites=" + json.dumps(FAST)]
    assert run_main(tmp_path / "a", *sets) == 0
    assert run_main(tmp_path / "b", *sets) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["bogoliubov.csv", "budget.csv", "graph.csv", "report.json", "scattering.csv"]
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


def test_workers_do_not_change_output(tmp_path):
    sets = ["--set", "suites=" + json.dumps(FAST)]
    run_main(tmp_path / "a", *sets)
    run_main(tmp_path / "b", *sets, "--set", "workers=3")
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_format_selection(tmp_path):
    run_main(tmp_path / "j", "--set", 'suites=["budget"]', "--set", "format=json")
    assert [p.name for p in (tmp_path / "j").iterdir()] == ["report.json"]
    run_main(tmp_path / "c", "--set", 'suites=["budget"]', "--set", "format=csv")
    assert [p.name for p in (tmp_path / "c").iterdir()] == ["budget.csv"]


def test_runtime_failure_becomes_record(monkeypatch, tmp_path):
    idx = next(i for i, c in enumerate(REGISTRY) if c.suite == "budget")

    def boom(P, seed):
        raise RuntimeError("kaboom")

    patched = list(REGISTRY)
    patched[idx] = dataclasses.replace(REGISTRY[idx], fn=boom)
    monkeypatch.setattr(cli, "REGISTRY", patched)
    assert run_main(tmp_path, "--set", 'suites=["budget"]') == 1
    rep = load_report(tmp_path / "report.json")
    assert rep["records"][0]["verdict"] == "fail"
    assert "kaboom" in rep["records"][0]["diagnostics"]
    assert all(r["verdict"] == "pass" for r in rep["records"][1:])


def test_record_verdicts():
    with pytest.raises(ValueError):
        Record("s", "c", "a", {}, 1, 1, 0, "maybe")
    r = Report([Record("s", "c", "a", {"x": float("nan")}, float("inf"), None, None, "info")], {}, 0, "0")
    d = json.loads(dumps(r.as_dict()))
    assert d["records"][0]["params"]["x"] is None and d["records"][0]["measured"] is None
    assert r.ok


def test_console_script(tmp_path):
    out = subprocess.run([sys.executable, "-m", "poincare_verifier.cli", "describe"], capture_output=True, text=True)
    assert out.returncode == 0 and "Boundary effects" in out.stdout
