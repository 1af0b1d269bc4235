import json
import subprocess
import sys

import pytest

from gext import cli
from gext.cli import EXIT_CERT, EXIT_OK, EXIT_UNDECIDED, RunConfig, main, parse_args, run, write_reports


def test_geomext_report_on_cone():
    report, text, code = run(RunConfig("geomext", coeffs="F2"))
    assert code == EXIT_OK
    assert report["extension"]["stalk_table"]["1"]["stalk"] == {"0": 1, "2": 1}
    assert report["verdicts"]["parity"] == "even"


def test_ic_on_cone_over_q():
    report, _, code = run(RunConfig("ic", coeffs="Q"))
    assert code == EXIT_OK
    assert report["ic"]["stalk_table"]["1"]["stalk"] == {"0": 1}


def test_compare_two_subdivisions():
    report, text, code = run(RunConfig("compare"))
    assert code == EXIT_OK
    assert report["compare"]["isomorphic"] and report["compare"]["triangle"]
    assert text.endswith("isomorphic")


def test_subdivision_bound_is_enforced():
    report, _, code = run(RunConfig("compare", subdivision_bound=10))
    assert code == EXIT_CERT
    assert report["error"]["type"] == "SubdivisionBoundExceeded"


def test_monodromy_over_z4():
    report, _, code = run(RunConfig("monodromy", fixture="i2_local_model", coeffs="Z/4"))
    assert code == EXIT_OK
    assert report["monodromy"]["matrix"] == [[1, 0], [2, 1]]


def test_errors_carry_exit_code_and_type():
    report, _, code = run(RunConfig("geomext", fixture="klein"))
    assert code == EXIT_CERT and report["error"]["type"] == "FixtureError"
    report, _, code = run(RunConfig("compare", fixture="sphere"))
    assert code == EXIT_CERT and "single resolution" in report["error"]["message"]


def test_undecided_exit_code(monkeypatch):
    real = cli.decompose

    def undecided(*a, **k):
        D = real(*a, **k)
        D.undecided = True
        return D

    monkeypatch.setattr(cli, "decompose", undecided)
    _, _, code = run(RunConfig("decompose", fixture="sphere", coeffs="Q"))
    assert code == EXIT_UNDECIDED


def test_unknown_subcommand():
    with pytest.raises(ValueError):
        run(RunConfig("plot"))


def test_run_config_roundtrip():
    cfg = RunConfig("report", coeffs="Z/4", seed=7, fixture="product", fixture_params={"left": "sphere"})
    assert RunConfig.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg


def test_parse_args():
    cfg = parse_args(["ic", "--coeffs", "Q", "--fixture", "cone", "--params", '{"base": "rp3"}', "--seed", "3"])
    assert cfg == RunConfig("ic", "Q", 3, "cone", {"base": "rp3"})


def test_identical_configs_give_identical_bytes(tmp_path):
    cfg = RunConfig("report", coeffs="F2", out=str(tmp_path))
    outs = []
    for _ in range(2):
        report, text, _ = run(cfg)
        write_reports(cfg, report, text)
        outs.append(((tmp_path / "report.json").read_bytes(), (tmp_path / "report.txt").read_bytes()))
    assert outs[0] == outs[1]


def test_main_writes_reports(tmp_path, capsys):
    code = main(["dualize", "--fixture", "sphere", "--out", str(tmp_path)])
    assert code == EXIT_OK
    data = json.loads((tmp_path / "dualize.json").read_text())
    assert data["dualize"]["biduality"] is True
    assert "D∘D ≅ id: True" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "gext.cli", "pushforward", "--fixture", "sphere", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert (tmp_path / "pushforward.json").exists()
