import json

import pytest

from kpibench.cli import ConfigError, RunConfig, main
from kpibench.report import canonical_digest, read_report


def _run(tmp_path, *args):
    return main(["run", *args, "--out", str(tmp_path)])


@pytest.mark.parametrize("args,field", [
    (["ghz"], "config.seed"),
    (["ghz", "--seed", "1", "--scheme", "sd6"], "config.p"),
    (["ghz", "--seed", "1", "--p", "0.01"], "config.p"),
    (["ghz", "--seed", "1", "--p2q", "1.5"], "config.p2q"),
    (["clv", "--seed", "1", "--shots", "100"], "config.shots"),
    (["qec", "--seed", "1", "--d", "4"], "config.d"),
    (["--seed", "1"], "config.benchmark"),
    (["--seed", "1", "--preset", "fig9"], "config.preset"),
])
def test_config_errors_exit_2(tmp_path, capsys, args, field):
    assert _run(tmp_path, *args) == 2
    assert field in capsys.readouterr().err


def test_config_file_types_and_precedence(tmp_path):
    with pytest.raises(ConfigError, match="config.shots: expected int"):
        RunConfig.from_sources({"benchmark": "ghz", "seed": 1, "shots": "many"}, {})
    with pytest.raises(ConfigError, match="config.colour: unknown field"):
        RunConfig.from_sources({"benchmark": "ghz", "seed": 1, "colour": "red"}, {})
    cfg = RunConfig.from_sources({"benchmark": "ghz", "seed": 1, "shots": 100, "p2q": 1}, {"shots": 200, "p2q": None})
    assert cfg.shots == 200 and cfg.p2q == 1.0


def test_config_file_on_command_line(tmp_path):
    conf = tmp_path / "run.json"
    conf.write_text(json.dumps({"benchmark": "ghz", "seed": 4, "shots": 256, "n_max": 5}))
    assert main(["run", "--config", str(conf), "--out", str(tmp_path / "o")]) == 0
    assert read_report(tmp_path / "o" / "report.json").config["shots"] == 256
    conf.write_text("[1, 2]")
    assert main(["run", "--config", str(conf)]) == 2


def test_capacity_error_exit_3(tmp_path):
    assert _run(tmp_path, "shor", "--seed", "1", "--n-max", "8") == 3


def test_run_verify_and_tamper(tmp_path, capsys):
    assert _run(tmp_path, "ghz", "--seed", "2", "--p2q", "0.01", "--pm", "0.02", "--shots", "1024") == 0
    path = tmp_path / "report.json"
    assert (tmp_path / "ghz.csv").exists()
    assert main(["verify", str(path)]) == 0
    doc = json.loads(path.read_text())
    doc["sections"]["ghz"]["score"] = 99
    path.write_text(json.dumps(doc))
    capsys.readouterr()
    assert main(["verify", str(path)]) == 1
    assert "FAIL" in capsys.readouterr().out
    doc["sections"]["ghz"]["method"] = "guess"
    path.write_text(json.dumps(doc))
    assert main(["verify", str(path)]) == 2


@pytest.mark.parametrize("args", [
    ["clv", "--seed", "3", "--p2q", "0.02", "--pm", "0.01", "--n-max", "6"],
    ["shor", "--seed", "3", "--shots", "500", "--n-max", "4"],
    ["qec", "--seed", "3", "--scheme", "si1000", "--p", "0.002", "--shots", "500"],
])
def test_runs_are_deterministic(tmp_path, args):
    assert _run(tmp_path / "a", *args) == 0
    assert _run(tmp_path / "b", *args) == 0
    a, b = read_report(tmp_path / "a" / "report.json"), read_report(tmp_path / "b" / "report.json")
    assert canonical_digest(a) == canonical_digest(b)
    assert main(["verify", str(tmp_path / "a" / "report.json")]) == 0
    assert (tmp_path / "a" / f"{args[0]}.csv").read_bytes() == (tmp_path / "b" / f"{args[0]}.csv").read_bytes()


def test_workers_do_not_change_results(tmp_path):
    base = ["clv", "--seed", "5", "--p2q", "0.01", "--n-max", "4"]
    assert _run(tmp_path / "a", *base) == 0
    assert _run(tmp_path / "b", *base, "--workers", "2") == 0
    a, b = read_report(tmp_path / "a" / "report.json"), read_report(tmp_path / "b" / "report.json")
    assert canonical_digest(a) == canonical_digest(b)


@pytest.mark.parametrize("args,count", [
    (["clv", "--seed", "1", "--n", "3"], 36),
    (["ghz", "--n", "5"], 3),
    (["shor"], 1),
    (["qec", "--d", "3"], 4),
])
def test_export_counts_and_determinism(tmp_path, args, count):
    assert main(["export", *args, "--out", str(tmp_path / "a")]) == 0
    assert main(["export", *args, "--out", str(tmp_path / "b")]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert len(files) == count
    for name in files:
        text = (tmp_path / "a" / name).read_text()
        assert text.startswith("OPENQASM 2.0;")
        assert text == (tmp_path / "b" / name).read_text()


def test_export_needs_seed_for_clv(tmp_path):
    assert main(["export", "clv", "--out", str(tmp_path)]) == 2


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("KPIBENCH_OUT", str(tmp_path / "env"))
    assert main(["run", "ghz", "--seed", "1", "--shots", "128", "--n-max", "3"]) == 0
    assert (tmp_path / "env" / "report.json").exists()


def test_presets_listed(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    assert all(f"fig{k}" in out for k in range(1, 7))


def test_fig4_preset_runs_fast(tmp_path):
    assert _run(tmp_path, "--preset", "fig4", "--seed", "0") == 0
    rows = (tmp_path / "fig4.csv").read_text().splitlines()
    assert rows[0] == "p_2q,p_meas,analytic_score"
    assert len(rows) == 1 + 49
