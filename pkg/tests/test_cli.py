import csv
import json
import subprocess
import sys

import pytest

from fracfilt.cli import SUBCOMMANDS, ConfigError, RunConfig, emit, main

SMALL = {"N": 32, "tau": 0.05, "T": 0.1}


def write_cfg(tmp_path, data):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(data))
    return str(p)


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# fracfilt config=")
    return json.loads(lines[0].split("=", 1)[1]), list(csv.reader(lines[1:]))


@pytest.mark.parametrize("sub", ["solve", "extend", "dtn-check", "compare", "duality", "energy-check"])
def test_subcommands_are_byte_deterministic(tmp_path, sub):
    cfg = write_cfg(tmp_path, {**SMALL, "pairs": 2, "inner_steps": 64})
    outs = []
    for name in ("a", "b"):
        assert main([sub, "--config", cfg, "--out", str(tmp_path / name), "--seed", "99"]) == 0
        outs.append(((tmp_path / name / f"{sub}.csv").read_bytes(), (tmp_path / name / f"{sub}.json").read_bytes()))
    assert outs[0] == outs[1]
    assert (tmp_path / "a" / "timings.json").exists()


def test_solve_shape_and_round_trip(tmp_path):
    cfg = write_cfg(tmp_path, {"N": 64, "tau": 0.1, "T": 0.2})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 0
    embedded, rows = read_csv(tmp_path / "solve.csv")
    assert rows[0] == ["t", "x", "value"]
    assert len(rows) - 1 == 192
    assert RunConfig.from_dict(embedded) == RunConfig.from_dict(json.loads(open(cfg).read()))
    meta = json.loads((tmp_path / "solve.json").read_text())
    assert meta["config"] == embedded and set(meta["versions"]) == {"fracfilt", "numpy", "scipy"}
    for r in rows[1:]:
        for v in r:
            assert repr(float(v)) == v  # shortest round-trip representation


def test_header_only_csv(tmp_path):
    emit(tmp_path, "empty", {"a": 1}, ["x", "t", "value"], [], {})
    lines = (tmp_path / "empty.csv").read_text().splitlines()
    assert lines == ['# fracfilt config={"a":1}', "x,t,value"]


def test_seed_changes_random_data(tmp_path):
    cfg = write_cfg(tmp_path, {**SMALL, "u0": {"shape": "random", "width": 0.8}})
    for seed in ("1", "2"):
        assert main(["extend", "--config", cfg, "--out", str(tmp_path / seed), "--seed", seed]) == 0
    assert (tmp_path / "1" / "extend.csv").read_bytes() != (tmp_path / "2" / "extend.csv").read_bytes()


def test_config_round_trip():
    cfg = RunConfig.from_dict({"s": 0.3, "y_list": [0.1, 0.01], "nonlinearity": {"name": "pme", "m": 3}})
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


@pytest.mark.parametrize("data,field", [
    ({"s": 1.2}, "s"),
    ({"N": 0}, "N"),
    ({"N": 2.5}, "N"),
    ({"tau": -1}, "tau"),
    ({"operator": "fft"}, "operator"),
    ({"nonlinearity": {"name": "pme", "m": 0.5}}, "nonlinearity"),
    ({"u0": {"shape": "triangle"}}, "u0"),
    ({"d": 2}, "d"),
    ({"typo": 1}, "typo"),
])
def test_validation_names_the_field(data, field):
    with pytest.raises(ConfigError) as info:
        RunConfig.from_dict(data).validate("solve")
    assert field in info.value.errors


def test_subcommand_specific_validation():
    with pytest.raises(ConfigError) as info:
        RunConfig.from_dict({"r": 0.6}).validate("energy-check")
    assert "r" in info.value.errors
    with pytest.raises(ConfigError) as info:
        RunConfig.from_dict({"alpha": 2.5}).validate("cutoff-scan")
    assert "alpha" in info.value.errors
    with pytest.raises(ConfigError) as info:
        RunConfig.from_dict({"R_list": [4, 2]}).validate("minimal")
    assert "R_list" in info.value.errors
    with pytest.raises(ConfigError) as info:
        RunConfig.from_dict({"n": 16, "inner_steps": 100}).validate("duality")
    assert "inner_steps" in info.value.errors


def test_exit_codes(tmp_path, capsys):
    assert main(["solve", "--config", write_cfg(tmp_path, {"s": 2.0}), "--out", str(tmp_path)]) == 1
    assert "s: must lie in (0, 1)" in capsys.readouterr().err
    assert main(["solve", "--config", str(tmp_path / "missing.json")]) == 1
    assert main(["solve", "--seed", str(2 ** 64), "--out", str(tmp_path)]) == 1
    stiff = {"nonlinearity": {"name": "pme", "m": 4}, "tau": 10, "T": 10, "newton_max_iter": 1,
             "u0": {"shape": "step", "width": 0.5, "height": 5}}
    assert main(["solve", "--config", write_cfg(tmp_path, stiff), "--out", str(tmp_path)]) == 2


def test_selftest_exit_codes(tmp_path, capsys):
    assert main(["selftest", "--config", write_cfg(tmp_path, {"criteria": [2]}), "--out", str(tmp_path / "ok")]) == 0
    out = capsys.readouterr().out
    assert "criterion  2 PASS" in out
    # the trace-limit criterion is not met for small s (see the ledger)
    assert main(["selftest", "--config", write_cfg(tmp_path, {"criteria": [1]}), "--out", str(tmp_path / "bad")]) == 3


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "fracfilt", "dtn-check", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    _, rows = read_csv(tmp_path / "dtn-check.csv")
    assert rows[0] == ["y", "l2_error"] and len(rows) == 5


def test_all_subcommands_listed():
    assert set(SUBCOMMANDS) == {"solve", "minimal", "compare", "extend", "dtn-check", "energy-check",
                                "cutoff-scan", "duality", "selftest"}


def test_minimal_and_cutoff_scan(tmp_path):
    cfg = write_cfg(tmp_path, {"tau": 0.1, "T": 0.2, "R_list": [1.0, 2.0], "h": 0.125, "Rs": [1.0, 2.0],
                               "u0": {"shape": "bump", "width": 0.5}})
    assert main(["minimal", "--config", cfg, "--out", str(tmp_path)]) == 0
    meta = json.loads((tmp_path / "minimal.json").read_text())["results"]
    assert meta["flagged"] is False
    assert main(["cutoff-scan", "--config", cfg, "--out", str(tmp_path)]) == 0
    _, rows = read_csv(tmp_path / "cutoff-scan.csv")
    assert rows[0][:3] == ["R", "sup_frac_lap", "sup_frac_lap_scaled"] and len(rows) == 3
    assert float(rows[1][2]) == pytest.approx(float(rows[2][2]), rel=1e-6)
