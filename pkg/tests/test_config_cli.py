import csv
import io
import json
import pathlib
import shutil
import subprocess

import pytest
from hypothesis import given, strategies as st

from choquard import constants
from choquard.cli import main
from choquard.config import ConfigError, GridSpec, RunConfig, load_config
from choquard.functional import ProblemParams
from choquard.semiclassical import Potential

SHIPPED = pathlib.Path(__file__).resolve().parents[1] / "configs" / "default.json"
SMALL = {"grid": {"r_max": 20.0, "n": 800, "stretch": 4.0}}


def _write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_defaults_and_shipped_file():
    cfg = RunConfig()
    assert cfg.problem.zeta == 4.5 and cfg.grid.n == 4000 and cfg.seed == 0
    assert load_config(str(SHIPPED)) == cfg
    assert load_config(None) == cfg


@given(st.floats(0.1, 2.9), st.floats(0.0, 5.0), st.floats(0.1, 5.0), st.integers(0, 2 ** 31),
       st.booleans())
def test_round_trip(mu, kappa, nu, seed, with_pot):
    pot = Potential("gaussian_bump", 1.0, 0.5, 3.0) if with_pot else None
    cfg = RunConfig(ProblemParams(mu=mu, kappa=kappa, nu=nu), GridSpec(30.0, 1000, 3.0), potential=pot,
                    seed=seed)
    text = cfg.to_json()
    back = RunConfig.from_json(text)
    assert back == cfg
    assert back.to_json() == text


def test_missing_sections_take_defaults():
    cfg = RunConfig.from_dict({"problem": {"mu": 2.0}})
    assert cfg.problem.zeta == 3.5 and cfg.grid == GridSpec() and cfg.potential is None


@pytest.mark.parametrize("bad", [
    "[1, 2]",
    "{not json",
    '{"extras": {}}',
    '{"problem": {"mu": 3.5}}',
    '{"problem": {"mu": 1.0, "zeta": 6.0}}',
    '{"grid": {"n": 10}}',
    '{"grid": {"r_max": -1}}',
    '{"grid": 5}',
    '{"solver": {"armijo_c": 2}}',
    '{"potential": {"kind": "gaussian_well", "base": 0}}',
    '{"seed": -1}',
    '{"seed": 1.5}',
])
def test_malformed_config(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_json(bad)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/cfg.json")


def test_print_default_config(capsys):
    assert main(["--print-default-config"]) == 0
    assert capsys.readouterr().out == SHIPPED.read_text()


def test_constants_command(capsys):
    assert main(["constants", "--mu", "1"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert set(d) == {"mu", "c_hls", "s_sobolev", "s_hl", "critical_level"}
    assert d["c_hls"] == constants.hls_constant(1.0)
    assert d["critical_level"] == constants.critical_level(1.0)
    assert main(["constants", "--mu", "1", "--json"]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 1


@pytest.mark.parametrize("argv", [["constants", "--mu", "3"], ["constants"], [], ["nonsense"],
                                  ["bubble", "--q", "2.5"], ["sweep", "--problem", "scc3", "--eps", "0.1"],
                                  ["sweep", "--problem", "scc2", "--eps", "a,b"]])
def test_usage_errors(argv, capsys):
    assert main(argv) == 2


def test_bad_config_exit_code(tmp_path, capsys):
    path = _write(tmp_path, {"problem": {"mu": 7}})
    assert main(["ground-state", "--config", path]) == 2
    assert "mu" in capsys.readouterr().err


def test_ground_state_command(tmp_path, capsys):
    path = _write(tmp_path, SMALL)
    out, prof = tmp_path / "r.json", tmp_path / "u.csv"
    assert main(["ground-state", "--config", path, "--out", str(out), "--profile", str(prof)]) == 0
    rep = json.loads(out.read_text())
    assert set(rep) == {"energy", "grad_norm", "nehari_residual", "pohozaev_residual",
                        "iterations", "decay_rate", "max_point", "converged"}
    assert rep["converged"] is True and 0 < rep["energy"] < constants.critical_level(1.0)
    lines = prof.read_text().splitlines()
    assert lines[0] == "r,value" and len(lines) == 801


def test_ground_state_non_convergence_exit(tmp_path, capsys):
    path = _write(tmp_path, {**SMALL, "solver": {"max_iters": 1}})
    assert main(["ground-state", "--config", path]) == 1


def test_bubble_command(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["bubble", "--mu", "1", "--q", "4.5", "--delta", "5", "--eps", "0.2,0.1,0.05",
                 "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert list(rows[0]) == ["eps", "integral", "remainder", "target_order", "fitted_order"]
    assert [float(r["eps"]) for r in rows] == [0.2, 0.1, 0.05]
    assert all(float(r["target_order"]) == 0.5 for r in rows)


def test_sweep_command(tmp_path, capsys):
    path = _write(tmp_path, SMALL)
    out = tmp_path / "s.csv"
    assert main(["sweep", "--problem", "scc2", "--config", path, "--eps", "0.4,0.2,0.1",
                 "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 3
    assert list(rows[0]) == ["eps", "energy", "max_point", "decay_beta", "limit_gap", "converged"]
    assert all(r["converged"] == "true" for r in rows)


def test_verify_deterministic(tmp_path, capsys):
    path = _write(tmp_path, {**SMALL, "seed": 7})
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    rc1 = main(["verify", "--config", path, "--out", str(a)])
    rc2 = main(["verify", "--config", path, "--out", str(b)])
    assert rc1 == rc2
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().strip().splitlines()[-1].endswith("checks passed")
    c = tmp_path / "c.txt"
    main(["verify", "--config", path, "--seed", "8", "--out", str(c)])
    assert c.read_bytes() != a.read_bytes()


def test_verify_reports_first_failure(tmp_path, capsys, monkeypatch):
    from choquard import checks

    orig = checks.run_suite

    def broken(cfg):
        res = orig(cfg)
        return [res[0], checks.CheckResult("planted failure", 1.0, 0.0, False)] + res[1:]

    monkeypatch.setattr(checks, "run_suite", broken)
    assert main(["verify", "--config", _write(tmp_path, SMALL)]) == 1
    assert "planted failure" in capsys.readouterr().err


@pytest.mark.slow
def test_verify_shipped_default(capsys):
    assert main(["verify", "--config", str(SHIPPED)]) == 0


@pytest.mark.skipif(shutil.which("choquard") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["choquard", "constants", "--mu", "0.5", "--json"], capture_output=True,
                         text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["mu"] == 0.5
