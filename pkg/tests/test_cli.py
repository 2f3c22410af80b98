import numpy as np
import pytest

from aeroarm import cli
from aeroarm.config import DEFAULT_CONFIG_TOML
from aeroarm.scenarios import SCENARIOS, Scenario, hold


@pytest.fixture()
def mini_scenario(monkeypatch):
    def factory(cfg):
        return Scenario(name="mini", description="short hover for CLI tests",
                        duration=0.1, uav_ref=hold(np.zeros(3)),
                        arm_ref=hold(np.zeros(3)),
                        thresholds=(("max_pos_err", "<", 1e-3),))

    monkeypatch.setitem(SCENARIOS, "mini", factory)
    return "mini"


def test_list_scenarios(capsys):
    assert cli.main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in SCENARIOS:
        assert name in out


def test_dump_default_config(capsys):
    assert cli.main(["dump-default-config"]) == 0
    assert capsys.readouterr().out == DEFAULT_CONFIG_TOML


def test_unknown_scenario_is_usage_error(tmp_path, capsys):
    assert cli.main(["run", "no-such-scenario", "--out", str(tmp_path)]) == 2
    assert "unknown scenario" in capsys.readouterr().err


def test_unreadable_config_is_usage_error(tmp_path, capsys):
    assert cli.main(["run", "hover-hold", "--config",
                     str(tmp_path / "missing.toml")]) == 2
    assert "cannot load config" in capsys.readouterr().err


def test_run_writes_logs(mini_scenario, tmp_path, capsys):
    assert cli.main(["run", mini_scenario, "--out", str(tmp_path), "--check"]) == 0
    assert (tmp_path / "mini.csv").exists()
    assert (tmp_path / "mini_summary.txt").exists()
    out = capsys.readouterr().out
    assert "== mini" in out and "max_pos_err" in out


def test_out_env_var_fallback(mini_scenario, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV_VAR, str(tmp_path / "env-out"))
    assert cli.main(["run", mini_scenario]) == 0
    assert (tmp_path / "env-out" / "mini.csv").exists()


def test_check_flag_fails_on_violated_threshold(monkeypatch, tmp_path, capsys):
    def impossible(cfg):
        return Scenario(name="mini-fail", description="unsatisfiable threshold",
                        duration=0.1, uav_ref=hold(np.zeros(3)),
                        arm_ref=hold(np.zeros(3)),
                        thresholds=(("max_pos_err", "<", 0.0),))

    monkeypatch.setitem(SCENARIOS, "mini-fail", impossible)
    assert cli.main(["run", "mini-fail", "--out", str(tmp_path), "--check"]) == 1
    assert "CHECK FAILED" in capsys.readouterr().err
