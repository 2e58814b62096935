import json
import subprocess
import sys

import pytest

from vfog.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, main

TINY = {"topology": {"zones": 2, "fog_nodes": 2}, "fleet": {"vehicles": 5},
        "policies": {"q_learning": {"training_episodes": -1}, "actor_critic": {"training_episodes": -1}},
        "run": {"training_episodes": 1, "episode_length_s": 20.0, "eval_length_s": 20.0, "seeds": [0, 1, 2]}}


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(TINY))
    return p


def test_validate_config_ok(cfg_file, capsys):
    assert main(["validate-config", "--config", str(cfg_file)]) == EXIT_OK
    assert "config OK" in capsys.readouterr().out


def test_validation_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"fleet": {"speed_range_kmh": [80, 20]}}))
    assert main(["validate-config", "--config", str(p)]) == EXIT_INVALID
    assert "fleet.speed_range_kmh" in capsys.readouterr().err


def test_train_requires_learning_policy(cfg_file, tmp_path):
    assert main(["train", "--config", str(cfg_file), "--policy", "greedy", "--out-dir", str(tmp_path)]) == EXIT_INVALID


def test_train_then_eval(cfg_file, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["train", "--config", str(cfg_file), "--policy", "q-learning", "--seed", "1", "--out-dir", str(out)]) == 0
    assert (out / "q-learning-seed1.qtable.csv").exists()
    assert (out / "q-learning-seed1-curve.csv").exists()
    echoed = json.loads((out / "effective_config.json").read_text())
    assert echoed["fleet"]["vehicles"] == 5
    capsys.readouterr()
    assert main(["eval", "--config", str(cfg_file), "--policy", "q-learning", "--seed", "1", "--out-dir", str(out)]) == 0
    rec = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert rec["policy"] == "q-learning" and rec["seed"] == 1


def test_corrupt_artifact_is_runtime_failure(cfg_file, tmp_path, capsys):
    bad = tmp_path / "bad.mlp"
    bad.write_bytes(b"junk")
    code = main(["eval", "--config", str(cfg_file), "--policy", "dqn", "--artifact", str(bad), "--out-dir", str(tmp_path)])
    assert code == EXIT_RUNTIME
    assert "magic" in capsys.readouterr().err


def test_env_var_overrides_out_dir(cfg_file, tmp_path, monkeypatch):
    monkeypatch.setenv("VFOG_OUT_DIR", str(tmp_path / "env"))
    assert main(["run", "--config", str(cfg_file), "--policy", "greedy", "--out-dir", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "env" / "greedy-seed0-eval.csv").exists()
    assert not (tmp_path / "flag").exists()


def test_echoed_config_reproduces_the_run(cfg_file, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(cfg_file), "--policy", "optimization", "--out-dir", str(a)]) == 0
    assert main(["run", "--config", str(a / "effective_config.json"), "--policy", "optimization",
                 "--out-dir", str(b)]) == 0
    assert (a / "optimization-seed0-eval.csv").read_bytes() == (b / "optimization-seed0-eval.csv").read_bytes()


def test_compare_subcommand(cfg_file, tmp_path, capsys):
    out = tmp_path / "cmp"
    assert main(["compare", "--config", str(cfg_file), "--out-dir", str(out)]) == 0
    assert len((out / "metrics.csv").read_text().splitlines()) == 16
    assert "actor-critic" in capsys.readouterr().out


def test_compare_with_too_few_seeds(cfg_file, tmp_path):
    assert main(["compare", "--config", str(cfg_file), "--seeds", "0", "1", "--out-dir", str(tmp_path)]) == EXIT_INVALID


def test_console_module_entry(cfg_file):
    proc = subprocess.run([sys.executable, "-m", "vfog.cli", "validate-config", "--config", str(cfg_file)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "config OK" in proc.stdout
