import json
import os
import subprocess
import sys

import pytest

from lipbatch.cli import main

CONFIG = """benchmark = forrester
strategy = lp
acquisition = ei
batch_size = 2
iterations = 1
replicates = 2
init_size = 3
timing = off
output = {out}
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(CONFIG.format(out=tmp_path / "res" / "exp.csv"))
    return path


def test_run_and_summarize(config, tmp_path, capsys):
    assert main(["run", str(config)]) == 0
    out = tmp_path / "res" / "exp.csv"
    assert out.exists() and (tmp_path / "res" / "exp.summary.json").exists()
    assert main(["summarize", str(out), "-o", str(tmp_path / "s.csv")]) == 0
    assert (tmp_path / "s.csv").read_text().startswith("method,iteration,replicates,mean_best")


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("benchmark = nowhere\noutput = x.csv\n")
    assert main(["run", str(bad)]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.cfg")]) == 2
    assert main(["lipschitz-study", str(bad)]) == 2


def test_usage_errors_exit_code(capsys):
    assert main([]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["summarize", "a.csv"]) == 2


def test_runtime_error_exit_code(tmp_path, capsys):
    assert main(["summarize", str(tmp_path / "none.csv"), "-o", str(tmp_path / "o.csv")]) == 3
    junk = tmp_path / "junk.csv"
    junk.write_text("a,b\n1,2\n")
    assert main(["summarize", str(junk), "-o", str(tmp_path / "o.csv")]) == 3


def test_failed_replicate_exit_code(config, monkeypatch, capsys):
    import lipbatch.experiment as ex
    from lipbatch.errors import ObjectiveFailure

    def boom(cfg, r):
        raise ObjectiveFailure("objective down")

    monkeypatch.setattr(ex, "run_replicate", boom)
    assert main(["run", str(config)]) == 3


def test_selftest_verb(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 8


def test_console_entry_with_env_seed(config, tmp_path):
    env = dict(os.environ, LIPBATCH_SEED="9")
    res = subprocess.run([sys.executable, "-m", "lipbatch.cli", "run", str(config)],
                         capture_output=True, text=True, env=env)
    assert res.returncode == 0, res.stderr
    first = (tmp_path / "res" / "exp.csv").read_bytes()
    res = subprocess.run([sys.executable, "-m", "lipbatch.cli", "run", str(config)],
                         capture_output=True, text=True, env=dict(os.environ, LIPBATCH_SEED="10"))
    assert res.returncode == 0
    assert (tmp_path / "res" / "exp.csv").read_bytes() != first
    summary = json.loads((tmp_path / "res" / "exp.summary.json").read_text())
    assert summary["replicates"] == 2
