import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from cvqode import cli, fock, training
from cvqode.config import ConfigError, load_config, parse_config, preset_names

TINY = """
[problem]
name = stiff

[network]
num_modes = 2
num_layers = 1
cutoff = 6

[training]
learning_rate = 0.01
max_steps = {steps}
grid_size = 6
snapshot_steps = 0, 2
"""


def write_cfg(tmp_path, steps=4, extra=""):
    path = tmp_path / "run.ini"
    path.write_text(TINY.format(steps=steps) + extra)
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# configuration


def test_presets_ship_with_reference_hyperparameters():
    assert preset_names() == ["linear", "riccati", "stiff"]
    lin, ric, stf = (load_config(n) for n in ("linear", "riccati", "stiff"))
    assert (lin.num_layers, lin.learning_rate, lin.adam_eps, lin.max_steps) == (2, 0.02, 1e-5, 1000)
    assert (ric.num_layers, ric.learning_rate, ric.adam_eps, ric.max_steps) == (1, 0.002, 1e-3, 600)
    assert (stf.num_layers, stf.learning_rate, stf.adam_eps, stf.max_steps) == (1, 0.005, 1e-5, 500)
    for c in (lin, ric, stf):
        assert (c.num_modes, c.cutoff, c.seed, c.grid_size) == (2, 10, 0, 20)
    assert lin.snapshot_steps == (0, 20, 100, 999)
    assert ric.snapshot_steps == (0, 20, 100, 353)
    assert stf.snapshot_steps == (0, 10, 20, 130)
    assert load_config("linear.preset") == lin


@pytest.mark.parametrize(
    "text, field",
    [
        ("[problem]\nname = cubic\n", "[problem] name"),
        ("[problem]\nname = linear\ncolour = red\n", "[problem] colour"),
        ("[problem]\nname = linear\n[extras]\nx = 1\n", "[extras]"),
        ("[problem]\nname = linear\n[training]\nlearning_rate = 0\n", "[training] learning_rate"),
        ("[problem]\nname = linear\n[training]\nmax_steps = ten\n", "[training] max_steps"),
        ("[problem]\nname = linear\n[network]\ncutoff = 1\n", "[network] cutoff"),
        ("[problem]\nname = linear\ndomain = 1, 2\n", "[problem] domain"),
        ("[problem]\nname = linear\ndomain = 1\n", "[problem] domain"),
        ("[network]\ncutoff = 5\n", "[problem] name"),
    ],
)
def test_config_errors_name_the_field(text, field):
    with pytest.raises(ConfigError, match=field.replace("[", r"\[").replace("]", r"\]")):
        parse_config(text)


def test_domain_override():
    cfg = parse_config("[problem]\nname = riccati\ndomain = -0.5, 2\n")
    assert cfg.make_problem().domain == (-0.5, 2.0)


def test_missing_config_is_config_error(tmp_path):
    assert cli.main(["train", str(tmp_path / "nope.ini")]) == cli.EXIT_CONFIG


def test_invalid_config_exit_code(tmp_path, capsys):
    path = write_cfg(tmp_path, extra="[output]\nformat = parquet\n")
    assert cli.main(["train", str(path)]) == 1
    assert "[output] format" in capsys.readouterr().err


# training artifacts


def test_train_writes_artifacts(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["train", str(write_cfg(tmp_path)), "--output-dir", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["loss.csv", "run.json", "solution_0.csv", "solution_2.csv", "solution_3.csv"]
    loss = read_csv(out / "loss.csv")
    assert loss[0] == ["step", "loss"] and len(loss) == 1 + 4
    sol = read_csv(out / "solution_3.csv")
    assert sol[0] == ["x", "y_pred", "y_ref"] and len(sol) == 1 + 6
    # >= 12 significant digits
    assert len(sol[2][2].replace(".", "").lstrip("0")) >= 12
    rec = json.loads((out / "run.json").read_text())
    assert rec["status"] == "completed" and rec["final_step"] == 3
    assert all(len(v) == 6 for v in rec["snapshots"].values())
    assert np.isfinite(rec["final_max_abs_error"]) and np.isfinite(rec["best_max_abs_error"])
    assert rec["config"]["problem"] == "stiff" and len(rec["final_params"]) == 12
    assert rec["reference"]["method"] == "analytic"
    assert rec["loss_history"] == [float(r[1]) for r in loss[1:]]
    np.testing.assert_allclose(
        rec["reference"]["y"], 0.5 * np.exp(-2 * np.array(rec["grid"])), rtol=0, atol=1e-15
    )


def test_single_step_run(tmp_path):
    out = tmp_path / "out"
    assert cli.cmd_train(str(write_cfg(tmp_path, steps=1)), str(out)) == 0
    assert len(read_csv(out / "loss.csv")) == 2


def test_repeat_runs_are_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path, steps=6)
    for name in ("a", "b"):
        assert cli.cmd_train(str(cfg), str(tmp_path / name)) == 0
    csvs = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env_out"))
    assert cli.cmd_train(str(write_cfg(tmp_path, steps=1))) == 0
    assert (tmp_path / "env_out" / "run.json").exists()
    # an explicit config entry wins over the environment
    cfg = write_cfg(tmp_path, steps=1, extra=f"[output]\noutput_dir = {tmp_path / 'cfg_out'}\n")
    assert cli.cmd_train(str(cfg)) == 0
    assert (tmp_path / "cfg_out" / "run.json").exists()


def test_divergence_writes_best_so_far_and_exits_2(tmp_path, monkeypatch):
    real = training._loss_grad_predict
    calls = {"n": 0}

    def blow_up_on_third(params, problem, grid, config):
        calls["n"] += 1
        if calls["n"] == 3:
            return float("nan"), np.zeros_like(params), np.zeros(len(grid))
        return real(params, problem, grid, config)

    monkeypatch.setattr(training, "_loss_grad_predict", blow_up_on_third)
    out = tmp_path / "out"
    assert cli.cmd_train(str(write_cfg(tmp_path, steps=10)), str(out)) == cli.EXIT_NUMERIC
    rec = json.loads((out / "run.json").read_text())
    assert rec["status"] == "diverged"
    assert len(rec["loss_history"]) == 2
    assert rec["best_step"] in (0, 1)
    assert (out / f"solution_{rec['best_step']}.csv").exists()
    assert len(read_csv(out / "loss.csv")) == 3


def test_evaluate_reproduces_final_snapshot(tmp_path, capsys):
    out = tmp_path / "out"
    cli.cmd_train(str(write_cfg(tmp_path)), str(out))
    rec = json.loads((out / "run.json").read_text())
    capsys.readouterr()
    x = rec["grid"][2]
    assert cli.main(["evaluate", str(out / "run.json"), "--at", repr(x)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "x,y_pred,y_exact"
    y = float(lines[1].split(",")[1])
    assert y == pytest.approx(rec["snapshots"]["3"][2], abs=1e-12)
    assert cli.main(["evaluate", str(tmp_path / "missing.json"), "--at", "0"]) == cli.EXIT_CONFIG


def test_linear_preset_run(linear_run):
    out, rec, code = linear_run
    assert code == 0
    loss = read_csv(out / "loss.csv")
    assert len(loss) == 1 + 1000
    assert float(loss[-1][1]) * 100 <= float(loss[1][1])
    for step in (0, 20, 100, 999):
        assert (out / f"solution_{step}.csv").exists()


# cost estimate


def test_estimate_cost_reference_instance(capsys):
    assert cli.main(["estimate-cost", "--n", "2", "--layers", "1", "--points", "20", "--shots", "100"]) == 0
    out = capsys.readouterr().out
    assert "192000" in out and "76800000" in out and "steps=400" in out


def test_estimate_cost_smallest_and_conversion(capsys):
    args = ["estimate-cost", "--n", "1", "--layers", "1", "--points", "1", "--shots", "1", "--steps", "1", "--tm", "0.5"]
    assert cli.main(args) == 0
    out = capsys.readouterr().out
    assert "T_step = 20 T_m" in out and "T_step = 10 s" in out


@pytest.mark.parametrize("bad", ["0", "-3", "two"])
def test_estimate_cost_usage_errors(bad, capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["estimate-cost", "--shots", bad])
    assert info.value.code == cli.EXIT_CONFIG


# self-test


def test_selftest_passes(capsys):
    assert cli.main(["selftest"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_selftest_catches_flipped_beamsplitter(capsys):
    flipped = {"beamsplitter": lambda t, d: fock.beamsplitter_gate(-t, d)}
    assert cli.cmd_selftest(flipped) == cli.EXIT_NUMERIC
    rows = [l for l in capsys.readouterr().out.splitlines() if l.endswith("FAIL")]
    assert len(rows) == 1 and rows[0].startswith("beamsplitter")


def test_selftest_catches_flipped_rotation(capsys):
    flipped = {"rotation": lambda t, d: fock.rotation_gate(-t, d)}
    assert cli.cmd_selftest(flipped) == cli.EXIT_NUMERIC
    rows = [l for l in capsys.readouterr().out.splitlines() if l.endswith("FAIL")]
    assert len(rows) == 1 and rows[0].startswith("rotation")


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cvqode.cli", "estimate-cost"], capture_output=True, text=True)
    assert proc.returncode == 0 and "192000" in proc.stdout
