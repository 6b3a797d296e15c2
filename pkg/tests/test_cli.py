import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from wltemper import ConfigError
from wltemper.cli import cmd_analyze, cmd_compare, cmd_run, cmd_sample, main
from wltemper.config import load_config, parse_config
from wltemper.export import read_sweep_csv, sha256

import oracles

DATA = Path(__file__).parent / "data"

DISCRETE = """
[model]
kind = "discrete"
levels_per_dim = 8
d = 2

[grid]
e_min = -0.5
e_max = {e_max}
n_bins = {n_bins}

[schedule]
check_interval = 10000

[run]
seeds = [1, 2]
output = "out"

[posterior]
hist_bins = 8
n = 500

[metropolis]
n_steps = 200000
"""


def write_cfg(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


@pytest.fixture
def discrete_cfg(tmp_path):
    return write_cfg(tmp_path, DISCRETE.format(e_max=6.5, n_bins=7))


def test_run_layout_and_manifest(discrete_cfg):
    run_dir = cmd_run(discrete_cfg)
    assert run_dir == discrete_cfg.parent / "out"
    for s in (1, 2):
        assert {p.name for p in (run_dir / f"seed_{s}").iterdir()} == {"dos.csv", "reservoir.csv",
                                                                      "run.json"}
    manifest = json.loads((run_dir / "manifest.json").read_text())
    for name, entry in manifest["files"].items():
        assert sha256(run_dir / name) == entry["sha256"]
    assert manifest["seeds"] == [1, 2] and manifest["grid"]["n_bins"] == 7
    assert set(manifest["versions"]) == {"wltemper", "python", "numpy", "scipy"}
    assert all(0 < r["acceptance_rate"] <= 1 for r in manifest["runs"])
    assert manifest["config"]["schedule"]["ln_f_min"] == 1e-8


def test_rerun_byte_identical(discrete_cfg, tmp_path):
    a = cmd_run(discrete_cfg, tmp_path / "a")
    b = cmd_run(discrete_cfg, tmp_path / "b")
    for rel in ["dos.csv", "reservoirs.csv", "seed_1/dos.csv", "seed_2/reservoir.csv"]:
        assert (a / rel).read_bytes() == (b / rel).read_bytes()


def test_full_pipeline(discrete_cfg, capsys):
    run_dir = cmd_run(discrete_cfg)
    curve = cmd_analyze(run_dir)
    assert "tau_star" in capsys.readouterr().out
    cols, star = read_sweep_csv(run_dir / "sweep.csv")
    assert np.all(np.isfinite(cols["stderr_mean_e"]))
    cold = cmd_sample(run_dir, tau="star")
    warm = cmd_sample(run_dir, tau=1.0)
    assert cold.parent == warm.parent
    assert sorted(p.name for p in cold.iterdir()) == sorted(p.name for p in warm.iterdir())
    m = json.loads((warm / "manifest.json").read_text())
    assert m["n"] == 500 and m["threshold"] == 0.01 and m["tau"] == 1.0
    assert {t["file"] for t in m["tables"]} == {"draws.csv", "marginal_theta0.csv",
                                               "marginal_theta1.csv", "pair_theta0__theta1.csv"}
    report = cmd_compare(run_dir)
    assert report["passed"] and min(report["overlaps"].values()) >= 0.95
    assert report["chain_length"] == 200000 and 0 < report["acceptance_rate"] <= 1
    assert (run_dir / "compare" / "report.txt").read_text().strip().endswith("PASS")


def test_main_exit_codes(discrete_cfg, tmp_path):
    assert main(["run", "--config", str(discrete_cfg), "--out", str(tmp_path / "r"),
                 "--seed", "3", "--seed", "4"]) == 0
    assert sorted(p.name for p in (tmp_path / "r").glob("seed_*")) == ["seed_3", "seed_4"]
    assert main(["analyze", str(tmp_path / "r"), "--n-tau", "50"]) == 0
    assert main(["sample", "--out", str(tmp_path / "r"), "--tau", "0.5", "--n", "100"]) == 0
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 1
    assert main(["analyze", str(tmp_path / "nothing")]) == 1
    assert main(["bogus"]) == 1
    assert main(["sample", str(tmp_path / "r"), "--tau", "1.0", "--threshold", "0.99"]) == 2


def test_truncated_window_flagged(tmp_path):
    cfg = write_cfg(tmp_path, DISCRETE.format(e_max=0.5, n_bins=2))
    run_dir = tmp_path / "trunc"
    assert main(["run", "--config", str(cfg), "--out", str(run_dir)]) == 0
    # the window holds only the ground level, so the reweighted marginals miss the tails
    assert main(["compare", str(run_dir), "--floor", "0.9"]) == 3
    report = json.loads((run_dir / "compare" / "report.json").read_text())
    assert not report["passed"] and "BELOW FLOOR" in (run_dir / "compare" / "report.txt").read_text()


def test_gaussian_no_interior_maximum(tmp_path, capsys):
    cfg = write_cfg(tmp_path, """
[model]
kind = "gaussian"
d = 2

[grid]
e_min = 0.0
e_max = 16.0
n_bins = 64

[schedule]
ln_f_min = 1e-5
check_interval = 10000

[run]
seeds = [1, 2]
capacity = 8
""")
    run_dir = cmd_run(cfg, tmp_path / "g")
    # temperatures well above the bin width, well below the window's top
    cmd_analyze(run_dir, tau_min=0.5, tau_max=2.0, n_tau=40)
    assert "no interior maximum" in capsys.readouterr().out
    assert read_sweep_csv(run_dir / "sweep.csv")[1] is None


def test_two_level_heat_capacity_peak(tmp_path, capsys):
    cfg = write_cfg(tmp_path, """
[model]
kind = "discrete"
levels_per_dim = 2
d = 1
table = [0.0, 1.0]

[grid]
e_min = -0.5
e_max = 1.5
n_bins = 2

[schedule]
check_interval = 10000

[run]
seeds = [1, 2]
""")
    run_dir = cmd_run(cfg, tmp_path / "two")
    cmd_analyze(run_dir, tau_min=0.05, tau_max=5.0, n_tau=400)
    analysis = json.loads((run_dir / "analysis.json").read_text())
    assert analysis["tau_heat_cap_peak"] == pytest.approx(oracles.two_level_peak(), rel=0.02)


def test_curvefit_run_relocated_config(tmp_path):
    shutil.copy(DATA / "linear_a2.csv", tmp_path / "points.csv")
    cfg = write_cfg(tmp_path, """
[model]
kind = "curvefit"
data = "points.csv"
predictor = "linear"
n_shape_params = 1
shape_bounds = [[1.5, 2.5]]
shape_names = ["a"]
sigma_bounds = [0.005, 0.2]

[grid]
n_bins = 30

[schedule]
ln_f_min = 1e-4
check_interval = 10000

[run]
seeds = [1]
capacity = 32
""")
    run_dir = cmd_run(cfg, tmp_path / "elsewhere" / "cf")
    assert sorted(json.loads((run_dir / "manifest.json").read_text())["inputs"]) == ["data"]
    out = cmd_sample(run_dir, tau=1.0, n=200)
    assert (out / "marginal_sigma_A.csv").is_file() and (out / "marginal_a.csv").is_file()


class TestConfig:
    def test_defaults(self, discrete_cfg):
        cfg = load_config(discrete_cfg)
        assert cfg.schedule == {"ln_f0": 1.0, "ln_f_min": 1e-8, "flatness": 0.6,
                                "check_interval": 10000, "max_stage_steps": 10 ** 9}
        assert parse_config({"model": {"kind": "gaussian", "d": 1}}).schedule["check_interval"] is None
        assert cfg.run["capacity"] == 256 and cfg.posterior["threshold"] == 0.01
        assert cfg.metropolis["floor"] == 0.90 and cfg.posterior["n"] == 500
        assert len(cfg.tau_grid()) == 400

    @pytest.mark.parametrize("raw,match", [
        ({"model": {"kind": "gaussian", "d": 2}, "grdi": {}}, "unknown config sections"),
        ({"model": {"kind": "gaussian", "d": 2, "widht": 1}}, "unknown keys"),
        ({"model": {"kind": "gaussian", "d": 2}, "run": {"seed": [1]}}, r"unknown keys in \[run\]"),
        ({"model": {"kind": "nope"}}, "model.kind"),
        ({"model": {"kind": "gaussian", "d": 2}, "run": {"seeds": []}}, "seeds"),
        ({"model": {"kind": "gaussian", "d": 2}, "run": {"seeds": [1, 1]}}, "distinct"),
        ({"model": {"kind": "gaussian", "d": 2}, "grid": {"e_min": 2.0, "e_max": 1.0}}, "below"),
        ({"model": {"kind": "gaussian", "d": 2}, "posterior": {"threshold": 1.5}}, "threshold"),
        ({"model": {"kind": "gaussian"}}, "model.d"),
    ])
    def test_invalid(self, raw, match):
        with pytest.raises(ConfigError, match=match):
            parse_config(raw)

    def test_missing_data_file(self, tmp_path):
        cfg = write_cfg(tmp_path, """
[model]
kind = "curvefit"
data = "absent.csv"
n_shape_params = 1
shape_bounds = [[0, 1]]
sigma_bounds = [0.01, 1]
""")
        with pytest.raises(ConfigError, match="does not exist"):
            load_config(cfg)
        assert main(["run", "--config", str(cfg)]) == 1
        assert not (tmp_path / "wl_run").exists()

    def test_bad_toml(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write_cfg(tmp_path, "[model\nkind="))

    def test_predictor_lookup(self):
        from wltemper.config import resolve_predictor
        assert resolve_predictor("math:hypot")(3, 4) == 5
        with pytest.raises(ConfigError):
            resolve_predictor("no_such_thing")
        with pytest.raises(ConfigError):
            resolve_predictor("no_such_module_xyz:f")
