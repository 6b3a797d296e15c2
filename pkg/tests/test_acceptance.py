"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured
figures, visible in ``pytest -v`` output.
"""

import json
import math
import time

import numpy as np
import pytest

from wltemper import (ChainConfig, EnergyGrid, WlSchedule, critical_tau, draw_posterior, evidence,
                      make_discrete_toy, marginal_hist, merge_runs, overlap_stat, run_metropolis,
                      run_wl, samples_to_drawset, tau_sweep)
from wltemper.cli import cmd_run
from wltemper.thermo import NO_INTERIOR_MAXIMUM, default_tau_grid, fd_heat_capacity

import oracles
from conftest import SEEDS
from test_thermo import curve

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(label, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {label}: {detail}")
        assert ok, f"{label}: {detail}"
    return emit


@pytest.fixture(scope="module")
def discrete_default(discrete16):
    """Four runs with the default schedule and check interval, timed."""
    model, grid = discrete16
    t0 = time.perf_counter()
    runs = [run_wl(model, grid, capacity=None, rng=np.random.default_rng(s))[0] for s in SEEDS]
    merged = merge_runs(runs)
    return {"runs": runs, "merged": merged, "wall": time.perf_counter() - t0}


def test_c1_wl_matches_enumeration(discrete16, discrete_default, report):
    model, grid = discrete16
    exact, nz = oracles.enumerate_log_g(oracles.lattice_energies(model), grid)
    assert nz.sum() == 13 and np.flatnonzero(nz)[0] == 0
    exact = exact - exact[0]
    merged = discrete_default["merged"]
    same_support = bool(np.array_equal(merged.dos.visited, nz))
    dev = float(np.nanmax(np.abs(merged.log_g_mean - exact)))
    wall = discrete_default["wall"]
    report("criterion 1 (WL vs enumeration)", same_support and dev <= 0.1 and wall <= 300,
           f"max-abs deviation {dev:.4f} (<= 0.1), 4 runs in {wall:.1f} s (<= 300 s)")


def test_c2_gaussian_thermodynamics(gauss4_runs, oracle_values, tmp_path, report):
    taus = np.linspace(0.1, 1.0, 10)
    # quadrature oracle first, archived next to the frozen copy
    fresh = [oracles.gaussian_moments(4, 1.0, 8.0, 0.0, t) for t in taus]
    archive = tmp_path / "gaussian_d4_oracle.json"
    archive.write_text(json.dumps({"tau": taus.tolist(), "mean_e": [m for m, _ in fresh],
                                   "var_e": [v for _, v in fresh]}))
    frozen = oracle_values["gaussian_d4"]
    assert np.allclose(json.loads(archive.read_text())["mean_e"], frozen["mean_e"], rtol=1e-10)
    assert np.allclose([v for _, v in fresh], frozen["var_e"], rtol=1e-10)
    assert np.allclose([m for m, _ in fresh], 2 * taus, rtol=1e-8)

    c = tau_sweep(gauss4_runs["merged"].dos, taus)
    err_mean = np.max(np.abs((c.mean_e - 0.0) / (2 * taus) - 1))
    err_cap = np.max(np.abs(c.heat_cap / 2.0 - 1))
    err_fisher = np.max(np.abs(c.fisher / (2 / taus ** 2) - 1))
    ok = err_mean <= 0.05 and err_cap <= 0.10 and err_fisher <= 0.10
    report("criterion 2 (Gaussian thermodynamics)", ok,
           f"max rel err <E>-offset {err_mean:.4f} (<= 0.05), heat_cap {err_cap:.4f} (<= 0.10), "
           f"F {err_fisher:.4f} (<= 0.10) over tau in [0.1, 1]")


def test_c3_variance_identity(discrete_default, gauss4_runs, report):
    taus = default_tau_grid()
    sources = {"discrete run": discrete_default["runs"] + [discrete_default["merged"].dos],
               "gaussian run": gauss4_runs["runs"] + [gauss4_runs["merged"].dos]}
    worst = {}
    for name, doses in sources.items():
        errs = []
        for d in doses:
            c = tau_sweep(d, taus)
            errs.append(np.max(np.abs(c.fd_heat_cap / c.heat_cap - 1)))
        worst[name] = max(errs)
    three_point = max(np.max(np.abs(fd_heat_capacity(d, taus, order=2) /
                                    tau_sweep(d, taus).heat_cap - 1))
                      for d in sources["discrete run"])
    ok = all(v <= 1e-3 for v in worst.values())
    report("criterion 3 (d<E>/dtau = var/tau^2)", ok,
           f"max rel err, step 1e-3*tau, tau in [0.01, 10]: five-point "
           f"discrete {worst['discrete run']:.2e}, gaussian {worst['gaussian run']:.2e} (<= 1e-3); "
           f"three-point stencil on discrete {three_point:.2e} for reference")


def test_c4_metropolis_overlap(curvefit, curvefit_runs, report):
    model = curvefit["model"]
    draws = draw_posterior(curvefit_runs["merged"].dos, curvefit_runs["pooled"], 1.0, 20000,
                           rng=np.random.default_rng(1), space=model.space)
    chain = run_metropolis(model, ChainConfig(1.0, 10 ** 6, seed=2))
    mc = samples_to_drawset(chain.samples, model.space)
    overlaps = {name: overlap_stat(marginal_hist(draws, k), marginal_hist(mc, k))
                for k, name in enumerate(model.space.names)}
    text = ", ".join(f"{k} {v:.4f}" for k, v in overlaps.items())
    report("criterion 4 (Metropolis cross-check)", min(overlaps.values()) >= 0.90,
           f"overlaps {text} (>= 0.90), 1e6 steps, acceptance {chain.acceptance_rate:.3f}")


def test_c5_cold_posterior_narrows(curvefit, curvefit_runs, report):
    model = curvefit["model"]
    dos, pool = curvefit_runs["merged"].dos, curvefit_runs["pooled"]
    var = {}
    for tau in (1.0, 0.24):
        d = draw_posterior(dos, pool, tau, 20000, rng=np.random.default_rng(3), space=model.space)
        var[tau] = d.draws.var(axis=0)
    ok = bool(np.all(var[0.24] <= var[1.0]) and np.any(var[0.24] < var[1.0]))
    text = ", ".join(f"{n} {a:.3g} vs {b:.3g}" for n, a, b in
                     zip(model.space.names, var[0.24], var[1.0]))
    report("criterion 5 (cold narrowing)", ok, f"variance tau=0.24 vs tau=1: {text}")


def test_c6_critical_tau(report):
    interior = critical_tau(curve([0.1, 0.2, 0.3], [1.0, 3.0, 2.0]))
    tau = np.array([0.1, 0.2, 0.3, 0.4])
    mono = critical_tau(curve(tau, 2.0 / tau ** 2))
    shown = NO_INTERIOR_MAXIMUM if mono is None else mono
    report("criterion 6 (critical tau)", interior == 0.2 and mono is None,
           f"[1,3,2] -> {interior}; monotone -> {shown}")


def test_c7_evidence(discrete_runs, gauss2_runs, oracle_values, report):
    exact_d = oracles.enumerate_log_evidence(oracles.lattice_energies(make_discrete_toy(16, 2)))
    assert exact_d == pytest.approx(oracle_values["discrete16x2"]["log_z_tau1"], abs=1e-12)
    got_d = evidence(discrete_runs["merged"].dos, 256.0, 1.0)
    exact_g = math.log(2 * math.pi)
    # the truncation to the box is far below the tolerance
    assert oracles.gaussian_log_evidence(2, 1.0, 8.0, 0.0) == pytest.approx(exact_g, abs=1e-12)
    got_g = evidence(gauss2_runs["merged"].dos, 16.0 ** 2, 1.0)
    d_err = abs(got_d.log_z - exact_d)
    g_err = abs(got_g.log_z / exact_g - 1)
    report("criterion 7 (evidence)", d_err <= 0.05 and g_err <= 0.01,
           f"discrete |dlogZ| {d_err:.4f} (<= 0.05); gaussian rel err {g_err:.4f} (<= 0.01)"
           f" ({got_g.log_z:.4f} vs {exact_g:.4f})")


def test_c8_determinism(tmp_path, report):
    cfg = tmp_path / "det.toml"
    cfg.write_text("""
[model]
kind = "discrete"
levels_per_dim = 16
d = 2

[grid]
e_min = -0.5
e_max = 14.5
n_bins = 15

[run]
seeds = [5, 6]
capacity = 64
""")
    a = cmd_run(cfg, tmp_path / "a")
    b = cmd_run(cfg, tmp_path / "b")
    csvs = sorted(p.relative_to(a) for p in a.rglob("*.csv"))
    same = [(a / p).read_bytes() == (b / p).read_bytes() for p in csvs]
    report("criterion 8 (determinism)", len(csvs) == 6 and all(same),
           f"{sum(same)}/{len(csvs)} CSV files byte-identical across two invocations")


def test_c9_schedule_contract(discrete_default, report):
    sched = WlSchedule()
    bad = []
    for dos in discrete_default["runs"]:
        ev = dos.stats["flatness_events"]
        if dos.stats["n_reductions"] != 27 or len(ev) != 27:
            bad.append("count")
        if [e["ln_f"] for e in ev] != [2.0 ** -k for k in range(27)]:
            bad.append("halving")
        if min(e["min_over_mean"] for e in ev) < 0.6:
            bad.append("flatness")
        if not dos.stats["ln_f_final"] < 1e-8 <= ev[-1]["ln_f"]:
            bad.append("termination")
    report("criterion 9 (schedule contract)", sched.n_stages == 27 and not bad,
           f"27 reductions per run, ln f = 2^-k, min/mean >= 0.6 at every event, "
           f"final ln f {discrete_default['runs'][0].stats['ln_f_final']:.3g}"
           + (f"; problems {bad}" if bad else ""))
