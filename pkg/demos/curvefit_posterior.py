"""Tempered posteriors of a straight-line fit, from one Wang-Landau run set.

Twenty points y = a x with 5% proportional noise.  The parameters are
the slope a and the relative noise level sigma (Jeffreys prior).  After
the density of states is known, the posterior at any temperature is a
reweighting; a plain Metropolis chain at tau = 1 checks the result.
"""
from pathlib import Path

import numpy as np
from scipy import optimize

from wltemper import (BinReservoir, ChainConfig, EnergyGrid, draw_posterior, load_datasets,
                      make_curvefit_model, marginal_hist, merge_runs, overlap_stat,
                      run_metropolis, run_wl, samples_to_drawset, select_bins)

data = Path(__file__).resolve().parents[1] / "tests" / "data" / "linear_a2.csv"
datasets = load_datasets(data)
model = make_curvefit_model(datasets, lambda p, x: p[0] * x, 1,
                            sigma_bounds=(0.005, 0.2), shape_bounds=[(1.5, 2.5)],
                            shape_names=["a"])

# window from the best fit up to 30 units of energy above it
best = optimize.minimize(model.energy_function(), [2.0, 0.03], method="Nelder-Mead")
grid = EnergyGrid(best.fun, best.fun + 30.0, 60)
print("best fit a=%.4f sigma=%.4f" % tuple(best.x))

out = [run_wl(model, grid, rng=np.random.default_rng(s)) for s in (11, 12, 13, 14)]
merged = merge_runs([d for d, _ in out])
pool = BinReservoir.pooled([r for _, r in out])

for tau in (1.0, 0.24):
    sel = select_bins(merged.dos, tau)
    draws = draw_posterior(merged.dos, pool, tau, 20000, rng=np.random.default_rng(0),
                           space=model.space)
    print(f"tau={tau}: {sel.bins.size} bins kept, retained mass {sel.retained_mass:.3f}, "
          f"mean {draws.draws.mean(0).round(4)}, sd {draws.draws.std(0).round(5)}")

chain = run_metropolis(model, ChainConfig(tau=1.0, n_steps=10 ** 6, seed=2))
mc = samples_to_drawset(chain.samples, model.space)
warm = draw_posterior(merged.dos, pool, 1.0, 20000, rng=np.random.default_rng(1), space=model.space)
for k, name in enumerate(model.space.names):
    ov = overlap_stat(marginal_hist(warm, k), marginal_hist(mc, k))
    print(f"overlap {name}: {ov:.3f}")
print("metropolis acceptance:", round(chain.acceptance_rate, 3))
