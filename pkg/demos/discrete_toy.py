"""Density of states of a 16x16 lattice, checked state by state.

Every one of the 256 cells carries a tabulated energy, so g(E) can be
counted exactly and compared to what the Wang-Landau walker finds.
"""
import itertools

import numpy as np

from wltemper import EnergyGrid, make_discrete_toy, merge_runs, run_wl

model = make_discrete_toy(16, 2)
grid = EnergyGrid.centered(0.0, 14.0)  # one bin per integer energy

# exact count of cells per energy bin
table = model.info["table"]
counts = np.bincount(table.reshape(-1).astype(int), minlength=grid.n_bins)
print("cells per energy:", counts.tolist())

runs = [run_wl(model, grid, capacity=None, rng=np.random.default_rng(seed))[0]
        for seed in (1, 2, 3, 4)]
merged = merge_runs(runs)

exact = np.full(grid.n_bins, np.nan)
exact[counts > 0] = np.log(counts[counts > 0] / counts[0])
print(f"{'E':>3} {'exact':>8} {'WL':>8} {'stderr':>8}")
for e, x, m, s in zip(grid.midpoints, exact, merged.log_g_mean, merged.log_g_stderr):
    if np.isfinite(x):
        print(f"{e:3.0f} {x:8.4f} {m:8.4f} {s:8.4f}")
print("max |error|:", np.nanmax(np.abs(merged.log_g_mean - exact)))
print("steps per run:", [r.stats["n_steps"] for r in runs])
