"""Model evidence from the anchored density of states.

Anchoring sum g(E) dE to the prior volume makes the evidence a single
sum over bins.  For a 2-d unit Gaussian on a wide box the answer is
ln(2 pi); for the lattice toy it is a sum over 256 cells.
"""
import math

import numpy as np

from wltemper import EnergyGrid, evidence, make_discrete_toy, make_gaussian_toy, merge_runs, run_wl

# the window must hold every energy the box can produce
gauss = make_gaussian_toy(d=2, width=1.0, box_halfwidth=8.0)
grid = EnergyGrid(0.0, 64.0, 640)
runs = [run_wl(gauss, grid, capacity=None, rng=np.random.default_rng(s))[0] for s in range(4)]
z = evidence(merge_runs(runs).dos, prior_volume=16.0 ** 2)
print(f"gaussian: log Z = {z.log_z:.4f}, exact {math.log(2 * math.pi):.4f}")
for r in runs:
    print(f"  single run {evidence(r, 256.0).log_z:.4f}")

lattice = make_discrete_toy(16, 2)
table = lattice.info["table"].reshape(-1)
exact = math.log(np.exp(-table).sum())
grid = EnergyGrid.centered(0.0, 14.0)
runs = [run_wl(lattice, grid, capacity=None, rng=np.random.default_rng(s))[0] for s in range(4)]
z = evidence(merge_runs(runs).dos, prior_volume=256.0)
print(f"lattice: log Z = {z.log_z:.4f}, exact {exact:.4f}")

# a window cut off at the top leaves prior volume out and says so
short = EnergyGrid(0.0, 4.0, 40)
run = run_wl(gauss, short, capacity=None, rng=np.random.default_rng(0))[0]
z = evidence(run, 256.0)
print(f"truncated window: log Z = {z.log_z:.4f} ({z.warning})")
