"""Temperature sweep of a 4-d Gaussian energy surface.

For E = |theta|^2 / 2 the tempered mean energy is 2*tau and the heat
capacity a flat 2, so the reweighted curves can be read off by eye.
The Fisher information 2/tau^2 falls monotonically: no interior peak.
"""
import numpy as np

from wltemper import EnergyGrid, critical_tau, make_gaussian_toy, merge_runs, run_wl, tau_sweep

model = make_gaussian_toy(d=4, width=1.0, box_halfwidth=8.0)
grid = EnergyGrid(0.0, 15.0, 1000)

runs = [run_wl(model, grid, capacity=None, rng=np.random.default_rng(s))[0] for s in range(4)]
merged = merge_runs(runs)

taus = np.array([0.1, 0.2, 0.3, 0.5, 0.7, 1.0])
curve = tau_sweep(merged.dos, taus, runs=runs)
print(f"{'tau':>5} {'<E>':>8} {'2tau':>6} {'C':>7} {'F':>9} {'2/tau^2':>8}")
for t, m, c, f in zip(taus, curve.mean_e, curve.heat_cap, curve.fisher):
    print(f"{t:5.2f} {m:8.4f} {2 * t:6.2f} {c:7.4f} {f:9.3f} {2 / t ** 2:8.3f}")
print("stderr of <E>:", np.round(curve.stderr["mean_e"], 4))

# the finite-difference slope of <E> agrees with the variance route
print("max |fd/analytic - 1|:", np.max(np.abs(curve.fd_heat_cap / curve.heat_cap - 1)))
print("critical tau:", critical_tau(tau_sweep(merged.dos)) or "no interior maximum")
