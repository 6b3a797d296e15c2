"""Independent reference computations used by the test-suite.

Nothing here touches the Wang-Landau or reweighting code paths: the
discrete toy is enumerated state by state, the Gaussian toy is done by
one-dimensional adaptive quadrature (the box factorizes), and the
two-level system is closed form.
"""

import itertools
import math

import numpy as np
from scipy import integrate, optimize


def lattice_energies(model):
    """Energy of every lattice state, evaluated at cell centres through ``model.energy``."""
    L = model.info["levels_per_dim"]
    d = model.info["d"]
    out = []
    for k in itertools.product(range(L), repeat=d):
        out.append(model.energy([ki + 0.5 for ki in k]))
    return np.array(out)


def enumerate_log_g(energies, grid):
    """Exact log density of states per bin (unit cell volume), NaN for empty bins."""
    counts = np.zeros(grid.n_bins)
    for e in energies:
        b = grid.bin_of(e)
        assert b >= 0, "enumeration energy outside the grid"
        counts[b] += 1
    log_g = np.full(grid.n_bins, np.nan)
    nz = counts > 0
    log_g[nz] = np.log(counts[nz] / grid.dE)
    return log_g, nz


def enumerate_p(energies, tau, grid=None):
    """Exact tempered probability per state, or per bin when a grid is given."""
    w = np.exp(-(energies - energies.min()) / tau)
    w /= w.sum()
    if grid is None:
        return w
    p = np.zeros(grid.n_bins)
    for e, wi in zip(energies, w):
        p[grid.bin_of(e)] += wi
    return p


def enumerate_moments(energies, tau):
    w = enumerate_p(energies, tau)
    m1 = float(np.dot(w, energies))
    var = float(np.dot(w, (energies - m1) ** 2))
    return m1, var


def enumerate_log_evidence(energies, tau=1.0, cell_volume=1.0):
    e0 = energies.min()
    return float(-e0 / tau + math.log(np.sum(np.exp(-(energies - e0) / tau)) * cell_volume))


def enumerate_marginals(model, tau, allowed_bins=None, grid=None):
    """Exact per-coordinate state marginals (rows: dims, cols: levels)."""
    L = model.info["levels_per_dim"]
    d = model.info["d"]
    states = list(itertools.product(range(L), repeat=d))
    energies = np.array([model.energy([ki + 0.5 for ki in k]) for k in states])
    w = np.exp(-(energies - energies.min()) / tau)
    if allowed_bins is not None:
        keep = np.array([grid.bin_of(e) in allowed_bins for e in energies])
        w = w * keep
    w /= w.sum()
    marg = np.zeros((d, L))
    for k, wi in zip(states, w):
        for dim in range(d):
            marg[dim, k[dim]] += wi
    return marg


def gaussian_moments(d, width, halfwidth, offset, tau):
    """``(<E>, Var E)`` for the Gaussian toy by 1-D quadrature over the box."""
    c = 1.0 / (2 * width ** 2)

    def w(x):
        return math.exp(-c * x * x / tau)

    opts = dict(epsabs=0, epsrel=1e-12, limit=200)
    z = integrate.quad(w, -halfwidth, halfwidth, **opts)[0]
    m1 = integrate.quad(lambda x: c * x * x * w(x), -halfwidth, halfwidth, **opts)[0] / z
    m2 = integrate.quad(lambda x: (c * x * x) ** 2 * w(x), -halfwidth, halfwidth, **opts)[0] / z
    return offset + d * m1, d * (m2 - m1 * m1)


def gaussian_log_evidence(d, width, halfwidth, offset, tau=1.0):
    c = 1.0 / (2 * width ** 2)
    z1 = integrate.quad(lambda x: math.exp(-c * x * x / tau), -halfwidth, halfwidth,
                        epsabs=0, epsrel=1e-12)[0]
    return d * math.log(z1) - offset / tau


def two_level_heat_capacity(tau, gap=1.0):
    x = math.exp(-gap / tau)
    p = x / (1 + x)
    return gap * gap * p * (1 - p) / tau ** 2


def two_level_peak(gap=1.0):
    res = optimize.minimize_scalar(lambda t: -two_level_heat_capacity(t, gap),
                                   bounds=(0.05, 2.0), method="bounded",
                                   options={"xatol": 1e-12})
    return float(res.x)
