"""Tempered posterior draws from Wang-Landau bin reservoirs, and corner histograms.

A draw at temperature ``tau`` picks an energy bin with probability
``p_tau(b)`` (restricted to bins above a probability threshold and
renormalized), then a stored parameter vector uniformly from that bin.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, EmptySelectionError, GridMismatchError
from .thermo import p_tau

__all__ = [
    "DEFAULT_THRESHOLD",
    "Selection",
    "PosteriorDrawSet",
    "Histogram",
    "Histogram2D",
    "select_bins",
    "draw_posterior",
    "samples_to_drawset",
    "marginal_hist",
    "pairwise_hist",
    "overlap_stat",
]

DEFAULT_THRESHOLD = 0.01


class Selection(NamedTuple):
    bins: np.ndarray
    retained_mass: float
    p: np.ndarray


def select_bins(dos, tau: float, threshold: float = DEFAULT_THRESHOLD) -> Selection:
    """Visited bins whose tempered probability exceeds ``threshold``.

    The retained probability mass is reported with the selection so the
    discarded tail is always visible.
    """
    if not (0 < threshold < 1):
        raise DomainError(f"threshold must lie in (0, 1), got {threshold}")
    p = p_tau(dos, tau).p
    bins = np.flatnonzero(p > threshold)
    if bins.size == 0:
        raise EmptySelectionError(
            f"no bin has p > {threshold} at tau={tau} (max p = {p.max():.3g}); "
            "lower the threshold")
    return Selection(bins, float(p[bins].sum()), p)


@dataclass
class PosteriorDrawSet:
    """Weighted parameter draws at one temperature.

    ``source_bins[i]`` is the energy bin draw ``i`` came from and
    ``energies[i]`` its stored energy.
    """

    tau: float
    draws: np.ndarray
    weights: np.ndarray
    source_bins: np.ndarray
    energies: np.ndarray
    names: tuple
    lower: tuple
    upper: tuple
    threshold: float = DEFAULT_THRESHOLD
    retained_mass: float = 1.0

    def __len__(self):
        return len(self.weights)


def draw_posterior(dos, reservoir, tau: float, n: int, threshold: float = DEFAULT_THRESHOLD,
                   rng: np.random.Generator = None, space=None) -> PosteriorDrawSet:
    """Draw ``n`` equally weighted parameter vectors at temperature ``tau``.

    Parameters
    ----------
    dos : DensityOfStates
    reservoir : BinReservoir
        Per-bin stored ``(theta, E)`` pairs on the same grid as ``dos``.
    space : ParameterSpace, optional
        Supplies the histogram range; taken from the draws otherwise.
    """
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    if reservoir.n_bins != dos.grid.n_bins:
        raise GridMismatchError("reservoir and density of states use different grids")
    rng = rng if rng is not None else np.random.default_rng()
    sel = select_bins(dos, tau, threshold)
    empty = [int(b) for b in sel.bins if reservoir.size(b) == 0]
    if empty:
        raise DomainError(f"selected bins have empty reservoirs: {empty}")
    probs = sel.p[sel.bins] / sel.p[sel.bins].sum()
    chosen = rng.choice(sel.bins, size=int(n), p=probs)
    dims = len(reservoir.names)
    draws = np.empty((int(n), dims))
    energies = np.empty(int(n))
    for b in np.unique(chosen):
        rows = np.flatnonzero(chosen == b)
        thetas, es = reservoir.arrays(int(b))
        pick = rng.integers(0, len(es), size=rows.size)
        draws[rows] = thetas[pick]
        energies[rows] = es[pick]
    if space is not None:
        lower, upper = space.lower, space.upper
    else:
        lower, upper = tuple(draws.min(axis=0)), tuple(draws.max(axis=0))
    return PosteriorDrawSet(float(tau), draws, np.full(int(n), 1.0 / n), chosen, energies,
                            tuple(reservoir.names), tuple(lower), tuple(upper),
                            threshold, sel.retained_mass)


def samples_to_drawset(samples, space, tau: float = 1.0, energies=None) -> PosteriorDrawSet:
    """Wrap plain samples (e.g. a Metropolis chain) as an equally weighted draw set."""
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    energies = np.full(n, np.nan) if energies is None else np.asarray(energies, dtype=float)
    return PosteriorDrawSet(float(tau), samples, np.full(n, 1.0 / n), np.full(n, -1),
                            energies, tuple(space.names), tuple(space.lower), tuple(space.upper),
                            threshold=0.0, retained_mass=1.0)


@dataclass
class Histogram:
    """Density histogram: ``sum(heights * widths) == 1``."""

    edges: np.ndarray
    heights: np.ndarray

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


@dataclass
class Histogram2D:
    """Probability mass per cell; ``mass.sum() == 1``."""

    edges_i: np.ndarray
    edges_j: np.ndarray
    mass: np.ndarray

    def marginal(self, axis: int = 0) -> Histogram:
        """Density histogram of dimension ``i`` (axis 0) or ``j`` (axis 1)."""
        edges = self.edges_i if axis == 0 else self.edges_j
        m = self.mass.sum(axis=1 - axis)
        return Histogram(edges, m / np.diff(edges))


def _check_dim(draws: PosteriorDrawSet, dim):
    if int(dim) != dim or not (0 <= dim < draws.draws.shape[1]):
        raise DomainError(f"dimension {dim} out of range for {draws.draws.shape[1]} parameters")
    return int(dim)


def _range(draws: PosteriorDrawSet, dim):
    lo, hi = draws.lower[dim], draws.upper[dim]
    if not hi > lo:
        half = 0.5 * max(abs(lo), 1.0)
        lo, hi = lo - half, hi + half
    return lo, hi


def marginal_hist(draws: PosteriorDrawSet, dim: int, n_bins: int = 50) -> Histogram:
    """Weighted density histogram of one parameter over its box range."""
    if int(n_bins) != n_bins or n_bins < 2:
        raise DomainError("n_bins must be an integer >= 2")
    dim = _check_dim(draws, dim)
    lo, hi = _range(draws, dim)
    mass, edges = np.histogram(draws.draws[:, dim], bins=int(n_bins), range=(lo, hi),
                               weights=draws.weights)
    mass = mass / mass.sum()
    return Histogram(edges, mass / np.diff(edges))


def pairwise_hist(draws: PosteriorDrawSet, dim_i: int, dim_j: int, n_bins: int = 50) -> Histogram2D:
    """Weighted 2-D histogram of two parameters over their box ranges."""
    dim_i, dim_j = _check_dim(draws, dim_i), _check_dim(draws, dim_j)
    if dim_i == dim_j:
        raise DomainError("pairwise histogram needs two distinct dimensions")
    if int(n_bins) != n_bins or n_bins < 2:
        raise DomainError("n_bins must be an integer >= 2")
    rng_i, rng_j = _range(draws, dim_i), _range(draws, dim_j)
    mass, ei, ej = np.histogram2d(draws.draws[:, dim_i], draws.draws[:, dim_j],
                                  bins=int(n_bins), range=(rng_i, rng_j), weights=draws.weights)
    return Histogram2D(ei, ej, mass / mass.sum())


def overlap_stat(h1: Histogram, h2: Histogram) -> float:
    """Histogram intersection ``sum_b min(h1_b, h2_b) * width_b``."""
    if h1.edges.shape != h2.edges.shape or not np.allclose(h1.edges, h2.edges, rtol=0, atol=1e-12):
        raise GridMismatchError("histograms use different binning")
    return float(np.sum(np.minimum(h1.heights, h2.heights) * h1.widths))
