"""Single-walker Wang-Landau estimation of the density of states.

The walker moves through the parameter box one coordinate at a time.
Each trial is a global redraw of the coordinate over its full range
(10% of trials) or a local shift by up to 5% of the range (90%).  After
every trial, accepted or not, the log density of states of the current
energy bin grows by ``ln f`` and that bin's visit count grows by one.
When the visit histogram is flat, ``ln f`` halves and the histogram is
cleared.  The run stops once ``ln f`` reaches ``ln_f_min``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import (ConstructionError, DegenerateWindowError, DomainError,
                     EvaluationError, GridMismatchError, StallError)
from .model import ModelSpec, ParameterSpace

__all__ = [
    "GLOBAL_MOVE_PROB",
    "LOCAL_STEP_FRACTION",
    "EnergyGrid",
    "WlSchedule",
    "DensityOfStates",
    "BinReservoir",
    "MergedDos",
    "propose",
    "wl_accept",
    "flatness_reached",
    "estimate_range",
    "run_wl",
    "frozen_walk",
    "merge_runs",
]

log = logging.getLogger(__name__)

GLOBAL_MOVE_PROB = 0.10
LOCAL_STEP_FRACTION = 0.05

_BLOCK = 1 << 15
_INF = math.inf


@dataclass(frozen=True)
class EnergyGrid:
    """Uniform binning of ``[e_min, e_max]`` into ``n_bins`` bins.

    Bin ``b`` covers ``[e_min + b dE, e_min + (b+1) dE)``; the top edge
    ``e_max`` itself belongs to the last bin.  Energies outside the
    window have no bin (:meth:`bin_of` returns ``-1``).
    """

    e_min: float
    e_max: float
    n_bins: int = 1000

    def __post_init__(self):
        if not (math.isfinite(self.e_min) and math.isfinite(self.e_max) and self.e_min < self.e_max):
            raise ConstructionError(f"need finite e_min < e_max, got [{self.e_min}, {self.e_max}]")
        if int(self.n_bins) != self.n_bins or self.n_bins < 2:
            raise ConstructionError(f"n_bins must be an integer >= 2, got {self.n_bins}")
        object.__setattr__(self, "e_min", float(self.e_min))
        object.__setattr__(self, "e_max", float(self.e_max))
        object.__setattr__(self, "n_bins", int(self.n_bins))

    @property
    def dE(self) -> float:
        return (self.e_max - self.e_min) / self.n_bins

    @property
    def edges(self) -> np.ndarray:
        return self.e_min + self.dE * np.arange(self.n_bins + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return self.e_min + self.dE * (np.arange(self.n_bins) + 0.5)

    def bin_of(self, e: float) -> int:
        if not (self.e_min <= e <= self.e_max):
            return -1
        return min(int((e - self.e_min) / self.dE), self.n_bins - 1)

    @classmethod
    def centered(cls, values_min: float, values_max: float, spacing: float = 1.0) -> "EnergyGrid":
        """Grid whose bin midpoints sit on ``values_min + k * spacing``."""
        n = int(round((values_max - values_min) / spacing)) + 1
        return cls(values_min - spacing / 2, values_min + (n - 0.5) * spacing, max(n, 2))


@dataclass(frozen=True)
class WlSchedule:
    """Modification-factor schedule: ``ln f`` starts at ``ln_f0`` and halves
    at every flat histogram until it is at most ``ln_f_min``."""

    ln_f0: float = 1.0
    ln_f_min: float = 1e-8
    flatness: float = 0.6

    def __post_init__(self):
        if not (self.ln_f0 > self.ln_f_min > 0):
            raise ConstructionError(f"need ln_f0 > ln_f_min > 0, got {self.ln_f0}, {self.ln_f_min}")
        if not (0 < self.flatness < 1):
            raise ConstructionError(f"flatness must lie in (0, 1), got {self.flatness}")

    @property
    def n_stages(self) -> int:
        n, ln_f = 0, self.ln_f0
        while True:
            n += 1
            ln_f /= 2.0
            if ln_f <= self.ln_f_min:
                return n


@dataclass
class DensityOfStates:
    """Relative ``log g(E)`` on an energy grid.

    ``log_g`` is NaN on bins never visited and is defined up to one
    additive constant on the rest.  ``histogram`` holds the visit counts
    of the final stage.  ``stats`` carries run bookkeeping.
    """

    grid: EnergyGrid
    log_g: np.ndarray
    visited: np.ndarray
    histogram: np.ndarray
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self.log_g = np.asarray(self.log_g, dtype=float)
        self.visited = np.asarray(self.visited, dtype=bool)
        self.histogram = np.asarray(self.histogram, dtype=np.int64)
        n = self.grid.n_bins
        if self.log_g.shape != (n,) or self.visited.shape != (n,) or self.histogram.shape != (n,):
            raise ConstructionError("log_g, visited and histogram must have one entry per bin")
        if not np.all(np.isfinite(self.log_g[self.visited])):
            raise ConstructionError("log_g must be finite on visited bins")

    @property
    def visited_bins(self) -> np.ndarray:
        return np.flatnonzero(self.visited)

    def anchored(self, bin_index: Optional[int] = None) -> "DensityOfStates":
        """Copy with ``log_g`` shifted to zero at ``bin_index`` (default: lowest visited bin)."""
        if bin_index is None:
            bin_index = int(self.visited_bins[0])
        if not self.visited[bin_index]:
            raise DomainError(f"bin {bin_index} was never visited")
        return self.shifted(-self.log_g[bin_index])

    def shifted(self, constant: float) -> "DensityOfStates":
        log_g = np.where(self.visited, self.log_g + constant, np.nan)
        return replace(self, log_g=log_g, histogram=self.histogram.copy(), stats=dict(self.stats))


class BinReservoir:
    """Bounded uniform sample of the ``(theta, E)`` pairs seen in each bin.

    The ``n``-th pair offered to a bin is kept with probability
    ``capacity / n`` and then overwrites a uniformly chosen slot, so at
    any time a bin holds a uniform sample without replacement of
    everything it has seen.
    """

    def __init__(self, n_bins: int, capacity: int = 256, names=()):
        if int(capacity) != capacity or capacity < 1:
            raise ConstructionError("reservoir capacity must be a positive integer")
        self.n_bins = int(n_bins)
        self.capacity = int(capacity)
        self.names = tuple(names)
        self.samples = [[] for _ in range(self.n_bins)]
        self.seen = [0] * self.n_bins

    def offer(self, b: int, theta, e: float, u: float) -> None:
        """Offer one pair to bin ``b`` using the uniform variate ``u`` in [0, 1)."""
        self.seen[b] += 1
        n = self.seen[b]
        if n <= self.capacity:
            self.samples[b].append((tuple(theta), e))
        else:
            j = int(u * n)
            if j < self.capacity:
                self.samples[b][j] = (tuple(theta), e)

    def add(self, b: int, theta, e: float) -> None:
        """Store a pair unconditionally (grows past capacity; for pre-filled pools)."""
        self.seen[b] += 1
        self.samples[b].append((tuple(theta), e))

    def size(self, b: int) -> int:
        return len(self.samples[b])

    def total(self) -> int:
        return sum(len(s) for s in self.samples)

    def arrays(self, b: int):
        """``(thetas, energies)`` for bin ``b`` as arrays."""
        items = self.samples[b]
        if not items:
            return np.empty((0, len(self.names))), np.empty(0)
        return np.array([t for t, _ in items]), np.array([e for _, e in items])

    @classmethod
    def pooled(cls, reservoirs) -> "BinReservoir":
        """Union of several reservoirs over the same bins."""
        reservoirs = list(reservoirs)
        first = reservoirs[0]
        out = cls(first.n_bins, sum(r.capacity for r in reservoirs), first.names)
        for r in reservoirs:
            if r.n_bins != first.n_bins:
                raise GridMismatchError("reservoirs cover different numbers of bins")
            for b in range(r.n_bins):
                out.samples[b].extend(r.samples[b])
                out.seen[b] += r.seen[b]
        return out


def _move(x: float, lo: float, width: float, u_kind: float, u_val: float) -> float:
    if u_kind < GLOBAL_MOVE_PROB:
        return lo + u_val * width
    return x + (2.0 * u_val - 1.0) * LOCAL_STEP_FRACTION * width


def propose(theta, space: ParameterSpace, rng: np.random.Generator, dim: int = 0) -> list:
    """Trial move of coordinate ``dim``; other coordinates are copied.

    The result may leave the box after a local move; callers reject it.
    """
    u_kind, u_val = rng.random(2)
    new = list(theta)
    lo = space.lower[dim]
    new[dim] = _move(new[dim], lo, space.upper[dim] - lo, u_kind, u_val)
    return new


def wl_accept(log_g_current: float, log_g_proposed: float, rng: np.random.Generator) -> bool:
    """Accept with probability ``min(1, g(E_current) / g(E_proposed))``."""
    delta = log_g_current - log_g_proposed
    if delta >= 0:
        return True
    return bool(rng.random() < math.exp(delta))


def flatness_reached(histogram, visited, threshold: float) -> bool:
    """True when ``min >= threshold * mean`` over the bins flagged in ``visited``."""
    h = np.asarray(histogram, dtype=float)[np.asarray(visited, dtype=bool)]
    if h.size == 0:
        raise DomainError("flatness needs at least one visited bin")
    return bool(h.min() >= threshold * h.mean())


def _greedy_descent(efn, theta, space: ParameterSpace, e: float, target=None,
                    max_evals: int = 20000):
    """Coordinate descent with shrinking steps; stops early once ``e <= target``."""
    theta = list(theta)
    steps = [0.25 * w for w in space.widths]
    evals = 0
    while evals < max_evals and max(s / w for s, w in zip(steps, space.widths)) > 1e-9:
        improved = False
        for k in range(space.dims):
            for sign in (1.0, -1.0):
                trial = list(theta)
                trial[k] = min(max(theta[k] + sign * steps[k], space.lower[k]), space.upper[k])
                et = efn(trial)
                evals += 1
                if et < e:
                    theta, e, improved = trial, et, True
                    break
        if target is not None and e <= target:
            break
        if not improved:
            steps = [s * 0.5 for s in steps]
    return theta, e


def estimate_range(model: ModelSpec, rng: np.random.Generator, n_probe: int = 10000,
                   margin: float = 0.05):
    """Energy window ``(e_min, e_max)`` from random probes.

    ``n_probe`` uniform draws are evaluated and a greedy descent starts
    from the best one.  With ``spread = p99.9 - best``, the window is
    ``[best - margin * spread, p99.9]``.
    """
    if n_probe < 1000:
        raise DomainError("n_probe must be at least 1000")
    efn = model.energy_function()
    space = model.space
    lo = np.array(space.lower)
    w = np.array(space.widths)
    points = lo + rng.random((n_probe, space.dims)) * w
    energies = np.array([efn(p.tolist()) for p in points], dtype=float)
    finite = np.isfinite(energies)
    if not finite.any():
        raise EvaluationError("every probe energy is non-finite")
    energies_f = energies[finite]
    i_best = int(np.flatnonzero(finite)[np.argmin(energies_f)])
    _, best = _greedy_descent(efn, points[i_best].tolist(), space, float(energies[i_best]))
    best = min(best, float(energies_f.min()))
    top = float(np.percentile(energies_f, 99.9))
    spread = top - best
    if not spread > 0:
        raise DegenerateWindowError(f"probed energies have no spread (all near {best})")
    e_min = best - margin * spread
    log.info("energy window from %d probes: best=%.6g p99.9=%.6g -> [%.6g, %.6g]",
             n_probe, best, top, e_min, top)
    return e_min, top


def _initial_state(model: ModelSpec, grid: EnergyGrid, rng, theta0=None, tries: int = 10000):
    efn = model.energy_function()
    space = model.space
    if theta0 is not None:
        theta = [float(t) for t in theta0]
        if not space.contains(theta):
            raise DomainError("theta0 lies outside the parameter space")
        e = efn(theta)
        if grid.bin_of(e) < 0:
            raise DomainError(f"theta0 has energy {e} outside the window [{grid.e_min}, {grid.e_max}]")
        return theta, e
    best, best_e = None, math.inf
    for _ in range(tries):
        theta = space.sample_uniform(rng)
        e = efn(theta)
        if grid.bin_of(e) >= 0:
            return theta, e
        if e < best_e:
            best, best_e = theta, e
    if best is not None and best_e > grid.e_max:
        theta, e = _greedy_descent(efn, best, space, best_e, target=grid.e_max)
        if grid.bin_of(e) >= 0:
            return theta, e
    raise DomainError(
        f"no starting point found inside the energy window [{grid.e_min}, {grid.e_max}]")


def _energy_failure(e: float, model: ModelSpec, theta):
    if e != e or (e == -math.inf) or (e == math.inf and not model.singular):
        raise EvaluationError(f"non-finite energy {e} at theta={list(theta)}")


def run_wl(model: ModelSpec, grid: EnergyGrid, schedule: Optional[WlSchedule] = None,
           capacity: Optional[int] = 256, rng: Optional[np.random.Generator] = None, *,
           theta0=None, check_interval: Optional[int] = None,
           max_stage_steps: int = 10 ** 9):
    """Run one Wang-Landau walker to the end of its schedule.

    Parameters
    ----------
    model : ModelSpec
    grid : EnergyGrid
        Trials whose energy leaves the window are rejected.
    schedule : WlSchedule, optional
        Defaults to ``WlSchedule()``.
    capacity : int or None
        Reservoir slots per bin; ``None`` disables parameter capture.
    rng : numpy.random.Generator
    theta0 : sequence of float, optional
        Starting point; drawn uniformly inside the window otherwise.
    check_interval : int, optional
        Trials between flatness checks, default ``max(50000, 100 * n_bins)``.
    max_stage_steps : int
        Trials allowed in one stage before :class:`StallError`.

    Returns
    -------
    dos : DensityOfStates
    reservoir : BinReservoir or None
    """
    schedule = schedule or WlSchedule()
    rng = rng if rng is not None else np.random.default_rng()
    n_bins = grid.n_bins
    if check_interval is None:
        check_interval = max(50000, 100 * n_bins)
    space = model.space
    d = space.dims
    lower = list(space.lower)
    upper = list(space.upper)
    widths = list(space.widths)
    efn = model.energy_function()
    e_min, e_max = grid.e_min, grid.e_max
    inv_dE = 1.0 / grid.dE
    last_bin = n_bins - 1
    exp = math.exp

    theta, e = _initial_state(model, grid, rng, theta0)
    b = grid.bin_of(e)

    lg = [0.0] * n_bins
    hist = [0] * n_bins
    visited = [False] * n_bins
    capture = capacity is not None
    reservoir = BinReservoir(n_bins, capacity, space.names) if capture else None
    if capture:
        store, seen, cap = reservoir.samples, reservoir.seen, reservoir.capacity

    ln_f = schedule.ln_f0
    flat_thr = schedule.flatness
    buf = rng.random(_BLOCK).tolist()
    pos = 0
    dim = 0
    n_steps = n_accept = n_out_box = n_below = n_above = 0
    stage_steps = 0
    events = []

    while True:
        for _ in range(check_interval):
            if pos + 4 > _BLOCK:
                buf = rng.random(_BLOCK).tolist()
                pos = 0
            u_kind, u_val, u_acc, u_res = buf[pos], buf[pos + 1], buf[pos + 2], buf[pos + 3]
            pos += 4
            k = dim
            dim = dim + 1 if dim + 1 < d else 0
            old = theta[k]
            if u_kind < GLOBAL_MOVE_PROB:
                new = lower[k] + u_val * widths[k]
            else:
                new = old + (2.0 * u_val - 1.0) * LOCAL_STEP_FRACTION * widths[k]
            if lower[k] <= new <= upper[k]:
                theta[k] = new
                e_new = efn(theta)
                if e_min <= e_new <= e_max:
                    b_new = int((e_new - e_min) * inv_dE)
                    if b_new > last_bin:
                        b_new = last_bin
                    delta = lg[b] - lg[b_new]
                    if delta >= 0.0 or u_acc < exp(delta):
                        e, b = e_new, b_new
                        n_accept += 1
                    else:
                        theta[k] = old
                else:
                    if e_new != e_new or e_new == _INF or e_new == -_INF:
                        _energy_failure(e_new, model, theta)
                    theta[k] = old
                    if e_new < e_min:
                        n_below += 1
                    else:
                        n_above += 1
            else:
                n_out_box += 1
            lg[b] += ln_f
            hist[b] += 1
            visited[b] = True
            if capture:
                n = seen[b] + 1
                seen[b] = n
                if n <= cap:
                    store[b].append((tuple(theta), e))
                else:
                    j = int(u_res * n)
                    if j < cap:
                        store[b][j] = (tuple(theta), e)
        n_steps += check_interval
        stage_steps += check_interval

        h = np.array(hist, dtype=float)
        mask = np.array(visited)
        hv = h[mask]
        ratio = hv.min() / hv.mean()
        if ratio >= flat_thr:
            events.append({"step": n_steps, "ln_f": ln_f, "min_over_mean": float(ratio),
                           "n_visited": int(mask.sum())})
            log.debug("flat histogram at step %d, ln f=%g, min/mean=%.3f", n_steps, ln_f, ratio)
            final_hist = hist
            hist = [0] * n_bins
            stage_steps = 0
            ln_f /= 2.0
            if ln_f <= schedule.ln_f_min:
                break
        elif stage_steps >= max_stage_steps:
            low = np.flatnonzero(mask & (h < flat_thr * hv.mean())).tolist()
            never = np.flatnonzero(~mask).tolist()
            raise StallError(
                f"no flat histogram after {stage_steps} trials at ln f={ln_f}; "
                f"bins below threshold: {low}; never-visited bins: {never}",
                stalled_bins=low, never_visited=never)

    log_g = np.array(lg)
    mask = np.array(visited)
    log_g = np.where(mask, log_g - log_g[mask].min(), np.nan)
    stats = {
        "n_steps": n_steps,
        "n_accepted": n_accept,
        "n_rejected_box": n_out_box,
        "n_rejected_below": n_below,
        "n_rejected_above": n_above,
        "acceptance_rate": n_accept / n_steps,
        "n_reductions": len(events),
        "ln_f_final": ln_f,
        "check_interval": check_interval,
        "flatness_events": events,
    }
    dos = DensityOfStates(grid, log_g, mask, np.array(final_hist), stats)
    return dos, reservoir


def frozen_walk(model: ModelSpec, grid: EnergyGrid, log_g, n_steps: int,
                rng: np.random.Generator, *, theta0=None, thin: int = 1) -> np.ndarray:
    """Walk with a fixed ``log_g`` (no updates) and return bin occupancy counts.

    The occupancy is recorded every ``thin`` trials.  With ``log_g`` equal
    to the true density of states the occupancy is uniform.
    """
    space = model.space
    d = space.dims
    lower, upper, widths = list(space.lower), list(space.upper), list(space.widths)
    efn = model.energy_function()
    lg = np.asarray(log_g, dtype=float).tolist()
    e_min, e_max, inv_dE, last_bin = grid.e_min, grid.e_max, 1.0 / grid.dE, grid.n_bins - 1
    theta, e = _initial_state(model, grid, rng, theta0)
    b = grid.bin_of(e)
    counts = [0] * grid.n_bins
    dim = 0
    u_all = rng.random((n_steps, 3)).tolist()
    for t, (u_kind, u_val, u_acc) in enumerate(u_all):
        k = dim
        dim = dim + 1 if dim + 1 < d else 0
        old = theta[k]
        new = _move(old, lower[k], widths[k], u_kind, u_val)
        if lower[k] <= new <= upper[k]:
            theta[k] = new
            e_new = efn(theta)
            if e_min <= e_new <= e_max:
                b_new = min(int((e_new - e_min) * inv_dE), last_bin)
                delta = lg[b] - lg[b_new]
                if delta >= 0.0 or u_acc < math.exp(delta):
                    b = b_new
                else:
                    theta[k] = old
            else:
                theta[k] = old
        if t % thin == 0:
            counts[b] += 1
    return np.array(counts)


@dataclass
class MergedDos:
    """Per-bin mean and standard error of ``log_g`` over independent runs.

    ``dos`` is the mean density on bins visited by every run; bins seen
    by only some runs are flagged in ``partial``.
    """

    dos: DensityOfStates
    stderr: np.ndarray
    partial: np.ndarray
    runs: list

    @property
    def log_g_mean(self) -> np.ndarray:
        return self.dos.log_g

    @property
    def log_g_stderr(self) -> np.ndarray:
        return self.stderr


def merge_runs(runs) -> MergedDos:
    """Average anchored ``log_g`` across runs on an identical grid.

    Every run is shifted so the lowest bin visited by all runs has
    ``log_g = 0``; the standard error is ``std(ddof=1) / sqrt(n_runs)``.
    """
    runs = list(runs)
    if len(runs) < 2:
        raise DomainError("merge_runs needs at least two runs")
    grid = runs[0].grid
    for r in runs[1:]:
        if r.grid != grid:
            raise GridMismatchError(f"grid {r.grid} differs from {grid}")
    visited_all = np.logical_and.reduce([r.visited for r in runs])
    visited_any = np.logical_or.reduce([r.visited for r in runs])
    if not visited_all.any():
        raise DomainError("no bin was visited by every run")
    ref = int(np.flatnonzero(visited_all)[0])
    anchored = [r.anchored(ref) for r in runs]
    stack = np.array([r.log_g for r in anchored])
    mean = np.where(visited_all, stack.mean(axis=0), np.nan)
    with np.errstate(invalid="ignore"):
        stderr = np.where(visited_all, stack.std(axis=0, ddof=1) / math.sqrt(len(runs)), np.nan)
    stats = {"n_runs": len(runs), "anchor_bin": ref,
             "n_reductions": [r.stats.get("n_reductions") for r in runs],
             "n_rejected_below": sum(r.stats.get("n_rejected_below", 0) for r in runs),
             "n_rejected_above": sum(r.stats.get("n_rejected_above", 0) for r in runs)}
    hist = np.sum([r.histogram for r in runs], axis=0)
    dos = DensityOfStates(grid, mean, visited_all, hist, stats)
    return MergedDos(dos, stderr, visited_any & ~visited_all, anchored)
