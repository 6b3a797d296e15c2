"""Fixed-temperature Metropolis sampler sharing the Wang-Landau trial moves."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConstructionError, EvaluationError
from .model import ModelSpec
from .wl import GLOBAL_MOVE_PROB, LOCAL_STEP_FRACTION

__all__ = ["ChainConfig", "ChainResult", "run_metropolis"]


@dataclass(frozen=True)
class ChainConfig:
    """Chain length and hygiene.

    ``burn_in`` and ``thinning`` default to 10% of ``n_steps`` and 10.
    """

    tau: float = 1.0
    n_steps: int = 10 ** 6
    burn_in: Optional[int] = None
    thinning: int = 10
    seed: int = 0

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ConstructionError(f"tau must be positive, got {self.tau}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ConstructionError("n_steps must be a positive integer")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", int(self.n_steps) // 10)
        if not (0 <= self.burn_in < self.n_steps):
            raise ConstructionError("need 0 <= burn_in < n_steps")
        if int(self.thinning) != self.thinning or self.thinning < 1:
            raise ConstructionError("thinning must be an integer >= 1")


@dataclass
class ChainResult:
    """Thinned post-burn-in states of one chain.

    ``acceptance_rate`` counts accepted trials among those that stayed
    inside the box; ``out_of_bounds`` is the fraction that left it.
    """

    samples: np.ndarray
    energies: np.ndarray
    acceptance_rate: float
    out_of_bounds: float
    n_steps: int
    names: tuple

    def __len__(self):
        return len(self.energies)


def run_metropolis(model: ModelSpec, cfg: ChainConfig,
                   rng: Optional[np.random.Generator] = None, theta0=None) -> ChainResult:
    """Sample ``exp(-E / tau)`` on the model's box.

    The trial move is the Wang-Landau one: coordinates are updated in
    turn, each trial a global redraw (10%) or a local shift of up to 5%
    of the range (90%).  Trials leaving the box are rejected.  The start
    is a uniform draw from the box unless ``theta0`` is given.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    space = model.space
    d = space.dims
    lower, upper, widths = list(space.lower), list(space.upper), list(space.widths)
    efn = model.energy_function()
    theta = [float(t) for t in theta0] if theta0 is not None else space.sample_uniform(rng)
    e = efn(theta)
    if not math.isfinite(e):
        raise EvaluationError(f"initial energy {e} is not finite at theta={theta}")
    beta = 1.0 / cfg.tau
    burn, thin = cfg.burn_in, cfg.thinning
    n_keep = len(range(burn, cfg.n_steps, thin))
    samples = np.empty((n_keep, d))
    energies = np.empty(n_keep)
    n_acc = n_in = 0
    row = 0
    next_keep = burn
    dim = 0
    exp = math.exp
    block = 1 << 15
    for start in range(0, cfg.n_steps, block):
        stop = min(start + block, cfg.n_steps)
        u = rng.random((stop - start) * 3).tolist()
        pos = 0
        for step in range(start, stop):
            u_kind, u_val, u_acc = u[pos], u[pos + 1], u[pos + 2]
            pos += 3
            k = dim
            dim = dim + 1 if dim + 1 < d else 0
            old = theta[k]
            if u_kind < GLOBAL_MOVE_PROB:
                new = lower[k] + u_val * widths[k]
            else:
                new = old + (2.0 * u_val - 1.0) * LOCAL_STEP_FRACTION * widths[k]
            if lower[k] <= new <= upper[k]:
                n_in += 1
                theta[k] = new
                e_new = efn(theta)
                de = e_new - e
                if de <= 0.0 or u_acc < exp(-de * beta):
                    e = e_new
                    n_acc += 1
                elif de != de:
                    raise EvaluationError(f"energy is NaN at theta={theta}")
                else:
                    theta[k] = old
            if step == next_keep:
                samples[row] = theta
                energies[row] = e
                row += 1
                next_keep += thin
    return ChainResult(samples, energies, n_acc / n_in if n_in else 0.0,
                       1.0 - n_in / cfg.n_steps, cfg.n_steps, space.names)
