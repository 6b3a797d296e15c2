"""Model interface and the built-in models.

A model is a bounded parameter box plus two log-density callables.  The
quantity every sampler works with is the energy

    E(theta) = -(log_likelihood(theta) + log_prior(theta)),

so low energy means high unnormalized posterior probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConstructionError, DomainError, EvaluationError

__all__ = [
    "ParameterSpace",
    "ModelSpec",
    "energy",
    "make_gaussian_toy",
    "make_discrete_toy",
    "make_curvefit_model",
    "default_discrete_table",
]


@dataclass(frozen=True)
class ParameterSpace:
    """Axis-aligned box of continuous parameters.

    Parameters
    ----------
    lower, upper : sequence of float
        Bounds per dimension, ``lower[d] < upper[d]``.
    names : sequence of str, optional
        Unique identifiers, ``theta0, theta1, ...`` when omitted.
    """

    lower: tuple
    upper: tuple
    names: tuple = ()

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) == 0 or len(lower) != len(upper):
            raise ConstructionError("lower and upper must be non-empty and of equal length")
        for d, (lo, hi) in enumerate(zip(lower, upper)):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ConstructionError(f"dimension {d}: need finite lower < upper, got [{lo}, {hi}]")
        names = tuple(self.names) if self.names else tuple(f"theta{d}" for d in range(len(lower)))
        if len(names) != len(lower):
            raise ConstructionError("one name per dimension is required")
        if len(set(names)) != len(names):
            raise ConstructionError(f"parameter names must be unique, got {names}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "names", names)

    @property
    def dims(self) -> int:
        return len(self.lower)

    @property
    def widths(self) -> tuple:
        return tuple(hi - lo for lo, hi in zip(self.lower, self.upper))

    @property
    def volume(self) -> float:
        return math.prod(self.widths)

    def contains(self, theta) -> bool:
        if len(theta) != self.dims:
            return False
        return all(lo <= t <= hi for t, lo, hi in zip(theta, self.lower, self.upper))

    def sample_uniform(self, rng: np.random.Generator) -> list:
        u = rng.random(self.dims)
        return [lo + ui * (hi - lo) for ui, lo, hi in zip(u, self.lower, self.upper)]


@dataclass(frozen=True)
class ModelSpec:
    """Evaluator bundle for one inference problem.

    Parameters
    ----------
    space : ParameterSpace
        Prior support.
    log_prior, log_likelihood : callable
        ``f(theta) -> float``; ``theta`` is any float sequence inside
        ``space``.  Both must be pure.
    singular : bool
        When true, a log posterior of ``-inf`` is a declared boundary
        singularity and maps to ``E = +inf`` instead of raising.
    fast_energy : callable, optional
        Unchecked ``theta -> E`` used by the samplers' inner loops.  Must
        agree with the two log densities.
    info : dict
        Free-form description of how the model was built.
    """

    space: ParameterSpace
    log_prior: Callable
    log_likelihood: Callable
    singular: bool = False
    fast_energy: Optional[Callable] = None
    info: dict = field(default_factory=dict)

    def energy(self, theta) -> float:
        return energy(self, theta)

    def energy_function(self) -> Callable:
        """Unchecked energy callable for hot loops."""
        if self.fast_energy is not None:
            return self.fast_energy
        lp, ll = self.log_prior, self.log_likelihood
        return lambda theta: -(ll(theta) + lp(theta))


def energy(model: ModelSpec, theta) -> float:
    """Energy ``-(log L + log prior)`` at ``theta``.

    Raises
    ------
    DomainError
        ``theta`` is outside the parameter box.
    EvaluationError
        The result is NaN or ``-inf``, or ``+inf`` on a model with no
        declared singularities.
    """
    if not model.space.contains(theta):
        raise DomainError(f"theta={list(theta)} lies outside the parameter space")
    value = -(float(model.log_likelihood(theta)) + float(model.log_prior(theta)))
    if math.isfinite(value):
        return value
    if value == math.inf and model.singular:
        return value
    raise EvaluationError(f"non-finite energy {value} at theta={list(theta)}")


def make_gaussian_toy(d: int, width: float = 1.0, box_halfwidth: float = 8.0,
                      offset: float = 0.0) -> ModelSpec:
    """Isotropic Gaussian inside a uniform box ``[-h, h]^d``.

    ``E = offset + sum(theta**2) / (2 width**2)``.  When the box is wide
    the tempered energy moments are ``<E> = offset + d tau / 2`` and
    ``Var E = d tau**2 / 2``.
    """
    if int(d) != d or d < 1:
        raise ConstructionError(f"d must be a positive integer, got {d}")
    if not width > 0:
        raise ConstructionError(f"width must be positive, got {width}")
    if not box_halfwidth >= 8 * width:
        raise ConstructionError(
            f"box_halfwidth={box_halfwidth} must be at least 8*width={8 * width}")
    if not math.isfinite(offset):
        raise ConstructionError("offset must be finite")
    d = int(d)
    inv = 1.0 / (2.0 * width * width)
    space = ParameterSpace([-box_halfwidth] * d, [box_halfwidth] * d)

    def log_likelihood(theta):
        return -offset - inv * sum(t * t for t in theta)

    def log_prior(theta):
        return 0.0

    def fast(theta):
        s = 0.0
        for t in theta:
            s += t * t
        return offset + inv * s

    return ModelSpec(space, log_prior, log_likelihood, fast_energy=fast,
                     info={"kind": "gaussian", "d": d, "width": width,
                           "box_halfwidth": box_halfwidth, "offset": offset})


def default_discrete_table(levels_per_dim: int, d: int) -> np.ndarray:
    """Integer quadratic bowl ``floor(2 * sum_d (k_d - c)**2 / L)``, ``c = (L-1)/2``."""
    c = (levels_per_dim - 1) / 2.0
    grids = np.meshgrid(*([np.arange(levels_per_dim)] * d), indexing="ij")
    sq = sum((g - c) ** 2 for g in grids)
    return np.floor(2.0 * sq / levels_per_dim).astype(float)


def make_discrete_toy(levels_per_dim: int, d: int, table=None) -> ModelSpec:
    """Model whose energy is constant on the cells of a regular lattice.

    The box is ``[0, L]^d`` with ``L = levels_per_dim``; the point
    ``theta`` belongs to lattice state ``k_d = min(floor(theta_d), L-1)``
    and has energy ``table[k]``.  Every state occupies unit volume, so
    the exact density of states is the number of states per energy.

    Parameters
    ----------
    table : array_like, optional
        Either shape ``(L,)*d`` or flat of length ``L**d`` in row-major
        order.  Defaults to :func:`default_discrete_table`.
    """
    if int(levels_per_dim) != levels_per_dim or levels_per_dim < 1:
        raise ConstructionError("levels_per_dim must be a positive integer")
    if int(d) != d or d < 1:
        raise ConstructionError("d must be a positive integer")
    L, d = int(levels_per_dim), int(d)
    n_states = L ** d
    if n_states > 10 ** 6:
        raise ConstructionError(f"{n_states} lattice states exceed the enumeration limit of 1e6")
    if table is None:
        table = default_discrete_table(L, d)
    table = np.asarray(table, dtype=float)
    if table.size != n_states or (table.ndim > 1 and table.shape != (L,) * d):
        raise ConstructionError(
            f"table has shape {table.shape}; expected {n_states} entries or shape {(L,) * d}")
    flat = table.reshape(-1)
    if not np.all(np.isfinite(flat)):
        raise ConstructionError("every table entry must be finite")
    values = flat.tolist()
    strides = [L ** (d - 1 - i) for i in range(d)]
    last = L - 1

    def state_index(theta):
        idx = 0
        for t, s in zip(theta, strides):
            k = int(t)
            idx += (k if k < last else last) * s
        return idx

    def log_likelihood(theta):
        return -values[state_index(theta)]

    def log_prior(theta):
        return 0.0

    def fast(theta):
        return values[state_index(theta)]

    space = ParameterSpace([0.0] * d, [float(L)] * d)
    return ModelSpec(space, log_prior, log_likelihood, fast_energy=fast,
                     info={"kind": "discrete", "levels_per_dim": L, "d": d,
                           "table": flat.copy(), "state_index": state_index})


def make_curvefit_model(datasets: Sequence, predictor: Callable, n_shape_params: int,
                        sigma_bounds: tuple, shape_bounds: Sequence,
                        shape_names: Optional[Sequence[str]] = None) -> ModelSpec:
    """Gaussian curve-fit likelihood with noise proportional to ``|y|``.

    Parameters are ``n_shape_params`` shape values followed by one noise
    factor ``sigma_j`` per dataset (ordered by ``sigma_index``).  Point
    ``i`` of dataset ``j`` has scale ``sqrt(2) |y_ji| sigma_j``.  The
    prior is uniform on the shape box and Jeffreys (``1/sigma``) on each
    noise factor, truncated to ``sigma_bounds``.

    Parameters
    ----------
    datasets : sequence of DataSet
    predictor : callable
        ``predictor(shape_params, x) -> y`` with ``x`` a float array.
    shape_bounds : sequence of (float, float)
        Box for each shape parameter.
    """
    from .dataset import noise_scale

    datasets = sorted(datasets, key=lambda ds: ds.sigma_index)
    if not datasets:
        raise ConstructionError("at least one dataset is required")
    if int(n_shape_params) != n_shape_params or n_shape_params < 0:
        raise ConstructionError("n_shape_params must be a non-negative integer")
    n_shape = int(n_shape_params)
    if len(shape_bounds) != n_shape:
        raise ConstructionError(f"need {n_shape} shape bounds, got {len(shape_bounds)}")
    s_lo, s_hi = (float(v) for v in sigma_bounds)
    if not (0 < s_lo < s_hi):
        raise ConstructionError(f"sigma_bounds must satisfy 0 < lo < hi, got {sigma_bounds}")

    xs, ys, log_norm, inv_scale2 = [], [], [], []
    for ds in datasets:
        if len(ds.x) == 0:
            raise ConstructionError(f"dataset {ds.label!r} is empty")
        y = np.asarray(ds.y, dtype=float)
        for i, yi in enumerate(y):
            if yi == 0:
                raise ConstructionError(
                    f"dataset {ds.label!r} point {i} (x={ds.x[i]}) has y=0; "
                    "proportional noise scale would vanish")
        unit = np.array([noise_scale(yi, 1.0) for yi in y])
        xs.append(np.asarray(ds.x, dtype=float))
        ys.append(y)
        # per-point scale = unit * sigma_j
        log_norm.append(float(np.sum(np.log(unit * math.sqrt(2 * math.pi)))))
        inv_scale2.append(1.0 / (2.0 * unit * unit))
    counts = [len(y) for y in ys]

    if shape_names is None:
        shape_names = [f"p{k}" for k in range(n_shape)]
    names = list(shape_names) + [f"sigma_{ds.label}" for ds in datasets]
    lower = [b[0] for b in shape_bounds] + [s_lo] * len(datasets)
    upper = [b[1] for b in shape_bounds] + [s_hi] * len(datasets)
    space = ParameterSpace(lower, upper, names)

    def log_likelihood(theta):
        shape = list(theta[:n_shape])
        total = 0.0
        for j in range(len(ys)):
            sigma = theta[n_shape + j]
            r = ys[j] - predictor(shape, xs[j])
            total -= (log_norm[j] + counts[j] * math.log(sigma)
                      + float(np.dot(r * r, inv_scale2[j])) / (sigma * sigma))
        return total

    def log_prior(theta):
        return -sum(math.log(theta[n_shape + j]) for j in range(len(ys)))

    def fast(theta):
        return -(log_likelihood(theta) + log_prior(theta))

    return ModelSpec(space, log_prior, log_likelihood, fast_energy=fast,
                     info={"kind": "curvefit", "n_shape_params": n_shape,
                           "datasets": [ds.label for ds in datasets]})
