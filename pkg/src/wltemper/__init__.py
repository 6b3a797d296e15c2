"""Tempered Bayesian posteriors from a single Wang-Landau density of states.

The energy ``E(theta) = -ln[L(D|theta) pi(theta)]`` is binned and its
density of states ``g(E)`` estimated by flat-histogram sampling.  Any
tempered posterior ``[L pi]^(1/tau)`` then follows by reweighting
``g(E) exp(-E/tau)``, without resampling.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, ConstructionError, DataFormatError, DegenerateWindowError,
                     DomainError, EmptySelectionError, EvaluationError, GridMismatchError,
                     StallError, WlTemperError)
from .model import (ModelSpec, ParameterSpace, energy, make_curvefit_model, make_discrete_toy,
                    make_gaussian_toy)
from .dataset import DataSet, load_datasets, noise_scale, save_datasets
from .wl import (BinReservoir, DensityOfStates, EnergyGrid, MergedDos, WlSchedule,
                 estimate_range, flatness_reached, frozen_walk, merge_runs, propose, run_wl,
                 wl_accept)
from .thermo import (NO_INTERIOR_MAXIMUM, Evidence, TemperedDistribution, ThermoCurve,
                     critical_diagnostics, critical_tau, evidence, fisher, moment, p_tau,
                     tau_sweep)
from .metropolis import ChainConfig, ChainResult, run_metropolis
from .posterior import (PosteriorDrawSet, draw_posterior, marginal_hist, overlap_stat,
                        pairwise_hist, samples_to_drawset, select_bins)
