import json
from pathlib import Path

import numpy as np
import pytest
from scipy import optimize

from wltemper import (BinReservoir, EnergyGrid, load_datasets, make_curvefit_model,
                      make_discrete_toy, make_gaussian_toy, merge_runs, run_wl)

DATA = Path(__file__).parent / "data"
SEEDS = (11, 12, 13, 14)


@pytest.fixture(scope="session")
def oracle_values():
    return json.loads((DATA / "oracle_values.json").read_text())


@pytest.fixture(scope="session")
def discrete16():
    model = make_discrete_toy(16, 2)
    return model, EnergyGrid.centered(0.0, 14.0)


@pytest.fixture(scope="session")
def discrete_runs(discrete16):
    """Four default-schedule runs on the 16x16 toy with parameter capture."""
    model, grid = discrete16
    out = [run_wl(model, grid, capacity=256, rng=np.random.default_rng(s),
                  check_interval=100_000) for s in SEEDS]
    runs = [d for d, _ in out]
    return {"runs": runs, "reservoirs": [r for _, r in out], "merged": merge_runs(runs),
            "pooled": BinReservoir.pooled([r for _, r in out])}


@pytest.fixture(scope="session")
def gauss4_runs():
    model = make_gaussian_toy(4, 1.0, 8.0, 0.0)
    grid = EnergyGrid(0.0, 15.0, 1000)
    runs = [run_wl(model, grid, capacity=None, rng=np.random.default_rng(s))[0] for s in SEEDS]
    return {"model": model, "runs": runs, "merged": merge_runs(runs)}


@pytest.fixture(scope="session")
def gauss2_runs():
    """Window spans every energy in the box so the evidence anchoring is exact."""
    model = make_gaussian_toy(2, 1.0, 8.0, 0.0)
    grid = EnergyGrid(0.0, 64.0, 640)
    runs = [run_wl(model, grid, capacity=None, rng=np.random.default_rng(s))[0] for s in SEEDS]
    return {"model": model, "runs": runs, "merged": merge_runs(runs)}


def linear_predictor(p, x):
    return p[0] * x


@pytest.fixture(scope="session")
def curvefit():
    """y = a x with 5% proportional noise, 20 points; one shape plus one noise parameter."""
    datasets = load_datasets(DATA / "linear_a2.csv")
    model = make_curvefit_model(datasets, linear_predictor, 1, (0.005, 0.2), [(1.5, 2.5)], ["a"])
    efn = model.energy_function()
    res = optimize.minimize(efn, [2.0, 0.03], method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-12, "maxiter": 20000})
    e_min = float(res.fun)
    return {"model": model, "datasets": datasets, "mode": res.x, "e_min": e_min,
            "grid": EnergyGrid(e_min, e_min + 30.0, 60)}


@pytest.fixture(scope="session")
def curvefit_runs(curvefit):
    model, grid = curvefit["model"], curvefit["grid"]
    out = [run_wl(model, grid, capacity=256, rng=np.random.default_rng(s)) for s in SEEDS]
    runs = [d for d, _ in out]
    return {"runs": runs, "merged": merge_runs(runs),
            "pooled": BinReservoir.pooled([r for _, r in out])}
