"""Command-line front end: ``run``, ``analyze``, ``sample`` and ``compare``.

Exit codes: 0 success, 1 configuration error, 2 runtime error,
3 validation failure (``compare`` overlap below the floor).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import shutil
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import RunConfig, build_model, load_config
from .errors import ConfigError, WlTemperError
from .export import (read_dos_csv, read_reservoir_csv, read_sweep_csv, sha256,
                     write_corner_tables, write_dos_csv, write_json, write_reservoir_csv,
                     write_samples_csv, write_sweep_csv)
from .metropolis import ChainConfig, run_metropolis
from .posterior import (draw_posterior, marginal_hist, overlap_stat, pairwise_hist,
                        samples_to_drawset)
from .thermo import NO_INTERIOR_MAXIMUM, critical_diagnostics, tau_sweep
from .wl import BinReservoir, EnergyGrid, WlSchedule, estimate_range, merge_runs, run_wl

__all__ = ["main", "cmd_run", "cmd_analyze", "cmd_sample", "cmd_compare", "ValidationFailure"]

log = logging.getLogger("wltemper")

CONFIG_COPY = "config.toml"
MANIFEST = "manifest.json"


class ValidationFailure(WlTemperError):
    """A comparison fell below its acceptance floor."""


class StageError(WlTemperError):
    def __init__(self, stage, seed, exc):
        where = f"stage {stage}" + (f", seed {seed}" if seed is not None else "")
        super().__init__(f"{where}: {type(exc).__name__}: {exc}")
        self.cause = exc


def _seed_dir(run_dir: Path, seed: int) -> Path:
    return run_dir / f"seed_{seed}"


def _energy_grid(cfg: RunConfig, model) -> EnergyGrid:
    g = cfg.grid
    e_min, e_max = g["e_min"], g["e_max"]
    if e_min == "auto" or e_max == "auto":
        rng = np.random.default_rng(cfg.seeds)
        lo, hi = estimate_range(model, rng, g["n_probe"], g["margin"])
        e_min = lo if e_min == "auto" else e_min
        e_max = hi if e_max == "auto" else e_max
    return EnergyGrid(e_min, e_max, g["n_bins"])


def _wl_worker(cfg: RunConfig, grid: EnergyGrid, seed: int, seed_dir: str) -> dict:
    """One Wang-Landau run; writes its artifacts and returns its stats."""
    try:
        model = build_model(cfg)
        s = cfg.schedule
        schedule = WlSchedule(s["ln_f0"], s["ln_f_min"], s["flatness"])
        t0 = time.perf_counter()
        dos, res = run_wl(model, grid, schedule, cfg.run["capacity"], np.random.default_rng(seed),
                          check_interval=s["check_interval"], max_stage_steps=s["max_stage_steps"])
        wall = time.perf_counter() - t0
    except Exception as exc:
        raise StageError("wl", seed, exc) from exc
    out = Path(seed_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_dos_csv(out / "dos.csv", dos)
    write_reservoir_csv(out / "reservoir.csv", res)
    stats = dict(dos.stats, seed=seed, wall_time_s=wall)
    write_json(out / "run.json", stats)
    return stats


def _manifest_update(run_dir: Path, files, extra=None):
    """Add files (with checksums) and fields to the run manifest."""
    path = run_dir / MANIFEST
    manifest = json.loads(path.read_text()) if path.exists() else {"files": {}}
    for f in files:
        f = Path(f)
        manifest["files"][str(f.relative_to(run_dir))] = {"sha256": sha256(f)}
    if extra:
        manifest.update(extra)
    write_json(path, manifest)


def _inputs(cfg: RunConfig) -> dict:
    if cfg.model["kind"] != "curvefit":
        return {}
    data = cfg.resolve(cfg.model["data"])
    return {"data": {"path": str(data), "sha256": sha256(data)}}


def cmd_run(config_path, out=None, seeds=None) -> Path:
    """Run one Wang-Landau walker per seed, merge, and write the run directory."""
    cfg = load_config(config_path)
    if seeds:
        cfg.run["seeds"] = list(seeds)
    run_dir = Path(out) if out is not None else cfg.output
    t0 = time.perf_counter()
    model = build_model(cfg)
    try:
        grid = _energy_grid(cfg, model)
    except Exception as exc:
        raise StageError("window", None, exc) from exc
    log.info("grid [%r, %r] with %d bins; seeds %s", grid.e_min, grid.e_max, grid.n_bins, cfg.seeds)

    run_dir.mkdir(parents=True, exist_ok=True)
    workers = min(len(cfg.seeds), os.cpu_count() or 1)
    jobs = [(cfg, grid, s, str(_seed_dir(run_dir, s))) for s in cfg.seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            stats = list(pool.map(_wl_worker, *zip(*jobs)))
    else:
        stats = [_wl_worker(*job) for job in jobs]

    runs, reservoirs = [], []
    for s in cfg.seeds:
        d = _seed_dir(run_dir, s)
        dos, _ = read_dos_csv(d / "dos.csv")
        runs.append(dos)
        reservoirs.append(read_reservoir_csv(d / "reservoir.csv", grid.n_bins))
    if len(runs) >= 2:
        merged = merge_runs(runs)
        write_dos_csv(run_dir / "dos.csv", merged.dos, merged.stderr)
    else:
        write_dos_csv(run_dir / "dos.csv", runs[0].anchored())
    pooled = BinReservoir.pooled(reservoirs)
    write_reservoir_csv(run_dir / "reservoirs.csv", pooled)
    if cfg.source is not None:
        shutil.copyfile(cfg.source, run_dir / CONFIG_COPY)

    files = [run_dir / "dos.csv", run_dir / "reservoirs.csv"]
    for s in cfg.seeds:
        d = _seed_dir(run_dir, s)
        files += [d / "dos.csv", d / "reservoir.csv", d / "run.json"]
    if (run_dir / CONFIG_COPY).exists():
        files.append(run_dir / CONFIG_COPY)
    _manifest_update(run_dir, files, {
        "config": cfg.as_dict(),
        "grid": {"e_min": grid.e_min, "e_max": grid.e_max, "n_bins": grid.n_bins},
        "seeds": cfg.seeds,
        "config_dir": str(cfg.base_dir),
        "inputs": _inputs(cfg),
        "versions": {"wltemper": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "wall_time_s": time.perf_counter() - t0,
        "runs": [{k: st[k] for k in ("seed", "n_steps", "acceptance_rate", "n_reductions",
                                     "n_rejected_box", "n_rejected_below", "n_rejected_above",
                                     "wall_time_s")} for st in stats],
    })
    log.info("run directory %s written", run_dir)
    return run_dir


def _load_run(run_dir: Path):
    run_dir = Path(run_dir)
    if not (run_dir / "dos.csv").is_file():
        raise ConfigError(f"{run_dir} has no dos.csv; run `wltemper run` first")
    cfg = None
    if (run_dir / CONFIG_COPY).is_file():
        # relative paths in the copy still refer to the original config's directory
        base = None
        if (run_dir / MANIFEST).is_file():
            base = json.loads((run_dir / MANIFEST).read_text()).get("config_dir")
        cfg = load_config(run_dir / CONFIG_COPY, base_dir=base)
    dos, stderr = read_dos_csv(run_dir / "dos.csv")
    runs = [read_dos_csv(p / "dos.csv")[0] for p in sorted(run_dir.glob("seed_*"))
            if (p / "dos.csv").is_file()]
    return cfg, dos, stderr, runs


def cmd_analyze(run_dir, tau_min=None, tau_max=None, n_tau=None):
    """Write ``sweep.csv`` and ``analysis.json``; returns the ThermoCurve."""
    run_dir = Path(run_dir)
    cfg, dos, _, runs = _load_run(run_dir)
    t = dict(cfg.thermo) if cfg is not None else {"tau_min": 0.01, "tau_max": 10.0, "n_tau": 400}
    t["tau_min"] = t["tau_min"] if tau_min is None else tau_min
    t["tau_max"] = t["tau_max"] if tau_max is None else tau_max
    t["n_tau"] = t["n_tau"] if n_tau is None else n_tau
    if not 0 < t["tau_min"] < t["tau_max"] or t["n_tau"] < 3:
        raise ConfigError("need 0 < tau_min < tau_max and at least 3 temperatures")
    taus = np.geomspace(t["tau_min"], t["tau_max"], int(t["n_tau"]))
    curve = tau_sweep(dos, taus, runs=runs if len(runs) >= 2 else None)
    write_sweep_csv(run_dir / "sweep.csv", curve)
    diag = critical_diagnostics(curve)
    diag["tau_grid"] = t
    write_json(run_dir / "analysis.json", diag)
    _manifest_update(run_dir, [run_dir / "sweep.csv", run_dir / "analysis.json"])
    print(f"tau_star = {NO_INTERIOR_MAXIMUM if curve.tau_star is None else repr(curve.tau_star)}")
    print(f"heat capacity peak at tau = {diag['tau_heat_cap_peak']!r}")
    return curve


def _resolve_tau(run_dir: Path, tau):
    if isinstance(tau, str) and tau.lower() in ("star", "tau_star", "critical"):
        sweep = run_dir / "sweep.csv"
        if not sweep.is_file():
            raise ConfigError("tau=star needs sweep.csv; run `wltemper analyze` first")
        _, star = read_sweep_csv(sweep)
        if star is None:
            raise ConfigError(f"sweep has {NO_INTERIOR_MAXIMUM}; pass an explicit --tau")
        return star
    try:
        tau = float(tau)
    except ValueError:
        raise ConfigError(f"--tau must be a number or 'star', got {tau!r}") from None
    if not tau > 0:
        raise ConfigError("--tau must be positive")
    return tau


def _corner(draws, n_bins):
    d = draws.draws.shape[1]
    marg = {k: marginal_hist(draws, k, n_bins) for k in range(d)}
    pairs = {(i, j): pairwise_hist(draws, i, j, n_bins) for i in range(d) for j in range(i + 1, d)}
    return marg, pairs


def cmd_sample(run_dir, tau=None, n=None, threshold=None, seed=0, hist_bins=None) -> Path:
    """Posterior draws and corner tables at one temperature."""
    run_dir = Path(run_dir)
    cfg, dos, _, _ = _load_run(run_dir)
    p = dict(cfg.posterior) if cfg is not None else {"tau": 1.0, "n": 3000, "threshold": 0.01,
                                                     "hist_bins": 50}
    tau = _resolve_tau(run_dir, p["tau"] if tau is None else tau)
    n = p["n"] if n is None else n
    threshold = p["threshold"] if threshold is None else threshold
    hist_bins = p["hist_bins"] if hist_bins is None else hist_bins
    space = build_model(cfg).space if cfg is not None else None
    res = read_reservoir_csv(run_dir / "reservoirs.csv", dos.grid.n_bins)
    draws = draw_posterior(dos, res, tau, n, threshold, np.random.default_rng(seed), space=space)
    out = run_dir / "samples" / f"tau_{tau!r}"
    out.mkdir(parents=True, exist_ok=True)
    write_samples_csv(out / "draws.csv", draws.names, draws.draws, draws.energies, draws.source_bins)
    marg, pairs = _corner(draws, hist_bins)
    tables = write_corner_tables(out, draws, marg, pairs)
    write_json(out / MANIFEST, {"tau": tau, "threshold": threshold, "n": n, "seed": seed,
                                "retained_mass": draws.retained_mass,
                                "source_bins": sorted(set(int(b) for b in draws.source_bins)),
                                "tables": [{"file": "draws.csv", "kind": "draws"}] + tables})
    _manifest_update(run_dir, [out / "draws.csv", out / MANIFEST] + [out / e["file"] for e in tables])
    print(f"{n} draws at tau={tau!r} (retained mass {draws.retained_mass:.4f}) -> {out}")
    return out


def cmd_compare(run_dir, n_steps=None, seed=None, floor=None, threshold=None, n_draws=None) -> dict:
    """Metropolis at tau=1 versus the reweighted tau=1 posterior, per-parameter overlap."""
    run_dir = Path(run_dir)
    cfg, dos, _, _ = _load_run(run_dir)
    if cfg is None:
        raise ConfigError(f"{run_dir} has no {CONFIG_COPY}; cannot rebuild the model")
    m = cfg.metropolis
    n_steps = m["n_steps"] if n_steps is None else n_steps
    seed = m["seed"] if seed is None else seed
    floor = m["floor"] if floor is None else floor
    threshold = cfg.posterior["threshold"] if threshold is None else threshold
    n_draws = m["n_draws"] if n_draws is None else n_draws
    hist_bins = cfg.posterior["hist_bins"]
    model = build_model(cfg)
    try:
        chain = run_metropolis(model, ChainConfig(1.0, n_steps, m["burn_in"], m["thinning"], seed),
                               np.random.default_rng(seed))
    except Exception as exc:
        raise StageError("metropolis", seed, exc) from exc
    res = read_reservoir_csv(run_dir / "reservoirs.csv", dos.grid.n_bins)
    draws = draw_posterior(dos, res, 1.0, n_draws, threshold, np.random.default_rng(seed + 1),
                           space=model.space)
    mdraws = samples_to_drawset(chain.samples, model.space, 1.0, chain.energies)
    overlaps = {}
    for k, name in enumerate(model.space.names):
        overlaps[name] = overlap_stat(marginal_hist(draws, k, hist_bins),
                                      marginal_hist(mdraws, k, hist_bins))
    passed = all(v >= floor for v in overlaps.values())
    report = {"overlaps": overlaps, "floor": floor, "passed": passed,
              "chain_length": n_steps, "chain_samples": len(chain),
              "acceptance_rate": chain.acceptance_rate, "out_of_bounds": chain.out_of_bounds,
              "reweighted_draws": n_draws, "threshold": threshold,
              "retained_mass": draws.retained_mass, "seed": seed}
    out = run_dir / "compare"
    out.mkdir(exist_ok=True)
    write_json(out / "report.json", report)
    write_samples_csv(out / "metropolis.csv", model.space.names, chain.samples, chain.energies)
    lines = [f"{name}: overlap {v:.4f} {'ok' if v >= floor else 'BELOW FLOOR'}"
             for name, v in overlaps.items()]
    lines.append(f"acceptance rate {chain.acceptance_rate:.4f}, chain length {n_steps}")
    lines.append("PASS" if passed else f"FAIL: overlap below floor {floor}")
    (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _manifest_update(run_dir, [out / "report.json", out / "report.txt", out / "metropolis.csv"])
    print("\n".join(lines))
    return report


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wltemper", description="Wang-Landau tempered-posterior inference")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="Wang-Landau runs, one per seed, then merge")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--out", type=Path)
    r.add_argument("--seed", type=int, action="append", help="repeatable; overrides run.seeds")

    for name, help_ in (("analyze", "temperature sweep and critical tau"),
                        ("sample", "posterior draws and corner tables"),
                        ("compare", "Metropolis cross-check at tau=1")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("run_dir", nargs="?", type=Path)
        s.add_argument("--out", type=Path, help="run directory (alternative to the positional)")
        s.add_argument("--config", type=Path, help="ignored if the run directory has its own copy")
        s.add_argument("--seed", type=int, action="append")
        if name == "analyze":
            s.add_argument("--tau-min", type=float)
            s.add_argument("--tau-max", type=float)
            s.add_argument("--n-tau", type=int)
        if name == "sample":
            s.add_argument("--tau", default=None, help="temperature or 'star'")
            s.add_argument("--n", type=int)
            s.add_argument("--threshold", type=float)
        if name == "compare":
            s.add_argument("--n", type=int, help="Metropolis chain steps")
            s.add_argument("--threshold", type=float)
            s.add_argument("--floor", type=float)
    return p


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:  # usage errors exit 1, --help exits 0
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.command == "run":
            cmd_run(args.config, args.out, args.seed)
            return 0
        run_dir = args.run_dir or args.out
        if run_dir is None:
            raise ConfigError("give the run directory as an argument or with --out")
        seed = args.seed[0] if args.seed else None
        if args.command == "analyze":
            cmd_analyze(run_dir, args.tau_min, args.tau_max, args.n_tau)
        elif args.command == "sample":
            cmd_sample(run_dir, args.tau, args.n, args.threshold, 0 if seed is None else seed)
        else:
            report = cmd_compare(run_dir, args.n, seed, args.floor, args.threshold)
            if not report["passed"]:
                return 3
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ValidationFailure as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
