"""Validated experiment specs, sweep runners, and the named presets.

Presets reproduce the comparison tables at desk scale (CI-runnable sizes:
200 runs, 30x30 grid) with a --full-scale switch restoring the original
1000 runs and 50x50 grid.  Replicate r of every sweep point runs with
master seed ``spec.seed + r``: per-node streams are split from the master
seed by hashing, so replicates stay independent while sweep points share
random numbers run-for-run.  The common random numbers pair the points,
which sharpens cross-point comparisons (monotonicity in k or R) without
touching any single point's distribution.
"""

import itertools
import math
import os
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import analytic, report, stats
from .core import TrickleConfig
from .engine import run_simulation
from .exceptions import AcceptanceFailure, SpecError
from .serialize import fmt, write_csv
from .stats import SUMMARY_HEADER, summary_row
from .topology import grid as grid_topology
from .topology import single_cell

__all__ = [
    "ExperimentSpec",
    "validate_spec",
    "run_experiment",
    "run_preset",
    "PRESETS",
    "parse_grid_string",
    "THETA_UPPER_DESK",
    "THETA_UPPER_FULL",
]

MODES = ("simulate", "analytic", "compare")
TABLE_KINDS = ("density", "cdf")

# compare-mode thresholds
REL_GAP_MAX = 0.10
KS_MAX = 0.05
THETA_UPPER_DESK = 1.25   # edge effects on the small 30x30 grid need headroom past 1.2
THETA_UPPER_FULL = 1.2


@dataclass
class ExperimentSpec:
    """One experiment: sweep lists plus protocol and run parameters."""

    name: str = "adhoc"
    mode: str = "simulate"
    k: tuple = (1,)
    n: tuple | None = None
    side: int | None = None
    radius: tuple = ()
    eta: tuple = (0.0,)
    tau_l: float = 1.0
    tau_h: float = 1.0
    horizon: float = 100.0
    runs: int = 200
    seed: int = 0
    warmup: float = 1.0
    out: str | None = None
    grid: str | None = None
    table: str = "density"
    executor: str = "fast"


def _parse_sweep(value, key: str, *, integer: bool):
    """Accept a scalar, list, or 'a..b [step s]' range string."""

    def one(x):
        if isinstance(x, bool):
            raise SpecError(f"spec key '{key}': boolean is not a number")
        if integer:
            if isinstance(x, float) and x != int(x):
                raise SpecError(f"spec key '{key}': {x!r} is not an integer")
            return int(x)
        return float(x)

    if isinstance(value, (list, tuple)):
        return tuple(one(x) for x in value)
    if isinstance(value, str):
        s = value.strip()
        step = 1.0
        if " step " in s:
            s, step_s = s.split(" step ", 1)
            step = float(step_s)
        if ".." in s:
            lo_s, hi_s = s.split("..", 1)
            lo, hi = float(lo_s), float(hi_s)
            if step <= 0:
                raise SpecError(f"spec key '{key}': step must be positive")
            count = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return tuple(one(lo + i * step) for i in range(count))
        if "," in s:
            return tuple(one(float(p)) for p in s.split(","))
        return (one(float(s)),)
    return (one(value),)


def validate_spec(raw) -> ExperimentSpec:
    """Normalize a dict (parsed JSON) or ExperimentSpec and check every field."""
    if isinstance(raw, ExperimentSpec):
        raw = asdict(raw)
    if not isinstance(raw, dict):
        raise SpecError(f"expected a JSON object or ExperimentSpec, got {type(raw).__name__}")
    known = {f.name for f in fields(ExperimentSpec)}
    unknown = set(raw) - known
    if unknown:
        raise SpecError(f"unknown spec key(s): {', '.join(sorted(unknown))}")
    spec = ExperimentSpec(**raw)

    if spec.mode not in MODES:
        raise SpecError(f"spec key 'mode': {spec.mode!r} not in {MODES}")
    spec.k = _parse_sweep(spec.k, "k", integer=True)
    if not spec.k or any(k < 1 for k in spec.k):
        raise SpecError("spec key 'k': needs integers >= 1")
    spec.eta = _parse_sweep(spec.eta, "eta", integer=False)
    for e in spec.eta:
        if not 0.0 <= e < 1.0:
            raise SpecError(
                f"spec key 'eta': {e!r} outside [0, 1); eta = 1 makes the "
                "analytic forms singular and is rejected for experiments")
    if spec.n is not None:
        spec.n = _parse_sweep(spec.n, "n", integer=True)
        if any(n < 1 for n in spec.n):
            raise SpecError("spec key 'n': needs integers >= 1")
    if spec.side is not None:
        if isinstance(spec.side, float) and spec.side == int(spec.side):
            spec.side = int(spec.side)
        if not isinstance(spec.side, int) or spec.side < 1:
            raise SpecError(f"spec key 'side': needs an integer >= 1, got {spec.side!r}")
    if spec.radius is None or (isinstance(spec.radius, (list, tuple))
                               and len(spec.radius) == 0):
        spec.radius = ()
    else:
        spec.radius = _parse_sweep(spec.radius, "radius", integer=False)
    if any(r < 0 for r in spec.radius):
        raise SpecError("spec key 'radius': needs values >= 0")
    if spec.n is not None and spec.side is not None:
        raise SpecError("give either 'n' (single cell) or 'side' (grid), not both")
    if spec.mode != "analytic":
        if spec.side is not None and not spec.radius:
            raise SpecError("grid experiments need 'radius'")
        if spec.n is None and spec.side is None:
            raise SpecError("need 'n' (single cell) or 'side' (grid)")
    else:
        if spec.n is None:
            raise SpecError("analytic mode needs 'n'")
        if spec.table not in TABLE_KINDS:
            raise SpecError(f"spec key 'table': {spec.table!r} not in {TABLE_KINDS}")
    if not isinstance(spec.runs, int) or spec.runs < 1:
        raise SpecError(f"spec key 'runs': needs an integer >= 1, got {spec.runs!r}")
    if not isinstance(spec.seed, int):
        raise SpecError(f"spec key 'seed': needs an integer, got {spec.seed!r}")
    if spec.horizon <= 0:
        raise SpecError(f"spec key 'horizon': must be > 0, got {spec.horizon!r}")
    if spec.warmup < 0:
        raise SpecError(f"spec key 'warmup': must be >= 0, got {spec.warmup!r}")
    if spec.mode != "analytic" and spec.horizon <= spec.warmup:
        raise SpecError("spec key 'horizon': must exceed 'warmup' for simulations")
    if not 0.0 < spec.tau_l <= spec.tau_h:
        raise SpecError(
            f"spec keys 'tau_l'/'tau_h': need 0 < tau_l <= tau_h, got "
            f"{spec.tau_l!r}, {spec.tau_h!r}")
    if spec.executor not in ("fast", "reference"):
        raise SpecError(f"spec key 'executor': {spec.executor!r} unknown")
    return spec


def parse_grid_string(text: str) -> np.ndarray:
    """Parse 'start:stop:step' into an inclusive abscissa grid."""
    parts = text.split(":")
    if len(parts) != 3:
        raise SpecError(f"grid must be start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise SpecError(f"grid {text!r}: {exc}") from None
    if step <= 0 or stop <= start:
        raise SpecError(f"grid {text!r}: need stop > start and step > 0")
    return np.arange(start, stop + step / 2.0, step)


# ---------------------------------------------------------------- runners

def single_cell_point(k, n, eta, *, runs, horizon, seed, warmup,
                      collect_gaps=False, executor="fast"):
    """Replicate a single-cell configuration; returns per-run rates and
    optionally the pooled inter-transmission gaps."""
    config = TrickleConfig(k=k, tau_l=1.0, tau_h=1.0, eta=eta)
    topo = single_cell(n)
    rates = np.empty(runs)
    pools = [] if collect_gaps else None
    for r in range(runs):
        log = run_simulation(config, topo, horizon, seed + r, executor=executor)
        rates[r] = stats.mean_tx_per_interval(log, config.tau_h, warmup)
        if collect_gaps:
            pools.append(stats.inter_transmission_times(log, warmup))
    gaps = np.concatenate(pools) if collect_gaps else None
    return rates, gaps


def grid_point(k, topo, eta, *, runs, horizon, seed, warmup, executor="fast"):
    """Replicate one grid configuration; returns per-run rates and the
    total post-warmup broadcast count."""
    config = TrickleConfig(k=k, tau_l=1.0, tau_h=1.0, eta=eta)
    rates = np.empty(runs)
    total = 0
    for r in range(runs):
        log = run_simulation(config, topo, horizon, seed + r, executor=executor)
        rates[r] = stats.mean_tx_per_interval(log, config.tau_h, warmup)
        total += int(np.sum(log.broadcast_times() >= warmup))
    return rates, total


# ---------------------------------------------------------------- presets

def _out(out_dir, name):
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _reject_options(preset, options, *allowed):
    for key, val in options.items():
        if key not in allowed and val not in (None, False):
            raise SpecError(f"preset '{preset}' does not take --{key.replace('_', '-')}")


def _preset_rate_sweep(name, eta, out_dir, options) -> list:
    _reject_options(name, options, "seed", "runs", "max_n", "full_scale", "render")
    full = bool(options.get("full_scale"))
    runs = options.get("runs") or (1000 if full else 200)
    seed = options.get("seed") or 0
    max_n = options.get("max_n") or 100
    horizon, warmup = 100.0, 1.0
    ks = (1, 2, 3, 4)
    ns = tuple(range(10, max_n + 1, 10))
    rows = []
    for k in ks:
        for n in ns:
            rates, _ = single_cell_point(k, n, eta, runs=runs, horizon=horizon,
                                         seed=seed, warmup=warmup)
            sim_mean = float(np.mean(rates))
            ana = analytic.expected_transmissions(analytic.AnalyticParams(k, n, eta))
            rows.append({"k": k, "n": n, "sim_mean": sim_mean,
                         "analytic_mean": ana,
                         "rel_gap": (sim_mean - ana) / sim_mean})
    csv_path = _out(out_dir, f"{name}.csv")
    write_csv(csv_path, ["k", "n", "sim_mean", "analytic_mean", "rel_gap"],
              ([str(r["k"]), str(r["n"]), fmt(r["sim_mean"]),
                fmt(r["analytic_mean"]), fmt(r["rel_gap"])] for r in rows),
              sidecar={"preset": name, "eta": eta, "k": list(ks), "n": list(ns),
                       "runs": runs, "horizon": horizon, "warmup": warmup,
                       "seed": seed, "full_scale": full})
    paths = [csv_path]
    if options.get("render", True):
        paths.append(report.render_rate_sweep(rows, _out(out_dir, f"{name}.png"), eta))
    return paths


def _preset_distribution(name, k_default, eta_default, out_dir, options) -> list:
    _reject_options(name, options, "seed", "runs", "render", "k", "n", "eta")
    k = options.get("k") or k_default
    eta = eta_default if options.get("eta") is None else options["eta"]
    n = options.get("n") or 50
    runs = options.get("runs") or 200
    seed = options.get("seed") or 0
    horizon, warmup = 100.0, 1.0
    _, gaps = single_cell_point(k, n, eta, runs=runs, horizon=horizon,
                                seed=seed, warmup=warmup, collect_gaps=True)
    params = analytic.AnalyticParams(k, n, eta)
    dens = analytic.density_table(params)
    ks_val = stats.ks_distance(stats.empirical_cdf(gaps), analytic.cdf_table(params))

    hi = dens.abscissae[-1]
    counts, edges = np.histogram(gaps, bins=50, range=(0.0, hi), density=True)
    mids = 0.5 * (edges[:-1] + edges[1:])

    hist_path = _out(out_dir, f"{name}_hist.csv")
    write_csv(hist_path, ["t", "value"],
              ([fmt(t), fmt(v)] for t, v in zip(mids, counts)),
              sidecar={"preset": name, "content": "gap histogram (density scale)",
                       "k": k, "n": n, "eta": eta, "runs": runs, "seed": seed,
                       "horizon": horizon, "warmup": warmup,
                       "samples": int(len(gaps)), "bins": 50})
    dens_path = _out(out_dir, f"{name}_density.csv")
    dens.to_csv(dens_path)
    summary_path = _out(out_dir, f"{name}_summary.csv")
    sim_mean = float(np.mean(gaps)) if len(gaps) else float("nan")
    write_csv(summary_path, SUMMARY_HEADER,
              [summary_row(k, n, None, eta, sim_mean,
                           analytic.moment(1, params), ks=ks_val,
                           samples=len(gaps), seed_count=runs)],
              sidecar={"preset": name, "content": "mean gap and distribution KS",
                       "k": k, "n": n, "eta": eta, "runs": runs, "seed": seed})
    paths = [hist_path, dens_path, summary_path]
    if options.get("render", True):
        paths.append(report.render_distribution(
            mids, counts, dens, _out(out_dir, f"{name}.png"),
            f"inter-transmission times, k={k}, n={n}, eta={eta:g} (KS={ks_val:.4f})"))
    return paths


def _preset_grid_sweep(name, eta, out_dir, options) -> list:
    _reject_options(name, options, "seed", "runs", "full_scale", "render")
    full = bool(options.get("full_scale"))
    side = 50 if full else 30
    radii = (2.0, 4.0, 6.0, 8.0, 10.0) if full else (2.0, 4.0, 6.0, 8.0)
    ks = (1, 2, 3, 4, 5)
    runs = options.get("runs") or 10
    seed = options.get("seed") or 0
    horizon, warmup = 100.0, 1.0
    rows = []
    for radius in radii:
        topo = grid_topology(side, radius)
        for k in ks:
            rates, total = grid_point(k, topo, eta, runs=runs, horizon=horizon,
                                      seed=seed, warmup=warmup)
            sim_mean = float(np.mean(rates))
            est = analytic.multicell_estimate(k, side, radius, eta)
            rows.append({"k": k, "side": side, "radius": radius, "eta": eta,
                         "sim_mean": sim_mean, "estimate": est,
                         "ratio": sim_mean / est, "samples": total})
    csv_path = _out(out_dir, f"{name}.csv")
    write_csv(csv_path, SUMMARY_HEADER,
              (summary_row(r["k"], r["side"], r["radius"], r["eta"],
                           r["sim_mean"], r["estimate"], ks=None,
                           samples=r["samples"], seed_count=runs)
               for r in rows),
              sidecar={"preset": name, "eta": eta, "side": side,
                       "radius": list(radii), "k": list(ks), "runs": runs,
                       "horizon": horizon, "warmup": warmup, "seed": seed,
                       "full_scale": full})
    paths = [csv_path]
    if options.get("render", True):
        paths.append(report.render_grid_sweep(rows, _out(out_dir, f"{name}.png"), eta))
    return paths


def _preset_lemma1(name, out_dir, options) -> list:
    _reject_options(name, options, "seed", "runs", "render")
    seed = options.get("seed") or 0
    seed_count = options.get("runs") or 10
    horizon = 100.0
    n_list = (10, 50, 500)
    rows = []
    for eta in (0.0, 0.5):
        result = stats.poisson_convergence_check(
            n_list, horizon=horizon, seeds=range(seed, seed + seed_count), eta=eta)
        for n in n_list:
            for offset, ks_val in enumerate(result[n]):
                rows.append({"eta": eta, "n": n, "seed": seed + offset, "ks": ks_val})
    csv_path = _out(out_dir, f"{name}.csv")
    write_csv(csv_path, ["eta", "n", "seed", "ks"],
              ([fmt(r["eta"]), str(r["n"]), str(r["seed"]), fmt(r["ks"])]
               for r in rows),
              sidecar={"preset": name, "n": list(n_list), "eta": [0.0, 0.5],
                       "seeds": seed_count, "first_seed": seed, "horizon": horizon})
    paths = [csv_path]
    if options.get("render", True):
        paths.append(report.render_lemma1(rows, _out(out_dir, f"{name}.png")))
    return paths


PRESETS = {
    "fig3": lambda out_dir, opts: _preset_rate_sweep("fig3", 0.0, out_dir, opts),
    "fig6": lambda out_dir, opts: _preset_rate_sweep("fig6", 0.5, out_dir, opts),
    "fig4": lambda out_dir, opts: _preset_distribution("fig4", 1, 0.0, out_dir, opts),
    "fig5": lambda out_dir, opts: _preset_distribution("fig5", 3, 0.0, out_dir, opts),
    "fig7": lambda out_dir, opts: _preset_distribution("fig7", 1, 0.5, out_dir, opts),
    "fig8": lambda out_dir, opts: _preset_distribution("fig8", 3, 0.5, out_dir, opts),
    "fig9": lambda out_dir, opts: _preset_grid_sweep("fig9", 0.0, out_dir, opts),
    "fig10": lambda out_dir, opts: _preset_grid_sweep("fig10", 0.5, out_dir, opts),
    "lemma1": lambda out_dir, opts: _preset_lemma1("lemma1", out_dir, opts),
}


def run_preset(name: str, out_dir: str = ".", **options) -> list:
    """Run a named preset; returns the paths it wrote."""
    if name not in PRESETS:
        raise SpecError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name](out_dir, options)


# ------------------------------------------------------------ spec modes

def _points(spec: ExperimentSpec):
    if spec.side is not None:
        return [(k, None, r, e) for k, r, e in
                itertools.product(spec.k, spec.radius, spec.eta)]
    return [(k, n, None, e) for k, n, e in
            itertools.product(spec.k, spec.n, spec.eta)]


def _run_simulate(spec: ExperimentSpec, out_dir: str) -> list:
    points = _points(spec)
    out = spec.out or _out(out_dir, f"{spec.name}_simulate.csv")
    if len(points) == 1 and spec.runs == 1 and spec.side is None:
        k, n, _, eta = points[0]
        config = TrickleConfig(k=k, tau_l=spec.tau_l, tau_h=spec.tau_h, eta=eta)
        log = run_simulation(config, single_cell(n), spec.horizon, spec.seed,
                             executor=spec.executor)
        log.to_csv(out)
        return [out]
    rows = []
    for k, n, radius, eta in points:
        config = TrickleConfig(k=k, tau_l=spec.tau_l, tau_h=spec.tau_h, eta=eta)
        topo = single_cell(n) if n is not None else grid_topology(spec.side, radius)
        for r in range(spec.runs):
            log = run_simulation(config, topo, spec.horizon, spec.seed + r,
                                 executor=spec.executor)
            count = int(np.sum(log.broadcast_times() >= spec.warmup))
            rate = stats.mean_tx_per_interval(log, spec.tau_h, spec.warmup)
            rows.append([str(k), str(n if n is not None else spec.side),
                         "" if radius is None else fmt(radius), fmt(eta),
                         str(r), str(spec.seed + r), str(count), fmt(rate)])
    write_csv(out, ["k", "n_or_side", "R", "eta", "run", "seed", "broadcasts",
                    "mean_tx_per_interval"],
              rows, sidecar={"spec": asdict(spec)})
    return [out]


def _run_analytic(spec: ExperimentSpec, out_dir: str) -> list:
    if len(spec.k) != 1 or len(spec.n) != 1 or len(spec.eta) != 1:
        raise SpecError("analytic mode takes a single (k, n, eta) point")
    params = analytic.AnalyticParams(spec.k[0], spec.n[0], spec.eta[0])
    grid = parse_grid_string(spec.grid) if spec.grid else None
    if spec.table == "density":
        table = analytic.density_table(params, grid)
    else:
        table = analytic.cdf_table(params, grid)
    out = spec.out or _out(out_dir, f"{spec.name}_{spec.table}.csv")
    table.to_csv(out)
    return [out]


def _run_compare(spec: ExperimentSpec, out_dir: str, full_scale: bool) -> list:
    rows = []
    failures = []
    theta_upper = THETA_UPPER_FULL if full_scale else THETA_UPPER_DESK
    if spec.side is None:
        for k, n, _, eta in _points(spec):
            rates, gaps = single_cell_point(
                k, n, eta, runs=spec.runs, horizon=spec.horizon, seed=spec.seed,
                warmup=spec.warmup, collect_gaps=True, executor=spec.executor)
            sim_mean = float(np.mean(rates))
            params = analytic.AnalyticParams(k, n, eta)
            ana = analytic.expected_transmissions(params)
            ks_val = stats.ks_distance(stats.empirical_cdf(gaps),
                                       analytic.cdf_table(params))
            ok = abs(sim_mean - ana) / sim_mean <= REL_GAP_MAX and ks_val <= KS_MAX
            if not ok:
                failures.append(f"k={k} n={n} eta={eta:g}")
            rows.append(summary_row(k, n, None, eta, sim_mean, ana, ks=ks_val,
                                    samples=len(gaps), seed_count=spec.runs)
                        + [str(ok).lower()])
    else:
        for k, _, radius, eta in _points(spec):
            topo = grid_topology(spec.side, radius)
            rates, total = grid_point(k, topo, eta, runs=spec.runs,
                                      horizon=spec.horizon, seed=spec.seed,
                                      warmup=spec.warmup, executor=spec.executor)
            sim_mean = float(np.mean(rates))
            est = analytic.multicell_estimate(k, spec.side, radius, eta)
            theta = sim_mean / est
            ok = theta >= 1.0 and (eta > 0 or theta <= theta_upper)
            if not ok:
                failures.append(f"k={k} R={radius:g} eta={eta:g}")
            rows.append(summary_row(k, spec.side, radius, eta, sim_mean, est,
                                    ks=None, samples=total, seed_count=spec.runs)
                        + [str(ok).lower()])
    out = spec.out or _out(out_dir, f"{spec.name}_compare.csv")
    write_csv(out, SUMMARY_HEADER + ["ok"], rows,
              sidecar={"spec": asdict(spec), "full_scale": full_scale,
                       "thresholds": {"rel_gap": REL_GAP_MAX, "ks": KS_MAX,
                                      "theta_upper": theta_upper}})
    if failures:
        raise AcceptanceFailure(
            f"{len(failures)} comparison point(s) outside thresholds "
            f"({'; '.join(failures)}); table written to {out}")
    return [out]


def run_experiment(spec: ExperimentSpec, out_dir: str = ".",
                   full_scale: bool = False) -> list:
    """Execute a validated spec; returns written paths.

    Compare mode raises AcceptanceFailure (after writing its table) when
    any point misses the thresholds.
    """
    spec = validate_spec(spec)
    if spec.mode == "simulate":
        return _run_simulate(spec, out_dir)
    if spec.mode == "analytic":
        return _run_analytic(spec, out_dir)
    return _run_compare(spec, out_dir, full_scale)
