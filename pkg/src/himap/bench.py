"""Desk-scale experiment drivers used by the ``bench`` and ``regress`` commands.

Each driver takes a plain config dict, fills in defaults, and returns a
report dict together with the arrays worth saving. Timings are monotonic
wall clock around the computation only.
"""

from contextlib import contextmanager
import platform
import time
import warnings

import numpy as np
import scipy

from . import __version__
from .barycenter import barycenter_map
from .datagen import gen_nested_ellipses, gen_regression, gen_ring_clusters
from .errors import ConfigError, ConvergenceWarning
from .frechet import (
    RegressionDataset,
    covariate_average,
    regression_weights,
    select_bandwidth,
    sinkhorn_costs,
)
from .ot_oracle import w2_exact_assignment
from .quantile_map import QuantileMap, himap_distance

__all__ = ["BENCHMARKS", "Phases", "run_benchmark", "run_regression", "versions"]


def versions():
    return {
        "himap": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


class Phases:
    """Accumulates named wall-clock phases."""

    def __init__(self):
        self.seconds = {}

    @contextmanager
    def __call__(self, name):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.seconds[name] = self.seconds.get(name, 0.0) + time.perf_counter() - start


def _merge(defaults, config):
    unknown = set(config) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return {**defaults, **config}


def _fit_all(clouds, depth):
    return [QuantileMap.fit(c, depth) for c in clouds]


def bench_ellipses(config):
    cfg = _merge({"count": 30, "n": 1000, "seed": 0, "grid": 1000, "depth": None, "ot_cost": True}, config)
    phases = Phases()
    with phases("generate"):
        clouds = gen_nested_ellipses(cfg["count"], cfg["n"], cfg["seed"])
    with phases("barycenter"):
        maps = _fit_all(clouds, cfg["depth"])
        weights = np.full(len(maps), 1.0 / len(maps))
        bary = barycenter_map(maps, weights, cfg["grid"]).to_cloud()
    report = {"barycenter_s": phases.seconds["barycenter"], "weights": weights.tolist()}
    if cfg["ot_cost"]:
        if cfg["grid"] != cfg["n"]:
            raise ConfigError("the OT cost proxy needs grid == n for an exact assignment")
        with phases("ot_cost"):
            costs = [w2_exact_assignment(bary, c) ** 2 for c in clouds]
        report["avg_ot_cost"] = float(np.mean(costs))
    return cfg, phases, report, {"barycenter": bary}


def bench_interp(config):
    defaults = {
        "seed": 0,
        "grid": 1100,
        "depth": None,
        "weights": [[1.0, 0.0], [0.75, 0.25], [0.5, 0.5], [0.25, 0.75], [0.0, 1.0]],
    }
    cfg = _merge(defaults, config)
    phases = Phases()
    with phases("generate"):
        left = gen_ring_clusters("left", cfg["seed"])
        right = gen_ring_clusters("right", cfg["seed"])
    with phases("fit"):
        maps = _fit_all([left, right], cfg["depth"])
    rows, arrays = [], {}
    for k, w in enumerate(cfg["weights"]):
        start = time.perf_counter()
        grid = barycenter_map(maps, w, cfg["grid"])
        elapsed = time.perf_counter() - start
        phases.seconds["barycenter"] = phases.seconds.get("barycenter", 0.0) + elapsed
        arrays[f"interp_{k}"] = grid.to_cloud()
        rows.append({
            "weights": list(map(float, w)),
            "barycenter_s": elapsed,
            "himap_to_left": himap_distance(grid, maps[0].sample_grid(cfg["grid"])),
            "himap_to_right": himap_distance(grid, maps[1].sample_grid(cfg["grid"])),
        })
    return cfg, phases, {"sweep": rows}, arrays


def run_regression(sim, scheme, *, bandwidth=None, grid=256, epsilon=None, reduce="mean",
                   depth=None, x_eval=None, phases=None):
    """Fit, predict at the evaluation covariates, and score against the truth.

    ``reduce`` selects how the predicted map becomes a ``grid``-point cloud
    for the Sinkhorn comparison: interval means (``mean``) or midpoint
    values (``midpoint``). Grid means for the location check always use the
    full resolution ``2**L``.
    """
    if reduce not in ("mean", "midpoint"):
        raise ConfigError(f"reduce must be 'mean' or 'midpoint', got {reduce!r}")
    phases = phases or Phases()
    xs = np.asarray(sim.x_eval if x_eval is None else x_eval, dtype=np.float64)
    with phases("fit"):
        data = RegressionDataset.from_clouds(sim.X, sim.clouds, depth)
    chosen = bandwidth
    if scheme == "local" and (bandwidth is None or bandwidth == "auto"):
        with phases("bandwidth"):
            chosen, _ = select_bandwidth(data, resolution=grid)
    with phases("predict"):
        full = data.grids()
        coarse = data.grids(grid, reduce == "mean")
        W = [regression_weights(scheme, data.X, x, chosen) for x in xs]
        means = [barycenter_map(full, w).values.mean(axis=0) for w in W]
        predicted = [barycenter_map(coarse, w, grid) for w in W]
    out = {"bandwidth": chosen, "predicted": predicted}
    if hasattr(sim, "truth"):
        with phases("truth"):
            truth = [sim.truth(x, grid) for x in xs]
        with phases("mise"), warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ConvergenceWarning)
            costs, worst = sinkhorn_costs(predicted, truth, epsilon)
        out.update(costs=costs, mise=covariate_average(costs, xs), worst_violation=worst,
                   sinkhorn_capped=bool(caught))
        out["mean_abs_dev"] = float(np.mean([
            np.abs(mu - sim.true_mean(x)).mean() for mu, x in zip(means, xs)
        ]))
    out["per_x"] = [
        {"x": float(x), "weight_sum": float(w.total), "mean": mu.tolist(),
         "min_weight": float(w.lambdas.min()), **({"cost": float(out["costs"][i])} if "costs" in out else {})}
        for i, (x, w, mu) in enumerate(zip(xs, W, means))
    ]
    return out


def _regression_row(setting, m, n, seed, scheme, cfg):
    phases = Phases()
    with phases("generate"):
        sim = gen_regression(setting, m, n, seed)
    res = run_regression(sim, scheme, bandwidth=cfg.get("bandwidth"), grid=cfg["grid"],
                         epsilon=cfg["epsilon"], reduce=cfg["reduce"], phases=phases)
    compute = sum(v for k, v in phases.seconds.items() if k in ("fit", "bandwidth", "predict"))
    return {
        "setting": setting, "m": sim.X.size, "n": n, "seed": seed, "scheme": scheme,
        "bandwidth": res["bandwidth"], "mise": res["mise"], "mean_abs_dev": res["mean_abs_dev"],
        "worst_violation": res["worst_violation"], "regression_s": compute,
        "timings_s": phases.seconds,
    }, res


def _summary(values):
    v = np.asarray(values, dtype=float)
    return {"mean": float(v.mean()), "sd": float(v.std(ddof=1)) if v.size > 1 else 0.0}


def bench_regress_global(config):
    defaults = {"setting": "bivariate", "m": 101, "n": 10_000, "seed": 0, "replicates": 1,
                "grid": 256, "epsilon": None, "reduce": "mean"}
    cfg = _merge(defaults, config)
    phases = Phases()
    rows, arrays = [], {}
    for r in range(cfg["replicates"]):
        with phases("replicate"):
            row, res = _regression_row(cfg["setting"], cfg["m"], cfg["n"], cfg["seed"] + r, "global", cfg)
        rows.append(row)
        if r == 0:
            arrays.update({f"pred_{i:03d}": g for i, g in enumerate(res["predicted"])})
    report = {
        "replicates": rows,
        "mise": _summary([r["mise"] for r in rows]),
        "regression_s": _summary([r["regression_s"] for r in rows]),
    }
    return cfg, phases, report, arrays


def bench_regress_scale(config):
    defaults = {"settings": ["p2-global", "p2-local", "p5-global", "p5-local"], "ms": [50, 100, 200],
                "n": 10_000, "seed": 0, "replicates": 1, "grid": 256, "epsilon": None,
                "reduce": "mean", "bandwidth": "auto"}
    cfg = _merge(defaults, config)
    phases = Phases()
    table = []
    for setting in cfg["settings"]:
        scheme = "local" if setting.endswith("local") else "global"
        for m in cfg["ms"]:
            rows = []
            for r in range(cfg["replicates"]):
                with phases(f"{setting}/m={m}"):
                    row, _ = _regression_row(setting, m, cfg["n"], cfg["seed"] + r, scheme, cfg)
                rows.append(row)
            table.append({
                "setting": setting, "scheme": scheme, "m": m,
                "mise": _summary([r["mise"] for r in rows]),
                "regression_s": _summary([r["regression_s"] for r in rows]),
                "replicates": rows,
            })
    return cfg, phases, {"table": table}, {}


BENCHMARKS = {
    "ellipses": bench_ellipses,
    "interp": bench_interp,
    "regress-global": bench_regress_global,
    "regress-scale": bench_regress_scale,
}


def run_benchmark(name, config):
    """Run a named benchmark; returns ``(report, arrays)``."""
    if name not in BENCHMARKS:
        raise ConfigError(f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}")
    cfg, phases, body, arrays = BENCHMARKS[name](dict(config))
    report = {
        "benchmark": name,
        "config": cfg,
        "seed": cfg.get("seed"),
        "versions": versions(),
        "timings_s": phases.seconds,
        **body,
    }
    return report, arrays
