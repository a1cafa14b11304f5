"""Command-line front end: ``himap <command> ...``.

Errors are reported as one JSON object on stderr. Exit codes: 0 success,
2 usage or configuration, 3 bad input data, 4 numerical failure.
"""

import argparse
import json
from pathlib import Path
import sys
import time

import numpy as np

from .barycenter import barycenter_map
from .bench import BENCHMARKS, Phases, run_benchmark, run_regression, versions
from .datagen import REGRESSION_SETTINGS, gen_nested_ellipses, gen_regression, gen_ring_clusters
from .errors import (
    BandwidthError,
    ConfigError,
    DataError,
    DomainError,
    ResourceError,
    SingularCovarianceError,
    WeightError,
)
from .io import (
    read_cloud,
    read_json,
    read_manifest,
    read_tree,
    write_cloud,
    write_grid,
    write_json,
    write_manifest,
    write_tree,
)
from .mass_tree import build_tree
from .ot_oracle import sinkhorn, w2_exact_1d, w2_exact_assignment
from .quantile_map import QuantileMap, himap_distance

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit(obj, out=None):
    if out:
        write_json(out, obj)
    print(json.dumps(obj, indent=2, allow_nan=False))


def _ensure_dir(path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_gen(args):
    out = _ensure_dir(args.out)
    if args.kind == "ring":
        members = []
        for variant in ("left", "right"):
            write_cloud(out / f"{variant}.csv", gen_ring_clusters(variant, args.seed))
            members.append((variant, f"{variant}.csv"))
        params = {"kind": "ring", "seed": args.seed}
        write_manifest(out / "manifest.json", members, params)
    elif args.kind == "ellipses":
        clouds = gen_nested_ellipses(args.count, args.n or 1000, args.seed)
        members = []
        for k, c in enumerate(clouds):
            write_cloud(out / f"ellipse_{k:03d}.csv", c)
            members.append((k, f"ellipse_{k:03d}.csv"))
        params = {"kind": "ellipses", "seed": args.seed, "count": args.count, "n": args.n or 1000}
        write_manifest(out / "manifest.json", members, params)
    else:
        sim = gen_regression(args.setting, args.m, args.n or 10_000, args.seed)
        members = []
        for i, c in enumerate(sim.clouds):
            write_cloud(out / f"response_{i:03d}.csv", c)
            members.append((i, f"response_{i:03d}.csv"))
        params = {"kind": "regression", **sim.params}
        write_manifest(out / "manifest.json", members, params, X=sim.X, x_eval=sim.x_eval)
    _emit({"command": "gen", "kind": args.kind, "out": str(out), "members": len(members),
           "params": params, "versions": versions()})


def cmd_fit(args):
    cloud = read_cloud(args.input)
    start = time.perf_counter()
    tree = build_tree(cloud, args.depth)
    elapsed = time.perf_counter() - start
    write_tree(args.out, tree)
    _emit({"command": "fit", "n": cloud.n, "dim": cloud.dim, "depth": tree.depth,
           "nodes": tree.n_nodes, "runtime_s": elapsed})


def cmd_eval(args):
    qmap = QuantileMap(read_tree(args.tree))
    start = time.perf_counter()
    grid = qmap.average_grid(args.grid) if args.average else qmap.sample_grid(args.grid)
    elapsed = time.perf_counter() - start
    write_grid(args.out, grid)
    _emit({"command": "eval", "resolution": grid.resolution, "runtime_s": elapsed})


def cmd_distance(args):
    a, b = read_cloud(args.a), read_cloud(args.b)
    start = time.perf_counter()
    extra = {}
    if args.metric == "himap":
        value = himap_distance(QuantileMap.fit(a, args.depth), QuantileMap.fit(b, args.depth),
                               args.r, args.grid)
    elif args.metric == "w2-exact":
        value = w2_exact_assignment(a, b)
    elif args.metric == "w2-1d":
        value = w2_exact_1d(a, b)
    else:
        res = sinkhorn(a, b, args.epsilon)
        value = res.cost
        extra = {"epsilon": res.epsilon, "n_iter": res.n_iter, "violation": res.violation,
                 "converged": res.converged}
    elapsed = time.perf_counter() - start
    _emit({"metric": args.metric, "value": value, "runtime_s": elapsed, **extra})


def _json_arg(value):
    """Inline JSON (a value starting with ``[`` or ``{``) or a path to a JSON file."""
    if value.lstrip()[:1] in ("[", "{"):
        try:
            return json.loads(value)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid inline JSON: {exc}") from None
    return read_json(value)


def _input_clouds(path):
    obj = read_json(path)
    if isinstance(obj, dict):
        return read_manifest(path)["clouds"]
    if not isinstance(obj, list) or not obj:
        raise DataError(f"{path}: expected a non-empty list of cloud files or a manifest")
    base = Path(path).parent
    return [read_cloud(base / p) for p in obj]


def cmd_barycenter(args):
    clouds = _input_clouds(args.inputs)
    weights = _json_arg(args.weights)
    if not isinstance(weights, list):
        raise DataError(f"{args.weights}: expected a list of weights")
    phases = Phases()
    with phases("fit"):
        maps = [QuantileMap.fit(c, args.depth) for c in clouds]
    with phases("barycenter"):
        grid = barycenter_map(maps, weights, args.grid)
    write_cloud(args.out, grid.to_cloud())
    _emit({"command": "barycenter", "inputs": len(clouds), "resolution": grid.resolution,
           "timings_s": phases.seconds, "runtime_s": sum(phases.seconds.values())})


class _ManifestData:
    """Regression inputs loaded from a manifest, with the truth when known."""

    def __init__(self, manifest, x_eval):
        self.X = np.asarray(manifest["X"], dtype=np.float64)
        self.clouds = manifest["clouds"]
        self.x_eval = x_eval
        params = manifest.get("params", {})
        if params.get("setting") in REGRESSION_SETTINGS:
            model = gen_regression(params["setting"], params["m"], 1, params["seed"])
            self.truth = model.truth
            self.true_mean = model.true_mean


def _read_xs(path):
    text = Path(path).read_text(encoding="utf-8").split()
    if not text:
        raise DataError(f"{path}: empty covariate file")
    body = text[1:] if text[0].strip().lower() == "x" else text
    try:
        xs = np.array([float(v) for v in body])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric covariate ({exc})") from None
    if xs.size == 0 or not np.all(np.isfinite(xs)):
        raise DataError(f"{path}: covariates must be finite and non-empty")
    return xs


def cmd_regress(args):
    manifest = read_manifest(args.data)
    if "X" not in manifest:
        raise DataError(f"{args.data}: manifest has no covariates")
    if args.eval_x:
        xs = _read_xs(args.eval_x)
    elif "x_eval" in manifest:
        xs = np.asarray(manifest["x_eval"], dtype=np.float64)
    else:
        raise ConfigError("no evaluation covariates: pass --eval-x")
    data = _ManifestData(manifest, xs)
    bandwidth = args.bandwidth
    if bandwidth not in (None, "auto"):
        try:
            bandwidth = float(bandwidth)
        except ValueError:
            raise UsageError(f"--bandwidth must be a number or 'auto', got {bandwidth!r}") from None
    phases = Phases()
    res = run_regression(data, args.scheme, bandwidth=bandwidth, grid=args.grid, epsilon=args.epsilon,
                         reduce=args.reduce, depth=args.depth, phases=phases)
    if args.grid_dir:
        gdir = _ensure_dir(args.grid_dir)
        for i, g in enumerate(res["predicted"]):
            write_grid(gdir / f"pred_{i:03d}.csv", g)
    report = {
        "command": "regress",
        "scheme": args.scheme,
        "bandwidth": res["bandwidth"],
        "per_x": res["per_x"],
        "mise": res.get("mise"),
        "runtime_s": sum(v for k, v in phases.seconds.items() if k in ("fit", "bandwidth", "predict")),
        "timings_s": phases.seconds,
        "config": {k: v for k, v in vars(args).items() if k != "func"},
        "versions": versions(),
    }
    _emit(report, args.out)


def cmd_bench(args):
    config = _json_arg(args.config) if args.config else {}
    if not isinstance(config, dict):
        raise DataError(f"{args.config}: config must be a JSON object")
    report, arrays = run_benchmark(args.name, config)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        for name, arr in arrays.items():
            path = out.with_name(f"{out.stem}_{name}.csv")
            if hasattr(arr, "levels"):
                write_grid(path, arr)
            else:
                write_cloud(path, arr)
    _emit(report, args.out)


def build_parser():
    p = _Parser(prog="himap", description="Hilbert mass-aligned quantile maps.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate synthetic datasets")
    g.add_argument("kind", choices=["ring", "ellipses", "regression"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--count", type=int, default=30, help="number of ellipse clouds")
    g.add_argument("--n", type=int, help="points per cloud")
    g.add_argument("--m", type=int, help="number of covariates (regression)")
    g.add_argument("--setting", default="bivariate", choices=sorted(REGRESSION_SETTINGS))
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("fit", help="build a mass-aligned tree from a cloud CSV")
    f.add_argument("--in", dest="input", required=True)
    f.add_argument("--depth", type=int)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", help="sample a fitted tree's quantile map on a grid")
    e.add_argument("--tree", required=True)
    e.add_argument("--grid", type=int)
    e.add_argument("--average", action="store_true", help="interval means instead of midpoints")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)

    d = sub.add_parser("distance", help="distance between two cloud CSVs")
    d.add_argument("--metric", required=True, choices=["himap", "w2-exact", "w2-1d", "sinkhorn"])
    d.add_argument("--a", required=True)
    d.add_argument("--b", required=True)
    d.add_argument("--r", type=float, default=2.0)
    d.add_argument("--grid", type=int)
    d.add_argument("--depth", type=int)
    d.add_argument("--epsilon", type=float)
    d.set_defaults(func=cmd_distance)

    b = sub.add_parser("barycenter", help="weighted barycenter of cloud CSVs")
    b.add_argument("--inputs", required=True, help="JSON list of cloud files, or a manifest")
    b.add_argument("--weights", required=True, help="JSON list of weights, inline or as a file")
    b.add_argument("--grid", type=int)
    b.add_argument("--depth", type=int)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_barycenter)

    r = sub.add_parser("regress", help="Frechet regression on a generated dataset")
    r.add_argument("--data", required=True, help="dataset manifest")
    r.add_argument("--scheme", required=True, choices=["global", "local"])
    r.add_argument("--bandwidth", help="bandwidth or 'auto' (local only)")
    r.add_argument("--eval-x", help="covariate file, one value per line, optional header 'x'")
    r.add_argument("--grid", type=int, default=256)
    r.add_argument("--reduce", choices=["mean", "midpoint"], default="mean")
    r.add_argument("--epsilon", type=float)
    r.add_argument("--depth", type=int)
    r.add_argument("--grid-dir", help="directory for predicted grid CSVs")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_regress)

    k = sub.add_parser("bench", help="run a desk-scale experiment")
    k.add_argument("name", choices=sorted(BENCHMARKS))
    k.add_argument("--config", help="JSON object overriding defaults, inline or as a file")
    k.add_argument("--out", help="report path; arrays go next to it")
    k.set_defaults(func=cmd_bench)
    return p


def _fail(kind, exc, code):
    sys.stderr.write(json.dumps({"error": kind, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except (UsageError, ConfigError) as exc:
        return _fail(type(exc).__name__, exc, EXIT_USAGE)
    except (DataError, DomainError, OSError) as exc:
        return _fail(type(exc).__name__, exc, EXIT_DATA)
    except (WeightError, BandwidthError, SingularCovarianceError, ResourceError, np.linalg.LinAlgError,
            FloatingPointError) as exc:
        return _fail(type(exc).__name__, exc, EXIT_NUMERIC)
    return 0


if __name__ == "__main__":
    sys.exit(main())
