"""Acceptance criteria, one test each, printing a PASS/FAIL line per criterion.

Run alone with ``pytest tests/test_acceptance.py -v`` or
``python3 tests/test_acceptance.py``.
"""

import itertools
import time
import warnings

import numpy as np
import pytest

from himap.barycenter import barycenter_map
from himap.bench import run_benchmark, run_regression
from himap.cloud import PointCloud
from himap.datagen import gen_regression
from himap.errors import ConvergenceWarning
from himap.frechet import GlobalWeightModel, LocalWeightModel, global_weights, local_weights
from himap.hilbert_address import CellAddress
from himap.mass_tree import build_tree
from himap.ot_oracle import cost_matrix, sinkhorn_cost, w2_exact_1d, w2_exact_assignment
from himap.quantile_map import QuantileMap, himap_distance


@pytest.fixture
def verdict(capsys, request):
    def report(ok, detail):
        label = request.node.name.removeprefix("test_")
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {label}: {detail}")
        assert ok, detail

    return report


def _cloud(seed, n, d):
    rng = np.random.default_rng(seed)
    kind = seed % 3
    if kind == 0:
        return rng.normal(size=(n, d))
    if kind == 1:
        return rng.exponential(size=(n, d)) * rng.uniform(0.5, 2.0, size=d)
    return rng.standard_t(2, size=(n, d))


def test_c01_equiprobable_splits(verdict):
    start = time.perf_counter()
    combos = list(itertools.product([1, 2, 3, 5], [100, 1000, 4096]))
    worst = 0
    for seed in range(50):
        d, n = combos[seed % len(combos)]
        tree = build_tree(_cloud(seed, n, d))
        lo = tree.lower[tree.internal_nodes()]
        worst = max(worst, int(np.abs(tree.size[lo] - tree.size[lo + 1]).max()))
    elapsed = time.perf_counter() - start
    verdict(worst <= 1 and elapsed < 30, f"max child size gap {worst} over 50 clouds in {elapsed:.2f}s")


def test_c02_pushforward_fills_every_cell_equally(verdict):
    bad = []
    for seed, (d, n) in enumerate(itertools.product([1, 2, 3], [64, 300, 2048])):
        tree = build_tree(_cloud(seed, n, d))
        q = QuantileMap(tree)
        L = tree.depth
        G = 1 << L
        values = q.pushforward().points
        counts = np.zeros(tree.n_nodes, dtype=np.int64)
        for g in range(G):
            node = 0
            counts[0] += 1
            for bit in CellAddress.from_index(g, L).bits:
                node = int(tree.lower[node]) + (bit ^ int(tree.reversed[node]))
                counts[node] += 1
                box = tree.box(node)
                if np.any(values[g] < box[:, 0]) or np.any(values[g] > box[:, 1]):
                    bad.append(("outside", seed, node))
        expected = G >> tree.node_depth
        if not np.array_equal(counts, expected):
            bad.append(("count", seed))
    verdict(not bad, f"9 clouds, exact counts G*2^-l at every node, values inside their cells; issues={bad[:3]}")


def test_c03_one_dimensional_reduction(verdict):
    worst_sup, worst_dist = 0.0, 0.0
    for seed, n in enumerate([64, 256, 1024] * 7):
        rng = np.random.default_rng(seed)
        a, b = _cloud(seed, n, 1)[:, 0], rng.normal(2.0, 3.0, size=n)
        xa = np.sort(a)
        gap = np.diff(xa).max()
        q = QuantileMap.fit(a)
        t = np.concatenate([(np.arange(n) + 0.5) / n, rng.uniform(size=1000), [0.0, 1.0]])
        inverse = xa[np.clip(np.ceil(n * t).astype(int) - 1, 0, n - 1)]
        worst_sup = max(worst_sup, np.abs(q.evaluate(t)[:, 0] - inverse).max() / gap)
        if seed < 20:
            gap_ab = max(gap, np.diff(np.sort(b)).max())
            diff = abs(himap_distance(q, QuantileMap.fit(b)) - w2_exact_1d(a, b))
            worst_dist = max(worst_dist, diff / (2 * gap_ab))
    verdict(worst_sup <= 1 and worst_dist <= 1,
            f"sup error / max gap = {worst_sup:.3f}, distance error / (2 max gap) = {worst_dist:.3f}")


def test_c04_w2_dominance(verdict):
    worst = -np.inf
    for seed in range(50):
        a = QuantileMap.fit(_cloud(seed, 200, 2), 7)
        b = QuantileMap.fit(_cloud(seed + 1000, 160, 2) + seed % 5, 7)
        w2 = w2_exact_assignment(a.pushforward(128), b.pushforward(128))
        worst = max(worst, w2 - himap_distance(a, b, 2, 128))
    verdict(worst <= 1e-9, f"max W2 - d_himap over 50 pairs = {worst:.3e}")


def test_c05_affine_equivariance(verdict):
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        d = 1 + seed % 3
        cloud = PointCloud(_cloud(seed, 500, d))
        q = QuantileMap.fit(cloud)
        t = rng.uniform(size=1000)
        base = q.evaluate(t)
        for _ in range(5):
            scale, shift = rng.uniform(0.1, 10.0, size=d), rng.normal(0, 5, size=d)
            moved = QuantileMap.fit(cloud.affine(scale, shift)).evaluate(t)
            worst = max(worst, np.abs(moved - (base * scale + shift)).max())
    verdict(worst <= 1e-12, f"max |Q_T(t) - (A Q(t) + b)| = {worst:.3e}")


def test_c06_barycenter_closed_form(verdict):
    rng = np.random.default_rng(6)
    maps = [QuantileMap.fit(rng.normal(i, 1 + i, size=(300, 2)), 8) for i in range(3)]
    one_hot = all(
        np.array_equal(barycenter_map(maps, np.eye(3)[i]).values, maps[i].sample_grid().values)
        for i in range(3)
    )
    w = np.array([0.2, 0.5, 1.3])
    ref = barycenter_map(maps, w).values
    scale_err = max(np.abs(barycenter_map(maps, c * w).values - ref).max() for c in (1e-3, 0.7, 3.0, 1e4))
    base = PointCloud(rng.normal(size=(256, 2)))
    shift = np.array([3.0, -2.0])
    a, b = QuantileMap.fit(base, 8), QuantileMap.fit(base.affine(1.0, shift), 8)
    extrap = barycenter_map([a, b], [1.5, -0.5]).values
    extrap_err = np.abs(extrap - (a.sample_grid().values - 0.5 * shift)).max()
    ok = one_hot and scale_err <= 1e-12 and extrap_err <= 1e-9
    verdict(ok, f"one-hot exact={one_hot}, scaling err={scale_err:.2e}, extrapolation err={extrap_err:.2e}")


def _truncated_gaussian(rng, n):
    out = np.empty((0, 2))
    while out.shape[0] < n:
        z = rng.normal(size=(2 * n, 2))
        out = np.vstack([out, z[np.all(np.abs(z) <= 2.0, axis=1)]])
    return out[:n]


def test_c07_convergence_trend(verdict):
    medians = []
    for n in (1_000, 10_000, 100_000):
        dists = []
        for rep in range(20):
            rng = np.random.default_rng([n, rep])
            small = QuantileMap.fit(_truncated_gaussian(rng, n))
            large = QuantileMap.fit(_truncated_gaussian(rng, 10 * n))
            dists.append(himap_distance(small, large))
        medians.append(float(np.median(dists)))
    ok = medians[0] > medians[1] > medians[2]
    verdict(ok, "median d_himap(n, 10n) for n=1e3,1e4,1e5: " + ", ".join(f"{m:.4f}" for m in medians))


def _keys(obj):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield k
            yield from _keys(v)
    elif isinstance(obj, list):
        for v in obj:
            yield from _keys(v)


def test_c08_ellipse_benchmark_speed(verdict):
    report, _ = run_benchmark("ellipses", {})
    cfg = report["config"]
    iteration_keys = [k for k in _keys(report) if "iter" in k.lower() or k.lower() in ("tol", "tolerance")]
    uniform = np.allclose(report["weights"], 1 / 30) and len(report["weights"]) == 30
    ok = (cfg["count"], cfg["n"]) == (30, 1000) and uniform and report["barycenter_s"] < 1.0
    ok = ok and not iteration_keys
    verdict(ok, f"30 x 1000 barycenter in {report['barycenter_s']:.3f}s, "
                f"iteration keys {iteration_keys}, avg OT cost {report['avg_ot_cost']:.4f}")


def test_c09_regression_at_desk_scale(verdict):
    seeds = (0, 1, 2)
    mise = {10_000: [], 100_000: []}
    mad = []
    for n, seed in itertools.product(mise, seeds):
        sim = gen_regression("bivariate", n=n, seed=seed)
        res = run_regression(sim, "global", grid=256)
        mise[n].append(res["mise"])
        mad.append(res["mean_abs_dev"])
    small, large = np.mean(mise[10_000]), np.mean(mise[100_000])
    ok = max(mad) < 0.02 and large < small and large < 5e-3
    verdict(ok, f"max MAD {max(mad):.2e}; mean MISE n=1e4 {small:.4e} -> n=1e5 {large:.4e} "
                f"(per seed {np.round(mise[10_000], 7).tolist()} -> {np.round(mise[100_000], 7).tolist()})")


def test_c10_weight_sums_and_negativity(verdict):
    rng = np.random.default_rng(10)
    X1 = rng.uniform(-0.5, 0.5, size=60)
    X3 = rng.normal(size=(60, 3))
    g1, g3 = GlobalWeightModel.fit(X1), GlobalWeightModel.fit(X3)
    local = LocalWeightModel(0.25)
    worst = 0.0
    for _ in range(1000):
        worst = max(worst, abs(global_weights(g1, X1, rng.uniform(-2, 2)).total - 1))
        worst = max(worst, abs(global_weights(g3, X3, rng.normal(0, 3, size=3)).total - 1))
        worst = max(worst, abs(local_weights(local, X1, rng.uniform(-0.5, 0.5)).total - 1))
    outside = global_weights(g3, X3, X3.max(axis=0) + 1.0).lambdas.min()
    verdict(worst <= 1e-9 and outside < 0, f"max |sum - 1| = {worst:.2e}; min weight outside hull {outside:.4f}")


def test_c11_oracle_cross_agreement(verdict):
    worst_1d = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        a, b = rng.normal(size=50), rng.gamma(2.0, size=50)
        worst_1d = max(worst_1d, abs(w2_exact_assignment(a, b) - w2_exact_1d(a, b)))
    rel = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            a, b = rng.normal(size=(32, 2)), rng.normal(1.0, 0.7, size=(32, 2))
            exact = w2_exact_assignment(a, b) ** 2
            scale = cost_matrix(a, b).mean()
            sweep = [abs(sinkhorn_cost(a, b, s * scale) - exact) / exact for s in (1e-1, 1e-2, 1e-3, 1e-4)]
            rel.append(sweep[-1])
    ok = worst_1d <= 1e-12 and max(rel) < 0.02
    verdict(ok, f"assignment vs sorted max diff {worst_1d:.1e}; Sinkhorn rel. error at smallest eps "
                f"max {max(rel):.2e} over 5 sweeps")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
