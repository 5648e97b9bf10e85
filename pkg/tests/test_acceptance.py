"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. The suite is heavy
(~45 minutes end to end); the dominant costs are criterion 7's
million-node training run and criterion 6's ten training sweeps.

Criterion 6 is split per sub-claim so the independently verified outcome
of each inequality is visible; the IC spread-vs-random bound is known to
be unattainable on this graph class (see the failure message for the
measured near-optimal ceiling).
"""

import math
import resource
import time

import numpy as np
import pytest

from conftest import spearman
from hyperim.cli import main as cli_main
from hyperim.diffusion import (estimate_spread, exact_spread_bruteforce,
                               generate_instances, sample_ic_instance,
                               sample_wlt_instance, simulate_wlt)
from hyperim.embedding import EmbeddingTable, TrainConfig, gradient_check, train
from hyperim.graph import SocialGraph, save_edge_list
from hyperim.lorentz import rotate_spatial, sq_dist_batch
from hyperim.selection import (select_asw, select_him_md, select_random)
from hyperim.synth import preferential_attachment_graph, uniform_random_graph

GB = 1024**3


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")


def peak_rss_bytes() -> int:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


# --- criterion 1: geometry suite ----------------------------------------------

def test_criterion1_geometry_suite():
    started = time.perf_counter()
    count = 10_000
    worst_manifold = worst_isometry = 0.0
    for i, n in enumerate((2, 8, 64)):
        gen_pts = np.random.default_rng(100 + i)
        x = gen_pts.normal(0.0, 1.0, size=(count, n))
        y = gen_pts.normal(0.0, 1.0, size=(count, n))
        t = np.sqrt(1.0 + np.sum(x * x, axis=1))
        worst_manifold = max(worst_manifold,
                             float(np.abs(-t * t + np.sum(x * x, axis=1) + 1.0).max()))
        gen = np.random.default_rng(300 + i)
        angles = gen.uniform(-math.pi, math.pi, size=(count, n // 2))
        d_before = sq_dist_batch(x, y, 1.0)
        d_after = sq_dist_batch(rotate_spatial(angles, x), rotate_spatial(angles, y), 1.0)
        worst_isometry = max(worst_isometry, float(np.abs(d_before - d_after).max()))
        assert np.array_equal(sq_dist_batch(x, y, 1.0), sq_dist_batch(y, x, 1.0)), \
            "squared distance must be exactly symmetric"
        assert float(d_before.min()) >= 0.0 and float(d_after.min()) >= 0.0
    elapsed = time.perf_counter() - started
    ok = worst_manifold <= 1e-9 and worst_isometry <= 1e-9 and elapsed < 5.0
    report("C1 geometry", ok,
           f"manifold {worst_manifold:.2e}, isometry {worst_isometry:.2e}, {elapsed:.2f}s")
    assert worst_manifold <= 1e-9
    assert worst_isometry <= 1e-9
    assert elapsed < 5.0


# --- criterion 2: gradient oracle ---------------------------------------------

def test_criterion2_gradient_oracle():
    started = time.perf_counter()
    g = SocialGraph.from_edges(5, [(i, i + 1) for i in range(4)])
    model = sample_ic_instance(g, 7)
    (instance,) = generate_instances(model, g, 0.4, 1, rng_seed=5)
    table = EmbeddingTable.init_random(5, 8, 1.0, 0.1, rng_seed=21)
    table.rotations["structure-source"][:] = 0.2
    table.rotations["propagation-target"][:] = -0.1
    err = gradient_check(table, g, [instance], epsilon=1e-5)
    elapsed = time.perf_counter() - started
    ok = err < 1e-4 and elapsed < 10.0
    report("C2 gradients", ok, f"max rel err {err:.2e}, {elapsed:.2f}s")
    assert err < 1e-4
    assert elapsed < 10.0


# --- criterion 3: simulator oracle --------------------------------------------

def test_criterion3_simulator_oracle():
    started = time.perf_counter()
    rounds = 10_000
    worst_sigma = 0.0
    for i in range(20):
        nodes = 4 + i % 2
        g = uniform_random_graph(nodes, min(5, nodes * (nodes - 1) // 2 - 1),
                                 rng_seed=400 + i)
        inst = sample_ic_instance(g, 500 + i)
        assert inst.directed_edge_count <= 11
        seeds = {0} if i % 3 else {0, nodes - 1}
        exact = exact_spread_bruteforce(inst, seeds)
        est = estimate_spread(inst, seeds, rounds, rng_seed=800 + i)
        se = est.std_ratio * nodes / math.sqrt(rounds)
        gap = abs(est.mean_ratio * nodes - exact)
        worst_sigma = max(worst_sigma, gap / max(se, 1e-12))
        assert gap <= 3.0 * se + 1e-9, f"instance {i}: gap {gap:.5f} vs 3SE {3*se:.5f}"
    # WLT replay is bit-identical
    gw = uniform_random_graph(40, 90, rng_seed=9)
    wlt = sample_wlt_instance(gw, 31)
    first = simulate_wlt(wlt, {1, 5, 7})
    second = simulate_wlt(wlt, {1, 5, 7})
    assert first == second
    elapsed = time.perf_counter() - started
    ok = elapsed < 60.0
    report("C3 simulators", ok,
           f"worst |MC-exact| = {worst_sigma:.2f} SE over 20 instances, "
           f"WLT replay identical, {elapsed:.1f}s")
    assert elapsed < 60.0


# --- criterion 4: Algorithm-1 golden traces -----------------------------------

ROT_TAGS = ("structure-source", "structure-target",
            "propagation-source", "propagation-target")


def table_with_ldos(ldos, gamma=1.0):
    spatial = []
    for value in ldos:
        t = (value + 2 * gamma) / (2 * math.sqrt(gamma))
        spatial.append([math.sqrt(max(0.0, t * t - gamma)), 0.0])
    return EmbeddingTable(np.asarray(spatial), np.zeros(len(ldos)),
                          {tag: np.zeros(1) for tag in ROT_TAGS}, gamma)


def test_criterion4_asw_golden_traces():
    started = time.perf_counter()

    # fixture 1: 4 nodes, edge a-b, hand trace picks (a, b) with b at 0.22
    g1 = SocialGraph.from_edges(4, [(0, 1)])
    t1 = table_with_ldos([0.1, 0.12, 0.3, 0.31])
    r1 = select_asw(g1, t1, 2, beta=2.0)
    assert r1.seeds == (0, 1)
    assert r1.score_trace[1].score == pytest.approx(0.22)
    assert r1.score_trace[1].penalized

    # fixture 2: non-adjacent window -> reduces to the plain lowest-k pick
    g2 = SocialGraph.from_edges(6, [(0, 3), (1, 4), (2, 5)])
    t2 = table_with_ldos([0.1, 0.2, 0.3, 1.1, 1.2, 1.3])
    r2 = select_asw(g2, t2, 3, beta=1.0)
    assert r2.seeds == select_him_md(t2, 3).seeds
    assert not any(p.penalized for p in r2.score_trace)

    # fixture 3: exhausted list boundary with cumulative penalties
    # nodes on one ray -> softmax weights split 0.5/0.5 among equal-radius pairs
    # hand trace: pick 0 (0.01): 1,2 -> 0.5 + (0.5/2)*0.01 = 0.5025
    #             pick 3 (0.02): 1,2 -> 0.5025 + (0.5/2)*0.02 = 0.5075
    #             then 1 (tie by id), then 2; queue drains with no refill
    g3 = SocialGraph.from_edges(4, [(0, 1), (0, 2), (3, 1), (3, 2)])
    t3 = table_with_ldos([0.01, 0.5, 0.5, 0.02])
    r3 = select_asw(g3, t3, 4, beta=1.0)
    assert r3.seeds == (0, 3, 1, 2)
    scores = [p.score for p in r3.score_trace]
    assert scores[0] == pytest.approx(0.01)
    assert scores[1] == pytest.approx(0.02)
    assert scores[2] == pytest.approx(0.5075)
    assert scores[3] == pytest.approx(0.5075)

    elapsed = time.perf_counter() - started
    ok = elapsed < 1.0
    report("C4 golden traces", ok, f"3 fixtures reproduced exactly, {elapsed:.3f}s")
    assert elapsed < 1.0


# --- criterion 5: hierarchy property ------------------------------------------

def test_criterion5_ldo_degree_hierarchy():
    started = time.perf_counter()
    g = preferential_attachment_graph(2000, 3, rng_seed=0)
    avg_degree = 2 * g.edge_count / g.node_count
    assert 5.0 <= avg_degree <= 7.0
    model = sample_ic_instance(g, 1)
    instances = generate_instances(model, g, 0.05, 30, rng_seed=2)
    table = train(g, instances, TrainConfig(rng_seed=0))
    rho = spearman(table.ldo_all(), g.degrees)
    elapsed = time.perf_counter() - started
    ok = rho <= -0.3 and elapsed < 600.0
    report("C5 hierarchy", ok, f"spearman(ldo, degree) = {rho:+.3f}, {elapsed:.0f}s")
    assert rho <= -0.3
    assert elapsed < 600.0


# --- criterion 6: effectiveness ordering --------------------------------------

@pytest.fixture(scope="module")
def effectiveness_results():
    started = time.perf_counter()
    g = preferential_attachment_graph(2000, 3, rng_seed=0)
    k = 200  # 10% seed ratio
    results = {}
    for kind in ("ic", "wlt"):
        model = (sample_ic_instance(g, 11) if kind == "ic"
                 else sample_wlt_instance(g, 11))
        instances = generate_instances(model, g, 0.10, 30, rng_seed=3)
        him, him_md, random_ = [], [], []
        for s in range(5):
            table = train(g, instances, TrainConfig(epochs=40, rng_seed=s))
            him.append(estimate_spread(
                model, select_asw(g, table, k, 1.0).seeds, 100,
                rng_seed=50 + s).mean_ratio)
            him_md.append(estimate_spread(
                model, select_him_md(table, k).seeds, 100,
                rng_seed=50 + s).mean_ratio)
            random_.append(estimate_spread(
                model, select_random(g, k, rng_seed=60 + s).seeds, 100,
                rng_seed=50 + s).mean_ratio)
        results[kind] = {"him": 100 * np.mean(him), "him_md": 100 * np.mean(him_md),
                         "random": 100 * np.mean(random_)}
    results["elapsed"] = time.perf_counter() - started
    return results


def test_criterion6_runtime_and_wlt(effectiveness_results):
    r = effectiveness_results["wlt"]
    elapsed = effectiveness_results["elapsed"]
    ok = (r["him"] >= r["him_md"] - 0.5 and r["him"] >= 1.3 * r["random"]
          and elapsed < 1800.0)
    report("C6 effectiveness (WLT)", ok,
           f"him {r['him']:.2f}%, him_md {r['him_md']:.2f}%, "
           f"random {r['random']:.2f}%, sweep {elapsed:.0f}s")
    assert r["him"] >= r["him_md"] - 0.5
    assert r["him"] >= 1.3 * r["random"]
    assert elapsed < 1800.0


def test_criterion6_ic_ordering(effectiveness_results):
    r = effectiveness_results["ic"]
    ok = r["him"] >= r["him_md"] - 0.5
    report("C6 effectiveness (IC, vs him_md)", ok,
           f"him {r['him']:.2f}% vs him_md {r['him_md']:.2f}% - 0.5pp")
    assert r["him"] >= r["him_md"] - 0.5


def test_criterion6_ic_vs_random(effectiveness_results):
    r = effectiveness_results["ic"]
    ok = r["him"] >= 1.3 * r["random"]
    report("C6 effectiveness (IC, vs random)", ok,
           f"him {r['him']:.2f}% vs 1.3 x random = {1.3 * r['random']:.2f}%")
    assert r["him"] >= 1.3 * r["random"], (
        f"him {r['him']:.2f}% < 1.3 x random ({1.3 * r['random']:.2f}%). "
        "This bound is unattainable on this graph class: at a 10% seed "
        "ratio under IC with U[0,0.2] edge probabilities, a reverse-"
        "reachable-set greedy oracle (near-optimal) reaches ~27.7% vs "
        "random ~26%, an achievable ratio of ~1.1x for ANY selector; "
        "see the decisions ledger for the measured ceiling analysis.")


# --- criterion 7: scalability --------------------------------------------------

@pytest.mark.slow
def test_criterion7_scalability():
    g = preferential_attachment_graph(1_000_000, 3, rng_seed=0)
    assert g.edge_count >= 2_900_000
    table = EmbeddingTable.init_random(g.node_count, 64, 1.0, 0.1, rng_seed=1)

    started = time.perf_counter()
    select_him_md(table, 10_000)
    md_time = time.perf_counter() - started

    started = time.perf_counter()
    select_asw(g, table, 10_000, 0.1)
    asw_time = time.perf_counter() - started

    # doubling |V| (and k with it, at a fixed 1% ratio) on sparse graphs
    best = {}
    for n in (500_000, 1_000_000):
        gg = g if n == 1_000_000 else preferential_attachment_graph(n, 3, rng_seed=1)
        tt = table if n == 1_000_000 else EmbeddingTable.init_random(n, 64, 1.0, 0.1,
                                                                     rng_seed=2)
        best[n] = min(_timed_asw(gg, tt, n // 100) for _ in range(5))
    doubling = best[1_000_000] / best[500_000]

    config = TrainConfig(dim=64, epochs=10, batch_size=16384, rng_seed=3,
                         dtype=np.float32)
    trained = train(g, [], config)
    assert np.isfinite(trained.loss_history).all()
    assert len(trained.loss_history) == 10
    rss = peak_rss_bytes()

    ok = (md_time < 10.0 and asw_time < 1800.0 and doubling <= 2.5
          and rss < 32 * GB)
    report("C7 scalability", ok,
           f"him_md {md_time:.2f}s, asw {asw_time:.2f}s, doubling x{doubling:.2f}, "
           f"10-epoch train done, peak rss {rss / GB:.1f} GB")
    assert md_time < 10.0
    assert asw_time < 1800.0
    assert doubling <= 2.5
    assert rss < 32 * GB


def _timed_asw(g, table, k):
    started = time.perf_counter()
    select_asw(g, table, k, 0.1)
    return time.perf_counter() - started


# --- criterion 8: determinism ---------------------------------------------------

def test_criterion8_pipeline_determinism(tmp_path):
    g = preferential_attachment_graph(80, 2, rng_seed=4)
    graph_path = tmp_path / "graph.txt"
    save_edge_list(g, graph_path)
    argv_base = ["--seed", "123", "pipeline", "--graph", str(graph_path),
                 "--kind", "ic", "--ratios", "0.05,0.1",
                 "--methods", "him,him_md,degree,random",
                 "--instances", "5", "--rounds", "20", "--epochs", "3", "--dim", "8"]
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    assert cli_main(argv_base + ["--out-dir", str(out1)]) == 0
    assert cli_main(argv_base + ["--out-dir", str(out2)]) == 0
    names = sorted(p.name for p in out1.iterdir())
    assert names == sorted(p.name for p in out2.iterdir())
    assert len(names) >= 10  # model, instances, embeddings, seeds, results (+labels)
    diffs = [n for n in names if (out1 / n).read_bytes() != (out2 / n).read_bytes()]
    ok = not diffs
    report("C8 determinism", ok,
           f"{len(names)} artifacts byte-identical across reruns"
           if ok else f"mismatch: {diffs}")
    assert not diffs
