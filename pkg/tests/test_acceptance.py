"""Exit criteria. Each test records one PASS/FAIL line, printed in the
terminal summary (also runnable directly: ``python tests/test_acceptance.py``)."""

from __future__ import annotations

import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import random_connected_edges, random_corr  # noqa: E402
from oracles import brute_clustering, floyd_warshall_total, union_find_components  # noqa: E402

from corrnet.cli import main  # noqa: E402
from corrnet.correlation import correlation_matrix  # noqa: E402
from corrnet.export import parse_jaccard_csv, parse_metrics_csv  # noqa: E402
from corrnet.ingest import WindowSpec, slice_windows  # noqa: E402
from corrnet.netgraph import (  # noqa: E402
    Cluster,
    average_clustering,
    build_threshold_network,
    characteristic_path_length,
    largest_cluster,
)
from corrnet.pipeline import load_manifest  # noqa: E402
from corrnet.returns import ReturnPanel, log_returns, normalize  # noqa: E402
from corrnet.similarity import jaccard, link_counts, regime_flags, similarity_matrix  # noqa: E402
from corrnet.synth import Block, RegimeSwitch, SynthSpec, bundled_spec, generate  # noqa: E402

RESULTS: list[str] = []

# measured once at 100/100 with seeds 0..99; kept as the regression floor
BLOCK_RECOVERY_FROZEN = 100


def record(tag: str, ok: bool, detail: str) -> None:
    RESULTS.append(f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}")


def test_ac1_graph_metric_oracles():
    rng = random.Random(2024)
    start = time.perf_counter()
    path_mismatch = clust_worst = 0.0
    for _ in range(200):
        n = rng.randint(2, 15)
        labels, edges = random_connected_edges(rng, n, rng.uniform(0.0, 0.6))
        g = Cluster(tuple(labels), frozenset(edges))
        pairs = n * (n - 1) // 2
        if characteristic_path_length(g) != floyd_warshall_total(labels, edges) / pairs:
            path_mismatch += 1
        expected = float(brute_clustering(labels, edges, min_degree=2))
        clust_worst = max(clust_worst, abs(average_clustering(g, "standard") - expected))
    elapsed = time.perf_counter() - start
    ok = path_mismatch == 0 and clust_worst <= 1e-12 and elapsed < 5.0
    record("AC1 graph-metric oracle equivalence", ok,
           f"path mismatches={int(path_mismatch)}, max clustering err={clust_worst:.1e}, "
           f"{elapsed:.2f}s")
    assert ok


def test_ac2_jaccard_identity():
    rng = random.Random(99)
    universe = [(f"n{i}", f"n{j}") for i in range(12) for j in range(i + 1, 12)]
    start = time.perf_counter()
    failures = 0
    for _ in range(1000):
        a = set(rng.sample(universe, rng.randint(0, 30)))
        b = set(rng.sample(universe, rng.randint(0, 30)))
        common, total = link_counts(a, b)
        union = len(a | b)
        if union == 0:
            failures += jaccard(a, b) is not None
            continue
        exact = total - common == union and Fraction(common, total - common) == Fraction(
            len(a & b), union)
        j_ab, j_ba = jaccard(a, b), jaccard(b, a)
        failures += not (exact and j_ab == j_ba and 0.0 <= j_ab <= 1.0)
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 1.0
    record("AC2 Jaccard N1/(N-N1) identity", ok, f"failures={failures}, {elapsed:.3f}s")
    assert ok


def test_ac3_threshold_monotonicity():
    thetas = (-1.0, -0.5, 0.0, 0.3, 0.5, 0.9)
    rng = np.random.default_rng(3)
    violations = 0
    for _ in range(50):
        corr = random_corr(rng, int(rng.integers(3, 25)))
        nets = [build_threshold_network(corr, t) for t in thetas]
        sizes = [len(largest_cluster(net).nodes) for net in nets]
        violations += sum(not hi.edges <= lo.edges for lo, hi in zip(nets, nets[1:]))
        violations += sum(b > a for a, b in zip(sizes, sizes[1:]))
        violations += len(nets[0].edges) != len(corr.instruments) * (len(corr.instruments) - 1) // 2
    record("AC3 threshold monotonicity", violations == 0, f"violations={violations}")
    assert violations == 0


def test_ac4_correlation_recovery():
    start = time.perf_counter()
    errors = []
    for seed in range(100):
        spec = SynthSpec(seed=seed, n_instruments=2, n_days=261, blocks=(Block(0.6, size=2),))
        returns = log_returns(generate(spec))
        assert returns.values.shape[0] == 260
        errors.append(correlation_matrix(normalize(returns)).values[0, 1] - 0.6)
    elapsed = time.perf_counter() - start
    mae, worst = float(np.mean(np.abs(errors))), float(np.max(np.abs(errors)))
    ok = mae < 0.05 and worst <= 0.15 and elapsed < 5.0
    record("AC4 correlation recovery", ok,
           f"MAE={mae:.4f} (<0.05), max|err|={worst:.4f} (<=0.15), {elapsed:.2f}s")
    assert ok


def test_ac5_block_recovery():
    hits = 0
    for seed in range(100):
        spec = SynthSpec(seed=seed, n_instruments=20, n_days=261, cross_correlation=0.05,
                         blocks=(Block(0.6, size=10), Block(0.6, size=10)))
        panel = generate(spec)
        net = build_threshold_network(correlation_matrix(normalize(log_returns(panel))), 0.3)
        comps = union_find_components(list(net.nodes), net.edges)
        planted = [set(panel.instruments[:10]), set(panel.instruments[10:])]
        hits += sorted(comps, key=min) == sorted(planted, key=min)
    ok = hits >= 95 and hits >= BLOCK_RECOVERY_FROZEN
    record("AC5 block recovery", ok, f"{hits}/100 seeds (need >=95, frozen {BLOCK_RECOVERY_FROZEN})")
    assert ok


def test_ac6_regime_detection():
    flip_a = tuple(range(1, 20, 2)) + (0, 2)
    flip_b = tuple(k for k in range(20) if k not in flip_a)
    hits = 0
    details = []
    for seed in range(20):
        k = 1 + seed % 7
        spec = SynthSpec(
            seed=seed, n_instruments=20, n_days=8 * 260, cross_correlation=0.0,
            blocks=(Block(0.6, size=12), Block(0.6, size=8)), window_length=260,
            regime_switch=RegimeSwitch(k, (Block(0.6, members=flip_a), Block(0.6, members=flip_b))),
        )
        windows = slice_windows(generate(spec), WindowSpec("fixed", 260, 260))
        assert len(windows) == 8
        clusters = [
            largest_cluster(build_threshold_network(
                correlation_matrix(normalize(log_returns(prices, label))), 0.3))
            for label, prices in windows
        ]
        labels = [label for label, _ in windows]
        flagged = [label for label, _ in regime_flags(similarity_matrix(clusters, labels), 0.5)]
        hits += flagged == [labels[k]]
        if flagged != [labels[k]]:
            details.append(f"seed {seed}: want {labels[k]}, got {flagged}")
    ok = hits == 20
    record("AC6 regime detection", ok, f"{hits}/20 seeds flag exactly the switch window"
           + ("" if ok else "; " + "; ".join(details)))
    assert ok


def _panels():
    yield "bundled", log_returns(generate(bundled_spec()).rows(0, 262))
    for seed in range(10):
        spec = SynthSpec(seed=seed, n_instruments=6, n_days=50 + 40 * seed,
                         blocks=(Block(0.3, size=4), Block(0.9, size=2)), daily_vol=0.001 * (seed + 1))
        yield f"synth{seed}", log_returns(generate(spec))
    rng = np.random.default_rng(7)
    values = rng.normal(0, 0.02, (100, 4))
    values[:, 2] = 0.0
    yield "with-constant", ReturnPanel(tuple(range(100)), ("A", "B", "C", "D"), values)
    values = rng.normal(5.0, 1e-6, (300, 3))  # large mean, tiny spread
    yield "offset", ReturnPanel(tuple(range(300)), ("A", "B", "C"), values)


def test_ac7_normalization_contract():
    worst_mean = worst_sigma = 0.0
    exclusion_ok = True
    count = 0
    for name, returns in _panels():
        out = normalize(returns)
        count += 1
        for col in out.values.T:
            worst_mean = max(worst_mean, abs(float(col.mean())))
            worst_sigma = max(worst_sigma, abs(float(np.sqrt(np.mean(col * col))) - 1))
        constant = [lab for lab, col in zip(returns.instruments, returns.values.T) if np.ptp(col) == 0]
        exclusion_ok &= list(out.excluded) == constant
        exclusion_ok &= set(out.instruments).isdisjoint(out.excluded)
    ok = worst_mean < 1e-12 and worst_sigma < 1e-9 and exclusion_ok
    record("AC7 normalization contract", ok,
           f"{count} panels, max|mean|={worst_mean:.1e}, max|sigma-1|={worst_sigma:.1e}, "
           f"exclusions {'ok' if exclusion_ok else 'WRONG'}")
    assert ok


@pytest.fixture(scope="module")
def bundled_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("bundled") / "global_synth.csv"
    assert main(["synth", "--out", str(path)]) == 0
    return path


def test_ac8_determinism_across_workers(bundled_csv, tmp_path):
    manifests = []
    for workers in (1, 8):
        out = tmp_path / f"w{workers}"
        code = main(["run", "--input", str(bundled_csv), "--layout", "wide", "--output", str(out),
                     "--workers", str(workers), "--quiet"])
        assert code == 0
        manifests.append((out / "manifest.json").read_bytes())
    hashes = [
        sorted((a["path"], a["sha256"]) for a in load_manifest(tmp_path / f"w{w}")["artifacts"])
        for w in (1, 8)
    ]
    ok = manifests[0] == manifests[1] and hashes[0] == hashes[1]
    record("AC8 determinism (workers 1 vs 8)", ok,
           f"{len(hashes[0])} artifact hashes {'identical' if ok else 'DIFFER'}")
    assert ok


def test_ac9_paper_protocol_smoke(tmp_path):
    start = time.perf_counter()
    csv = tmp_path / "global_synth.csv"
    assert main(["synth", "--out", str(csv)]) == 0
    out = tmp_path / "out"
    code = main(["run", "--input", str(csv), "--layout", "wide", "--output", str(out),
                 "--window-mode", "year", "--theta", "0.3", "--quiet"])
    elapsed = time.perf_counter() - start
    reports = parse_metrics_csv((out / "metrics.csv").read_text())
    sim = parse_jaccard_csv((out / "jaccard.csv").read_text())
    ranges_ok = all(
        0.0 <= r.density <= 1.0 and r.path_length >= 1.0 and 0.0 <= r.clustering <= 1.0
        for r in reports
    )
    ok = (
        code == 0
        and elapsed < 10.0
        and len(reports) == 13
        and [r.window_label for r in reports] == [str(y) for y in range(2000, 2013)]
        and len(sim.window_labels) == 13
        and all(len(row) == 13 for row in sim.values)
        and all(sim.values[i][i] == 1.0 for i in range(13))
        and ranges_ok
    )
    record("AC9 paper-protocol smoke", ok,
           f"exit={code}, {len(reports)} window reports, {len(sim.window_labels)}x"
           f"{len(sim.window_labels)} Jaccard, metric ranges {'ok' if ranges_ok else 'BAD'}, "
           f"{elapsed:.2f}s (<10s)")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
