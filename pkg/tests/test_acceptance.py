"""Acceptance criteria at desk scale.

Rates use the replicate counts stated per criterion; each test records one
PASS/FAIL line, printed together in the pytest terminal summary.
"""
import math

import numpy as np
import pytest

from hdsobolev.cli import main
from hdsobolev.montecarlo import (
    convergence_experiments,
    load_scenarios,
    run_scenario,
    scenarios_from_dict,
)
from hdsobolev.oracles import run_oracles
from hdsobolev.sampling import IntegratedVMF, UniformSphere
from hdsobolev.sobolev import BINGHAM, RAYLEIGH, DecayAdjusted, Finite

pytestmark = pytest.mark.slow


def cell_rate(name, n, d, M, B=None, base_seed=None):
    overrides = {"M": M, "B": B, "base_seed": base_seed}
    (cell,) = [c for c in load_scenarios(name, **overrides) if c.n == n and c.d == d]
    return run_scenario(cell)


def fmt(row):
    return f"{row.scenario} {100 * row.rejection_rate:.1f}%"


def within(rate_pct, target, tol):
    return abs(rate_pct - target) <= tol


def test_criterion_1_null_calibration(record):
    schemes = ["rayleigh", "bingham", "k:3", "hybrid", "finite:3", "decay:3"]
    rows = []
    for i, scheme in enumerate(schemes):
        doc = {
            "id": f"cal_{scheme.replace(':', '')}",
            "model": {"type": "uniform"},
            "test": {"type": "uniformity", "scheme": scheme},
            "n": [100, 200],
            "d": [100, 300],
            "M": 1000,
            "base_seed": 100 + i,
        }
        rows += [run_scenario(c) for c in scenarios_from_dict(doc) if (c.n, c.d) in {(100, 100), (200, 300)}]
    ok = all(0.03 <= r.rejection_rate <= 0.07 for r in rows)
    worst = max(rows, key=lambda r: abs(r.rejection_rate - 0.05))
    assert record(1, ok, f"{len(rows)} cells in [3, 7]%, farthest {fmt(worst)}")


def test_criterion_2_k0_convergence(record):
    reports = convergence_experiments(UniformSphere(500), 500, 2000, [1, 3], [0.0, 0.0], base_seed=21)
    parts, ok = [], True
    for k0, rep in zip((1, 3), reports):
        var = rep.summary()["variance"]
        good = rep.ks_p > 0.01 and 0.9 <= var <= 1.1
        ok &= good
        parts.append(f"k0={k0}: KS p={rep.ks_p:.3f}, var={var:.3f}")
    assert record(2, ok, "; ".join(parts))


def test_criterion_3_local_alternative_means(record):
    n = d = 500
    kappa = 2**0.25 * d**0.75 / math.sqrt(n)
    stats = [RAYLEIGH, BINGHAM, Finite(3), DecayAdjusted(3)]
    targets = [(1.0, 0.15), (0.0, 0.12), (0.0, 0.12), (1.0, 0.2)]
    reports = convergence_experiments(IntegratedVMF(d, kappa), n, 1000, stats, [t for t, _ in targets], base_seed=31)
    parts, ok = [], True
    for s, (target, tol), rep in zip(stats, targets, reports):
        mean = float(np.mean(rep.values))
        ok &= abs(mean - target) <= tol
        parts.append(f"{s.label} {mean:.3f} ({target:g}+-{tol:g})")
    assert record(3, ok, "; ".join(parts))


def test_criterion_4_table1(record):
    M = 500
    null_rows = [cell_rate("table1_row1", n, d, M) for n in (100, 200) for d in (100, 200, 300)]
    t10 = cell_rate("table1_row11", 100, 100, M)
    t500 = cell_rate("table1_row14", 100, 300, M)
    vmf4 = cell_rate("table1_row6", 200, 100, M)
    checks = [within(100 * r.rejection_rate, 5, 3) for r in null_rows] + [
        100 * t10.rejection_rate >= 97,
        within(100 * t500.rejection_rate, 43, 10),
        within(100 * vmf4.rejection_rate, 49, 7),
    ]
    worst = max(null_rows, key=lambda r: abs(r.rejection_rate - 0.05))
    detail = f"null farthest {fmt(worst)}; {fmt(t10)}; {fmt(t500)}; {fmt(vmf4)}"
    assert record(4, all(checks), detail)


def test_criterion_5_table2(record):
    M, B = 300, 200
    null_rows = [cell_rate("table2_row1", n, d, M) for n in (100, 200, 500, 1000) for d in (100, 200, 300)]
    t7 = cell_rate("table2_row3", 500, 200, M)
    scaled = cell_rate("table2_row13", 100, 100, M, B)
    vmf10 = cell_rate("table2_row20", 100, 100, M, B)
    checks = [within(100 * r.rejection_rate, 5, 4) for r in null_rows] + [
        within(100 * t7.rejection_rate, 85, 7),
        within(100 * scaled.rejection_rate, 85, 7),
        100 * vmf10.rejection_rate >= 92,
    ]
    worst = max(null_rows, key=lambda r: abs(r.rejection_rate - 0.05))
    detail = f"null farthest {fmt(worst)}; {fmt(t7)}; {fmt(scaled)}; {fmt(vmf10)}"
    assert record(5, all(checks), detail)


def test_criterion_6_table3(record):
    M = 300
    null_rows = [cell_rate("table3_row1", n, d, M) for n in (50, 100) for d in (50, 100)]
    t15 = cell_rate("table3_row4", 100, 50, M)
    # common random numbers: the three rho values share replicate streams
    dmn = [cell_rate(f"table3_row{i}", 100, 100, M, base_seed=3005) for i in (5, 6, 7)]
    checks = [within(100 * r.rejection_rate, 5, 4) for r in null_rows]
    checks.append(within(100 * t15.rejection_rate, 42, 9))
    checks += [within(100 * r.rejection_rate, 74, 8) for r in dmn]
    for a in range(3):
        for b in range(a + 1, 3):
            se = math.hypot(dmn[a].mc_stderr, dmn[b].mc_stderr)
            checks.append(abs(dmn[a].rejection_rate - dmn[b].rejection_rate) <= 2 * se)
    worst = max(null_rows, key=lambda r: abs(r.rejection_rate - 0.05))
    detail = f"null farthest {fmt(worst)}; {fmt(t15)}; DMN " + ", ".join(
        f"{100 * r.rejection_rate:.1f}%" for r in dmn
    )
    assert record(6, all(checks), detail)


def test_criterion_7_table4(record):
    M, B = 300, 200
    null_rows = [cell_rate("table4_row1", n, d, M, B) for n in (100, 200) for d in (100, 200, 300, 1000)]
    vmf10 = cell_rate("table4_row7", 100, 100, M, B)
    vmf10_hi = cell_rate("table4_row7", 100, 1000, M, B)
    cauchy = cell_rate("table4_row9", 100, 100, M, B)
    checks = [within(100 * r.rejection_rate, 5, 4) for r in null_rows] + [
        100 * vmf10.rejection_rate >= 95,
        100 * vmf10_hi.rejection_rate <= 12,
        100 * cauchy.rejection_rate >= 92,
    ]
    worst = max(null_rows, key=lambda r: abs(r.rejection_rate - 0.05))
    detail = f"null farthest {fmt(worst)}; {fmt(vmf10)}; {fmt(vmf10_hi)}; {fmt(cauchy)}"
    assert record(7, all(checks), detail)


def test_criterion_8_oracles(record):
    results = run_oracles()
    failed = [r.name for r in results if not r.passed]
    detail = f"{len(results) - len(failed)}/{len(results)} oracles pass" + (f"; failing: {failed}" if failed else "")
    assert record(8, not failed, detail)


def test_criterion_9_determinism(record, tmp_path, capsys):
    outputs = {}
    for scenario, extra in (
        ("table1_row1", ["--M", "60", "--n", "100", "--d", "100", "200"]),
        ("table2_row12", ["--M", "12", "--B", "40", "--n", "100", "--d", "100"]),
    ):
        for workers in (1, 2, 3):
            path = tmp_path / f"{scenario}_{workers}.csv"
            code = main(["simulate", "--scenario", scenario, *extra, "--workers", str(workers), "--out", str(path)])
            assert code == 0
            outputs.setdefault(scenario, []).append(path.read_bytes())
    capsys.readouterr()
    same = all(len(set(v)) == 1 for v in outputs.values())
    assert record(9, same, "simulate CSV byte-identical for --workers 1, 2, 3" if same else "CSV differs across workers")
