import json
import math

import jsonschema
import numpy as np
import pytest
from scipy.special import kolmogorov

from hdsobolev.montecarlo import (
    ReplicateError,
    RejectionRow,
    Scenario,
    TestSpec,
    build_model,
    build_test,
    bundled_scenarios,
    convergence_experiment,
    kolmogorov_sf,
    ks_one_sample,
    load_scenarios,
    rows_to_csv,
    rows_to_json,
    run_replicate,
    run_scenario,
    scenarios_from_dict,
)
from hdsobolev.sampling import (
    DMN,
    MVT,
    VMF,
    IntegratedTangentVMF,
    IntegratedVMF,
    MVNormal,
    Product,
    SkewT,
    TangentVMF,
    UniformSphere,
)
from hdsobolev.sobolev import Finite
from hdsobolev.specfun import normal_cdf


@pytest.mark.parametrize("lam", [0.05, 0.2, 0.5, 0.8, 0.99, 1.0, 1.2, 1.36, 2.0, 3.0, 5.0])
def test_kolmogorov_sf_against_scipy(lam):
    assert kolmogorov_sf(lam) == pytest.approx(kolmogorov(lam), abs=1e-6)


def test_kolmogorov_sf_edges():
    assert kolmogorov_sf(0.0) == 1.0
    assert kolmogorov_sf(1.36) == pytest.approx(0.05, abs=0.002)
    assert kolmogorov_sf(10.0) == 0.0 or kolmogorov_sf(10.0) < 1e-80


def test_ks_examples():
    n = 50
    q = (np.arange(1, n + 1) - 0.5) / n
    dist, _ = ks_one_sample(q, lambda x: x)
    assert dist == pytest.approx(0.5 / n)
    dist, p = ks_one_sample([0.0], normal_cdf)
    assert dist == 0.5
    with pytest.raises(ValueError):
        ks_one_sample([], normal_cdf)


def test_rejection_row():
    row = RejectionRow("s", "m", "t", 10, 5, 400, 0.05, 20)
    assert row.rejection_rate == 0.05
    assert row.mc_stderr == pytest.approx(math.sqrt(0.05 * 0.95 / 400))


def test_build_model_variants():
    assert build_model({"type": "uniform"}, 11, 50) == UniformSphere(10)
    assert isinstance(build_model({"type": "vmf", "kappa": 2}, 11, 50), VMF)
    iv = build_model({"type": "integrated_vmf", "tau2": 2.0}, 101, 400)
    assert isinstance(iv, IntegratedVMF)
    assert iv.kappa == pytest.approx(math.sqrt(2.0) * 100**0.75 / 20)
    tv = build_model({"type": "integrated_tangent_vmf", "tau2": 2.0}, 101, 400)
    assert isinstance(tv, IntegratedTangentVMF)
    assert tv.kappa == pytest.approx(iv.kappa)
    assert isinstance(build_model({"type": "tangent_vmf"}, 5, 10), TangentVMF)
    nm = build_model({"type": "normal", "sigma_p": 0.5}, 4, 10)
    assert isinstance(nm, MVNormal) and list(nm.cov) == [0.5, 0.5, 1.5, 1.5]
    assert isinstance(build_model({"type": "t", "nu": 5}, 4, 10), MVT)
    sk = build_model({"type": "skew_t", "nu": 5, "omega": "equicorrelated", "xi": "e1"}, 3, 10)
    assert isinstance(sk, SkewT)
    assert sk.omega[0, 1] == 0.25 and sk.omega[0, 0] == 1.0
    assert list(sk.xi) == [1.0, 0.0, 0.0]
    assert build_model({"type": "dmn", "rho": 0.5}, 4, 10) == DMN(4, 0.5)
    pr = build_model({"type": "product", "base": {"type": "vmf", "kappa": 1}, "radius": {"family": "chi", "df": "d"}}, 7, 10)
    assert isinstance(pr, Product) and pr.radius.params == {"df": 7} and pr.base.d == 6
    with pytest.raises(ValueError):
        build_model({"type": "laplace"}, 3, 10)


def test_build_test_checks_null():
    assert build_test({"type": "gof_simple", "null": "normal"}).null == "normal"
    with pytest.raises(ValueError):
        build_test({"type": "gof_simple", "null": "student-est"})
    with pytest.raises(ValueError):
        build_test({"type": "gof_composite", "null": "normal"})
    with pytest.raises(ValueError):
        build_test({"type": "gof_simple"})
    assert TestSpec("gof_composite", null="gamma-est", B=7).label == "gof_composite(gamma-est;rayleigh;B=7)"


DOC = {
    "id": "demo",
    "model": {"type": "uniform"},
    "test": {"type": "uniformity", "scheme": "finite:3"},
    "n": [20, 30],
    "d": [4, 5, 6],
    "M": 40,
    "base_seed": 9,
}


def test_scenarios_from_dict_expands_grid():
    cells = scenarios_from_dict(DOC)
    assert len(cells) == 6
    assert cells[0].id == "demo_n20_d4"
    assert cells[-1].id == "demo_n30_d6"
    assert cells[0].test.scheme == Finite(3)
    assert cells[0].model == UniformSphere(4)
    assert cells[0].M == 40 and cells[0].base_seed == 9
    over = scenarios_from_dict(DOC, M=5, base_seed=3)
    assert over[0].M == 5 and over[0].base_seed == 3


def test_euclidean_dimension_convention():
    doc = {"id": "x", "model": {"type": "normal"}, "test": {"type": "gof_simple", "null": "normal"}, "n": 10, "d": 7}
    (cell,) = scenarios_from_dict(doc)
    assert cell.model.dim == 7


@pytest.mark.parametrize(
    "patch",
    [
        {"n": 0},
        {"M": 0},
        {"model": {"type": "uniform", "kappa": "big"}},
        {"test": {"type": "bootstrap"}},
        {"level": 1.5},
    ],
)
def test_schema_rejects(patch):
    with pytest.raises((jsonschema.ValidationError, ValueError)):
        scenarios_from_dict({**DOC, **patch})


def test_scenario_validation():
    with pytest.raises(ValueError):
        Scenario("x", UniformSphere(3), 10, 3, TestSpec("uniformity"), M=0)
    with pytest.raises(ValueError):
        Scenario("x", UniformSphere(3), 10, 3, TestSpec("uniformity"), level=0.0)


def test_all_bundled_scenarios_load():
    names = bundled_scenarios()
    assert len(names) == 57
    total = 0
    for name in names:
        cells = load_scenarios(name)
        assert cells and all(c.level == 0.05 for c in cells)
        total += len(cells)
    assert total == 468


def test_load_scenarios_from_path(tmp_path):
    import yaml

    path = tmp_path / "s.yaml"
    path.write_text(yaml.safe_dump(DOC))
    assert len(load_scenarios(path, M=3)) == 6
    with pytest.raises(FileNotFoundError):
        load_scenarios(tmp_path / "missing.yaml")


def test_run_replicate_is_deterministic():
    (cell,) = load_scenarios("table2_row12", M=10, B=20)[:1]
    assert run_replicate(cell, 3) == run_replicate(cell, 3)


def test_run_scenario_determinism_across_workers():
    cell = scenarios_from_dict(DOC, M=30)[0]
    a = run_scenario(cell, workers=1)
    b = run_scenario(cell, workers=3)
    assert a == b


def test_replicate_errors_carry_index():
    cell = Scenario("bad", MVNormal(3), 10, 4, TestSpec("gof_simple", null="normal"), M=3)
    with pytest.raises(ReplicateError) as info:
        run_scenario(cell)
    assert info.value.index == 0


def test_csv_and_json_output():
    rows = [RejectionRow("a", "m", "t", 10, 5, 100, 0.05, 7, wall_time=1.5)]
    text = rows_to_csv(rows)
    header, line = text.strip().splitlines()
    assert header == "scenario,model,test,n,d,M,level,rejections,rejection_rate,mc_stderr"
    assert line.startswith("a,m,t,10,5,100,0.05,7,0.07,")
    data = json.loads(rows_to_json(rows))
    assert data[0]["rejection_rate"] == 0.07
    assert data[0]["wall_time"] == 1.5


def test_uniform_rayleigh_calibration():
    (cell,) = scenarios_from_dict(
        {"id": "cal", "model": {"type": "uniform"}, "test": {"type": "uniformity"}, "n": 100, "d": 100, "M": 2000}
    )
    assert 0.035 <= run_scenario(cell).rejection_rate <= 0.065


def test_mc_stderr_consistency():
    rows = [
        run_scenario(scenarios_from_dict({**DOC, "n": 50, "d": 10, "base_seed": s}, M=500)[0]) for s in (1, 2, 3, 4)
    ]
    rates = np.array([r.rejection_rate for r in rows])
    se = max(r.mc_stderr for r in rows)
    assert np.all(np.abs(rates - rates.mean()) <= 4 * se)


def test_table3_t15_row():
    cell = [c for c in load_scenarios("table3_row4", M=500) if c.n == 100 and c.d == 50][0]
    assert run_scenario(cell).rejection_rate == pytest.approx(0.42, abs=0.06)


def test_table4_power_increases_with_kappa():
    rows = []
    for name in ("table4_row1", "table4_row6", "table4_row7", "table4_row8"):
        cell = [c for c in load_scenarios(name, M=100) if c.n == 100 and c.d == 100][0]
        rows.append(run_scenario(cell))
    for lo, hi in zip(rows, rows[1:]):
        assert hi.rejection_rate >= lo.rejection_rate - 2 * max(lo.mc_stderr, hi.mc_stderr, 1 / hi.M)
    assert rows[-1].rejection_rate >= 0.95


def test_convergence_report():
    rep = convergence_experiment(UniformSphere(50), 40, 300, 1)
    assert rep.values.size == 300
    assert rep.counts.sum() == 300
    assert 0 <= rep.ks_distance <= 1
    assert rep.ks_p > 0.001
    csv = rep.histogram_csv().splitlines()
    assert csv[0] == "left,right,count" and len(csv) == rep.counts.size + 1
    assert rep.summary()["M"] == 300


def test_convergence_with_scheme_and_shift():
    rep = convergence_experiment(UniformSphere(30), 40, 200, Finite(2), target_mean=3.0)
    assert rep.ks_p < 1e-6
