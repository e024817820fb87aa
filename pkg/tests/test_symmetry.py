import math

import numpy as np
import pytest
from scipy import stats
from scipy.stats import ortho_group

from hdsobolev.radial import BootstrapConfig, RadialNull
from hdsobolev.sampling import (
    VMF,
    MVNormal,
    Product,
    RadiusLaw,
    RngStream,
    sample_integrated_tangent_vmf,
    sample_mvnormal,
    sample_mvt,
    sample_tangent_vmf,
    uniform_sphere,
)
from hdsobolev.sobolev import BINGHAM, RAYLEIGH, SphereSample, statistic
from hdsobolev.specfun import DomainError
from hdsobolev.symmetry import (
    DegenerateSignError,
    TangentFrame,
    fisher_combine,
    gof_composite,
    gof_simple,
    project_radius,
    rotsym_test,
    tangent_signs,
)


def test_project_radius_example():
    s, r = project_radius([[3.0, 4.0]])
    assert s.data == pytest.approx(np.array([[0.6, 0.8]]))
    assert r == pytest.approx([5.0])


def test_project_radius_reconstruction_and_chi2_mean():
    n, D = 2000, 50
    x = sample_mvnormal(RngStream(1), n, D)
    s, r = project_radius(x)
    assert np.abs(s.data * r[:, None] - x).max() < 1e-12
    assert abs(np.mean(r**2) - D) < 4 * math.sqrt(100 / n)


def test_project_radius_zero_row():
    with pytest.raises(DomainError, match="row 1"):
        project_radius([[1.0, 2.0], [0.0, 0.0]])


def test_tangent_frame_norm_identity():
    theta = uniform_sphere(RngStream(2), 1, 6).data[0]
    f = TangentFrame(theta)
    assert np.abs(f.to_tangent(theta)).max() < 1e-12
    x = uniform_sphere(RngStream(3), 50, 6).data
    norms = np.linalg.norm(f.to_tangent(x), axis=1)
    assert norms == pytest.approx(np.sqrt(1 - (x @ theta) ** 2), abs=1e-9)


def test_tangent_signs_two_plane():
    theta = np.array([0.0, 0.0, 1.0, 0.0])
    t = np.array([1.0, 0.0, 0.0, 0.0])
    alpha = 0.7
    x = np.cos(alpha) * theta + np.sin(alpha) * t
    signs, cos = tangent_signs(x[None, :], theta)
    assert cos[0] == pytest.approx(math.cos(alpha))
    assert TangentFrame(theta).from_tangent(signs.data)[0] == pytest.approx(t, abs=1e-12)


def test_tangent_signs_reconstruction():
    theta = uniform_sphere(RngStream(4), 1, 5).data[0]
    x = uniform_sphere(RngStream(5), 100, 5).data
    signs, v = tangent_signs(x, theta)
    rebuilt = TangentFrame(theta).compose(v, signs.data)
    assert np.abs(rebuilt - x).max() < 1e-9


def test_tangent_signs_degenerate():
    theta = np.eye(4)[1]
    x = np.vstack([np.eye(4)[0], -theta])
    with pytest.raises(DegenerateSignError, match="row 1"):
        tangent_signs(x, theta)
    with pytest.raises(DomainError):
        tangent_signs(uniform_sphere(RngStream(0), 3, 3), np.eye(3)[0])


def test_rotsym_does_not_depend_on_the_complement():
    # another complement differs by a rotation of the signs
    theta = np.eye(8)[0]
    x = sample_tangent_vmf(RngStream(6), 60, theta, np.eye(7)[0], 3.0).data
    signs, _ = tangent_signs(x, theta)
    rot = ortho_group.rvs(7, random_state=3)
    a = statistic(signs, RAYLEIGH).standardized
    b = statistic(SphereSample(signs.data @ rot), RAYLEIGH).standardized
    assert a == pytest.approx(b, abs=1e-9)


def test_rotsym_null_standardized_mean():
    theta = np.eye(101)[0]
    z = [
        rotsym_test(sample_tangent_vmf(RngStream(7, m), 100, theta, np.eye(100)[0], 0.0), theta).standardized
        for m in range(2000)
    ]
    assert abs(np.mean(z)) < 0.05


def test_rotsym_local_alternative_means():
    n, d = 100, 100
    theta = np.eye(d + 1)[0]
    kappa = 2 ** 0.25 * d ** 0.75 / math.sqrt(n)  # tau^2 = sqrt(2)
    ray, bing = [], []
    for m in range(1000):
        x = sample_integrated_tangent_vmf(RngStream(8, m), n, theta, kappa)
        signs, _ = tangent_signs(x, theta)
        g = signs.data @ signs.data.T
        ray.append(statistic(signs, RAYLEIGH, gram=g).standardized)
        bing.append(statistic(signs, BINGHAM, gram=g).standardized)
    assert np.mean(ray) == pytest.approx(1.0, abs=0.15)
    assert np.mean(bing) == pytest.approx(0.0, abs=0.1)


def test_fisher_combine():
    g, p = fisher_combine(0.2, 0.5)
    assert g == pytest.approx(-2 * (math.log(0.2) + math.log(0.5)))
    assert p == pytest.approx(stats.chi2(4).sf(g), rel=1e-12)
    g, p = fisher_combine(0.0, 0.0)
    assert math.isfinite(g) and g == pytest.approx(4 * 300 * math.log(10))
    assert p == 0.0
    assert fisher_combine(1.0, 1.0) == (0.0, 1.0)


def test_gof_simple_report_fields():
    x = sample_mvnormal(RngStream(9), 100, 20)
    rep = gof_simple(x, RadialNull.normal(20))
    assert rep.mode == "simple"
    assert rep.D == 20 and rep.n == 100
    assert rep.G_n == pytest.approx(-2 * (math.log(rep.radial_p) + math.log(rep.directional_p)))
    assert rep.p_value == pytest.approx(math.exp(-rep.G_n / 2) * (1 + rep.G_n / 2))
    assert -1 <= rep.radius_kernel_corr <= 1
    d = rep.to_dict()
    assert d["null"] == "normal" and d["scheme"] == "rayleigh"


def test_gof_rotation_invariance():
    x = sample_mvt(RngStream(10), 80, 12, 4.0)
    rot = ortho_group.rvs(12, random_state=5)
    a = gof_simple(x, RadialNull.student(12, 4.0))
    b = gof_simple(x @ rot, RadialNull.student(12, 4.0))
    assert a.G_n == pytest.approx(b.G_n, rel=1e-8)


def test_gof_argument_checks():
    x = sample_mvnormal(RngStream(11), 20, 5)
    with pytest.raises(ValueError):
        gof_simple(x, RadialNull.student(5))
    with pytest.raises(DomainError):
        gof_simple(x, RadialNull.normal(6))


def _rate(fn, M):
    return np.mean([fn(m) < 0.05 for m in range(M)])


def test_gof_simple_normal_level():
    null = RadialNull.normal(100)
    rate = _rate(lambda m: gof_simple(sample_mvnormal(RngStream(12, m), 100, 100), null).p_value, 2000)
    assert 0.035 <= rate <= 0.065


def test_gof_simple_t10_power():
    null = RadialNull.normal(100)
    rate = _rate(lambda m: gof_simple(sample_mvt(RngStream(13, m), 100, 100, 10.0), null).p_value, 200)
    assert rate >= 0.99


def test_gof_simple_stable_level():
    null = RadialNull.stable(50, 1.0)
    model = Product(MVNormal(50), RadiusLaw("sqrt_stable", {"beta": 1.0}))
    rate = _rate(lambda m: gof_simple(model.sample(RngStream(14, m), 100), null).p_value, 1000)
    assert abs(rate - 0.05) <= 0.015


def test_simple_stage_p_values_independent():
    null = RadialNull.normal(30)
    pr, pd = [], []
    for m in range(2000):
        rep = gof_simple(sample_mvnormal(RngStream(15, m), 50, 30), null)
        pr.append(rep.radial_p)
        pd.append(rep.directional_p)
    table = np.histogram2d(pr, pd, bins=4, range=[[0, 1], [0, 1]])[0]
    assert stats.chi2_contingency(table)[1] > 0.001


def test_composite_report_fields():
    x = sample_mvt(RngStream(16), 100, 30, 5.0)
    rep = gof_composite(x, RadialNull.student(30), cfg=BootstrapConfig(50, RngStream(1)))
    assert rep.mode == "composite(50)"
    assert rep.B == 50
    assert "estimate_nu" in rep.to_dict()
    assert rep.null == "student-est"


def test_composite_with_fixed_null_matches_simple():
    null = RadialNull.normal(50)
    M = 1000
    simple = _rate(lambda m: gof_simple(sample_mvnormal(RngStream(17, m), 100, 50), null).p_value, M)
    boot = _rate(
        lambda m: gof_composite(
            sample_mvnormal(RngStream(17, m), 100, 50), null, cfg=BootstrapConfig(200, RngStream(18, m), stride=M)
        ).p_value,
        M,
    )
    assert abs(simple - boot) <= 0.02


def test_composite_power_vmf10_gamma():
    model = Product(VMF(99, 10.0), RadiusLaw("gamma", {"shape": 2.0, "scale": 5.0}))
    null = RadialNull.gamma(100, on="radius")
    rate = _rate(
        lambda m: gof_composite(model.sample(RngStream(19, m), 100), null, cfg=BootstrapConfig(200, RngStream(20, m), stride=100)).p_value,
        100,
    )
    assert rate >= 0.95


def test_composite_power_scaled_t():
    null = RadialNull.student(100)
    rate = _rate(
        lambda m: gof_composite(
            sample_mvt(RngStream(21, m), 100, 100, 5.0, scale=0.8), null, cfg=BootstrapConfig(200, RngStream(22, m), stride=100)
        ).p_value,
        100,
    )
    assert rate >= 0.75
