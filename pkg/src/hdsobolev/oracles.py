"""Independent numerical checks of the core machinery.

Each oracle compares a package quantity with something computed another
way: exact Gauss quadrature, a closed form, or a fresh Monte Carlo sample.
They back the ``selftest`` command and finish within a minute.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, roots_gegenbauer

from .montecarlo import ks_one_sample
from .radial import RadialNull, ad_limit_cdf, ad_statistic_from_uniforms
from .sampling import RngStream, positive_stable, uniform_sphere
from .sobolev import (
    BINGHAM,
    RAYLEIGH,
    DecayAdjusted,
    Finite,
    Hybrid,
    KSobolev,
    psi_kernel,
    sigma_n,
)
from .specfun import (
    gegenbauer_all,
    gegenbauer_norm,
    harmonic_dim,
    log_surface_area,
)

__all__ = ["OracleResult", "ORACLES", "run_oracles"]

SCHEMES = (RAYLEIGH, BINGHAM, KSobolev(3), Hybrid(), Finite(3), DecayAdjusted(3))


@dataclass(frozen=True)
class OracleResult:
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.threshold)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: {self.value:.3g} (limit {self.threshold:g})"


def _projected_rule(d, m=64):
    """Gauss rule for the density of ``x' e`` when ``x`` is uniform on S^d."""
    x, w = roots_gegenbauer(m, (d - 1) / 2.0)
    return x, w * math.exp(log_surface_area(d - 1) - log_surface_area(d))


def gegenbauer_orthogonality():
    """Max relative deviation of ``int C_k C_l w`` from ``delta_kl c_{k,d}``."""
    worst = 0.0
    for d in (2, 3, 5, 10, 50):
        x, w = roots_gegenbauer(32, (d - 1) / 2.0)
        c = gegenbauer_all(4, d, x)[1:]
        gram = (c * w) @ c.T
        norms = np.array([gegenbauer_norm(k, d) for k in range(1, 5)])
        worst = max(worst, float(np.max(np.abs(gram - np.diag(norms)) / norms[:, None])))
    return OracleResult("Gegenbauer orthogonality and norms", worst, 1e-8)


def harmonic_dim_identity():
    worst = 0.0
    for d in range(2, 301):
        for k in range(1, 11):
            a, b = harmonic_dim(k, d), harmonic_dim(k, d, method="binomial")
            worst = max(worst, abs(a - b) / b)
    return OracleResult("harmonic dimension: gamma vs binomial form", worst, 1e-10)


def dot_product_moments(pairs=200_000):
    """Largest |MC mean - exact| / SE of ``(X1' X2)^{2m}``, m <= 3."""
    worst = 0.0
    for i, d in enumerate((2, 10, 100)):
        x = uniform_sphere(RngStream(11, 2 * i), pairs, d).data
        y = uniform_sphere(RngStream(11, 2 * i + 1), pairs, d).data
        dots = np.einsum("ij,ij->i", x, y)
        for m in (1, 2, 3):
            exact = math.prod((1 + 2 * r) / (d + 1 + 2 * r) for r in range(m))
            v = dots ** (2 * m)
            worst = max(worst, abs(v.mean() - exact) / (v.std(ddof=1) / math.sqrt(pairs)))
    return OracleResult("dot-product moments (|z| of MC mean)", worst, 4.0)


def centered_kernel():
    """``E psi(X' e) / sigma_n`` under uniformity; exact Gauss rule."""
    worst = 0.0
    for d in (3, 10, 50):
        x, w = _projected_rule(d)
        for s in SCHEMES:
            worst = max(worst, abs(float(psi_kernel(s, d, x) @ w)) / sigma_n(s, d))
    return OracleResult("kernel has mean zero under uniformity", worst, 1e-8)


def kernel_second_moment():
    """``E (psi / sigma_n)^2 = 1/2`` under uniformity."""
    worst = 0.0
    for d in (3, 10, 50):
        x, w = _projected_rule(d)
        for s in SCHEMES:
            z = psi_kernel(s, d, x) / sigma_n(s, d)
            worst = max(worst, abs(float(z**2 @ w) - 0.5))
    return OracleResult("standardized kernel second moment is 1/2", worst, 1e-6)


def ad_table_vs_monte_carlo(samples=100_000, n=500):
    gen = RngStream(12).generator()
    stats = np.concatenate(
        [ad_statistic_from_uniforms(gen.random((5000, n)), axis=1) for _ in range(samples // 5000)]
    )
    dist, _ = ks_one_sample(stats, ad_limit_cdf)
    return OracleResult(f"AD limit table vs {samples} simulated statistics (KS)", dist, 0.01)


def radial_pit(n=10_000):
    """Worst KS distance of the CDF applied to the family's own draws."""
    nulls = [
        RadialNull.normal(10),
        RadialNull.normal(100),
        RadialNull.student(10, 5.0),
        RadialNull.student(100, 1.5),
        RadialNull.stable(10, 1.0),
        RadialNull.stable(50, 0.8),
        RadialNull.gamma(10, 2.0, 5.0),
        RadialNull.gamma(10, 2.0, 5.0, on="radius"),
    ]
    worst = 0.0
    for i, null in enumerate(nulls):
        r = null.sample(RngStream(13, i), n)
        worst = max(worst, ks_one_sample(r, null.cdf)[0])
    return OracleResult("radial CDFs vs their samplers (worst KS)", worst, 0.02)


def levy_vs_sampler(n=100_000):
    a = positive_stable(RngStream(14), n, 1.0)
    dist, _ = ks_one_sample(a, lambda x: erfc(np.sqrt(1.0 / (2.0 * x))))
    return OracleResult("stable sampler at beta=1 vs Levy CDF (KS)", dist, 0.01)


ORACLES = (
    gegenbauer_orthogonality,
    harmonic_dim_identity,
    dot_product_moments,
    centered_kernel,
    kernel_second_moment,
    ad_table_vs_monte_carlo,
    radial_pit,
    levy_vs_sampler,
)


def run_oracles() -> list[OracleResult]:
    return [oracle() for oracle in ORACLES]
