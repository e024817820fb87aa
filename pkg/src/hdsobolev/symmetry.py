"""Rotational- and spherical-symmetry tests built on the Sobolev statistics.

*Rotational symmetry* about a known axis ``theta`` on S^d is tested through
the multivariate signs ``u = Gamma' x / |Gamma' x|``, which are uniform on
S^{d-1} under the null.

*Spherical symmetry* in R^D is tested by splitting each point into its
radius and direction: the radius is checked against a radial null with the
Anderson-Darling statistic, the direction for uniformity with a Sobolev
statistic, and the two p-values are merged with Fisher's method.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .frame import TangentFrame
from .radial import (
    BootstrapConfig,
    RadialNull,
    ad_limit_sf,
    ad_statistic,
    bootstrap_test,
)
from .sobolev import RAYLEIGH, SphereSample, WeightScheme, psi_kernel, statistic
from .specfun import DomainError

__all__ = [
    "TangentFrame",
    "DegenerateSignError",
    "GofReport",
    "project_radius",
    "tangent_signs",
    "rotsym_test",
    "fisher_combine",
    "gof_simple",
    "gof_composite",
]

P_FLOOR = 1e-300
SIGN_TOL = 1e-12


class DegenerateSignError(DomainError):
    """A point coincides with the axis, so its sign is undefined."""


@dataclass(frozen=True)
class GofReport:
    """Outcome of the spherical-symmetry test.

    ``radius_kernel_corr`` is the Pearson correlation between the radii and
    the per-point sums of the directional kernel. It is reported for
    inspection and plays no part in the decision.
    """

    A_n: float
    radial_p: float
    T_n: float
    directional_p: float
    G_n: float
    p_value: float
    mode: str
    n: int
    D: int
    null: str
    scheme: str
    B: int = 0
    estimate: dict = field(default_factory=dict)
    bootstrap_failures: int = 0
    radius_kernel_corr: float = float("nan")

    __test__ = False

    def to_dict(self) -> dict:
        """Flat key-value form; estimated parameters become ``estimate_<name>``."""
        out = asdict(self)
        for key, value in out.pop("estimate").items():
            out[f"estimate_{key}"] = value
        return out


def project_radius(points) -> tuple[SphereSample, np.ndarray]:
    """Split rows of ``points`` into unit directions and norms."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if x.shape[1] < 2:
        raise DomainError("points need dimension >= 2")
    if not np.all(np.isfinite(x)):
        raise DomainError("points contain non-finite values")
    radii = np.linalg.norm(x, axis=1)
    zero = np.flatnonzero(radii == 0)
    if zero.size:
        raise DomainError(f"row {zero[0]} is the zero vector and has no direction")
    return SphereSample(x / radii[:, None]), radii


def tangent_signs(sample, theta) -> tuple[SphereSample, np.ndarray]:
    """Multivariate signs and cosines of ``sample`` about ``theta``.

    Returns the signs as a sample on S^{D-2} and the cosines ``x' theta``.
    """
    x = sample.data if isinstance(sample, SphereSample) else SphereSample(sample).data
    frame = TangentFrame(theta)
    if x.shape[1] != frame.dim:
        raise DomainError(f"theta has dimension {frame.dim}, sample has {x.shape[1]}")
    if frame.dim < 3:
        raise DomainError("signs need an ambient dimension of at least 3")
    tangent = frame.to_tangent(x)
    norms = np.linalg.norm(tangent, axis=1)
    bad = np.flatnonzero(norms <= SIGN_TOL)
    if bad.size:
        raise DegenerateSignError(f"row {bad[0]} lies on the axis (within {SIGN_TOL:g} of +-theta)")
    return SphereSample(tangent / norms[:, None]), x @ frame.theta


def rotsym_test(sample, theta, scheme: WeightScheme = RAYLEIGH):
    """Sobolev uniformity test applied to the signs about ``theta``."""
    signs, _ = tangent_signs(sample, theta)
    return statistic(signs, scheme)


def fisher_combine(p_radial: float, p_directional: float) -> tuple[float, float]:
    """Fisher statistic ``G = -2 (ln p1 + ln p2)`` and ``exp(-G/2) (1 + G/2)``.

    p-values are floored at 1e-300 so ``G`` stays finite.
    """
    g = -2.0 * (math.log(max(p_radial, P_FLOOR)) + math.log(max(p_directional, P_FLOOR)))
    return g, math.exp(-g / 2.0) * (1.0 + g / 2.0)


def _directional_stage(directions: SphereSample, radii, scheme):
    gram = directions.data @ directions.data.T
    report = statistic(directions, scheme, gram=gram)
    corr = float("nan")
    if directions.n > 2:
        kern = psi_kernel(scheme, directions.d, np.clip(gram, -1.0, 1.0))
        np.fill_diagonal(kern, 0.0)
        rows = kern.sum(axis=1)
        if np.std(rows) > 0 and np.std(radii) > 0:
            corr = float(np.corrcoef(radii, rows)[0, 1])
    return report, corr


def gof_simple(points, null: RadialNull, scheme: WeightScheme = RAYLEIGH) -> GofReport:
    """Spherical-symmetry test against a fully specified radial null."""
    if null.composite:
        raise ValueError(f"{null.label} has free parameters; use gof_composite")
    directions, radii = project_radius(points)
    _check_dim(null, directions)
    a_n = ad_statistic(radii, null)
    p_r = ad_limit_sf(a_n)
    report, corr = _directional_stage(directions, radii, scheme)
    g, p = fisher_combine(p_r, report.p_value)
    return GofReport(
        A_n=a_n,
        radial_p=p_r,
        T_n=report.standardized,
        directional_p=report.p_value,
        G_n=g,
        p_value=p,
        mode="simple",
        n=directions.n,
        D=directions.d + 1,
        null=null.label,
        scheme=scheme.label,
        radius_kernel_corr=corr,
    )


def gof_composite(
    points, null: RadialNull, scheme: WeightScheme = RAYLEIGH, cfg: BootstrapConfig | None = None
) -> GofReport:
    """Spherical-symmetry test with estimated radial parameters.

    The directions are kept as observed; only the radial p-value comes from
    the parametric bootstrap.
    """
    cfg = cfg or BootstrapConfig()
    directions, radii = project_radius(points)
    _check_dim(null, directions)
    boot = bootstrap_test(radii, null, cfg)
    report, corr = _directional_stage(directions, radii, scheme)
    g, p = fisher_combine(boot.p_value, report.p_value)
    return GofReport(
        A_n=boot.statistic,
        radial_p=boot.p_value,
        T_n=report.standardized,
        directional_p=report.p_value,
        G_n=g,
        p_value=p,
        mode=f"composite({cfg.B})",
        n=directions.n,
        D=directions.d + 1,
        null=null.label,
        scheme=scheme.label,
        B=cfg.B,
        estimate=boot.estimate,
        bootstrap_failures=boot.failures,
        radius_kernel_corr=corr,
    )


def _check_dim(null: RadialNull, directions: SphereSample):
    if null.D != directions.d + 1:
        raise DomainError(f"null is for dimension {null.D}, data have {directions.d + 1}")
