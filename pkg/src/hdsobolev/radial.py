"""Goodness of fit for the radius of a spherically symmetric law.

Radial null families (``D`` is the Euclidean dimension of the data):

* ``normal``   ``|X|^2 ~ chi2_D``
* ``student``  ``|X|^2 / D ~ F_{D, nu}`` (``nu`` may be estimated)
* ``stable``   ``|X|^2 ~ A T`` with ``A`` positive stable and ``T ~ chi2_D``
* ``gamma``    ``|X|^2 ~ Gamma(shape, scale)``, or ``|X| ~ Gamma`` with
  ``on="radius"`` (both parameters may be estimated)

The radial stage uses the Anderson-Darling statistic. Its null limit is read
from a shipped table; composite nulls are calibrated by parametric bootstrap.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.special import erfc, gammaln, roots_legendre

from .sampling import RngStream, as_generator, positive_stable
from .specfun import (
    digamma,
    reg_incomplete_beta,
    reg_incomplete_gamma,
    reg_incomplete_gamma_inv,
    trigamma,
)

__all__ = [
    "EstimationError",
    "QuadratureError",
    "RadialNull",
    "parse_null",
    "BootstrapConfig",
    "BootstrapResult",
    "ad_statistic",
    "ad_statistic_from_uniforms",
    "ad_limit_cdf",
    "ad_limit_sf",
    "radial_cdf",
    "stable_cdf",
    "mle_gamma",
    "mle_student_nu",
    "bootstrap_test",
    "bootstrap_pvalue",
]

log = logging.getLogger(__name__)

U_MIN = 1e-300
U_MAX = 1.0 - 1e-16
NU_BOUNDS = (0.1, 1000.0)


class EstimationError(RuntimeError):
    """A maximum-likelihood fit failed."""


class QuadratureError(RuntimeError):
    """The stable radial CDF quadrature did not reach its tolerance."""


@dataclass(frozen=True, eq=False)
class RadialNull:
    """A radial null family for data in R^D.

    ``params`` holds the parameter values (``None`` for unknown ones) and
    ``estimable`` names the parameters re-estimated from data.
    """

    family: str
    D: int
    params: dict = field(default_factory=dict)
    estimable: tuple = ()

    def __post_init__(self):
        if self.family not in ("normal", "student", "stable", "gamma"):
            raise ValueError(f"unknown radial family {self.family!r}")
        if self.D < 1:
            raise ValueError("D must be >= 1")

    @classmethod
    def normal(cls, D):
        return cls("normal", D)

    @classmethod
    def student(cls, D, nu=None):
        """Student radius; ``nu=None`` leaves the degrees of freedom free."""
        return cls("student", D, {"nu": nu}, () if nu is not None else ("nu",))

    @classmethod
    def stable(cls, D, beta=1.0, gamma0=1.0):
        if not 0 < beta < 2:
            raise ValueError("beta must lie in (0, 2)")
        return cls("stable", D, {"beta": beta, "gamma0": gamma0})

    @classmethod
    def gamma(cls, D, shape=None, scale=None, on="squared"):
        """Gamma law for the squared radius (``on="squared"``) or the radius."""
        if on not in ("squared", "radius"):
            raise ValueError("on must be 'squared' or 'radius'")
        free = () if shape is not None and scale is not None else ("shape", "scale")
        return cls("gamma", D, {"shape": shape, "scale": scale, "on": on}, free)

    @property
    def composite(self) -> bool:
        return bool(self.estimable)

    @property
    def label(self) -> str:
        p = self.params
        if self.family == "student":
            return "student-est" if self.composite else f"student:{p['nu']:g}"
        if self.family == "stable":
            g0 = p.get("gamma0", 1.0)
            return f"stable:{p['beta']:g}" + (f",{g0:g}" if g0 != 1.0 else "")
        if self.family == "gamma":
            suffix = "" if p["on"] == "squared" else ":radius"
            if self.composite:
                return "gamma-est" + suffix
            return f"gamma:{p['shape']:g},{p['scale']:g}" + suffix
        return self.family

    def fit(self, radii) -> "RadialNull":
        """Copy with the estimable parameters replaced by their MLE."""
        radii = _check_radii(radii)
        if self.family == "student" and "nu" in self.estimable:
            return replace(self, params={"nu": mle_student_nu(radii, self.D)})
        if self.family == "gamma" and self.estimable:
            y = radii**2 if self.params["on"] == "squared" else radii
            shape, scale = mle_gamma(y)
            return replace(self, params={**self.params, "shape": shape, "scale": scale})
        return self

    def cdf(self, r):
        return radial_cdf(self, r)

    def sample(self, rng, n: int) -> np.ndarray:
        """``n`` radii from the (fully specified) null."""
        self._require_specified()
        gen = as_generator(rng)
        p, D = self.params, self.D
        if self.family == "normal":
            return np.sqrt(gen.chisquare(D, size=n))
        if self.family == "student":
            return np.sqrt(gen.chisquare(D, size=n) * p["nu"] / gen.chisquare(p["nu"], size=n))
        if self.family == "stable":
            a = positive_stable(gen, n, p["beta"], p["gamma0"])
            return np.sqrt(a * gen.chisquare(D, size=n))
        y = gen.gamma(p["shape"], p["scale"], size=n)
        return np.sqrt(y) if p["on"] == "squared" else y

    def _require_specified(self):
        if any(v is None for v in self.params.values()):
            raise ValueError(f"{self.label} has unspecified parameters; fit it first")


def parse_null(text: str, D: int) -> RadialNull:
    """Parse a radial null label.

    ``normal``, ``student:NU``, ``student-est``, ``stable:BETA[,GAMMA0]``,
    ``gamma:SHAPE,SCALE[:radius]`` and ``gamma-est[:radius]``. Gamma laws
    describe the squared radius unless ``:radius`` is appended.
    """
    head, _, rest = text.strip().lower().partition(":")
    try:
        if head == "normal" and not rest:
            return RadialNull.normal(D)
        if head == "student-est" and not rest:
            return RadialNull.student(D)
        if head == "student" and rest:
            return RadialNull.student(D, float(rest))
        if head == "stable":
            vals = [float(v) for v in rest.split(",")] if rest else [1.0]
            return RadialNull.stable(D, *vals)
        if head in ("gamma", "gamma-est"):
            values, _, on = rest.partition(":")
            if head == "gamma-est":
                values, on = "", values or on
            on = {"": "squared", "squared": "squared", "radius": "radius"}[on]
            if head == "gamma-est":
                return RadialNull.gamma(D, on=on)
            shape, scale = (float(v) for v in values.split(","))
            return RadialNull.gamma(D, shape, scale, on=on)
    except (ValueError, KeyError, TypeError):
        pass
    raise ValueError(f"cannot parse radial null {text!r}")


def _check_radii(radii) -> np.ndarray:
    r = np.asarray(radii, dtype=float)
    if r.size == 0:
        raise ValueError("no radii given")
    if np.any(~np.isfinite(r)) or np.any(r < 0):
        raise ValueError("radii must be finite and non-negative")
    return r


# ---------------------------------------------------------------------------
# Anderson-Darling statistic and its limit law


def ad_statistic_from_uniforms(u, axis=-1):
    """Anderson-Darling statistic of probability-integral-transformed data.

    Works along ``axis`` so that many samples can be handled at once.
    """
    u = np.clip(np.sort(np.asarray(u, dtype=float), axis=axis), U_MIN, U_MAX)
    u = np.moveaxis(u, axis, -1)
    n = u.shape[-1]
    if n == 0:
        raise ValueError("empty sample")
    i = np.arange(1, n + 1)
    s = np.sum((2 * i - 1) * (np.log(u) + np.log1p(-u[..., ::-1])), axis=-1)
    out = -n - s / n
    return float(out) if np.ndim(out) == 0 else out


def ad_statistic(radii, null: RadialNull) -> float:
    """Anderson-Darling statistic of ``radii`` against a specified radial null."""
    r = _check_radii(radii)
    return ad_statistic_from_uniforms(radial_cdf(null, r))


@lru_cache(maxsize=1)
def _ad_table():
    text = resources.files("hdsobolev").joinpath("data/ad_limit_cdf.txt").read_text()
    z, f = np.loadtxt(text.splitlines(), unpack=True)
    # log survival slope on the last unit, for extrapolation past the table
    tail = z >= z[-1] - 1.0
    slope = np.polyfit(z[tail], np.log1p(-f[tail]), 1)[0]
    return z, f, slope


def ad_limit_cdf(z):
    """Asymptotic null CDF of the Anderson-Darling statistic."""
    return _ad_limit(z, upper=False)


def ad_limit_sf(z):
    """``1 - ad_limit_cdf(z)``; past the table the log survival is extended linearly."""
    return _ad_limit(z, upper=True)


def _ad_limit(z, upper):
    arr = np.asarray(z, dtype=float)
    if np.any(np.isnan(arr)):
        raise ValueError("NaN statistic")
    zt, ft, slope = _ad_table()
    x = np.maximum(arr, 0.0)
    sf = 1.0 - np.interp(x, zt, ft)
    beyond = x > zt[-1]
    if np.any(beyond):
        sf = np.where(beyond, (1.0 - ft[-1]) * np.exp(slope * (x - zt[-1])), sf)
    out = sf if upper else 1.0 - sf
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# radial CDFs


def _cdf(family, D, params, r):
    """Radial CDF with possibly array-valued parameters (broadcast against ``r``)."""
    r = np.asarray(r, dtype=float)
    if family == "normal":
        return reg_incomplete_gamma(D / 2.0, r * r / 2.0)
    if family == "student":
        nu = np.asarray(params["nu"], dtype=float)
        r2 = r * r
        return reg_incomplete_beta(D / 2.0, nu / 2.0, r2 / (r2 + nu))
    if family == "gamma":
        y = r * r if params["on"] == "squared" else r
        return reg_incomplete_gamma(params["shape"], y / params["scale"])
    return stable_cdf(r * r, D, params["beta"], params.get("gamma0", 1.0))


def radial_cdf(null: RadialNull, r):
    """``P(|X| <= r)`` under a fully specified radial null."""
    null._require_specified()
    r = _check_radii(r)
    out = _cdf(null.family, null.D, null.params, r)
    return float(out) if np.ndim(out) == 0 else out


@lru_cache(maxsize=64)
def _chi2_log_nodes(D, m=256):
    """Gauss-Legendre nodes/weights for E[g(T)], T ~ chi2_D, on the log-T axis."""
    lo = math.log(reg_incomplete_gamma_inv(D / 2.0, 1e-17) * 2.0)
    hi = math.log(reg_incomplete_gamma_inv(D / 2.0, 1e-17, upper=True) * 2.0)
    x, w = roots_legendre(m)
    s = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    t = np.exp(s)
    # density of log T
    logf = (D / 2.0) * np.log(t / 2.0) - t / 2.0 - gammaln(D / 2.0)
    return t, 0.5 * (hi - lo) * w * np.exp(logf)


def _zolotarev_cdf(log_x, alpha, m=256):
    """CDF of the standard positive stable law (``E exp(-t X) = exp(-t^alpha)``).

    Zolotarev's integral ``(1/pi) int_0^pi exp(-a(v) x^{-alpha/(1-alpha)}) dv``.
    For large ``x`` the integrand switches on in a thin layer at ``v = pi``,
    so the rule is Gauss-Legendre in ``u = log(pi - v)`` over 40 e-folds;
    the omitted sliver is shorter than 1e-17.
    """
    y, gw = roots_legendre(m)
    top = math.log(math.pi)
    u = top - 20.0 * (1.0 - y)
    v = math.pi - np.exp(u)
    w = 20.0 * gw * np.exp(u) / math.pi
    a = (
        np.sin(alpha * v) ** (alpha / (1.0 - alpha))
        * np.sin((1.0 - alpha) * v)
        / np.sin(v) ** (1.0 / (1.0 - alpha))
    )
    c = alpha / (1.0 - alpha)
    out = np.empty(len(log_x))
    for lo in range(0, len(log_x), 4096):
        chunk = np.exp(-c * log_x[lo : lo + 4096])
        out[lo : lo + 4096] = np.exp(-np.outer(chunk, a)) @ w
    return out


@lru_cache(maxsize=16)
def _stable_spline(alpha):
    """Cubic spline of the standard positive stable CDF against ``log x``.

    Below the grid the CDF is under ``exp(-745)``; above it the survival
    ``x^{-alpha} / Gamma(1 - alpha)`` is below 1e-17.
    """
    from scipy.interpolate import CubicSpline

    c = alpha / (1.0 - alpha)
    a0 = alpha ** c * (1.0 - alpha)  # a(v) at v -> 0, its minimum
    lo = -math.log(745.0 / a0) / c
    hi = (17.0 * math.log(10.0) - math.lgamma(1.0 - alpha)) / alpha
    grid = np.arange(lo, hi + 0.01, 0.01)
    return CubicSpline(grid, _zolotarev_cdf(grid, alpha)), lo, hi


def _positive_stable_cdf(a, beta, gamma0):
    """CDF of :func:`positive_stable` (Levy closed form when beta = 1)."""
    a = np.asarray(a, dtype=float)
    s = 2.0 * gamma0**2  # A = s X with E exp(-t X) = exp(-t^alpha)
    if beta == 1.0:
        # A ~ Levy(0, gamma0^2)
        with np.errstate(divide="ignore"):
            return np.where(a > 0, erfc(np.sqrt(gamma0**2 / (2.0 * np.maximum(a, 1e-300)))), 0.0)
    spline, lo, hi = _stable_spline(beta / 2.0)
    with np.errstate(divide="ignore"):
        log_x = np.log(a / s)
    out = spline(np.clip(log_x, lo, hi))
    return np.clip(np.where(log_x <= lo, 0.0, np.where(log_x >= hi, 1.0, out)), 0.0, 1.0)


def stable_cdf(x, D, beta=1.0, gamma0=1.0, rtol=1e-6):
    """``P(A T <= x)`` for ``A`` positive stable and ``T ~ chi2_D`` independent.

    Computed as ``E_T[F_A(x / T)]`` by Gauss-Legendre quadrature on the log-T
    axis; the rule is checked against one of twice the size and a
    :class:`QuadratureError` is raised when they disagree by more than
    ``rtol`` (relative, with an absolute floor of 1e-12).
    """
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1)

    def integrate(m):
        t, w = _chi2_log_nodes(D, m)
        out = np.empty(flat.size)
        for lo in range(0, flat.size, 2048):
            out[lo : lo + 2048] = _positive_stable_cdf(flat[lo : lo + 2048, None] / t, beta, gamma0) @ w
        return out

    coarse, fine = integrate(128), integrate(256)
    err = np.abs(fine - coarse)
    bad = err > rtol * np.abs(fine) + 1e-12
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise QuadratureError(
            f"stable radial CDF did not converge at x={flat[i]:.6g} "
            f"(D={D}, beta={beta}): estimates {coarse[i]:.10g} vs {fine[i]:.10g}"
        )
    out = np.clip(fine, 0.0, 1.0).reshape(x.shape)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# maximum likelihood


def mle_gamma(y, max_iter=100, tol=1e-12):
    """Gamma MLE ``(shape, scale)``; rows of a 2-D input are fitted separately.

    Solves ``log k - digamma(k) = log(mean) - mean(log)`` by Newton's method
    from the Minka starting point, halving steps that leave ``k > 0``.
    """
    y = np.asarray(y, dtype=float)
    rows = np.atleast_2d(y)
    if rows.shape[-1] < 2:
        raise EstimationError("gamma MLE needs at least two observations")
    if np.any(rows <= 0) or np.any(~np.isfinite(rows)):
        raise EstimationError("gamma MLE needs positive finite data")
    mean = rows.mean(axis=1)
    s = np.log(mean) - np.log(rows).mean(axis=1)
    if np.any(s <= 1e-14):
        raise EstimationError("gamma MLE is degenerate: the data are (nearly) constant")
    k = (3.0 - s + np.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    for _ in range(max_iter):
        f = np.log(k) - digamma(k) - s
        step = f / (1.0 / k - trigamma(k))
        new = k - step
        while np.any(new <= 0):
            step = np.where(new <= 0, step / 2.0, step)
            new = k - step
        k = new
        if np.all(np.abs(step) <= tol * k):
            break
    else:
        raise EstimationError("gamma MLE did not converge")
    scale = mean / k
    if y.ndim == 1:
        return float(k[0]), float(scale[0])
    return k, scale


def _student_loglik(nu, D, n, sum_log_y, y):
    """F_{D, nu} log-likelihood of ``y`` (rows) at ``nu`` (one value per row)."""
    nu = np.asarray(nu, dtype=float)
    half = 0.5 * D
    ll = n * (
        gammaln(half + 0.5 * nu) - gammaln(half) - gammaln(0.5 * nu) + half * np.log(D / nu)
    )
    ll += (half - 1.0) * sum_log_y
    ll -= (half + 0.5 * nu) * np.sum(np.log1p(D * y / nu[..., None]), axis=-1)
    return ll


def mle_student_nu(radii, D, bounds=NU_BOUNDS, grid=41, tol=1e-7):
    """Degrees-of-freedom MLE of a Student radius.

    Maximises the ``F_{D, nu}`` likelihood of ``|X|^2 / D`` over ``nu`` in
    ``bounds``: a log-spaced grid brackets the maximum, which golden-section
    search then refines until the bracket is narrower than ``tol`` in
    ``log nu``. Rows of a 2-D input are fitted independently.
    """
    r = np.asarray(radii, dtype=float)
    rows = np.atleast_2d(r)
    if rows.shape[-1] < 2:
        raise EstimationError("Student MLE needs at least two observations")
    if np.any(rows <= 0) or np.any(~np.isfinite(rows)):
        raise EstimationError("Student MLE needs positive finite radii")
    y = rows**2 / D
    m, n = y.shape
    sum_log_y = np.log(y).sum(axis=1)

    def objective(log_nu):
        return _student_loglik(np.exp(log_nu), D, n, sum_log_y, y)

    lo, hi = math.log(bounds[0]), math.log(bounds[1])
    knots = np.linspace(lo, hi, grid)
    values = np.stack([objective(np.full(m, g)) for g in knots], axis=1)
    if np.any(~np.isfinite(values)):
        raise EstimationError("Student log-likelihood is not finite")
    best = np.argmax(values, axis=1)
    step = knots[1] - knots[0]
    a = np.maximum(knots[best] - step, lo)
    b = np.minimum(knots[best] + step, hi)

    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - ratio * (b - a)
    e = a + ratio * (b - a)
    fc, fe = objective(c), objective(e)
    for _ in range(200):
        if np.all(b - a < tol):
            break
        left = fc > fe  # maximum lies in [a, e]
        b = np.where(left, e, b)
        a = np.where(left, a, c)
        x_new = np.where(left, b - ratio * (b - a), a + ratio * (b - a))
        f_new = objective(x_new)
        c, e, fc, fe = (
            np.where(left, x_new, e),
            np.where(left, c, x_new),
            np.where(left, f_new, fe),
            np.where(left, fc, f_new),
        )
    else:
        raise EstimationError("Student MLE did not converge")
    nu = np.exp(0.5 * (a + b))
    return float(nu[0]) if r.ndim == 1 else nu


# ---------------------------------------------------------------------------
# parametric bootstrap


@dataclass(frozen=True)
class BootstrapConfig:
    """Bootstrap size and seeding.

    Replicate ``j`` draws from ``rng.offset(j * stride)``, so replicate
    streams are fixed in advance and the p-value does not depend on the
    evaluation order.
    """

    B: int = 200
    rng: RngStream = RngStream(0)
    stride: int = 1

    def __post_init__(self):
        if self.B < 1:
            raise ValueError("B must be >= 1")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")

    def stream(self, j: int) -> RngStream:
        return self.rng.offset(j * self.stride)


@dataclass(frozen=True)
class BootstrapResult:
    p_value: float
    statistic: float
    estimate: dict
    failures: int = 0


def _fit_rows(null: RadialNull, rows: np.ndarray) -> dict:
    """Vectorised refit of the estimable parameters for each row of radii."""
    if null.family == "student":
        return {"nu": mle_student_nu(rows, null.D)}
    y = rows**2 if null.params["on"] == "squared" else rows
    shape, scale = mle_gamma(y)
    return {**null.params, "shape": shape, "scale": scale}


def _row_statistics(null: RadialNull, rows: np.ndarray) -> np.ndarray:
    """Refit and AD statistic for each row; NaN marks a failed fit."""
    try:
        params = _fit_rows(null, rows)
        bcast = {k: (v[:, None] if isinstance(v, np.ndarray) else v) for k, v in params.items()}
        return ad_statistic_from_uniforms(_cdf(null.family, null.D, bcast, rows), axis=1)
    except EstimationError:
        out = np.empty(rows.shape[0])
        for i, row in enumerate(rows):
            try:
                fitted = null.fit(row)
                out[i] = ad_statistic_from_uniforms(radial_cdf(fitted, row))
            except EstimationError:
                out[i] = np.nan
        return np.atleast_1d(out)


def bootstrap_test(radii, null: RadialNull, cfg: BootstrapConfig) -> BootstrapResult:
    """Parametric bootstrap p-value of the AD statistic with estimated parameters.

    1. fit the free parameters on the data;
    2. compute ``A_n`` under the fit;
    3. draw ``B`` samples of the same size from the fitted null;
    4. refit and recompute ``A~_j`` on each;
    5. return the proportion of ``A~_j > A_n``.

    A replicate whose refit fails is redrawn once from the same stream; a
    second failure counts it as exceeding ``A_n``, which can only raise the
    p-value.
    """
    r = _check_radii(radii)
    if r.ndim != 1:
        raise ValueError("radii must be one-dimensional")
    r = np.sort(r)  # fits then see one summation order, so the result ignores input order
    n = r.size
    fitted = null.fit(r)
    a_n = ad_statistic_from_uniforms(radial_cdf(fitted, r))

    gens = [as_generator(cfg.stream(j)) for j in range(cfg.B)]
    rows = np.stack([fitted.sample(g, n) for g in gens])
    stats = _row_statistics(fitted, rows) if null.composite else _simple_stats(fitted, rows)
    failed = np.flatnonzero(np.isnan(stats))
    if failed.size:
        retry = np.stack([fitted.sample(gens[j], n) for j in failed])
        stats[failed] = _row_statistics(fitted, retry)
    failures = int(np.count_nonzero(np.isnan(stats)))
    if failures:
        log.warning("%d of %d bootstrap refits failed twice; counted as exceeding", failures, cfg.B)
    exceed = np.count_nonzero(stats > a_n) + failures
    estimate = {k: v for k, v in fitted.params.items() if k in null.estimable}
    return BootstrapResult(exceed / cfg.B, a_n, estimate, failures)


def _simple_stats(null: RadialNull, rows):
    return ad_statistic_from_uniforms(_cdf(null.family, null.D, null.params, rows), axis=1)


def bootstrap_pvalue(radii, null: RadialNull, cfg: BootstrapConfig) -> float:
    """Step-5 proportion of :func:`bootstrap_test`."""
    return bootstrap_test(radii, null, cfg).p_value
