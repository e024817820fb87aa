"""Scalar special functions and the Gegenbauer machinery.

The scalar functions (log-gamma, digamma, incomplete gamma/beta and the
normal distribution) are thin validating wrappers over :mod:`scipy.special`.
Everything tied to the hyperspherical harmonics (Gegenbauer recurrence,
harmonic dimensions, normalising constants, surface areas) is computed here,
in log scale where the magnitudes call for it.

All functions accept scalars or numpy arrays and return a Python float for
scalar input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "DomainError",
    "TruncationError",
    "GegenbauerIndex",
    "log_gamma",
    "digamma",
    "trigamma",
    "reg_incomplete_gamma",
    "reg_incomplete_gamma_inv",
    "reg_incomplete_beta",
    "normal_cdf",
    "normal_sf",
    "normal_quantile",
    "gegenbauer_eval",
    "gegenbauer_all",
    "harmonic_dim",
    "log_harmonic_dim",
    "gegenbauer_norm",
    "log_gegenbauer_norm",
    "surface_area",
    "log_surface_area",
]

# Largest polynomial magnitude tolerated before the recurrence is declared
# unreliable.
OVERFLOW_GUARD = 1e300
# Rounding slack allowed on dot products of unit vectors.
CLAMP_TOL = 1e-12


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class TruncationError(OverflowError):
    """A Gegenbauer evaluation left the representable range."""


@dataclass(frozen=True)
class GegenbauerIndex:
    """Degree ``k`` of the Gegenbauer polynomial attached to the sphere S^d.

    The index is ``lam = (d - 1) / 2``; ``d == 1`` selects the Chebyshev
    branch ``2 cos(k arccos x)`` instead of a zero index.
    """

    k: int
    d: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise DomainError(f"degree must be a non-negative integer, got {self.k}")
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"sphere dimension must be a positive integer, got {self.d}")

    @property
    def chebyshev(self) -> bool:
        return self.d == 1

    @property
    def lam(self) -> float:
        if self.chebyshev:
            raise DomainError("d = 1 has no Gegenbauer index; use the Chebyshev branch")
        return (self.d - 1) / 2.0


def _out(value, scalar: bool):
    return float(value) if scalar else value


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _require(cond, message):
    if not np.all(cond):
        raise DomainError(message)


def log_gamma(x):
    """ln Gamma(x) for finite x > 0."""
    arr, scalar = _as_array(x)
    _require(np.isfinite(arr) & (arr > 0), "log_gamma requires finite x > 0")
    return _out(special.gammaln(arr), scalar)


def digamma(x):
    """Derivative of ln Gamma, for finite x > 0."""
    arr, scalar = _as_array(x)
    _require(np.isfinite(arr) & (arr > 0), "digamma requires finite x > 0")
    return _out(special.psi(arr), scalar)


def trigamma(x):
    arr, scalar = _as_array(x)
    _require(np.isfinite(arr) & (arr > 0), "trigamma requires finite x > 0")
    return _out(special.polygamma(1, arr), scalar)


def reg_incomplete_gamma(a, x):
    """Regularized lower incomplete gamma function P(a, x).

    ``x = inf`` is accepted and gives 1.
    """
    a_arr, a_scalar = _as_array(a)
    x_arr, x_scalar = _as_array(x)
    _require(np.isfinite(a_arr) & (a_arr > 0), "reg_incomplete_gamma requires a > 0")
    _require(~np.isnan(x_arr) & (x_arr >= 0), "reg_incomplete_gamma requires x >= 0")
    return _out(special.gammainc(a_arr, x_arr), a_scalar and x_scalar)


def reg_incomplete_gamma_inv(a, u, upper: bool = False):
    """Inverse in ``x`` of :func:`reg_incomplete_gamma` for u in [0, 1].

    With ``upper=True`` ``u`` is the upper tail ``1 - P(a, x)``, which keeps
    full precision for quantiles close to 1.
    """
    a_arr, a_scalar = _as_array(a)
    u_arr, u_scalar = _as_array(u)
    _require(np.isfinite(a_arr) & (a_arr > 0), "reg_incomplete_gamma_inv requires a > 0")
    _require((u_arr >= 0) & (u_arr <= 1), "reg_incomplete_gamma_inv requires u in [0, 1]")
    inv = special.gammainccinv if upper else special.gammaincinv
    return _out(inv(a_arr, u_arr), a_scalar and u_scalar)


def reg_incomplete_beta(a, b, x):
    """Regularized incomplete beta function I_x(a, b)."""
    a_arr, a_scalar = _as_array(a)
    b_arr, b_scalar = _as_array(b)
    x_arr, x_scalar = _as_array(x)
    _require(np.isfinite(a_arr) & (a_arr > 0), "reg_incomplete_beta requires a > 0")
    _require(np.isfinite(b_arr) & (b_arr > 0), "reg_incomplete_beta requires b > 0")
    _require((x_arr >= 0) & (x_arr <= 1), "reg_incomplete_beta requires x in [0, 1]")
    return _out(special.betainc(a_arr, b_arr, x_arr), a_scalar and b_scalar and x_scalar)


def normal_cdf(z):
    arr, scalar = _as_array(z)
    _require(~np.isnan(arr), "normal_cdf got NaN")
    return _out(special.ndtr(arr), scalar)


def normal_sf(z):
    """Upper tail 1 - Phi(z), accurate for large z."""
    arr, scalar = _as_array(z)
    _require(~np.isnan(arr), "normal_sf got NaN")
    return _out(special.ndtr(-arr), scalar)


def normal_quantile(u):
    arr, scalar = _as_array(u)
    _require((arr > 0) & (arr < 1), "normal_quantile requires u in (0, 1)")
    return _out(special.ndtri(arr), scalar)


def _clamp_unit(x):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(np.abs(arr) > 1 + CLAMP_TOL):
        raise DomainError("Gegenbauer argument must lie in [-1, 1]")
    return np.clip(arr, -1.0, 1.0)


def gegenbauer_all(kmax: int, d: int, x) -> np.ndarray:
    """Evaluate every degree ``0..kmax`` at ``x``.

    Returns an array of shape ``(kmax + 1,) + np.shape(x)``. For ``d >= 2``
    row ``k`` holds C_k^{(d-1)/2}(x); for ``d == 1`` it holds
    ``2 cos(k arccos x)`` (row 0 is the constant 1).
    """
    if kmax < 0:
        raise DomainError("kmax must be non-negative")
    if d < 1:
        raise DomainError("sphere dimension must be >= 1")
    x = _clamp_unit(x)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = 1.0
    if d == 1:
        theta = np.arccos(x)
        for k in range(1, kmax + 1):
            out[k] = 2.0 * np.cos(k * theta)
        return out
    lam = (d - 1) / 2.0
    if kmax >= 1:
        out[1] = 2.0 * lam * x
    for k in range(2, kmax + 1):
        out[k] = (2.0 * x * (k + lam - 1.0) * out[k - 1] - (k + 2.0 * lam - 2.0) * out[k - 2]) / k
        if np.any(np.abs(out[k]) > OVERFLOW_GUARD):
            raise TruncationError(
                f"Gegenbauer C_{k}^{lam} exceeds {OVERFLOW_GUARD:g}; lower the truncation order"
            )
    return out


def gegenbauer_eval(idx: GegenbauerIndex, x):
    """C_k^{(d-1)/2}(x), or the Chebyshev form 2 cos(k arccos x) when d = 1."""
    vals = gegenbauer_all(idx.k, idx.d, x)[idx.k]
    return float(vals) if vals.ndim == 0 else vals


def log_harmonic_dim(k: int, d: int) -> float:
    """Log of the dimension of degree-``k`` spherical harmonics on S^d."""
    if k < 1 or d < 1:
        raise DomainError("harmonic_dim requires k >= 1 and d >= 1")
    if d == 1:
        return math.log(2.0)
    return (
        math.log1p(2.0 * k / (d - 1))
        + math.lgamma(d - 1 + k)
        - math.lgamma(d - 1)
        - math.lgamma(k + 1)
    )


def harmonic_dim(k: int, d: int, method: str = "gamma") -> float:
    """Dimension d_{k,d} of the space of degree-``k`` harmonics on S^d.

    ``method="gamma"`` uses the log-gamma closed form, ``"binomial"`` the
    exact integer sum of two binomial coefficients. ``d = 1`` (the circle)
    gives 2 for every k.
    """
    if method == "binomial":
        if k < 1 or d < 1:
            raise DomainError("harmonic_dim requires k >= 1 and d >= 1")
        return float(math.comb(d + k - 2, d - 1) + math.comb(d + k - 1, d - 1))
    if method != "gamma":
        raise ValueError(f"unknown method {method!r}")
    return math.exp(log_harmonic_dim(k, d))


def log_gegenbauer_norm(k: int, d: int) -> float:
    """Log of the squared L2 norm of C_k^{(d-1)/2} under (1 - x^2)^{d/2 - 1}."""
    if k < 0 or d < 2:
        raise DomainError("gegenbauer_norm requires k >= 0 and d >= 2")
    return (
        (3 - d) * math.log(2.0)
        + math.log(math.pi)
        + math.lgamma(d + k - 1)
        - math.log(d + 2 * k - 1)
        - math.lgamma(k + 1)
        - 2.0 * math.lgamma((d - 1) / 2.0)
    )


def gegenbauer_norm(k: int, d: int) -> float:
    return math.exp(log_gegenbauer_norm(k, d))


def log_surface_area(d: int) -> float:
    """Log surface area of the unit sphere S^d in R^{d+1}."""
    if d < 1:
        raise DomainError("surface_area requires d >= 1")
    return math.log(2.0) + 0.5 * (d + 1) * math.log(math.pi) - math.lgamma(0.5 * (d + 1))


def surface_area(d: int) -> float:
    return math.exp(log_surface_area(d))
