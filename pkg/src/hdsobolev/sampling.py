"""Seeded generators for every data model used by the experiments.

Randomness always flows from an explicit :class:`RngStream` (or a numpy
``Generator`` derived from one); there is no module-level generator.

Integrated models draw a latent location uniformly on the sphere and then
sample conditionally on it. Mixing the likelihood over Haar rotations ``O``
of a fixed location ``theta`` is the same as mixing over ``O theta``, which
is uniform on the sphere, so the two descriptions give the same joint law
while the latent form costs O(d) per draw instead of O(d^2).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .frame import TangentFrame
from .sobolev import SphereSample
from .specfun import normal_sf, reg_incomplete_gamma_inv

__all__ = [
    "RngStream",
    "as_generator",
    "uniform_sphere",
    "vmf_cosines",
    "sample_vmf",
    "sample_integrated_vmf",
    "projected_uniform_cosines",
    "sample_tangent_vmf",
    "sample_integrated_tangent_vmf",
    "positive_stable",
    "positive_stable_laplace_constant",
    "sample_mvnormal",
    "sample_mvt",
    "sample_skew_t",
    "sample_dmn",
    "sample_product",
    "sigma_p",
    "RadiusLaw",
    "ModelSpec",
    "UniformSphere",
    "VMF",
    "IntegratedVMF",
    "TangentVMF",
    "IntegratedTangentVMF",
    "MVNormal",
    "MVT",
    "SkewT",
    "DMN",
    "Product",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RngStream:
    """Independent random stream identified by ``(base_seed, stream_index)``.

    Streams are split with numpy's ``SeedSequence`` spawn keys, so distinct
    indices give independent PCG64 generators.
    """

    base_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.base_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(seq))

    def offset(self, k: int) -> "RngStream":
        return RngStream(self.base_seed, self.stream_index + k)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected an RngStream or numpy Generator, got {type(rng).__name__}")


def _unit_rows(z: np.ndarray) -> np.ndarray:
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _unit_vector(mu, name="mu") -> np.ndarray:
    mu = np.asarray(mu, dtype=float).ravel()
    norm = np.linalg.norm(mu)
    if mu.size < 2 or abs(norm - 1.0) > 1e-9:
        raise ValueError(f"{name} must be a unit vector of dimension >= 2 (norm {norm:.12g})")
    return mu / norm


# ---------------------------------------------------------------------------
# sphere-valued samplers


def uniform_sphere(rng, n: int, d: int) -> SphereSample:
    """``n`` iid uniform points on S^d (normalized Gaussian vectors)."""
    if n < 1 or d < 1:
        raise ValueError("uniform_sphere needs n >= 1 and d >= 1")
    gen = as_generator(rng)
    return SphereSample(_unit_rows(gen.standard_normal((n, d + 1))))


def vmf_cosines(rng, n: int, d: int, kappa: float) -> np.ndarray:
    """Draw ``x' mu`` for ``x ~ vMF(mu, kappa)`` on S^d.

    Envelope rejection with a Beta((d)/2, (d)/2) proposal mapped through a
    Mobius transform (Wood's scheme).
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    gen = as_generator(rng)
    if kappa == 0:
        return 2.0 * gen.beta(d / 2.0, d / 2.0, size=n) - 1.0
    m = float(d)  # ambient dimension minus one
    b = m / (2.0 * kappa + math.sqrt(4.0 * kappa * kappa + m * m))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + m * math.log(1.0 - x0 * x0)
    out = np.empty(n)
    filled = drawn = 0
    while filled < n:
        batch = max(16, int(1.2 * (n - filled)) + 8)
        z = gen.beta(m / 2.0, m / 2.0, size=batch)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = gen.random(batch)
        ok = kappa * w + m * np.log1p(-x0 * w) - c >= np.log(u)
        acc = w[ok][: n - filled]
        out[filled : filled + acc.size] = acc
        filled += acc.size
        drawn += batch
    log.debug("vMF rejection: d=%d kappa=%g acceptance %.3f", d, kappa, n / drawn)
    return out


def sample_vmf(rng, n: int, mu, kappa: float) -> SphereSample:
    """``n`` iid von Mises-Fisher points with mean direction ``mu``.

    ``kappa = 0`` delegates to :func:`uniform_sphere`.
    """
    mu = _unit_vector(mu)
    d = mu.size - 1
    gen = as_generator(rng)
    if kappa == 0:
        return uniform_sphere(gen, n, d)
    w = vmf_cosines(gen, n, d, kappa)
    u = _unit_rows(gen.standard_normal((n, d)))
    return SphereSample(_unit_rows(TangentFrame(mu).compose(w, u)))


def sample_integrated_vmf(rng, n: int, d: int, kappa: float) -> SphereSample:
    """Integrated vMF: one uniform latent location, then ``n`` vMF draws."""
    gen = as_generator(rng)
    if kappa == 0:
        return uniform_sphere(gen, n, d)
    theta = uniform_sphere(gen, 1, d).data[0]
    return sample_vmf(gen, n, theta, kappa)


def projected_uniform_cosines(d: int):
    """Cosine law of a uniform point on S^d: density ~ (1 - v^2)^{d/2 - 1}."""

    def draw(gen, n):
        return 2.0 * gen.beta(d / 2.0, d / 2.0, size=n) - 1.0

    return draw


def sample_tangent_vmf(rng, n: int, theta, mu, kappa: float, g=None, return_cosines=False):
    """Tangent vMF about ``theta`` on S^d.

    ``v = X' theta`` is drawn from ``g`` (a callable ``(generator, n) ->
    values in [-1, 1]``, default the projected-uniform law) and the sign
    ``u`` from ``vMF(mu, kappa)`` on S^{d-1}, independently; then
    ``X = v theta + sqrt(1 - v^2) Gamma_theta u``.
    """
    theta = _unit_vector(theta, "theta")
    mu = _unit_vector(mu)
    d = theta.size - 1
    if mu.size != d:
        raise ValueError(f"mu must live in R^{d}, got dimension {mu.size}")
    gen = as_generator(rng)
    g = g or projected_uniform_cosines(d)
    v = np.asarray(g(gen, n), dtype=float)
    if v.shape != (n,) or np.any(np.abs(v) > 1):
        raise ValueError("cosine sampler must return n values in [-1, 1]")
    u = sample_vmf(gen, n, mu, kappa).data
    x = SphereSample(_unit_rows(TangentFrame(theta).compose(v, u)))
    return (x, v) if return_cosines else x


def sample_integrated_tangent_vmf(rng, n: int, theta, kappa: float, g=None, return_cosines=False):
    """Integrated tangent vMF: the sign location is drawn uniformly per call."""
    theta = _unit_vector(theta, "theta")
    gen = as_generator(rng)
    mu = uniform_sphere(gen, 1, theta.size - 2).data[0]
    return sample_tangent_vmf(gen, n, theta, mu, kappa, g, return_cosines)


# ---------------------------------------------------------------------------
# positive stable law


def positive_stable(rng, n: int, beta: float, gamma0: float = 1.0) -> np.ndarray:
    """Totally skewed positive stable draws ``S(beta/2, 1, 2 gamma0^2 cos(pi beta/4)^{2/beta}, 0)``.

    Chambers-Mallows-Stuck transform for ``alpha = beta/2 < 1`` and skewness
    one. ``sqrt(A) Z`` with ``Z`` standard normal is then isotropic stable with
    characteristic function ``exp(-gamma0^beta |t|^beta)``.
    """
    if not 0 < beta < 2:
        raise ValueError("beta must lie in (0, 2)")
    if gamma0 <= 0:
        raise ValueError("gamma0 must be positive")
    gen = as_generator(rng)
    alpha = beta / 2.0
    scale = 2.0 * gamma0**2 * math.cos(math.pi * beta / 4.0) ** (2.0 / beta)
    zeta = -math.tan(math.pi * alpha / 2.0)
    xi = math.atan(-zeta) / alpha  # pi/2 for skewness one
    u = gen.uniform(-math.pi / 2.0, math.pi / 2.0, size=n)
    w = gen.exponential(size=n)
    t = alpha * (u + xi)
    x = (
        (1.0 + zeta * zeta) ** (1.0 / (2.0 * alpha))
        * np.sin(t)
        / np.cos(u) ** (1.0 / alpha)
        * (np.cos(u - t) / w) ** ((1.0 - alpha) / alpha)
    )
    return scale * x


def positive_stable_laplace_constant(beta: float, gamma0: float = 1.0) -> float:
    """``c`` in ``E exp(-s A) = exp(-c s^{beta/2})`` for :func:`positive_stable`."""
    return (2.0 * gamma0**2) ** (beta / 2.0)


# ---------------------------------------------------------------------------
# Euclidean samplers


def _normal_factor(cov, d: int):
    """Return ``(kind, factor)`` with ``factor factor' = cov``."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 0:
        if cov <= 0:
            raise ValueError("scale must be positive")
        return "diag", np.full(d, math.sqrt(cov))
    if cov.ndim == 1:
        if cov.size != d or np.any(cov <= 0):
            raise ValueError("diagonal scale must have d positive entries")
        return "diag", np.sqrt(cov)
    if cov.shape != (d, d) or not np.allclose(cov, cov.T):
        raise ValueError("scale matrix must be symmetric d x d")
    try:
        return "full", np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError("scale matrix is not positive definite") from None


def _correlated_normals(gen, n, d, cov):
    kind, factor = _normal_factor(cov, d)
    z = gen.standard_normal((n, d))
    return z * factor if kind == "diag" else z @ factor.T


def sigma_p(d: int, p: float) -> np.ndarray:
    """Diagonal of ``diag(0.5 x floor(p d), 1.5 x (d - floor(p d)))``."""
    k = int(math.floor(p * d))
    return np.concatenate([np.full(k, 0.5), np.full(d - k, 1.5)])


def sample_mvnormal(rng, n: int, d: int, cov=1.0) -> np.ndarray:
    """Centered normal rows; ``cov`` is a scalar, a diagonal or a matrix."""
    return _correlated_normals(as_generator(rng), n, d, cov)


def sample_mvt(rng, n: int, d: int, nu: float, scale=1.0) -> np.ndarray:
    """Centered multivariate t: ``Z sqrt(nu / W)``, ``Z ~ N(0, S)``, ``W ~ chi2_nu``."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    gen = as_generator(rng)
    z = _correlated_normals(gen, n, d, scale)
    w = gen.chisquare(nu, size=n)
    return z * np.sqrt(nu / w)[:, None]


def sample_skew_t(rng, n: int, d: int, nu: float, omega=1.0, xi=None) -> np.ndarray:
    """Skew-t rows via the additive hidden-truncation representation.

    With ``Omega = w Obar w`` (``Obar`` a correlation matrix) and slant vector
    ``xi``, ``delta = Obar xi / sqrt(1 + xi' Obar xi)``; the skew-normal draw
    is ``w (delta |U0| + (Obar - delta delta')^{1/2} U1)`` and the skew-t
    divides it by ``sqrt(W / nu)``. ``xi = 0`` gives the symmetric t.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    gen = as_generator(rng)
    omega = np.asarray(omega, dtype=float)
    if omega.ndim < 2:
        omega = np.diag(np.broadcast_to(omega, (d,)).astype(float))
    if omega.shape != (d, d):
        raise ValueError("omega must be d x d")
    w = np.sqrt(np.diag(omega))
    obar = omega / np.outer(w, w)
    xi = np.zeros(d) if xi is None else np.asarray(xi, dtype=float).ravel()
    if xi.size != d:
        raise ValueError("xi must have d entries")
    oxi = obar @ xi
    delta = oxi / math.sqrt(1.0 + xi @ oxi)
    try:
        factor = np.linalg.cholesky(obar - np.outer(delta, delta))
    except np.linalg.LinAlgError:
        raise ValueError("skew-t scale matrix is not positive definite") from None
    u0 = np.abs(gen.standard_normal(n))
    u1 = gen.standard_normal((n, d)) @ factor.T
    z = (u0[:, None] * delta + u1) * w
    chi = gen.chisquare(nu, size=n)
    return z * np.sqrt(nu / chi)[:, None]


def sample_dmn(rng, n: int, d: int, rho: float) -> np.ndarray:
    """Dependent multivariate normal: direction ``Y/|Y|``, radius ``F_d^{-1}(Phi(Z))^{1/2}``.

    ``(Z, Y)`` is jointly normal with unit variances and
    ``cov(Z, Y_i) = rho^i``; ``rho = 0`` recovers ``N_d(0, I)`` exactly in law.
    """
    if not 0 <= rho <= 1:
        raise ValueError("rho must lie in [0, 1]")
    powers = rho ** np.arange(1, d + 1, dtype=float)
    resid = 1.0 - powers @ powers
    if resid <= 0:
        raise ValueError(f"DMN covariance is not positive definite for rho={rho}, d={d}")
    gen = as_generator(rng)
    y = gen.standard_normal((n, d))
    z = y @ powers + math.sqrt(resid) * gen.standard_normal(n)
    # upper-tail inversion: F^{-1}(Phi(z)) = Q^{-1}(1 - Phi(z))
    r2 = 2.0 * reg_incomplete_gamma_inv(d / 2.0, normal_sf(z), upper=True)
    return _unit_rows(y) * np.sqrt(r2)[:, None]


def sample_product(rng, n: int, base, radius) -> np.ndarray:
    """Law of ``X Y`` with ``X ~ base`` and independent positive ``Y ~ radius``."""
    gen = as_generator(rng)
    x = base.sample(gen, n)
    x = x.data if isinstance(x, SphereSample) else x
    return x * radius.sample(gen, n)[:, None]


# ---------------------------------------------------------------------------
# declarative model specifications


@dataclass(frozen=True)
class RadiusLaw:
    """Positive scalar law used as the radius of a product model.

    Families and parameters:

    ``chi`` (df)            square root of a chi-square
    ``chi2`` (df)           chi-square itself
    ``gamma`` (shape, scale)
    ``sqrt_scaled_f`` (df1, df2)   ``(df1 F_{df1,df2})^{1/2}``
    ``sqrt_stable`` (beta, gamma0) square root of :func:`positive_stable`
    ``abs_cauchy`` (loc, scale)
    ``abs_t`` (df)
    """

    family: str
    params: dict = field(default_factory=dict)

    _required = {
        "chi": ("df",),
        "chi2": ("df",),
        "gamma": ("shape", "scale"),
        "sqrt_scaled_f": ("df1", "df2"),
        "sqrt_stable": ("beta",),
        "abs_cauchy": ("loc", "scale"),
        "abs_t": ("df",),
    }

    def __post_init__(self):
        if self.family not in self._required:
            raise ValueError(f"unknown radius family {self.family!r}")
        missing = [p for p in self._required[self.family] if p not in self.params]
        if missing:
            raise ValueError(f"radius family {self.family!r} needs {missing}")

    def __hash__(self):
        return hash((self.family, tuple(sorted(self.params.items()))))

    def sample(self, rng, n: int) -> np.ndarray:
        gen = as_generator(rng)
        p = self.params
        fam = self.family
        if fam == "chi":
            return np.sqrt(gen.chisquare(p["df"], size=n))
        if fam == "chi2":
            return gen.chisquare(p["df"], size=n)
        if fam == "gamma":
            return gen.gamma(p["shape"], p["scale"], size=n)
        if fam == "sqrt_scaled_f":
            return np.sqrt(p["df1"] * gen.f(p["df1"], p["df2"], size=n))
        if fam == "sqrt_stable":
            return np.sqrt(positive_stable(gen, n, p["beta"], p.get("gamma0", 1.0)))
        if fam == "abs_cauchy":
            return np.abs(p["loc"] + p["scale"] * gen.standard_cauchy(size=n))
        return np.abs(gen.standard_t(p["df"], size=n))


class ModelSpec:
    """A data model: ``sample(rng, n)`` returns rows in R^dim."""

    dim: int

    def sample(self, rng, n: int):
        raise NotImplementedError


def _e1(dim):
    e = np.zeros(dim)
    e[0] = 1.0
    return e


@dataclass(frozen=True)
class UniformSphere(ModelSpec):
    d: int

    @property
    def dim(self):
        return self.d + 1

    def sample(self, rng, n):
        return uniform_sphere(rng, n, self.d)


@dataclass(frozen=True, eq=False)
class VMF(ModelSpec):
    """vMF on S^d; the mean direction defaults to ``(1, 0, ..., 0)``."""

    d: int
    kappa: float
    mu: np.ndarray | None = None

    @property
    def dim(self):
        return self.d + 1

    def sample(self, rng, n):
        mu = _e1(self.d + 1) if self.mu is None else self.mu
        return sample_vmf(rng, n, mu, self.kappa)


@dataclass(frozen=True)
class IntegratedVMF(ModelSpec):
    d: int
    kappa: float

    @property
    def dim(self):
        return self.d + 1

    def sample(self, rng, n):
        return sample_integrated_vmf(rng, n, self.d, self.kappa)


@dataclass(frozen=True, eq=False)
class TangentVMF(ModelSpec):
    d: int
    kappa: float
    theta: np.ndarray | None = None
    mu: np.ndarray | None = None
    g: object = None

    @property
    def dim(self):
        return self.d + 1

    def sample(self, rng, n):
        theta = _e1(self.d + 1) if self.theta is None else self.theta
        mu = _e1(self.d) if self.mu is None else self.mu
        return sample_tangent_vmf(rng, n, theta, mu, self.kappa, self.g)


@dataclass(frozen=True, eq=False)
class IntegratedTangentVMF(ModelSpec):
    d: int
    kappa: float
    theta: np.ndarray | None = None
    g: object = None

    @property
    def dim(self):
        return self.d + 1

    def sample(self, rng, n):
        theta = _e1(self.d + 1) if self.theta is None else self.theta
        return sample_integrated_tangent_vmf(rng, n, theta, self.kappa, self.g)


@dataclass(frozen=True, eq=False)
class MVNormal(ModelSpec):
    d: int
    cov: object = 1.0

    @property
    def dim(self):
        return self.d

    def sample(self, rng, n):
        return sample_mvnormal(rng, n, self.d, self.cov)


@dataclass(frozen=True, eq=False)
class MVT(ModelSpec):
    d: int
    nu: float
    scale: object = 1.0

    @property
    def dim(self):
        return self.d

    def sample(self, rng, n):
        return sample_mvt(rng, n, self.d, self.nu, self.scale)


@dataclass(frozen=True, eq=False)
class SkewT(ModelSpec):
    d: int
    nu: float
    omega: object = 1.0
    xi: object = None

    @property
    def dim(self):
        return self.d

    def sample(self, rng, n):
        return sample_skew_t(rng, n, self.d, self.nu, self.omega, self.xi)


@dataclass(frozen=True)
class DMN(ModelSpec):
    d: int
    rho: float

    @property
    def dim(self):
        return self.d

    def sample(self, rng, n):
        return sample_dmn(rng, n, self.d, self.rho)


@dataclass(frozen=True)
class Product(ModelSpec):
    """``X Y`` with ``X ~ base`` (sphere or Euclidean) and ``Y ~ radius``."""

    base: ModelSpec
    radius: RadiusLaw

    @property
    def dim(self):
        return self.base.dim

    def sample(self, rng, n):
        return sample_product(rng, n, self.base, self.radius)
