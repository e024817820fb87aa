"""Sobolev tests of uniformity on S^d.

A test is identified by its weight scheme ``(k, d) -> v_{k,d}``. The kernel

    psi(x) = sum_k (1 + 2k/(d-1)) v_{k,d}^2 C_k^{(d-1)/2}(x)

(with ``2 v_{k,1}^2 cos(k arccos x)`` on the circle) is summed over the
unordered pairs of a sample,

    T_n = (2/n) sum_{i<j} psi(X_i' X_j),

and ``T_n / sigma_n`` with ``sigma_n^2 = 2 sum_k v_{k,d}^4 d_{k,d}`` is
compared with the upper tail of a standard normal.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.special import logsumexp

from .specfun import gegenbauer_all, log_harmonic_dim, normal_sf

__all__ = [
    "DegenerateSchemeError",
    "WeightScheme",
    "KSobolev",
    "Finite",
    "Hybrid",
    "DecayAdjusted",
    "Custom",
    "RAYLEIGH",
    "BINGHAM",
    "parse_scheme",
    "SphereSample",
    "TestReport",
    "weight",
    "psi_kernel",
    "sigma_n",
    "log_sigma_n",
    "statistic",
    "k0_standardized",
    "gamma_constant",
    "gram_matrix",
]

UNIT_NORM_TOL = 1e-9


class DegenerateSchemeError(ValueError):
    """A weight scheme has no nonzero weight in the requested dimension."""


class WeightScheme:
    """Base class of weight schemes.

    Subclasses implement :meth:`weight` and :meth:`degrees`; the latter lists
    the (finitely many) degrees that may carry a nonzero weight.
    """

    label = "scheme"

    def weight(self, k: int, d: int) -> float:
        raise NotImplementedError

    def degrees(self) -> tuple[int, ...]:
        raise NotImplementedError

    @property
    def truncation(self) -> int:
        return max(self.degrees())

    def weights(self, d: int) -> np.ndarray:
        """Weights for degrees ``0..truncation`` (entry 0 is always 0)."""
        w = np.zeros(self.truncation + 1)
        for k in self.degrees():
            w[k] = self.weight(k, d)
        return w

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class KSobolev(WeightScheme):
    """``v_{k,d} = 1{k == k0}``; k0 = 1 is Rayleigh, k0 = 2 is Bingham."""

    k0: int

    def __post_init__(self):
        if self.k0 < 1:
            raise ValueError("k0 must be >= 1")

    @property
    def label(self):
        return {1: "rayleigh", 2: "bingham"}.get(self.k0, f"k:{self.k0}")

    def weight(self, k, d):
        return 1.0 if k == self.k0 else 0.0

    def degrees(self):
        return (self.k0,)


@dataclass(frozen=True)
class Finite(WeightScheme):
    """``v_{k,d} = 1{k <= k0}``."""

    k0: int

    def __post_init__(self):
        if self.k0 < 1:
            raise ValueError("k0 must be >= 1")

    @property
    def label(self):
        return f"finite:{self.k0}"

    def weight(self, k, d):
        return 1.0 if 1 <= k <= self.k0 else 0.0

    def degrees(self):
        return tuple(range(1, self.k0 + 1))


@dataclass(frozen=True)
class Hybrid(WeightScheme):
    """Unit weight on each listed degree; the default is Rayleigh + Bingham."""

    degree_set: tuple[int, ...] = (1, 2)

    def __post_init__(self):
        degs = tuple(sorted(set(int(k) for k in self.degree_set)))
        if not degs or degs[0] < 1:
            raise ValueError("hybrid degrees must be a non-empty set of integers >= 1")
        object.__setattr__(self, "degree_set", degs)

    @property
    def label(self):
        if self.degree_set == (1, 2):
            return "hybrid"
        return "hybrid:" + ",".join(map(str, self.degree_set))

    def weight(self, k, d):
        return 1.0 if k in self.degree_set else 0.0

    def degrees(self):
        return self.degree_set


@dataclass(frozen=True)
class DecayAdjusted(WeightScheme):
    """Rayleigh plus dimension-decaying higher degrees.

    ``v_{k,d} = 1{k == 1} + (k! d^{-k})^{1/4} 1{1 < k <= k0}``. The decay keeps
    the degree-one share of the null variance dominant, so the test keeps the
    Rayleigh power against integrated von Mises-Fisher alternatives.
    """

    k0: int

    def __post_init__(self):
        if self.k0 < 1:
            raise ValueError("k0 must be >= 1")

    @property
    def label(self):
        return f"decay:{self.k0}"

    def weight(self, k, d):
        if k == 1:
            return 1.0
        if 1 < k <= self.k0:
            return math.exp(0.25 * (math.lgamma(k + 1) - k * math.log(d)))
        return 0.0

    def degrees(self):
        return tuple(range(1, self.k0 + 1))


@dataclass(frozen=True)
class Custom(WeightScheme):
    """Arbitrary finite weights.

    ``rules`` maps a degree to either a constant or a callable ``d -> v``.
    """

    rules: Mapping[int, float | Callable[[int], float]] = field(default_factory=dict)
    name: str = "custom"

    def __post_init__(self):
        if not self.rules or min(self.rules) < 1:
            raise ValueError("custom rules need at least one degree >= 1")

    @property
    def label(self):
        return self.name

    def weight(self, k, d):
        rule = self.rules.get(k, 0.0)
        v = float(rule(d)) if callable(rule) else float(rule)
        if not math.isfinite(v):
            raise ValueError(f"custom weight for k={k}, d={d} is not finite")
        return abs(v)

    def degrees(self):
        return tuple(sorted(self.rules))

    def __hash__(self):
        return id(self)


RAYLEIGH = KSobolev(1)
BINGHAM = KSobolev(2)


def parse_scheme(text: str) -> WeightScheme:
    """Parse ``rayleigh|bingham|k:K|finite:K|hybrid[:k1,k2,..]|decay:K``."""
    name, _, arg = text.strip().lower().partition(":")
    try:
        if name == "rayleigh" and not arg:
            return RAYLEIGH
        if name == "bingham" and not arg:
            return BINGHAM
        if name == "k":
            return KSobolev(int(arg))
        if name == "finite":
            return Finite(int(arg))
        if name == "decay":
            return DecayAdjusted(int(arg))
        if name == "hybrid":
            return Hybrid(tuple(int(k) for k in arg.split(","))) if arg else Hybrid()
    except ValueError as exc:
        raise ValueError(f"bad weight scheme {text!r}: {exc}") from None
    raise ValueError(f"unknown weight scheme {text!r}")


@dataclass(frozen=True, eq=False)
class SphereSample:
    """``n`` points on S^d stored as the rows of an ``n x (d+1)`` matrix."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 2:
            raise ValueError("a sphere sample needs shape (n, d+1) with n >= 1, d >= 1")
        norms = np.linalg.norm(data, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)
        if bad.size:
            raise ValueError(
                f"row {bad[0]} has norm {norms[bad[0]]:.12g}; rows must be unit vectors"
            )
        object.__setattr__(self, "data", data)

    @classmethod
    def from_points(cls, points, normalize: bool = True) -> "SphereSample":
        points = np.asarray(points, dtype=float)
        if normalize:
            norms = np.linalg.norm(points, axis=1, keepdims=True)
            if np.any(norms == 0):
                raise ValueError(f"row {int(np.flatnonzero(norms == 0)[0])} is the zero vector")
            points = points / norms
        return cls(points)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1] - 1


def _as_sample(sample) -> SphereSample:
    return sample if isinstance(sample, SphereSample) else SphereSample(sample)


@dataclass(frozen=True)
class TestReport:
    """Outcome of a Sobolev uniformity test."""

    __test__ = False  # not a pytest class

    raw_statistic: float
    sigma: float
    standardized: float
    p_value: float
    truncation: int
    n: int
    d: int
    scheme: str
    kernel_evaluations: int

    def to_dict(self) -> dict:
        return asdict(self)


def weight(scheme: WeightScheme, k: int, d: int) -> float:
    return scheme.weight(k, d)


def _kernel_coefficients(scheme: WeightScheme, d: int) -> np.ndarray:
    v2 = scheme.weights(d) ** 2
    if d == 1:
        # gegenbauer_all already carries the factor 2 of 2 cos(k theta)
        return v2
    k = np.arange(v2.size)
    return (1.0 + 2.0 * k / (d - 1)) * v2


def psi_kernel(scheme: WeightScheme, d: int, x):
    """The Sobolev kernel evaluated at dot products ``x``."""
    coef = _kernel_coefficients(scheme, d)
    polys = gegenbauer_all(coef.size - 1, d, x)
    out = np.tensordot(coef, polys, axes=1)
    return float(out) if np.ndim(out) == 0 else out


def log_sigma_n(scheme: WeightScheme, d: int) -> float:
    """``log sigma_n``, accumulated in log scale."""
    logs = []
    for k in scheme.degrees():
        v = scheme.weight(k, d)
        if v > 0:
            logs.append(4.0 * math.log(v) + log_harmonic_dim(k, d))
    if not logs:
        raise DegenerateSchemeError(f"scheme {scheme} has no nonzero weight for d={d}")
    return 0.5 * (math.log(2.0) + float(logsumexp(logs)))


def sigma_n(scheme: WeightScheme, d: int) -> float:
    """Null standard deviation scale ``sqrt(2 sum_k v^4 d_{k,d})``."""
    return math.exp(log_sigma_n(scheme, d))


def gram_matrix(sample) -> np.ndarray:
    x = _as_sample(sample).data
    return x @ x.T


def _pair_values(sample: SphereSample, gram) -> np.ndarray:
    n = sample.n
    if gram is None:
        gram = sample.data @ sample.data.T
    else:
        gram = np.asarray(gram, dtype=float)
        if gram.shape != (n, n):
            raise ValueError(f"gram matrix has shape {gram.shape}, expected {(n, n)}")
    iu = np.triu_indices(n, 1)
    return gram[iu]


def statistic(sample, scheme: WeightScheme, gram=None) -> TestReport:
    """Sobolev statistic, its standardization and upper-tail p-value.

    Parameters
    ----------
    sample : SphereSample or array_like
        ``n x (d+1)`` matrix of unit rows.
    scheme : WeightScheme
    gram : ndarray, optional
        Precomputed ``sample @ sample.T``; lets several schemes share one
        Gram matrix.
    """
    sample = _as_sample(sample)
    n, d = sample.n, sample.d
    sigma = sigma_n(scheme, d)
    if n == 1:
        raw, evals = 0.0, 0
    else:
        x = _pair_values(sample, gram)
        raw = 2.0 / n * float(np.sum(psi_kernel(scheme, d, x)))
        evals = x.size
    z = raw / sigma
    return TestReport(
        raw_statistic=raw,
        sigma=sigma,
        standardized=z,
        p_value=normal_sf(z),
        truncation=scheme.truncation,
        n=n,
        d=d,
        scheme=scheme.label,
        kernel_evaluations=evals,
    )


def k0_standardized(sample, k0: int, gram=None) -> float:
    """k0-Sobolev statistic with the large-d normalization.

    ``sqrt(2 k0!) / (d^{k0/2} n) * sum_{i<j} C_{k0}^{(d-1)/2}(X_i' X_j)``,
    which uses ``d_{k0,d} ~ d^{k0}/k0!`` in place of the exact ``sigma_n``.
    """
    sample = _as_sample(sample)
    n, d = sample.n, sample.d
    if n < 2:
        raise ValueError("k0_standardized needs n >= 2")
    if k0 < 1:
        raise ValueError("k0 must be >= 1")
    x = _pair_values(sample, gram)
    total = float(np.sum(gegenbauer_all(k0, d, x)[k0]))
    log_scale = 0.5 * (math.log(2.0) + math.lgamma(k0 + 1)) - 0.5 * k0 * math.log(d) - math.log(n)
    return math.exp(log_scale) * total


def gamma_constant(scheme: WeightScheme, d: int) -> float:
    """Finite-d value of the local power drift constant.

    ``sqrt(d) v_{1,d}^2 / (sqrt(2) (sum_k v^4 d_{k,d})^{1/2})``; the test's
    asymptotic power against integrated vMF alternatives with
    ``kappa = tau d^{3/4} / sqrt(n)`` is ``1 - Phi(z_alpha - Gamma tau^2)``.
    """
    log_sig = log_sigma_n(scheme, d)
    v1 = scheme.weight(1, d)
    if v1 == 0:
        return 0.0
    # sqrt(2) (sum v^4 d)^{1/2} = sigma_n
    return math.exp(0.5 * math.log(d) + 2.0 * math.log(v1) - log_sig)
