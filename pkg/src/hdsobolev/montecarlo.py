"""Scenario-driven Monte Carlo experiments.

A :class:`Scenario` fixes a data model, a sample size, a dimension, a test
and a seed. :func:`run_scenario` estimates the rejection rate over ``M``
replicates; replicate ``r`` draws its data from ``RngStream(base_seed, r)``
and, for bootstrap tests, its resamples from streams ``M + r + j M``, so
the result does not depend on how replicates are spread over workers.

Scenario files are YAML documents validated against :data:`SCENARIO_SCHEMA`;
``n`` and ``d`` may be lists, in which case the file expands to one
scenario per ``(n, d)`` cell.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .radial import BootstrapConfig, RadialNull, parse_null
from .sampling import (
    DMN,
    MVT,
    VMF,
    IntegratedTangentVMF,
    IntegratedVMF,
    ModelSpec,
    MVNormal,
    Product,
    RadiusLaw,
    RngStream,
    SkewT,
    TangentVMF,
    UniformSphere,
    sigma_p,
)
from .sobolev import RAYLEIGH, SphereSample, WeightScheme, k0_standardized, parse_scheme, statistic
from .specfun import normal_cdf
from .symmetry import gof_composite, gof_simple, rotsym_test

__all__ = [
    "SCENARIO_SCHEMA",
    "ReplicateError",
    "TestSpec",
    "Scenario",
    "RejectionRow",
    "ConvergenceReport",
    "build_model",
    "build_test",
    "scenarios_from_dict",
    "load_scenarios",
    "bundled_scenarios",
    "run_replicate",
    "run_scenario",
    "rows_to_csv",
    "rows_to_json",
    "kolmogorov_sf",
    "ks_one_sample",
    "convergence_experiment",
    "convergence_experiments",
]

log = logging.getLogger(__name__)

_INT_OR_LIST = {
    "oneOf": [
        {"type": "integer", "minimum": 1},
        {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
    ]
}
_NUMBER_OR_D = {"oneOf": [{"type": "number"}, {"const": "d"}]}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["id", "model", "test", "n", "d"],
    "additionalProperties": False,
    "properties": {
        "id": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "description": {"type": "string"},
        "n": _INT_OR_LIST,
        "d": _INT_OR_LIST,
        "M": {"type": "integer", "minimum": 1},
        "level": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "base_seed": {"type": "integer", "minimum": 0},
        "model": {"$ref": "#/definitions/model"},
        "test": {
            "type": "object",
            "required": ["type"],
            "additionalProperties": False,
            "properties": {
                "type": {"enum": ["uniformity", "rotsym", "gof_simple", "gof_composite"]},
                "scheme": {"type": "string"},
                "null": {"type": "string"},
                "B": {"type": "integer", "minimum": 1},
                "theta": {"type": "array", "items": {"type": "number"}},
            },
        },
    },
    "definitions": {
        "model": {
            "type": "object",
            "required": ["type"],
            "properties": {
                "type": {
                    "enum": [
                        "uniform",
                        "vmf",
                        "integrated_vmf",
                        "tangent_vmf",
                        "integrated_tangent_vmf",
                        "normal",
                        "t",
                        "skew_t",
                        "dmn",
                        "product",
                    ]
                },
                "kappa": {"type": "number", "minimum": 0},
                "tau2": {"type": "number", "minimum": 0},
                "scale": {"type": "number", "exclusiveMinimum": 0},
                "sigma_p": {"type": "number", "minimum": 0, "maximum": 1},
                "nu": {"type": "number", "exclusiveMinimum": 0},
                "omega": {"enum": ["identity", "equicorrelated"]},
                "rho_offdiag": {"type": "number"},
                "xi": {"enum": ["zero", "e1"]},
                "rho": {"type": "number", "minimum": 0, "maximum": 1},
                "base": {"$ref": "#/definitions/model"},
                "radius": {
                    "type": "object",
                    "required": ["family"],
                    "properties": {
                        "family": {"type": "string"},
                    },
                    "additionalProperties": _NUMBER_OR_D,
                },
            },
            "additionalProperties": False,
        }
    },
}


class ReplicateError(RuntimeError):
    """A replicate raised; carries its index."""

    def __init__(self, scenario_id, index, cause):
        super().__init__(f"scenario {scenario_id}: replicate {index} failed: {cause!r}")
        self.index = index


@dataclass(frozen=True)
class TestSpec:
    """Which test a scenario applies.

    ``kind`` is ``uniformity``, ``rotsym``, ``gof_simple`` or
    ``gof_composite``; ``null`` is a radial null label (gof only) and ``B``
    the bootstrap size (composite only).
    """

    kind: str
    scheme: WeightScheme = RAYLEIGH
    null: str | None = None
    B: int = 200
    theta: tuple | None = None

    __test__ = False

    @property
    def label(self) -> str:
        if self.kind in ("uniformity", "rotsym"):
            return f"{self.kind}({self.scheme.label})"
        if self.kind == "gof_simple":
            return f"gof_simple({self.null};{self.scheme.label})"
        return f"gof_composite({self.null};{self.scheme.label};B={self.B})"


@dataclass(frozen=True)
class Scenario:
    """One ``(model, n, d, test)`` cell.

    ``d`` is the sphere dimension for ``uniformity`` and ``rotsym`` (data on
    S^d) and the Euclidean dimension for the spherical-symmetry tests (data
    in R^d).
    """

    id: str
    model: ModelSpec
    n: int
    d: int
    test: TestSpec
    M: int = 1000
    level: float = 0.05
    base_seed: int = 1
    model_label: str = ""

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")


@dataclass(frozen=True)
class RejectionRow:
    scenario: str
    model: str
    test: str
    n: int
    d: int
    M: int
    level: float
    rejections: int
    wall_time: float = field(default=0.0, compare=False)

    @property
    def rejection_rate(self) -> float:
        return self.rejections / self.M

    @property
    def mc_stderr(self) -> float:
        p = self.rejection_rate
        return math.sqrt(p * (1.0 - p) / self.M)


@dataclass
class ConvergenceReport:
    values: np.ndarray
    ks_distance: float
    ks_p: float
    target_mean: float
    bin_edges: np.ndarray
    counts: np.ndarray

    def histogram_csv(self) -> str:
        lines = ["left,right,count"]
        for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
            lines.append(f"{lo!r},{hi!r},{int(c)}")
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "M": int(self.values.size),
            "mean": float(np.mean(self.values)),
            "variance": float(np.var(self.values, ddof=1)) if self.values.size > 1 else float("nan"),
            "target_mean": self.target_mean,
            "ks_distance": self.ks_distance,
            "ks_p": self.ks_p,
        }


# ---------------------------------------------------------------------------
# scenario files


def _resolve(value, d):
    return d if value == "d" else value


def build_model(spec: dict, dim: int, n: int) -> ModelSpec:
    """Model for data in R^dim (sphere models live on S^{dim-1}).

    ``tau2`` sets the vMF concentration to ``sqrt(tau2) p^{3/4} / sqrt(n)``
    with ``p = dim - 1``, the local-alternative scaling. Tangent models use
    the same ``p``, the dimension of the sphere carrying the data.
    """
    kind = spec["type"]
    p = dim - 1

    def concentration():
        if "tau2" in spec:
            return math.sqrt(spec["tau2"]) * p**0.75 / math.sqrt(n)
        return float(spec.get("kappa", 0.0))

    if kind == "uniform":
        return UniformSphere(p)
    if kind == "vmf":
        return VMF(p, concentration())
    if kind == "integrated_vmf":
        return IntegratedVMF(p, concentration())
    if kind == "tangent_vmf":
        return TangentVMF(p, concentration())
    if kind == "integrated_tangent_vmf":
        return IntegratedTangentVMF(p, concentration())
    if kind == "normal":
        cov = sigma_p(dim, spec["sigma_p"]) if "sigma_p" in spec else spec.get("scale", 1.0)
        return MVNormal(dim, cov)
    if kind == "t":
        return MVT(dim, spec["nu"], spec.get("scale", 1.0))
    if kind == "skew_t":
        if spec.get("omega", "identity") == "equicorrelated":
            r = spec.get("rho_offdiag", 0.25)
            omega = np.full((dim, dim), r) + (1.0 - r) * np.eye(dim)
        else:
            omega = spec.get("scale", 1.0)
        xi = np.eye(dim)[0] if spec.get("xi", "zero") == "e1" else None
        return SkewT(dim, spec["nu"], omega, xi)
    if kind == "dmn":
        return DMN(dim, spec["rho"])
    if kind == "product":
        radius = {k: _resolve(v, dim) for k, v in spec["radius"].items() if k != "family"}
        return Product(build_model(spec["base"], dim, n), RadiusLaw(spec["radius"]["family"], radius))
    raise ValueError(f"unknown model type {kind!r}")


def _model_label(spec: dict) -> str:
    kind = spec["type"]
    if kind == "product":
        r = spec["radius"]
        args = ",".join(f"{k}={v}" for k, v in r.items() if k != "family")
        return f"{_model_label(spec['base'])}*{r['family']}({args})"
    args = ",".join(f"{k}={v}" for k, v in spec.items() if k != "type")
    return f"{kind}({args})"


def build_test(spec: dict) -> TestSpec:
    kind = spec["type"]
    scheme = parse_scheme(spec.get("scheme", "rayleigh"))
    null = spec.get("null")
    if kind.startswith("gof"):
        if null is None:
            raise ValueError(f"{kind} needs a radial null")
        probe = parse_null(null, 3)
        if probe.composite != (kind == "gof_composite"):
            want = "free" if kind == "gof_composite" else "fixed"
            raise ValueError(f"{kind} needs a null with {want} parameters, got {null!r}")
    theta = tuple(spec["theta"]) if "theta" in spec else None
    return TestSpec(kind, scheme, null, spec.get("B", 200), theta)


def _as_list(v):
    return list(v) if isinstance(v, list) else [v]


def scenarios_from_dict(doc: dict, M=None, B=None, base_seed=None) -> list[Scenario]:
    """Validate a scenario document and expand it into cells.

    ``M``, ``B`` and ``base_seed`` override the document's values.
    """
    jsonschema.validate(doc, SCENARIO_SCHEMA)
    test_doc = dict(doc["test"])
    if B is not None:
        test_doc["B"] = B
    test = build_test(test_doc)
    out = []
    sphere = test.kind in ("uniformity", "rotsym")
    for n in _as_list(doc["n"]):
        for d in _as_list(doc["d"]):
            dim = d + 1 if sphere else d
            out.append(
                Scenario(
                    id=f"{doc['id']}_n{n}_d{d}",
                    model=build_model(doc["model"], dim, n),
                    n=n,
                    d=d,
                    test=test,
                    M=M if M is not None else doc.get("M", 1000),
                    level=doc.get("level", 0.05),
                    base_seed=base_seed if base_seed is not None else doc.get("base_seed", 1),
                    model_label=_model_label(doc["model"]),
                )
            )
    return out


def load_scenarios(path, **overrides) -> list[Scenario]:
    """Read a YAML scenario file, or a bundled one by its id."""
    p = Path(path)
    if not p.exists():
        bundled = resources.files("hdsobolev").joinpath(f"scenarios/{p.stem}.yaml")
        if not bundled.is_file():
            raise FileNotFoundError(f"no scenario file or bundled scenario named {path!r}")
        text = bundled.read_text()
    else:
        text = p.read_text()
    return scenarios_from_dict(yaml.safe_load(text), **overrides)


def bundled_scenarios() -> list[str]:
    root = resources.files("hdsobolev").joinpath("scenarios")
    return sorted(f.name[:-5] for f in root.iterdir() if f.name.endswith(".yaml"))


# ---------------------------------------------------------------------------
# running


def _points(x):
    return x.data if isinstance(x, SphereSample) else x


def run_replicate(s: Scenario, r: int) -> float:
    """p-value of replicate ``r`` of scenario ``s``."""
    x = s.model.sample(RngStream(s.base_seed, r), s.n)
    t = s.test
    if t.kind == "uniformity":
        return statistic(x, t.scheme).p_value
    if t.kind == "rotsym":
        theta = np.eye(s.d + 1)[0] if t.theta is None else np.asarray(t.theta, dtype=float)
        return rotsym_test(x, theta, t.scheme).p_value
    null: RadialNull = parse_null(t.null, s.d)
    if t.kind == "gof_simple":
        return gof_simple(_points(x), null, t.scheme).p_value
    cfg = BootstrapConfig(t.B, RngStream(s.base_seed, s.M + r), stride=s.M)
    return gof_composite(_points(x), null, t.scheme, cfg).p_value


def _count_rejections(s: Scenario, indices) -> int:
    count = 0
    for r in indices:
        try:
            p = run_replicate(s, r)
        except Exception as exc:
            raise ReplicateError(s.id, r, exc) from exc
        count += p < s.level
    return count


def run_scenario(s: Scenario, workers: int = 1) -> RejectionRow:
    """Rejection count over ``s.M`` replicates, split across ``workers`` processes."""
    start = time.perf_counter()
    workers = max(1, min(workers, s.M))
    if workers == 1:
        rejections = _count_rejections(s, range(s.M))
    else:
        chunks = [range(i, s.M, workers) for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rejections = sum(pool.map(_count_rejections, [s] * workers, chunks))
    row = RejectionRow(
        scenario=s.id,
        model=s.model_label,
        test=s.test.label,
        n=s.n,
        d=s.d,
        M=s.M,
        level=s.level,
        rejections=int(rejections),
        wall_time=time.perf_counter() - start,
    )
    log.info("%s: %.1f%% (%d/%d) in %.1fs", s.id, 100 * row.rejection_rate, row.rejections, s.M, row.wall_time)
    return row


CSV_FIELDS = ["scenario", "model", "test", "n", "d", "M", "level", "rejections", "rejection_rate", "mc_stderr"]


def rows_to_csv(rows) -> str:
    """CSV with one line per row; wall time is left out so reruns compare equal."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for row in rows:
        w.writerow(
            [row.scenario, row.model, row.test, row.n, row.d, row.M, repr(row.level), row.rejections,
             repr(row.rejection_rate), repr(row.mc_stderr)]
        )
    return buf.getvalue()


def rows_to_json(rows) -> str:
    out = []
    for row in rows:
        item = asdict(row)
        item.update(rejection_rate=row.rejection_rate, mc_stderr=row.mc_stderr)
        out.append(item)
    return json.dumps(out, indent=2)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov and convergence studies


def kolmogorov_sf(lam: float) -> float:
    """Upper tail of the Kolmogorov distribution, ``P(K > lam)``.

    Alternating series ``2 sum (-1)^{k-1} exp(-2 k^2 lam^2)`` for ``lam >= 1``;
    the Jacobi theta form ``sqrt(2 pi) / lam sum exp(-(2k-1)^2 pi^2 / (8 lam^2))``
    of the CDF below. Both are truncated when terms drop under 1e-16.
    """
    if lam <= 0:
        return 1.0
    if lam >= 1.0:
        total, k = 0.0, 1
        while True:
            term = math.exp(-2.0 * k * k * lam * lam)
            total += term if k % 2 else -term
            if term < 1e-16:
                return min(1.0, max(0.0, 2.0 * total))
            k += 1
    total, k = 0.0, 1
    while True:
        term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * lam * lam))
        total += term
        if term < 1e-16 * max(total, 1e-300):
            return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / lam * total))
        k += 1


def ks_one_sample(values, cdf) -> tuple[float, float]:
    """Kolmogorov-Smirnov distance to ``cdf`` and its asymptotic p-value."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("no values")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    dist = float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
    return dist, kolmogorov_sf(math.sqrt(n) * dist)


def _standardized(x, stat, gram):
    if isinstance(stat, WeightScheme):
        return statistic(x, stat, gram=gram).standardized
    return k0_standardized(x, int(stat), gram=gram)


def convergence_experiments(
    model: ModelSpec, n: int, M: int, stats, target_means, base_seed: int = 1
) -> list[ConvergenceReport]:
    """Several statistics evaluated on the same ``M`` samples.

    Each entry of ``stats`` is an integer ``k0`` (the single-degree
    statistic) or a :class:`WeightScheme` (its standardized Sobolev
    statistic); ``target_means`` gives the mean of the normal limit for each.
    """
    stats = list(stats)
    values = np.empty((len(stats), M))
    for r in range(M):
        x = model.sample(RngStream(base_seed, r), n)
        gram = x.data @ x.data.T
        for i, stat in enumerate(stats):
            values[i, r] = _standardized(x, stat, gram)
    reports = []
    for v, mu in zip(values, target_means):
        dist, p = ks_one_sample(v, lambda t, mu=mu: normal_cdf(t - mu))
        edges = np.histogram_bin_edges(v, bins="fd")
        counts, _ = np.histogram(v, bins=edges)
        reports.append(ConvergenceReport(v, dist, p, float(mu), edges, counts))
    return reports


def convergence_experiment(
    model: ModelSpec, n: int, M: int, stat, target_mean: float = 0.0, base_seed: int = 1
) -> ConvergenceReport:
    """Replicates of one standardized statistic compared with ``N(target_mean, 1)``.

    KS distance and asymptotic p-value, plus a Freedman-Diaconis histogram.
    """
    return convergence_experiments(model, n, M, [stat], [target_mean], base_seed)[0]


def default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1
