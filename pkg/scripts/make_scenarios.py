"""Write the bundled scenario files, one per table row.

Usage: python scripts/make_scenarios.py [--out DIR]

Rates use the desk-scale defaults M=1000 and B=200; `hdsobolev simulate`
overrides both with --M and --B.
"""
import argparse
from pathlib import Path

import yaml

NORMAL_GRID = {"n": [100, 200], "d": [100, 200, 300]}
STUDENT_GRID = {"n": [100, 200, 500, 1000], "d": [100, 200, 300]}
STABLE_GRID = {"n": [50, 100], "d": [50, 100]}
GAMMA_GRID = {"n": [100, 200], "d": [100, 200, 300, 1000]}


def vmf(kappa, radius):
    return {"type": "product", "base": {"type": "vmf", "kappa": kappa}, "radius": radius}


def t(nu, scale=1.0):
    return {"type": "t", "nu": nu, "scale": scale}


def skew_t(nu, omega="identity", xi="zero"):
    return {"type": "skew_t", "nu": nu, "omega": omega, "xi": xi}


CHI_D = {"family": "chi", "df": "d"}
F_D5 = {"family": "sqrt_scaled_f", "df1": "d", "df2": 5}
GAMMA25 = {"family": "gamma", "shape": 2, "scale": 5}
S1 = {"family": "sqrt_stable", "beta": 1.0}
S08 = {"family": "sqrt_stable", "beta": 0.8}

TABLES = {
    1: (
        NORMAL_GRID,
        {"type": "gof_simple", "null": "normal"},
        [
            ("normal", {"type": "normal"}),
            ("normal, Sigma_0.1", {"type": "normal", "sigma_p": 0.1}),
            ("normal, Sigma_0.25", {"type": "normal", "sigma_p": 0.25}),
            ("normal, Sigma_0.5", {"type": "normal", "sigma_p": 0.5}),
            ("vMF(1) directions, chi_d radius", vmf(1, CHI_D)),
            ("vMF(4) directions, chi_d radius", vmf(4, CHI_D)),
            ("t_10, scale 0.75", t(10, 0.75)),
            ("t_10, scale 0.8", t(10, 0.8)),
            ("t_10, scale 0.9", t(10, 0.9)),
            ("t_10, scale 1.1", t(10, 1.1)),
            ("t_10", t(10)),
            ("t_30", t(30)),
            ("t_100", t(100)),
            ("t_500", t(500)),
            ("t_1000", t(1000)),
        ],
    ),
    2: (
        STUDENT_GRID,
        None,
        [
            ("t_5", t(5), "student:5"),
            ("t_6", t(6), "student:5"),
            ("t_7", t(7), "student:5"),
            ("t_8", t(8), "student:5"),
            ("t_5, scale 0.9", t(5, 0.9), "student:5"),
            ("vMF(5) directions, (d F_{d,5})^{1/2} radius", vmf(5, F_D5), "student:5"),
            ("vMF(10) directions, (d F_{d,5})^{1/2} radius", vmf(10, F_D5), "student:5"),
            ("skew-t_5, equicorrelated scale, no slant", skew_t(5, "equicorrelated"), "student:5"),
            ("skew-t_5, identity scale, slant e1", skew_t(5, xi="e1"), "student:5"),
            ("skew-t_8, equicorrelated scale, no slant", skew_t(8, "equicorrelated"), "student:5"),
            ("skew-t_8, identity scale, slant e1", skew_t(8, xi="e1"), "student:5"),
            ("t_5", t(5), "student-est"),
            ("t_5, scale 0.8", t(5, 0.8), "student-est"),
            ("t_5, scale 0.9", t(5, 0.9), "student-est"),
            ("t_5, scale 1.1", t(5, 1.1), "student-est"),
            ("t_5, scale 1.25", t(5, 1.25), "student-est"),
            ("vMF(1) directions, (d F_{d,5})^{1/2} radius", vmf(1, F_D5), "student-est"),
            ("vMF(3) directions, (d F_{d,5})^{1/2} radius", vmf(3, F_D5), "student-est"),
            ("vMF(5) directions, (d F_{d,5})^{1/2} radius", vmf(5, F_D5), "student-est"),
            ("vMF(10) directions, (d F_{d,5})^{1/2} radius", vmf(10, F_D5), "student-est"),
            ("skew-t_5, equicorrelated scale, no slant", skew_t(5, "equicorrelated"), "student-est"),
            ("skew-t_5, identity scale, slant e1", skew_t(5, xi="e1"), "student-est"),
        ],
    ),
    3: (
        STABLE_GRID,
        {"type": "gof_simple", "null": "stable:1"},
        [
            ("normal times S(1)^{1/2}", {"type": "product", "base": {"type": "normal"}, "radius": S1}),
            ("t_1", t(1)),
            ("t_1.25", t(1.25)),
            ("t_1.5", t(1.5)),
            ("DMN(0) times S(0.8)^{1/2}", {"type": "product", "base": {"type": "dmn", "rho": 0.0}, "radius": S08}),
            ("DMN(0.25) times S(0.8)^{1/2}", {"type": "product", "base": {"type": "dmn", "rho": 0.25}, "radius": S08}),
            ("DMN(0.5) times S(0.8)^{1/2}", {"type": "product", "base": {"type": "dmn", "rho": 0.5}, "radius": S08}),
        ],
    ),
    4: (
        GAMMA_GRID,
        {"type": "gof_composite", "null": "gamma-est:radius", "B": 200},
        [
            ("vMF(0) directions, Gamma(2,5) radius", vmf(0, GAMMA25)),
            ("vMF(0.25) directions, chi2_2 radius", vmf(0.25, {"family": "chi2", "df": 2})),
            ("vMF(5) directions, chi2_d radius", vmf(5, {"family": "chi2", "df": "d"})),
            ("vMF(10) directions, chi2_20 radius", vmf(10, {"family": "chi2", "df": 20})),
            ("vMF(2) directions, Gamma(2,5) radius", vmf(2, GAMMA25)),
            ("vMF(5) directions, Gamma(2,5) radius", vmf(5, GAMMA25)),
            ("vMF(10) directions, Gamma(2,5) radius", vmf(10, GAMMA25)),
            ("vMF(20) directions, Gamma(2,5) radius", vmf(20, GAMMA25)),
            ("vMF(0.25) directions, |Cauchy(2,5)| radius", vmf(0.25, {"family": "abs_cauchy", "loc": 2, "scale": 5})),
            ("vMF(0.25) directions, |t_2| radius", vmf(0.25, {"family": "abs_t", "df": 2})),
        ],
    ),
}

EXTRA = [
    {
        "id": "calibration_rayleigh",
        "description": "Rayleigh uniformity test on uniform data (level check)",
        "model": {"type": "uniform"},
        "test": {"type": "uniformity", "scheme": "rayleigh"},
        "n": [100, 200],
        "d": [100, 300],
    },
    {
        "id": "local_alternative_rayleigh",
        "description": "Rayleigh test under the integrated vMF local alternative, tau^2 = sqrt(2)",
        "model": {"type": "integrated_vmf", "tau2": 2**0.5},
        "test": {"type": "uniformity", "scheme": "rayleigh"},
        "n": 500,
        "d": 500,
    },
    {
        "id": "rotsym_null",
        "description": "Rotational symmetry about e1 for tangent vMF(0) data (level check)",
        "model": {"type": "tangent_vmf", "kappa": 0},
        "test": {"type": "rotsym", "scheme": "rayleigh"},
        "n": 100,
        "d": 100,
    },
]


def documents():
    for table, (grid, test, rows) in TABLES.items():
        for i, row in enumerate(rows, start=1):
            desc, model = row[0], row[1]
            if test is None:
                null = row[2]
                kind = "gof_composite" if null.endswith("-est") else "gof_simple"
                row_test = {"type": kind, "null": null}
                if kind == "gof_composite":
                    row_test["B"] = 200
            else:
                row_test = dict(test)
            yield {
                "id": f"table{table}_row{i}",
                "description": desc,
                "model": model,
                "test": row_test,
                **grid,
                "M": 1000,
                "level": 0.05,
                "base_seed": 1000 * table + i,
            }
    for j, doc in enumerate(EXTRA, start=1):
        yield {**doc, "M": 1000, "level": 0.05, "base_seed": 9000 + j}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    default = Path(__file__).resolve().parents[1] / "src" / "hdsobolev" / "scenarios"
    parser.add_argument("--out", type=Path, default=default)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    count = 0
    for doc in documents():
        path = args.out / f"{doc['id']}.yaml"
        path.write_text(yaml.safe_dump(doc, sort_keys=False))
        count += 1
    print(f"wrote {count} scenario files to {args.out}")


if __name__ == "__main__":
    main()
