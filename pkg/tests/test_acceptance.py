"""Acceptance gate: every shipped claim at its stated tolerance.

Each criterion is one test that prints a single PASS/FAIL line (visible
with `pytest -s` or in failure output) and asserts. Run the whole module
with `pytest tests/test_acceptance.py -v -s`.
"""

import json
import math
import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

import dilatlab as dl
from dilatlab import analysis, ccdist

from oracles import heisenberg_matrix_product

SEED = 20240801


def _report(num, label, ok, detail=""):
    line = f"criterion {num:02d} {'PASS' if ok else 'FAIL'}: {label}"
    if detail:
        line += f" [{detail}]"
    print(line)
    import conftest
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line


def _acceptance_structures():
    contraction = dl.as_dilatation_structure(
        dl.from_contraction(dl.matrix_contraction(np.diag([0.5, 0.25]))))
    return [
        ("euclidean:2", dl.resolve_structure("euclidean:2")),
        ("chart:2", dl.resolve_structure("chart:2")),
        ("conical:heisenberg:koranyi", dl.resolve_structure("conical:heisenberg:koranyi")),
        ("conical:abelian:3", dl.resolve_structure("conical:abelian:3")),
        ("from_contraction(diag(0.5,0.25))", contraction),
    ]


def test_criterion_01_exact_identities():
    worst = 0.0
    worst_at = ""
    for sid, structure in _acceptance_structures():
        for label, instance in ((sid, structure),
                                (f"shifted({sid})",
                                 dl.shifted_structure(
                                     structure, np.zeros(structure.dimension), 0.5))):
            rep = dl.identity_suite(instance, seed=SEED, count=1000,
                                    tolerance=1e-10, structure_id=label)
            peak = max(rep.residuals.values())
            if peak > worst:
                worst, worst_at = peak, label
    exact_ok = True
    for name in ("heisenberg:1", "engel"):
        group = dl.builtin(name, mode="rational")
        n = group.dimension
        a = tuple(Fraction(k + 1, 7) for k in range(n))
        b = tuple(Fraction(2 * k - 3, 5) for k in range(n))
        c = tuple(Fraction(3 - k, 11) for k in range(n))
        exact_ok &= group.bch(group.bch(a, b), c) == group.bch(a, group.bch(b, c))
        exact_ok &= group.bch(a, group.inverse(a)) == group.identity()
        exact_ok &= group.bch(group.identity(), a) == a
    ok = worst <= 1e-10 and exact_ok
    _report(1, "exact identities on all instances and their shifts",
            ok, f"max residual {worst:.2e} at {worst_at}; rational laws exact: {exact_ok}")


def test_criterion_02_bch_oracle_and_associativity():
    heis = dl.builtin("heisenberg:1")
    rng = np.random.default_rng(SEED)
    oracle_worst = 0.0
    for _ in range(1000):
        g = tuple(rng.uniform(-1, 1, 3))
        h = tuple(rng.uniform(-1, 1, 3))
        got = heis.bch(g, h)
        want = heisenberg_matrix_product(g, h)
        oracle_worst = max(oracle_worst, max(abs(a - b) for a, b in zip(got, want)))
    assoc_worst = 0.0
    for group in (heis, dl.builtin("engel")):
        for _ in range(10_000):
            a, b, c = (tuple(rng.uniform(-1, 1, group.dimension)) for _ in range(3))
            lhs = group.bch(group.bch(a, b), c)
            rhs = group.bch(a, group.bch(b, c))
            assoc_worst = max(assoc_worst,
                              max(abs(x - y) for x, y in zip(lhs, rhs)))
    ok = oracle_worst <= 1e-12 and assoc_worst <= 1e-12
    _report(2, "BCH matrix oracle and associativity",
            ok, f"oracle {oracle_worst:.2e}, associativity {assoc_worst:.2e}")


def test_criterion_03_linearity_of_conical_instances():
    rng = np.random.default_rng(SEED)
    lin_worst = aux_worst = 0.0
    for sid in ("conical:heisenberg:koranyi", "euclidean:2"):
        s = dl.resolve_structure(sid)
        for _ in range(300):
            x, y, z = (rng.uniform(-0.35, 0.35, s.dimension) for _ in range(3))
            eps, mu = rng.uniform(0.1, 1.0, 2)
            lin_worst = max(lin_worst, dl.linearity_defect(s, x, y, z, eps, mu))
            aux_worst = max(aux_worst, dl.sum_diff_swap_defect(s, x, y, z, eps))
            aux_worst = max(aux_worst,
                            dl.tangent_reconstruction_defect(s, x, y, z, mu))
    ok = lin_worst <= 1e-12 and aux_worst <= 1e-10
    _report(3, "conical and affine structures are linear",
            ok, f"Lin {lin_worst:.2e}, swap/reconstruction {aux_worst:.2e}")


def test_criterion_04_chart_is_nonlinear():
    chart = dl.resolve_structure("chart:2")
    rng = np.random.default_rng(SEED)
    peak = 0.0
    for _ in range(150):
        x, y, z = (rng.uniform(-0.35, 0.35, 2) for _ in range(3))
        for eps, mu in ((0.5, 0.5), (0.5, 0.25), (0.25, 0.5)):
            peak = max(peak, dl.linearity_defect(chart, x, y, z, eps, mu))
    ok = peak >= 1e-6
    _report(4, "chart control is genuinely nonlinear", ok, f"max Lin {peak:.2e}")


def test_criterion_05_infinitesimal_linearity():
    chart = dl.resolve_structure("chart:2")
    grid = tuple(0.5**k for k in range(6, 15))
    cfg = analysis.SweepConfig(structure="chart:2", samples=48, seed=SEED,
                               grid=grid)
    rep = analysis.inflin_sweep(chart, cfg)
    decreasing = all(b < a for a, b in zip(rep.defects, rep.defects[1:]))
    shrunk = rep.defects[-1] <= 0.1 * rep.defects[0]
    ok = decreasing and shrunk
    _report(5, "normalized linearity defect vanishes at scale squared",
            ok, f"monotone {decreasing}, final/initial "
                f"{rep.defects[-1] / rep.defects[0]:.2e}")


def test_criterion_06_axiom_sweeps():
    sweeps = (("a3", analysis.axiom3_sweep), ("a4", analysis.axiom4_sweep),
              ("cone", analysis.cone_sweep),
              ("tangent-metric", analysis.tangent_metric_sweep))
    detail = []
    ok = True
    for sid in ("euclidean:2", "conical:heisenberg:koranyi"):
        s = dl.resolve_structure(sid)
        cfg = analysis.SweepConfig(structure=sid, samples=32, seed=SEED)
        peak = max(max(fn(s, cfg).defects) for _, fn in sweeps)
        ok &= peak <= 1e-12
        detail.append(f"{sid} max {peak:.1e}")
    chart = dl.resolve_structure("chart:2")
    cfg = analysis.SweepConfig(structure="chart:2", samples=32, seed=SEED)
    for name, fn in sweeps:
        rep = fn(chart, cfg)
        if name == "cone":
            ok &= max(rep.defects) <= 1e-10  # conjugated scaling is an exact cone
            detail.append(f"chart cone max {max(rep.defects):.1e}")
        else:
            ok &= rep.order >= 0.9 and rep.residual <= 0.2
            detail.append(f"chart {name} order {rep.order:.2f}")
    _report(6, "axiom sweeps exact or first-order decaying", ok, "; ".join(detail))


def test_criterion_07_group_limit_estimators():
    group = dl.resolve_structure("gwd:heisenberg-isotropic").group
    grid = dl.dyadic_grid(1, 16)
    est = dl.beta_limit(group, (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), grid)
    value_ok = np.linalg.norm(np.asarray(est.value) - (1.0, 1.0, 0.0)) <= 1e-5
    defect_ok = True
    for t in grid:
        prod = group.op(group.dilation((1.0, 0.0, 0.0), t),
                        group.dilation((0.0, 1.0, 0.0), t))
        val = np.asarray(group.dilation(prod, 1.0 / t))
        defect = float(np.linalg.norm(val - (1.0, 1.0, 0.0)))
        defect_ok &= abs(defect - 0.5 * t) <= 0.01 * 0.5 * t
    ok = value_ok and defect_ok
    _report(7, "group-with-dilatations limits on the isotropic instance",
            ok, f"value at 2^-16 within 1e-5: {value_ok}; defect = eps/2: {defect_ok}")


def test_criterion_08_cc_sandwich():
    heis = dl.builtin("heisenberg:1")
    e = heis.identity()
    horizontal = ccdist.cc_upper(heis, e, (1.0, 0.0, 0.0), K=64)
    central = ccdist.cc_upper(heis, e, (0.0, 0.0, 1.0), K=64)
    half = ccdist.cc_upper(heis, e, heis.dilation((0.0, 0.0, 1.0), 0.5), K=64)
    checks = {
        "lower=1": ccdist.cc_lower(heis, e, (1.0, 0.0, 0.0)) == 1.0,
        "upper<=1+1e-4": horizontal["upper"] <= 1.0 + 1e-4,
        "central<=4": central["upper"] <= 4.0,
        "homogeneity2%": abs(half["upper"] / central["upper"] - 0.5) <= 0.02 * 0.5,
        "residuals<=1e-8": all(r["residual"] <= 1e-8
                               for r in (horizontal, central, half)),
    }
    ok = all(checks.values())
    _report(8, "horizontal distance sandwich on Heisenberg", ok,
            ", ".join(f"{k}:{v}" for k, v in checks.items()))


def test_criterion_09_differentiability():
    affine = dl.resolve_structure("euclidean:2")
    mat = np.array([[1.2, -0.3], [0.4, 0.9]])

    def affine_map(u):
        return mat @ np.asarray(u) + np.array([0.05, -0.1])

    cfg = analysis.SweepConfig(structure="euclidean:2", samples=24, seed=SEED)
    affine_rep = analysis.diff_sweep(affine_map, affine_map, affine, affine,
                                     (0.1, 0.2), cfg)
    koranyi = dl.resolve_structure("conical:heisenberg:koranyi")

    def rotate(u):
        a, b, c = np.asarray(u, dtype=float)
        return np.array([b, -a, c])

    cfg_h = analysis.SweepConfig(structure="conical:heisenberg:koranyi",
                                 samples=24, seed=SEED)
    rot_rep = analysis.diff_sweep(rotate, rotate, koranyi, koranyi,
                                  (0.0, 0.0, 0.0), cfg_h)

    def quadratic(u):
        u = np.asarray(u, dtype=float)
        return u + u * u

    control = analysis.diff_sweep(quadratic, lambda u: np.asarray(u, float),
                                  affine, affine, (0.0, 0.0), cfg)
    ok = (max(affine_rep.defects) <= 1e-10 and max(rot_rep.defects) <= 1e-10
          and abs(control.order - 1.0) <= 0.2)
    _report(9, "derivative sweeps: exact for morphisms, first order for the control",
            ok, f"affine {max(affine_rep.defects):.1e}, automorphism "
                f"{max(rot_rep.defects):.1e}, control order {control.order:.2f}")


def test_criterion_10_cli_determinism():
    env = os.environ.copy()
    env["DILATLAB_SEED"] = str(SEED)
    cmd = [sys.executable, "-m", "dilatlab.cli"]

    def run_twice(args):
        a = subprocess.run(cmd + args, capture_output=True, env=env)
        b = subprocess.run(cmd + args, capture_output=True, env=env)
        return a, b

    v1, v2 = run_twice(["verify", "chart:2", "--samples", "40", "--json"])
    s1, s2 = run_twice(["sweep", "conical:heisenberg:koranyi", "--defect", "a3",
                        "--samples", "12", "--json"])
    ok = (v1.returncode == 0 and v1.stdout == v2.stdout
          and s1.returncode == 0 and s1.stdout == s2.stdout
          and json.loads(v1.stdout)["verdict"] is True)
    _report(10, "verify and sweep emit byte-identical reports for a fixed seed",
            ok, f"verify bytes {len(v1.stdout)}, sweep bytes {len(s1.stdout)}")
