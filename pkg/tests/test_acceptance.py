"""Acceptance suite.

Each test covers one numbered criterion and prints a single
"[criterion N] PASS/FAIL" line (visible with pytest -s or on failure).
"""

import json
import math
import sys

import numpy as np
import pytest

from softfem import oracle, speclab
from softfem.assembly import (
    assemble_mass,
    assemble_penalty,
    assemble_stiffness,
    build_space,
    soften,
    softness_parameters,
)
from softfem.gevp import smallest_eigenvalue, solve_gmevp, stiffness_reduction
from softfem.mesh import mesh_from_spec


def report(num, ok, detail=""):
    line = f"[criterion {num}] {'PASS' if ok else 'FAIL'} {detail}".rstrip()
    print(line)
    # also bypass pytest's capture so the verdict line is always visible
    print(line, file=sys.__stdout__)
    assert ok, f"criterion {num}: {detail}"


def uniform_1d(n):
    return mesh_from_spec({"type": "uniform", "n": n, "d": 1})


# -- shared heavy computations -------------------------------------------


@pytest.fixture(scope="module")
def bundles_1d_200():
    return {p: speclab.solve_problem(uniform_1d(200), p) for p in range(1, 6)}


PRESET_NAMES = [
    "fig1",
    "fig-eta-sweep",
    "fig-jump-ratio",
    "fig-2d",
    "fig-3d",
    "fig-3d-p4",
    "fig-simplicial",
    "fig-lshape",
    "table4",
    "table-nonuniform",
]


@pytest.fixture(scope="module")
def preset_runs(tmp_path_factory):
    runs = {}
    for name in PRESET_NAMES:
        out = tmp_path_factory.mktemp(name.replace("-", "_"))
        runs[name] = (out, speclab.run_experiment(name, str(out)))
    return runs


def read_spectrum_csv(path):
    rows = path.read_text().strip().split("\n")
    assert rows[0] == speclab.CSV_HEADER
    out = []
    for row in rows[1:]:
        f = row.split(",")
        out.append(
            {
                "j": int(f[0]),
                "lambda_ref": float(f[2]) if f[2] else None,
                "lambda_fem": float(f[3]),
                "lambda_soft": float(f[4]) if f[4] else None,
            }
        )
    return out


# -- criterion 1: golden stencils ----------------------------------------


def test_criterion_1_golden_stencils():
    worst = 0.0
    for n in [2, 5, 16]:
        h = 1.0 / n
        space = build_space(uniform_1d(n), 1)
        K = assemble_stiffness(space).toarray()
        M = assemble_mass(space).toarray()
        S = assemble_penalty(space).toarray()
        size = n - 1
        Kref = np.zeros((size, size))
        Mref = np.zeros((size, size))
        for i in range(size):
            Kref[i, i] = 2.0 / h
            Mref[i, i] = 2.0 * h / 3.0
            if i + 1 < size:
                Kref[i, i + 1] = Kref[i + 1, i] = -1.0 / h
                Mref[i, i + 1] = Mref[i + 1, i] = h / 6.0
        Sref = np.zeros((n + 1, n + 1))
        for i in range(1, n):
            g = np.zeros(n + 1)
            g[i - 1 : i + 2] = np.array([1.0, -2.0, 1.0]) / h
            Sref += h * np.outer(g, g)
        Sref = Sref[1:-1, 1:-1]
        for got, ref in [(K, Kref), (M, Mref), (S, Sref)]:
            scale = np.max(np.abs(ref))
            worst = max(worst, np.max(np.abs(got - ref)) / scale)
    report(1, worst < 1e-13, f"max relative stencil deviation {worst:.2e}")


# -- criterion 2: closed-form equivalence --------------------------------


def test_criterion_2_closed_form_equivalence():
    worst = 0.0
    for n in [2, 4, 8, 16, 32, 64]:
        mesh = uniform_1d(n)
        space = build_space(mesh, 1)
        K = assemble_stiffness(space)
        M = assemble_mass(space)
        S = assemble_penalty(space)
        for eta in [0.0, 1.0 / 12.0]:
            spec = solve_gmevp(soften(K, S, eta), M)
            for j in range(1, n):
                want = oracle.closed_form_linear_eigenvalue(n, j, eta)
                want = want["fem"] if eta == 0.0 else want["soft"]
                worst = max(worst, abs(spec.values[j - 1] - want) / want)
    report(2, worst < 1e-10, f"max relative deviation {worst:.2e}")


# -- criterion 3: Table 3 ------------------------------------------------


TABLE3 = {
    1: (9.8698, 4.7991e5, 3.1995e5, 4.8624e4, 3.2417e4, 1.5000, 33.33),
    2: (9.8696, 2.3998e6, 1.2000e6, 2.4315e5, 1.2158e5, 1.9999, 50.00),
    3: (9.8696, 6.8046e6, 2.7255e6, 6.8945e5, 2.7615e5, 2.4967, 59.95),
    4: (9.8696, 1.5209e7, 5.1587e6, 1.5410e6, 5.2269e5, 2.9482, 66.08),
    5: (9.8696, 2.9555e7, 9.1006e6, 2.9946e6, 9.2208e5, 3.2476, 69.21),
}

TABLE4 = {
    1: (8.2832, 6.3326e5, 4.2263e5, 7.6451e4, 5.1023e4, 1.4984, 33.26),
    2: (8.2829, 3.1795e6, 1.5936e6, 3.8386e5, 1.9240e5, 1.9951, 49.88),
    3: (8.2829, 9.0280e6, 3.6298e6, 1.0900e6, 4.3823e5, 2.4872, 59.79),
    4: (8.2829, 2.0194e7, 6.8865e6, 2.4380e6, 8.3141e5, 2.9323, 65.90),
    5: (8.2829, 3.9263e7, 1.2129e7, 4.7402e6, 1.4643e6, 3.2371, 69.11),
}

NONUNIFORM = {
    1: (9.9653, 1.2631e3, 8.0985e2, 1.2675e2, 8.1267e1, 1.5597, 35.88),
    2: (9.8698, 7.2767e3, 3.2585e3, 7.3727e2, 3.3014e2, 2.2332, 55.22),
    3: (9.8696, 2.1782e4, 7.6596e3, 2.2070e3, 7.7608e2, 2.8438, 64.84),
    4: (9.8696, 5.0056e4, 1.5948e4, 5.0717e3, 1.6159e3, 3.1387, 68.14),
    5: (9.8696, 9.9119e4, 2.9618e4, 1.0043e4, 3.0009e3, 3.3466, 70.12),
}


def metric_tuple(bundle):
    m = stiffness_reduction(bundle.fem, bundle.soft)
    return (
        m.lambda_min,
        m.lambda_max,
        bundle.soft.values[-1],
        m.sigma,
        m.sigma_soft,
        m.rho,
        m.rho_percent,
    )


def test_criterion_3_table3(bundles_1d_200):
    worst = 0.0
    for p, want in TABLE3.items():
        got = metric_tuple(bundles_1d_200[p])
        for g, w in zip(got, want):
            worst = max(worst, abs(g - w) / abs(w))
    report(3, worst < 5e-4, f"max relative deviation {worst:.2e} (4 significant digits)")


# -- criterion 4: Table 1 ------------------------------------------------


TABLE1 = {
    1: {
        "n": [8, 16, 32, 64],
        "lam1": [6.54e-5, 4.12e-6, 2.58e-7, 1.61e-8],
        "h1_1": [3.58e-1, 1.78e-1, 8.91e-2, 4.45e-2],
        "l2_1": [5.85e-3, 1.44e-3, 3.60e-4, 8.98e-5],
        "lam6": [2.10e-2, 4.80e-3, 3.27e-4, 2.08e-5],
        "h1_6": [1.40e1, 6.63e0, 3.23e0, 1.61e0],
        "l2_6": [3.56e-1, 6.06e-2, 1.35e-2, 3.27e-3],
        "rates": [4.00, 1.00, 2.01, 3.38, 1.04, 2.25],
    },
    2: {
        "n": [4, 8, 16, 32, 64],
        "lam1": [4.38e-4, 3.15e-5, 2.04e-6, 1.29e-7, 8.06e-9],
        "h1_1": [7.57e-2, 1.84e-2, 4.53e-3, 1.13e-3, 2.82e-4],
        "l2_1": [2.54e-3, 3.40e-4, 4.33e-5, 5.43e-6, 6.80e-7],
        "lam6": [3.08e-2, 1.11e-2, 1.80e-3, 1.50e-4, 1.02e-5],
        "h1_6": [1.37e1, 3.95e0, 1.04e0, 2.52e-1, 6.15e-2],
        "l2_6": [2.82e-1, 4.47e-2, 7.78e-3, 1.11e-3, 1.45e-4],
        "rates": [3.94, 2.02, 2.97, 2.93, 1.96, 2.72],
    },
    3: {
        "n": [4, 8, 16, 32],
        "lam1": [1.16e-7, 4.47e-10, 2.08e-12, 4.04e-13],
        "h1_1": [5.82e-3, 7.19e-4, 8.96e-5, 1.12e-5],
        "l2_1": [8.08e-5, 4.80e-6, 2.96e-7, 1.85e-8],
        "lam6": [4.32e-2, 7.64e-4, 3.02e-6, 1.15e-8],
        "h1_6": [5.24e0, 9.12e-1, 1.20e-1, 1.46e-2],
        "l2_6": [1.04e-1, 9.29e-3, 4.41e-4, 2.48e-5],
        "rates": [6.21, 3.01, 4.03, 7.35, 2.84, 4.05],
    },
    4: {
        "n": [4, 8, 16],
        "lam1": [4.55e-9, 2.09e-11, 1.25e-13],
        "h1_1": [2.71e-4, 1.55e-5, 9.38e-7],
        "l2_1": [4.54e-6, 1.47e-7, 4.65e-9],
        "lam6": [2.29e-4, 6.70e-6, 9.01e-8],
        "h1_6": [2.12e0, 1.38e-1, 8.72e-3],
        "l2_6": [2.39e-2, 7.88e-4, 3.24e-5],
        "rates": [7.58, 4.09, 4.97, 5.65, 3.96, 4.77],
    },
}


def test_criterion_4_table1():
    exact = oracle.exact_laplace_spectrum(1, 8)
    failures = []
    for p, block in TABLE1.items():
        ours = {q: [] for q in ("lam1", "h1_1", "l2_1", "lam6", "h1_6", "l2_6")}
        for n in block["n"]:
            bundle = speclab.solve_problem(uniform_1d(n), p)
            for mode, tag in [(1, "1"), (6, "6")]:
                lam = exact.values[mode - 1]
                ours[f"lam{mode}"].append(
                    abs(bundle.soft.values[mode - 1] - lam) / lam
                )
                errs = speclab.eigenfunction_errors(
                    bundle.space, bundle.soft, exact, mode - 1, check_simple=False
                )
                ours[f"h1_{tag}"].append(errs["h1"])
                ours[f"l2_{tag}"].append(errs["l2"])
        hs = [1.0 / n for n in block["n"]]
        for qi, q in enumerate(("lam1", "h1_1", "l2_1", "lam6", "h1_6", "l2_6")):
            for lvl, (got, want) in enumerate(zip(ours[q], block[q])):
                if abs(got - want) / want > 0.02:
                    failures.append(
                        f"p={p} {q} N={block['n'][lvl]}: got {got:.3e} want {want:.3e}"
                    )
            rate = speclab.convergence_rates(hs, ours[q], floor=0.0)["rate"]
            if abs(rate - block["rates"][qi]) > 0.2:
                failures.append(
                    f"p={p} {q} rate: got {rate:.2f} want {block['rates'][qi]:.2f}"
                )
    report(4, not failures, "; ".join(failures) if failures else "all cells and rates")


# -- criterion 5: superconvergence ---------------------------------------


def test_criterion_5_superconvergence():
    violations = 0
    for n in [8, 16, 32, 64]:
        h = 1.0 / n
        for j in range(1, n):
            vals = oracle.closed_form_linear_eigenvalue(n, j, 1.0 / 12.0)
            lam = (j * math.pi) ** 2
            rel = abs(vals["soft"] - lam) / lam
            if not rel < oracle.superconvergence_bound(j, h):
                violations += 1
        # and the assembled spectrum agrees with the closed form (criterion 2),
        # so checking the closed form checks the assembled softened pencil too
        bundle = speclab.solve_problem(uniform_1d(n), 1, eta_policy=1.0 / 12.0)
        for j in range(1, n):
            lam = (j * math.pi) ** 2
            rel = abs(bundle.soft.values[j - 1] - lam) / lam
            if not rel < oracle.superconvergence_bound(j, h):
                violations += 1
    report(5, violations == 0, f"{violations} violations")


# -- criterion 6: coercivity sharpness -----------------------------------


def test_criterion_6_coercivity_sharpness():
    details = []
    ok = True
    mesh = uniform_1d(1000)
    for p in [1, 2, 3]:
        space = build_space(mesh, p)
        K = assemble_stiffness(space)
        M = assemble_mass(space)
        S = assemble_penalty(space)
        eta_max = softness_parameters(p, "tensor")["eta_max"]
        lo = smallest_eigenvalue(soften(K, S, 0.95 * eta_max), M)
        hi = smallest_eigenvalue(soften(K, S, 1.05 * eta_max), M)
        details.append(f"p={p}: margin(0.95)={lo:.3e} margin(1.05)={hi:.3e}")
        ok = ok and lo > 0 and hi <= 0
    report(6, ok, "; ".join(details))


# -- criterion 7: two-sided bounds ---------------------------------------


def check_bounds(lam_fem, lam_soft, gamma):
    lam_fem = np.asarray(lam_fem)
    lam_soft = np.asarray(lam_soft)
    lower = np.all(lam_soft >= gamma * lam_fem * (1 - 1e-12))
    # The upper bound is strict in exact arithmetic (up to jump-free modes,
    # where equality holds); allow eigensolver round-off at the lam_max scale.
    upper = np.all(lam_soft <= lam_fem + 1e-12 * lam_fem.max())
    return lower and upper


def test_criterion_7_two_sided_bounds(bundles_1d_200, preset_runs):
    checks = []
    for p in range(1, 6):
        gamma = oracle.gamma_p(p, "tensor")["gamma"]
        b200 = bundles_1d_200[p]
        checks.append(check_bounds(b200.fem.values, b200.soft.values, gamma))
        b50 = speclab.solve_problem(uniform_1d(50), p)
        checks.append(check_bounds(b50.fem.values, b50.soft.values, gamma))
    for name in ["fig-2d", "fig-3d", "fig-simplicial", "fig-lshape"]:
        out, summary = preset_runs[name]
        mesh_kind = "simplicial" if name in ("fig-simplicial", "fig-lshape") else "tensor"
        d = 3 if name == "fig-3d" else 2
        for p_str in summary["by_degree"]:
            p = int(p_str)
            gamma = oracle.gamma_p(p, mesh_kind, d=d if mesh_kind == "simplicial" else None)[
                "gamma"
            ]
            rows = read_spectrum_csv(out / f"spectrum_p{p}.csv")
            fem = [r["lambda_fem"] for r in rows]
            soft = [r["lambda_soft"] for r in rows]
            checks.append(check_bounds(fem, soft, gamma))
    ok = all(checks)
    report(7, ok, f"{sum(checks)}/{len(checks)} mesh/degree combinations within bounds")


# -- criterion 8: trace constants ----------------------------------------


def sample_interval(rng, p, k, samples=1000):
    bound = (p - k + 1) * (p - k + 2)
    worst = -np.inf
    for _ in range(samples):
        ratio = oracle.trace_ratio_interval(rng.standard_normal(p + 1), k=k)
        worst = max(worst, ratio - bound)
    return worst / bound


def grad_boundary_ratio_cuboid(rng, p, edges, samples):
    """||grad v . n||^2_boundary / ||grad v||^2 on a box with given edges."""
    from softfem.polyref import ReferenceBasis, cuboid_rule, gauss_legendre_rule

    basis = ReferenceBasis("cuboid", p, 2)
    quad = cuboid_rule(2, p + 3)
    line = gauss_legendre_rule(p + 3)
    a, b = edges
    sx, sy = 2.0 / a, 2.0 / b
    _, G = basis.eval(quad.nodes)
    worst = -np.inf
    sides = []
    for sgn in (-1.0, 1.0):
        pts = np.column_stack([np.full(len(line.nodes), sgn), line.nodes])
        _, Gb = basis.eval(pts)
        sides.append((Gb[:, :, 0], sx, b / 2.0))
        pts = np.column_stack([line.nodes, np.full(len(line.nodes), sgn)])
        _, Gb = basis.eval(pts)
        sides.append((Gb[:, :, 1], sy, a / 2.0))
    for _ in range(samples):
        c = rng.standard_normal(basis.ndof)
        gx = G[:, :, 0] @ c * sx
        gy = G[:, :, 1] @ c * sy
        vol = np.sum(quad.weights * (a * b / 4.0) * (gx**2 + gy**2))
        bnd = 0.0
        for Gside, scale, meas in sides:
            g = Gside @ c * scale
            bnd += np.sum(line.weights * meas * g**2)
        worst = max(worst, bnd / vol)
    return worst


def boundary_value_ratio_cuboid(rng, p, edges, samples):
    from softfem.polyref import ReferenceBasis, cuboid_rule, gauss_legendre_rule

    basis = ReferenceBasis("cuboid", p, 2)
    quad = cuboid_rule(2, p + 3)
    line = gauss_legendre_rule(p + 3)
    a, b = edges
    V, _ = basis.eval(quad.nodes)
    sides = []
    for sgn in (-1.0, 1.0):
        pts = np.column_stack([np.full(len(line.nodes), sgn), line.nodes])
        sides.append((basis.eval(pts)[0], b / 2.0))
        pts = np.column_stack([line.nodes, np.full(len(line.nodes), sgn)])
        sides.append((basis.eval(pts)[0], a / 2.0))
    worst = -np.inf
    for _ in range(samples):
        c = rng.standard_normal(basis.ndof)
        vol = np.sum(quad.weights * (a * b / 4.0) * (V @ c) ** 2)
        bnd = sum(np.sum(line.weights * meas * (Vs @ c) ** 2) for Vs, meas in sides)
        worst = max(worst, bnd / vol)
    return worst


def grad_boundary_ratio_simplex(rng, p, verts, samples):
    from softfem.polyref import ReferenceBasis, gauss_legendre_rule, simplex_rule

    basis = ReferenceBasis("simplex", p, 2)
    quad = simplex_rule(2 * p + 2)
    line = gauss_legendre_rule(p + 3)
    v0, v1, v2 = [np.asarray(v, float) for v in verts]
    J = np.column_stack([v1 - v0, v2 - v0])
    Jinv = np.linalg.inv(J)
    detj = abs(np.linalg.det(J))
    _, G = basis.eval(quad.nodes)
    refedges = [
        (np.array([0.0, 0.0]), np.array([1.0, 0.0])),
        (np.array([1.0, 0.0]), np.array([0.0, 1.0])),
        (np.array([0.0, 1.0]), np.array([0.0, 0.0])),
    ]
    physedges = [(v0, v1), (v1, v2), (v2, v0)]
    t = (line.nodes + 1.0) / 2.0
    edge_data = []
    for (ra, rb), (pa, pb) in zip(refedges, physedges):
        refpts = ra[None, :] + t[:, None] * (rb - ra)[None, :]
        _, Gb = basis.eval(refpts)
        tang = pb - pa
        length = float(np.hypot(tang[0], tang[1]))
        nrm = np.array([tang[1], -tang[0]]) / length
        edge_data.append((Gb, nrm, length))
    worst = -np.inf
    for _ in range(samples):
        c = rng.standard_normal(basis.ndof)
        g = np.einsum("qld,l->qd", G, c) @ Jinv
        vol = np.sum(quad.weights * detj * (g**2).sum(axis=1))
        bnd = 0.0
        for Gb, nrm, length in edge_data:
            gb = np.einsum("qld,l->qd", Gb, c) @ Jinv
            bnd += np.sum(line.weights * (length / 2.0) * (gb @ nrm) ** 2)
        worst = max(worst, bnd / vol)
    return worst


def test_criterion_8_trace_constants():
    rng = np.random.default_rng(2024)
    slack_floor = -1e-10
    ok = True
    details = []

    # interval constants C1(k, p)^2, never exceeded
    worst_slack = -np.inf
    for p in range(1, 5):
        for k in range(0, p + 1):
            worst_slack = max(worst_slack, sample_interval(rng, p, k))
    ok = ok and worst_slack <= 1e-10
    details.append(f"interval max slack {worst_slack:.1e}")

    # cuboid gradient constant p(p+1)/h0 and full boundary-value constant
    edges = (0.7, 0.4)
    for p in [1, 2, 3]:
        ratio = grad_boundary_ratio_cuboid(rng, p, edges, 1000)
        bound = p * (p + 1) / min(edges)
        ok = ok and (ratio - bound) / bound <= 1e-10
        c2 = oracle.sharp_trace_constant(
            "cuboid-partial", p, k=[0, 0], geometry=list(edges)
        ) ** 2
        ratio_v = boundary_value_ratio_cuboid(rng, p, edges, 1000)
        ok = ok and (ratio_v - c2) / c2 <= 1e-10

    # simplex gradient constant p(p+d-1)/h0
    verts = [(0.0, 0.0), (0.9, 0.1), (0.3, 0.8)]
    v = [np.asarray(x) for x in verts]
    area = 0.5 * abs(
        (v[1][0] - v[0][0]) * (v[2][1] - v[0][1])
        - (v[1][1] - v[0][1]) * (v[2][0] - v[0][0])
    )
    per = sum(np.linalg.norm(v[i] - v[(i + 1) % 3]) for i in range(3))
    h0 = 2.0 * area / per
    for p in [1, 2, 3]:
        ratio = grad_boundary_ratio_simplex(rng, p, verts, 1000)
        bound = p * (p + 1) / h0
        ok = ok and (ratio - bound) / bound <= 1e-10

    # extremal constructions attain their constants
    worst_attain = 0.0
    for p in range(1, 6):
        want = (p + 1) * (p + 2)
        got = oracle.trace_ratio_interval(oracle.extremal_trace_polynomial(p))
        worst_attain = max(worst_attain, abs(got - want) / want)
    # cuboid gradient: a polynomial varying along the smallest edge whose
    # derivative is the degree p-1 extremal attains p(p+1)/h0 exactly
    for p in [2, 3, 4]:
        got = oracle.trace_ratio_interval(oracle.extremal_trace_polynomial(p - 1))
        want = p * (p + 1)
        worst_attain = max(worst_attain, abs(got / min(edges) - want / min(edges)) / (want / min(edges)))
    details.append(f"extremal attainment deviation {worst_attain:.1e}")
    ok = ok and worst_attain < 1e-9
    report(8, ok, "; ".join(details))


# -- criterion 9: branch polynomials -------------------------------------


def test_criterion_9_branch_polynomials():
    worst = 0.0
    n = 40
    mesh = uniform_1d(n)
    for p in [1, 2, 3]:
        space = build_space(mesh, p)
        fem = solve_gmevp(assemble_stiffness(space), assemble_mass(space))
        pred = np.sort(oracle.full_branch_spectrum(p, n))
        assert len(pred) == fem.order
        worst = max(worst, float(np.max(np.abs(pred - fem.values) / fem.values)))
    report(9, worst < 1e-9, f"max multiset deviation {worst:.2e}")


# -- criterion 10: qualitative figure properties -------------------------


def table_from_summary(summary):
    out = {}
    for p_str, b in summary["by_degree"].items():
        out[int(p_str)] = (
            b["lambda_min_fem"],
            b["lambda_max_fem"],
            b["lambda_max_soft"],
            b["sigma"],
            b["sigma_soft"],
            b["rho"],
            b["rho_percent"],
        )
    return out


def test_criterion_10_figures_and_tables(bundles_1d_200, preset_runs):
    ok = True
    details = []

    # softFEM top-decile improvement on every preset with a reference
    for name in PRESET_NAMES:
        _, summary = preset_runs[name]
        for p_str, block in summary["by_degree"].items():
            fem = block.get("top_decile_relerr_fem")
            soft = block.get("top_decile_relerr_soft")
            if fem is None or soft is None:
                ok = False
                details.append(f"{name} p={p_str}: missing error metrics")
            elif not soft < fem:
                ok = False
                details.append(f"{name} p={p_str}: soft {soft:.3e} !< fem {fem:.3e}")
    # same property for the table3 configuration, against the exact spectrum
    exact = oracle.exact_laplace_spectrum(1, 1000).values
    for p, bundle in bundles_1d_200.items():
        n = bundle.fem.order
        ref = exact[:n]
        fem_err = np.abs(bundle.fem.values - ref) / ref
        soft_err = np.abs(bundle.soft.values - ref) / ref
        k = max(1, n // 10)
        if not np.mean(np.sort(soft_err)[-k:]) < np.mean(np.sort(fem_err)[-k:]):
            ok = False
            details.append(f"table3 p={p}: no top-decile improvement")

    # digit reproduction of the variable-coefficient and nonuniform tables
    for name, table in [("table4", TABLE4), ("table-nonuniform", NONUNIFORM)]:
        got = table_from_summary(preset_runs[name][1])
        worst = 0.0
        for p, want in table.items():
            for g, w in zip(got[p], want):
                worst = max(worst, abs(g - w) / abs(w))
        details.append(f"{name} max deviation {worst:.2e}")
        ok = ok and worst < 5e-3

    report(10, ok, "; ".join(details))
