"""Error metrics, convergence studies, and the experiment runner.

Reproduces the paper-style tables and figures as CSV/JSON reports. The CSV
schema is fixed as
j,frac,lambda_ref,lambda_fem,lambda_soft,relerr_fem,relerr_soft,h1err,l2err,jump_ratio
with empty fields for unrequested columns.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import assembly, gevp, oracle
from .assembly import (
    assemble_mass,
    assemble_penalty,
    assemble_stiffness,
    build_space,
    soften,
    softness_parameters,
)
from .coefficient import parse_coefficient
from .mesh import mesh_from_spec
from .polyref import cuboid_rule, simplex_rule


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


class SolverFailure(RuntimeError):
    pass


class CoercivityViolation(RuntimeError):
    """Negative softened pencil eigenvalue under the default eta policy."""


class MultiplicityError(RuntimeError):
    """Eigenfunction comparison requested inside a degenerate cluster."""


CSV_HEADER = (
    "j,frac,lambda_ref,lambda_fem,lambda_soft,"
    "relerr_fem,relerr_soft,h1err,l2err,jump_ratio"
)


# -- per-mode metrics ------------------------------------------------------


def eigenvalue_error_curve(values, reference):
    """Mode-sorted relative eigenvalue errors |lam_h - lam| / lam."""
    values = np.asarray(values, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if len(reference) < len(values):
        raise ValueError("reference spectrum has fewer modes than the discrete one")
    ref = reference[: len(values)]
    return np.abs(values - ref) / ref


def _error_quadrature(space):
    """Element quadrature of degree >= 2p+6 for eigenfunction errors."""
    p = space.p
    if space.mesh.kind == "tensor":
        return cuboid_rule(space.mesh.d, p + 5)
    return simplex_rule(2 * p + 6)


def _full_coefficients(space, reduced):
    full = np.zeros(space.n_full)
    full[space.reduced_to_full] = reduced
    return full


def _check_simple(values, j):
    clusters = gevp.cluster_eigenvalues(values)
    for cluster in clusters:
        if j in cluster and len(cluster) > 1:
            raise MultiplicityError(
                f"eigenvalue {j} lies in a degenerate cluster of size {len(cluster)}"
            )


def eigenfunction_errors(space, spectrum, exact, j, check_simple=True):
    """H1-seminorm and L2 errors of discrete mode j against the exact one.

    Modes are 0-based here. The discrete eigenfunction is sign-aligned with
    the exact one through their L2 inner product.
    """
    if check_simple:
        _check_simple(spectrum.values, j)
        _check_simple(exact.values, j)
    return _coefficient_errors(space, spectrum.vectors[:, j], exact, j)


def _coefficient_errors(space, coeffs, exact, j):
    uval, ugrad = exact.eigenfunction(j)
    quad = _error_quadrature(space)
    V, G = space.basis.eval(quad.nodes)
    full = _full_coefficients(space, coeffs)

    inner = 0.0
    terms = []
    for e in range(space.mesh.n_elements):
        to_phys, _, grad_scale, detj = assembly.element_map(space, e)
        pts = to_phys(quad.nodes)
        w = quad.weights * detj
        loc = full[space.element_dofs[e]]
        vh = V @ loc
        gh = np.einsum("qld,l->qd", grad_scale(G), loc)
        ue = uval(pts)
        ge = ugrad(pts)
        inner += float(np.sum(w * vh * ue))
        terms.append((w, vh, gh, ue, ge))
    sign = 1.0 if inner >= 0 else -1.0
    l2_sq = 0.0
    h1_sq = 0.0
    for w, vh, gh, ue, ge in terms:
        l2_sq += float(np.sum(w * (sign * vh - ue) ** 2))
        h1_sq += float(np.sum(w * ((sign * gh - ge) ** 2).sum(axis=1)))
    return {"h1": math.sqrt(h1_sq), "l2": math.sqrt(l2_sq)}


def jump_energy_ratio(spectrum, eta, K, S):
    """Per-mode ratio eta * (x'Sx) / (x'Kx) for all eigenvectors."""
    out = np.empty(spectrum.order)
    for j in range(spectrum.order):
        x = spectrum.vectors[:, j]
        kx = float(x @ K.matvec(x))
        if kx <= 0:
            raise ValueError("nonpositive stiffness energy")
        out[j] = eta * float(x @ S.matvec(x)) / kx
    return out


def embed_coefficients(space_lo, coeffs_lo, space_hi):
    """Re-express a low-degree FE function in a higher-degree space on the
    same mesh, by nodal evaluation (exact since the spaces are nested)."""
    if space_lo.mesh is not space_hi.mesh:
        raise ValueError("spaces must share a mesh")
    full_lo = _full_coefficients(space_lo, coeffs_lo)
    V, _ = space_lo.basis.eval(space_hi.basis.nodes)
    full_hi = np.zeros(space_hi.n_full)
    for e in range(space_lo.mesh.n_elements):
        full_hi[space_hi.element_dofs[e]] = V @ full_lo[space_lo.element_dofs[e]]
    return full_hi[space_hi.reduced_to_full]


def pythagorean_residual(space, spectrum, exact, j, eta, kappa=None):
    """Residual of the eigenpair energy identity for softFEM mode j.

    The exact eigenfunction is replaced by its degree-(p+4) interpolant on
    the same mesh. Returns {'residual', 'scale'} where scale estimates the
    perturbation introduced by that replacement.
    """
    _check_simple(spectrum.values, j)
    kappa = kappa if kappa is not None else parse_coefficient("1")
    lam = float(exact.values[j])
    lam_soft = float(spectrum.values[j])
    uval, _ = exact.eigenfunction(j)

    space_hi = build_space(space.mesh, space.p + 4)
    K = assemble_stiffness(space_hi, kappa)
    S = assemble_penalty(space_hi, kappa)
    M = assemble_mass(space_hi)

    u_interp = space_hi.interpolate(lambda pts: uval(pts))
    errs = eigenfunction_errors(space, spectrum, exact, j, check_simple=False)
    # sign-align the discrete mode before embedding
    quad = _error_quadrature(space)
    V, _ = space.basis.eval(quad.nodes)
    full = _full_coefficients(space, spectrum.vectors[:, j])
    inner = 0.0
    for e in range(space.mesh.n_elements):
        to_phys, _, _, detj = assembly.element_map(space, e)
        vh = V @ full[space.element_dofs[e]]
        inner += float(np.sum(quad.weights * detj * vh * uval(to_phys(quad.nodes))))
    sign = 1.0 if inner >= 0 else -1.0

    u_h = sign * embed_coefficients(space, spectrum.vectors[:, j], space_hi)
    e_vec = u_interp - u_h
    lhs = float(e_vec @ K.matvec(e_vec)) - eta * float(e_vec @ S.matvec(e_vec))
    rhs = lam * float(e_vec @ M.matvec(e_vec)) + lam_soft - lam

    # interpolation error of the exact mode in the fine space
    ierr = _coefficient_errors(space_hi, u_interp, exact, j)
    e_energy = errs["h1"] + math.sqrt(lam) * errs["l2"]
    i_energy = ierr["h1"] + math.sqrt(lam) * ierr["l2"]
    scale = i_energy * (i_energy + 2.0 * e_energy) + 1e-14 * lam
    return {"residual": abs(lhs - rhs), "scale": scale}


def convergence_rates(h_values, errors, floor=1e-13):
    """Least-squares slope of log(error) vs log(h).

    Levels with error below `floor` are dropped from the fit; the dropped
    levels are reported.
    """
    h_values = np.asarray(h_values, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = errors > floor
    dropped = [int(i) for i in np.flatnonzero(~keep)]
    if keep.sum() < 2:
        return {"rate": float("nan"), "dropped_levels": dropped}
    slope = np.polyfit(np.log(h_values[keep]), np.log(errors[keep]), 1)[0]
    return {"rate": float(slope), "dropped_levels": dropped}


# -- experiment runner -----------------------------------------------------


@dataclass
class ExperimentConfig:
    """Declarative description of a spectral experiment."""

    name: str
    kappa: str = "1"
    mesh: dict | None = None
    degrees: list = field(default_factory=lambda: [1])
    eta: object = "default"  # 'galerkin' | 'default' | numeric
    stiffen: bool = False
    modes: int | None = None
    reference: str = "none"  # 'exact' | 'high-order' | 'none'
    reference_degree: int = 7
    reference_refine: int = 4
    jump_ratio: bool = False
    eigenfunction_modes: list = field(default_factory=list)
    face_weight: str = "local"  # 'local' h_F, or 'mean' element size
    eta_sweep: list | None = None  # extra explicit eta values to rerun with
    ladder: list | None = None  # list of {'degree': p, 'n': [...]} blocks

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or not data:
            raise ConfigError("config: expected a non-empty JSON object")
        known = set(cls.__dataclass_fields__)
        for key in data:
            if key not in known:
                raise ConfigError(f"config field {key!r} is not recognized")
        if "name" not in data:
            raise ConfigError("config field 'name' is required")
        cfg = cls(**data)
        if cfg.mesh is None and cfg.ladder is None:
            raise ConfigError("config field 'mesh' (or 'ladder') is required")
        if cfg.eta not in ("galerkin", "default") and not isinstance(
            cfg.eta, (int, float)
        ):
            raise ConfigError("config field 'eta' must be 'galerkin', 'default', or a number")
        for p in cfg.degrees:
            if not isinstance(p, int) or p < 1:
                raise ConfigError("config field 'degrees' must hold integers >= 1")
        if cfg.face_weight not in ("local", "mean"):
            raise ConfigError("config field 'face_weight' must be 'local' or 'mean'")
        return cfg


def resolve_eta(policy, p, mesh_kind, d):
    if policy == "galerkin":
        return 0.0
    pars = softness_parameters(p, mesh_kind, d=d)
    if policy == "default":
        return pars["eta_default"]
    return float(policy)


@dataclass
class SolveBundle:
    space: object
    K: object
    M: object
    S: object
    fem: object
    soft: object
    eta: float


def solve_problem(mesh, p, kappa_text="1", eta_policy="default", stiffen=False,
                  face_weight="local"):
    """Assemble and solve both the Galerkin and softened pencils.

    face_weight='mean' replaces every h_F by the mesh-average element length
    scale (the convention behind some published 1D non-uniform tables).
    """
    kappa = parse_coefficient(kappa_text)
    space = build_space(mesh, p)
    K = assemble_stiffness(space, kappa)
    M = assemble_mass(space)
    face_length = float(np.mean(mesh.h0)) if face_weight == "mean" else None
    S = assemble_penalty(space, kappa, face_length=face_length)
    eta = resolve_eta(eta_policy, p, mesh.kind, mesh.d)
    try:
        fem = gevp.solve_gmevp(K, M)
        if eta == 0.0:
            soft = fem
        else:
            # stiffening flips the sign of the penalty term: K + eta*S
            A = K - S.scaled(-eta) if stiffen else soften(K, S, eta)
            soft = gevp.solve_gmevp(A, M)
    except (gevp.MassNotSpdError, np.linalg.LinAlgError) as err:
        raise SolverFailure(str(err)) from err
    if eta_policy == "default" and not stiffen and soft.values[0] <= 0:
        raise CoercivityViolation(
            f"softened pencil indefinite at default eta={eta}"
        )
    return SolveBundle(space=space, K=K, M=M, S=S, fem=fem, soft=soft, eta=eta)


def _fmt(x):
    if x is None:
        return ""
    return format(float(x), ".17g")


def _reference_values(cfg, mesh, count):
    if cfg.reference == "none":
        return None
    if cfg.reference == "exact":
        if cfg.kappa.strip() != "1":
            raise ConfigError("config field 'reference': exact needs kappa = 1")
        d = 2 if mesh.kind == "simplicial" else mesh.d
        return oracle.exact_laplace_spectrum(d, count).values
    if cfg.reference == "high-order":
        values, _ = oracle.reference_spectrum(
            {"kappa": cfg.kappa, "mesh": cfg.mesh},
            count,
            degree=cfg.reference_degree,
            refine=cfg.reference_refine,
            richardson=False,
        )
        return values
    raise ConfigError("config field 'reference' must be exact, high-order, or none")


def _spectrum_rows(cfg, bundle, reference, exact=None):
    n = bundle.fem.order
    modes = min(cfg.modes or n, n)
    has_soft = bundle.eta != 0.0
    relerr_fem = relerr_soft = None
    if reference is not None:
        relerr_fem = eigenvalue_error_curve(bundle.fem.values[:modes], reference)
        if has_soft:
            relerr_soft = eigenvalue_error_curve(bundle.soft.values[:modes], reference)
    ratios = None
    if cfg.jump_ratio and has_soft:
        ratios = jump_energy_ratio(bundle.soft, bundle.eta, bundle.K, bundle.S)
    efn = {}
    if cfg.eigenfunction_modes and exact is not None:
        target = bundle.soft if has_soft else bundle.fem
        for mode in cfg.eigenfunction_modes:
            if mode <= modes:
                try:
                    efn[mode] = eigenfunction_errors(
                        bundle.space, target, exact, mode - 1
                    )
                except MultiplicityError:
                    pass
    lines = [CSV_HEADER]
    for j in range(modes):
        row = [
            str(j + 1),
            _fmt((j + 1) / n),
            _fmt(reference[j]) if reference is not None else "",
            _fmt(bundle.fem.values[j]),
            _fmt(bundle.soft.values[j]) if has_soft else "",
            _fmt(relerr_fem[j]) if relerr_fem is not None else "",
            _fmt(relerr_soft[j]) if relerr_soft is not None else "",
            _fmt(efn[j + 1]["h1"]) if (j + 1) in efn else "",
            _fmt(efn[j + 1]["l2"]) if (j + 1) in efn else "",
            _fmt(ratios[j]) if ratios is not None else "",
        ]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n", relerr_fem, relerr_soft


def _top_decile_mean(relerr):
    k = max(1, len(relerr) // 10)
    return float(np.mean(np.sort(relerr)[-k:]))


def _degree_summary(cfg, bundle, relerr_fem, relerr_soft):
    mesh = bundle.space.mesh
    pars = softness_parameters(bundle.space.p, mesh.kind, d=mesh.d)
    gp = oracle.gamma_p(
        bundle.space.p, mesh.kind, d=mesh.d if mesh.kind == "simplicial" else None
    )
    out = {
        "p": bundle.space.p,
        "n_dofs": bundle.space.ndof,
        "eta": bundle.eta,
        "eta_max": pars["eta_max"],
        "gamma_p": gp["gamma"],
        "lambda_min_fem": float(bundle.fem.values[0]),
        "lambda_max_fem": float(bundle.fem.values[-1]),
        "lambda_min_soft": float(bundle.soft.values[0]),
        "lambda_max_soft": float(bundle.soft.values[-1]),
        "coercivity_margin": float(bundle.soft.values[0]),
    }
    try:
        metrics = gevp.stiffness_reduction(bundle.fem, bundle.soft)
        out.update(
            sigma=metrics.sigma,
            sigma_soft=metrics.sigma_soft,
            rho=metrics.rho,
            rho_percent=metrics.rho_percent,
        )
    except gevp.IndefinitePencilError:
        out.update(sigma=None, sigma_soft=None, rho=None, rho_percent=None)
    if relerr_fem is not None:
        out["top_decile_relerr_fem"] = _top_decile_mean(relerr_fem)
        if relerr_soft is not None:
            out["top_decile_relerr_soft"] = _top_decile_mean(relerr_soft)
    return out


def _run_single(cfg, out_dir):
    mesh = mesh_from_spec(cfg.mesh)
    degrees = list(cfg.degrees)
    summaries = {}

    def one(p):
        bundle = solve_problem(
            mesh, p, cfg.kappa, cfg.eta, cfg.stiffen, face_weight=cfg.face_weight
        )
        return p, bundle

    workers = max(1, int(os.environ.get("SOFTFEM_THREADS", "1")))
    if workers > 1 and len(degrees) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            bundles = dict(pool.map(one, degrees))
    else:
        bundles = dict(one(p) for p in degrees)

    exact = None
    if cfg.eigenfunction_modes:
        d = 2 if mesh.kind == "simplicial" else mesh.d
        exact = oracle.exact_laplace_spectrum(d, max(cfg.eigenfunction_modes) + 4)

    max_count = max(
        min(cfg.modes or bundles[p].fem.order, bundles[p].fem.order)
        for p in degrees
    )
    full_reference = _reference_values(cfg, mesh, max_count)

    for p in degrees:
        bundle = bundles[p]
        n = bundle.fem.order
        modes = min(cfg.modes or n, n)
        reference = None if full_reference is None else full_reference[:modes]
        csv_text, relerr_fem, relerr_soft = _spectrum_rows(
            cfg, bundle, reference, exact
        )
        path = os.path.join(out_dir, f"spectrum_p{p}.csv")
        with open(path, "w") as fh:
            fh.write(csv_text)
        if len(degrees) == 1:
            with open(os.path.join(out_dir, "spectrum.csv"), "w") as fh:
                fh.write(csv_text)
        summaries[str(p)] = _degree_summary(cfg, bundle, relerr_fem, relerr_soft)
        if cfg.eta_sweep:
            sweep = {}
            for i, eta in enumerate(cfg.eta_sweep):
                b = solve_problem(
                    mesh, p, cfg.kappa, float(eta), cfg.stiffen,
                    face_weight=cfg.face_weight,
                )
                csv_text, rf, rs = _spectrum_rows(cfg, b, reference, exact)
                with open(
                    os.path.join(out_dir, f"spectrum_p{p}_eta{i}.csv"), "w"
                ) as fh:
                    fh.write(csv_text)
                sweep[_fmt(eta)] = _degree_summary(cfg, b, rf, rs)
            summaries[str(p)]["eta_sweep"] = sweep
    return summaries


def _run_ladder(cfg, out_dir):
    """Mesh-refinement study tracking eigenpair errors and their rates."""
    results = {}
    for block in cfg.ladder:
        p = int(block["degree"])
        ns = [int(n) for n in block["n"]]
        track = [int(m) for m in block.get("track_modes", [1])]
        exact = oracle.exact_laplace_spectrum(1, max(track) + 2)
        rows = {m: {"relerr": [], "h1": [], "l2": []} for m in track}
        for n in ns:
            mesh = mesh_from_spec({"type": "uniform", "n": n, "d": 1})
            bundle = solve_problem(mesh, p, cfg.kappa, cfg.eta, cfg.stiffen)
            for m in track:
                lam = exact.values[m - 1]
                rows[m]["relerr"].append(
                    abs(float(bundle.soft.values[m - 1]) - lam) / lam
                )
                errs = eigenfunction_errors(
                    bundle.space, bundle.soft, exact, m - 1, check_simple=False
                )
                rows[m]["h1"].append(errs["h1"])
                rows[m]["l2"].append(errs["l2"])
        hs = [1.0 / n for n in ns]
        block_out = {"n": ns, "modes": {}}
        for m in track:
            block_out["modes"][str(m)] = {
                "relerr": rows[m]["relerr"],
                "h1": rows[m]["h1"],
                "l2": rows[m]["l2"],
                "rates": {
                    q: convergence_rates(hs, rows[m][q]) for q in ("relerr", "h1", "l2")
                },
            }
        results[str(p)] = block_out
    return results


def run_experiment(config, out_dir):
    """Run a config dict (or preset name) and write spectrum CSVs and
    summary.json into out_dir. Returns the summary dict."""
    if isinstance(config, str):
        if config not in PRESETS:
            raise ConfigError(f"unknown preset {config!r}")
        config = PRESETS[config]
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    os.makedirs(out_dir, exist_ok=True)
    summary = {
        "name": cfg.name,
        "kappa": cfg.kappa,
        "eta_policy": cfg.eta if isinstance(cfg.eta, str) else float(cfg.eta),
        "stiffen": cfg.stiffen,
        "degrees": list(cfg.degrees),
        "mesh": cfg.mesh,
    }
    if cfg.ladder is not None:
        summary["ladder"] = _run_ladder(cfg, out_dir)
    else:
        summary["by_degree"] = _run_single(cfg, out_dir)
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


PRESETS = {
    "table1": {
        "name": "table1",
        "eta": "default",
        "ladder": [
            {"degree": 1, "n": [8, 16, 32, 64], "track_modes": [1, 6]},
            {"degree": 2, "n": [4, 8, 16, 32, 64], "track_modes": [1, 6]},
            {"degree": 3, "n": [4, 8, 16, 32], "track_modes": [1, 6]},
            {"degree": 4, "n": [4, 8, 16], "track_modes": [1, 6]},
        ],
    },
    "table3": {
        "name": "table3",
        "mesh": {"type": "uniform", "n": 200, "d": 1},
        "degrees": [1, 2, 3, 4, 5],
        "eta": "default",
        "reference": "exact",
    },
    "table4": {
        "name": "table4",
        "kappa": "exp(x*sin(2*pi*x))",
        "mesh": {"type": "uniform", "n": 200, "d": 1},
        "degrees": [1, 2, 3, 4, 5],
        "eta": "default",
        "reference": "high-order",
        "reference_degree": 7,
        "reference_refine": 2,
    },
    "table-nonuniform": {
        "name": "table-nonuniform",
        "mesh": {
            "type": "cartesian",
            "breakpoints": [
                [0, 0.1, 0.18, 0.29, 0.41, 0.5, 0.59, 0.66, 0.81, 0.92, 1]
            ],
        },
        "degrees": [1, 2, 3, 4, 5],
        "eta": "default",
        "face_weight": "mean",
        "reference": "high-order",
        "reference_degree": 7,
        "reference_refine": 8,
    },
    "fig1": {
        "name": "fig1",
        "mesh": {"type": "uniform", "n": 100, "d": 1},
        "degrees": [1, 2, 3],
        "eta": "default",
        "reference": "exact",
    },
    "fig-eta-sweep": {
        "name": "fig-eta-sweep",
        "mesh": {"type": "uniform", "n": 250, "d": 1},
        "degrees": [2],
        "eta": "default",
        "reference": "exact",
        "eta_sweep": [1.0 / 48.0, 1.0 / 24.0, 1.0 / 16.0, 1.0 / 12.0],
    },
    "fig-jump-ratio": {
        "name": "fig-jump-ratio",
        "mesh": {"type": "uniform", "n": 240, "d": 1},
        "degrees": [1, 2, 3, 4],
        "eta": "default",
        "reference": "exact",
        "jump_ratio": True,
    },
    "fig-2d": {
        "name": "fig-2d",
        "mesh": {"type": "uniform", "n": 20, "d": 2},
        "degrees": [2, 3],
        "eta": "default",
        "reference": "exact",
    },
    "fig-3d": {
        "name": "fig-3d",
        "mesh": {"type": "uniform", "n": 6, "d": 3},
        "degrees": [2, 3],
        "eta": "default",
        "reference": "exact",
    },
    "fig-3d-p4": {
        "name": "fig-3d-p4",
        "mesh": {"type": "uniform", "n": 4, "d": 3},
        "degrees": [4],
        "eta": "default",
        "reference": "exact",
    },
    "fig-simplicial": {
        "name": "fig-simplicial",
        "mesh": {"type": "unit-square", "n": 16},
        "degrees": [1, 2, 3],
        "eta": "default",
        "reference": "exact",
    },
    "fig-lshape": {
        "name": "fig-lshape",
        "mesh": {"type": "l-shape", "n": 8},
        "degrees": [1, 2, 3],
        "eta": "default",
        "reference": "high-order",
        "reference_degree": 4,
        "reference_refine": 1,
    },
}
