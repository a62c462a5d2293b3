"""Command-line front end.

softfem run <config.json|preset> [--out DIR] [--modes K] [--eta ...] [--stiffen]
softfem trace-check --p P --kind {interval,cuboid,simplex}
softfem mesh-info <meshfile>

Exit codes: 0 success, 2 bad configuration, 3 solver failure, 4 coercivity
violation under the default softness parameter.
"""

import argparse
import json
import sys

import numpy as np

from . import oracle, speclab
from .coefficient import CoefficientParseError
from .mesh import InvalidMeshError, characteristic_lengths, interfaces, load_mesh
from .speclab import CoercivityViolation, ConfigError, SolverFailure


def _load_config(target):
    if target in speclab.PRESETS:
        return dict(speclab.PRESETS[target])
    try:
        with open(target) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config {target!r}: no such preset or file")
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {target!r}: invalid JSON ({err})")
    if not isinstance(data, dict):
        raise ConfigError(f"config {target!r}: expected a JSON object")
    return data


def cmd_run(args):
    cfg = _load_config(args.target)
    if args.modes is not None:
        cfg["modes"] = args.modes
    if args.eta is not None:
        if args.eta in ("default", "galerkin"):
            cfg["eta"] = args.eta
        else:
            try:
                cfg["eta"] = float(args.eta)
            except ValueError:
                raise ConfigError(
                    "config field 'eta': expected 'default', 'galerkin', or a number"
                )
    if args.stiffen:
        cfg["stiffen"] = True
    summary = speclab.run_experiment(cfg, args.out)
    if "by_degree" in summary:
        for p, block in sorted(summary["by_degree"].items(), key=lambda kv: int(kv[0])):
            line = (
                f"p={p} ndof={block['n_dofs']} eta={block['eta']:.6g} "
                f"lam_max={block['lambda_max_fem']:.5g}"
            )
            if block.get("rho") is not None:
                line += f" soft_lam_max={block['lambda_max_soft']:.5g} rho={block['rho']:.4f}"
            print(line)
    else:
        for p, block in sorted(summary["ladder"].items(), key=lambda kv: int(kv[0])):
            for mode, data in sorted(block["modes"].items(), key=lambda kv: int(kv[0])):
                rates = {q: data["rates"][q]["rate"] for q in ("relerr", "h1", "l2")}
                print(f"p={p} mode={mode} rates={rates}")
    print(f"wrote {args.out}/summary.json")
    return 0


def cmd_trace_check(args):
    p = args.p
    rng = np.random.default_rng(args.seed)
    samples = args.samples
    if args.kind == "interval":
        const_sq = oracle.sharp_trace_constant("interval-k", p) ** 2
        worst = 0.0
        for _ in range(samples):
            coeffs = rng.standard_normal(p + 1)
            worst = max(worst, oracle.trace_ratio_interval(coeffs))
        attained = oracle.trace_ratio_interval(oracle.extremal_trace_polynomial(p))
        print(f"kind=interval p={p} constant_sq={const_sq:.12g}")
        print(f"sampled_max={worst:.12g} extremal={attained:.12g}")
        ok = (
            worst <= const_sq * (1 + 1e-10)
            and abs(attained - const_sq) < 1e-8 * const_sq
        )
        print("status=ok" if ok else "status=violated")
        return 0 if ok else 1
    # cuboid / simplex: the gradient trace constants bound the assembled
    # penalty form: x'Sx <= 2p(p+1) x'Kx on tensor meshes, 2p(p+d-1) on
    # simplicial ones. Verify that domination on a small mesh.
    from .assembly import assemble_penalty, assemble_stiffness, build_space
    from .mesh import build_cartesian_mesh, build_simplicial_mesh

    if args.kind == "cuboid":
        mesh = build_cartesian_mesh([[0.0, 0.5, 1.0], [0.0, 1.0]])
        bound = 2.0 * p * (p + 1)
    else:
        mesh = build_simplicial_mesh("unit-square", n=2)
        bound = 2.0 * p * (p + 2 - 1)
    space = build_space(mesh, p)
    Kd = assemble_stiffness(space).toarray()
    Sd = assemble_penalty(space).toarray()
    worst = 0.0
    for _ in range(samples):
        x = rng.standard_normal(space.ndof)
        worst = max(worst, float(x @ Sd @ x) / float(x @ Kd @ x))
    print(f"kind={args.kind} p={p} domination_bound={bound:.12g}")
    print(f"sampled_max_ratio={worst:.12g}")
    ok = worst <= bound * (1 + 1e-10)
    print("status=ok" if ok else "status=violated")
    return 0 if ok else 1


def cmd_mesh_info(args):
    mesh = load_mesh(args.meshfile)
    h = [characteristic_lengths(mesh, e)["h"] for e in range(mesh.n_elements)]
    h0 = [characteristic_lengths(mesh, e)["h0"] for e in range(mesh.n_elements)]
    vols = [characteristic_lengths(mesh, e)["volume"] for e in range(mesh.n_elements)]
    faces = interfaces(mesh)
    print(f"kind={mesh.kind} d={mesh.d}")
    print(
        f"vertices={len(mesh.vertices)} elements={mesh.n_elements} "
        f"interfaces={len(faces)}"
    )
    print(f"h_max={max(h):.12g} h_min={min(h):.12g} h0_min={min(h0):.12g}")
    print(f"volume={sum(vols):.12g}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="softfem",
        description="Spectral laboratory for Galerkin and softened FEM pencils.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config or preset")
    run.add_argument("target", help="JSON config path or preset name")
    run.add_argument("--out", default="out", help="output directory")
    run.add_argument("--modes", type=int, default=None, help="limit reported modes")
    run.add_argument("--eta", default=None, help="number, 'default', or 'galerkin'")
    run.add_argument("--stiffen", action="store_true", help="flip the penalty sign")
    run.set_defaults(func=cmd_run)

    tc = sub.add_parser("trace-check", help="verify a discrete trace constant")
    tc.add_argument("--p", type=int, required=True)
    tc.add_argument("--kind", required=True, choices=["interval", "cuboid", "simplex"])
    tc.add_argument("--samples", type=int, default=200)
    tc.add_argument("--seed", type=int, default=0)
    tc.set_defaults(func=cmd_trace_check)

    mi = sub.add_parser("mesh-info", help="print statistics for a mesh file")
    mi.add_argument("meshfile")
    mi.set_defaults(func=cmd_mesh_info)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CoefficientParseError, InvalidMeshError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except SolverFailure as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return 3
    except CoercivityViolation as err:
        print(f"coercivity violation: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
