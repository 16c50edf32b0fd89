"""Command-line front-end: ``asym-mms <command> [options]``.

Exit codes
----------
0  success
1  a checked property is violated
2  bad input (unreadable or malformed files, invalid parameters)
3  a solver stalled before reaching its tolerance
"""

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import io
from .errors import AsymMMSError, InputError
from .finsler import FinslerModel, axis_grid_space, funk_ball_grid, sample_space
from .flow import energy, heat_flow, q_laplacian
from .hopflax import (
    difference_bound_check,
    hj_residual,
    hopf_lax,
    lipschitz_bound_check,
)
from .slope import (
    cheeger_energy,
    generate_curves,
    local_lip,
    minimal_weak_upper_gradient,
    slopes,
)
from .space import validate
from .svg import write_chart
from .transport import Measure, kantorovich_dual, kr_w1, kuwada_check, wasserstein

BUNDLED = {"two_point": "two_point.json"}
DEFAULT_MESHES = (0.1, 0.05, 0.025)


# --- reusable studies ----------------------------------------------------

def hj_mesh_study(meshes=DEFAULT_MESHES, t=0.5, p=2.0, radius=0.5, field="x1"):
    """Largest positive HJ residual on axis grids of the Funk ball, per mesh."""
    model = FinslerModel.funk(2)
    rows = []
    for h in meshes:
        pts = funk_ball_grid(h, radius)
        sp = axis_grid_space(model, pts, h)
        f = named_field(field, pts)
        r = np.asarray(hj_residual(sp, f, p, t))
        rows.append({"step": h, "mesh": sp.mesh_size, "points": sp.n,
                     "max_positive_residual": float(max(r.max(), 0.0))})
    vals = [r["max_positive_residual"] for r in rows]
    monotone = all(b < a for a, b in zip(vals[:-1], vals[1:]))
    return rows, monotone


def sobolev_asymmetry(meshes=DEFAULT_MESHES, q=2.0, field="neg-sqrt"):
    """``Ch+(f)`` and ``Ch+(-f)`` on Funk grids reaching closer to the boundary.

    The grid of step ``h`` covers the ball of radius ``1 - h`` with measure
    ``h^2`` per point (Lebesgue quadrature).
    """
    model = FinslerModel.funk(2)
    rows = []
    for h in meshes:
        pts = funk_ball_grid(h, 1.0 - h)
        sp = axis_grid_space(model, pts, h).with_measure(np.full(len(pts), h * h))
        f = named_field(field, pts)
        a = cheeger_energy(sp, f, q)
        b = cheeger_energy(sp, -f, q)
        rows.append({"step": h, "radius": 1.0 - h, "points": sp.n,
                     "ch_f": a, "ch_neg_f": b, "ratio": b / a})
    ratios = [r["ratio"] for r in rows]
    ok = all(r > 1 for r in ratios) and all(b > a for a, b in zip(ratios[:-1], ratios[1:]))
    return rows, ok


# --- argument helpers ----------------------------------------------------

FIELDS = {
    "neg-sqrt": lambda X: -np.sqrt(1.0 - np.linalg.norm(X, axis=1)),
    "x1": lambda X: X[:, 0].copy(),
    "norm": lambda X: np.linalg.norm(X, axis=1),
    "sin": lambda X: np.sin(3.0 * X[:, 0]) + X[:, -1],
}


def named_field(name, X):
    try:
        return FIELDS[name](np.atleast_2d(X))
    except KeyError:
        raise InputError(f"unknown field {name!r}; choose from {sorted(FIELDS)}") from None


def resolve_space(arg):
    if arg is None:
        raise InputError("--space is required for this command")
    if not Path(arg).exists() and arg in BUNDLED:
        with resources.as_file(resources.files("asym_mms") / "data" / BUNDLED[arg]) as p:
            return io.load_space(p), Path(p)
    return io.load_space(arg), Path(arg)


def resolve_field(arg, space, inputs):
    """``--f`` as a CSV file, a comma-separated list, or a named function of coordinates."""
    if arg is None:
        raise InputError("--f is required for this command")
    if Path(arg).exists():
        inputs.append(Path(arg))
        return io.load_field(arg, space)
    if arg in FIELDS:
        if space.coords is None:
            raise InputError(f"named field {arg!r} needs a space with coordinates")
        return named_field(arg, space.coords)
    try:
        v = np.array([float(s) for s in arg.split(",")])
    except ValueError:
        raise InputError(f"cannot interpret --f {arg!r}") from None
    if v.size != space.n:
        raise InputError(f"--f has {v.size} values, space has {space.n} points")
    return v


def resolve_measure(arg, space, inputs):
    return Measure.normalized(np.maximum(resolve_field(arg, space, inputs), 0.0))


def exponents(args):
    p, q = args.p, args.q
    if p is None and q is None:
        p, q = 2.0, 2.0
    elif q is None:
        q = p / (p - 1.0) if p > 1 else np.inf
    elif p is None:
        p = q / (q - 1.0) if q > 1 else np.inf
    elif not args.free_exponents and abs(1.0 / p + 1.0 / q - 1.0) > 1e-12:
        raise InputError(f"p={p} and q={q} are not conjugate (pass --free-exponents to allow)")
    return float(p), float(q)


def meshes(args):
    if args.mesh is None:
        return DEFAULT_MESHES
    try:
        return tuple(float(s) for s in args.mesh.split(","))
    except ValueError:
        raise InputError(f"cannot parse --mesh {args.mesh!r}") from None


def outdir(args):
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def emit(obj):
    print(json.dumps(obj, indent=1, sort_keys=True))


# --- commands -------------------------------------------------------------

def cmd_validate(args, ctx):
    space, path = resolve_space(args.space)
    ctx["inputs"].append(path)
    rep = validate(space)
    emit(rep.to_dict())
    if args.out:
        out = outdir(args) / "validation.json"
        out.write_text(json.dumps(rep.to_dict(), indent=1) + "\n")
        ctx["outputs"].append(out)
    return 0 if rep.ok else 1


def cmd_sample(args, ctx):
    if args.points is None:
        raise InputError("--points is required for sample")
    ids, X = io.load_points(args.points)
    ctx["inputs"].append(Path(args.points))
    model = make_model(args, X.shape[1])
    space = sample_space(model, X, k=args.k, point_ids=ids)
    out = outdir(args) / "space.json"
    io.save_space(space, out)
    ctx["outputs"].append(out)
    emit({"points": space.n, "mesh": space.mesh_size, "space": str(out)})
    return 0


def make_model(args, dim):
    name = args.model or "funk"
    if name == "funk":
        return FinslerModel.funk(dim)
    if name == "randers":
        return FinslerModel.randers(dim)
    if name == "interp":
        return FinslerModel.interp(args.alpha, dim)
    raise InputError(f"unknown model {name!r}")


def _space_and_field(args, ctx):
    space, path = resolve_space(args.space)
    ctx["inputs"].append(path)
    return space, resolve_field(args.f, space, ctx["inputs"])


def cmd_slope(args, ctx):
    space, f = _space_and_field(args, ctx)
    asc, desc = slopes(space, f)
    lip = np.asarray(local_lip(space, f))
    out = outdir(args) / "slopes.csv"
    io.write_table(out, ("point", "ascending", "descending", "local_lip"),
                   [(p, a, d, l) for p, a, d, l in zip(space.points, asc, desc, lip)])
    ctx["outputs"].append(out)
    return 0


def cmd_cheeger(args, ctx):
    space, f = _space_and_field(args, ctx)
    _, q = exponents(args)
    res = {"q": q, "forward": cheeger_energy(space, f, q, "forward"),
           "backward": cheeger_energy(space, f, q, "backward")}
    out = outdir(args) / "cheeger.json"
    out.write_text(json.dumps(res, indent=1) + "\n")
    ctx["outputs"].append(out)
    emit(res)
    return 0


def cmd_mwug(args, ctx):
    space, f = _space_and_field(args, ctx)
    _, q = exponents(args)
    curves = generate_curves(space, args.policy, args.max_edges)
    G = minimal_weak_upper_gradient(space, f, curves, q, tol=args.tol or 1e-9)
    out = outdir(args) / "mwug.csv"
    io.write_field(out, space, G, ("point", "G"))
    info = {k: v for k, v in G.info.items() if k != "multipliers"}
    info["slope_energy"] = cheeger_energy(space, f, q)
    info["curve_energy"] = float(np.sum(np.asarray(G) ** q * space.measure) / q)
    rep = outdir(args) / "mwug.json"
    rep.write_text(json.dumps(info, indent=1, default=float) + "\n")
    ctx["outputs"] += [out, rep]
    emit(info)
    return 0


def cmd_heatflow(args, ctx):
    space, f = _space_and_field(args, ctx)
    _, q = exponents(args)
    traj = heat_flow(space, f, q, T=args.T, steps=args.steps, tol=args.tol)
    od = outdir(args)
    out = od / "trajectory.csv"
    F = traj.array()
    io.write_table(out, ("step", "time", "point", "value"),
                   [(k, float(t), p, float(v)) for k, t in enumerate(traj.times)
                    for p, v in zip(space.points, F[k])])
    en = [energy(space, s, q) for s in traj.states]
    diag = od / "diagnostics.json"
    diag.write_text(json.dumps({"tau": traj.tau, "q": q, "energy": en,
                                "mass": list(F @ space.measure), "steps": traj.diagnostics},
                               indent=1, default=float) + "\n")
    ctx["outputs"] += [out, diag]
    if args.plot:
        svg = od / "heatflow.svg"
        series = {p: (traj.times, F[:, i]) for i, p in enumerate(space.points[:6])}
        write_chart(svg, series, title="heat flow", xlabel="t", ylabel="f")
        svg2 = od / "energy.svg"
        write_chart(svg2, {"Ch": (traj.times, en)}, title="energy", xlabel="t", ylabel="Ch_q")
        ctx["outputs"] += [svg, svg2]
    return 0


def cmd_laplacian(args, ctx):
    space, f = _space_and_field(args, ctx)
    _, q = exponents(args)
    est = q_laplacian(space, f, q, tol=args.tol)
    out = outdir(args) / "laplacian.csv"
    io.write_field(out, space, est.field, ("point", "laplacian"))
    ctx["outputs"].append(out)
    emit({"method": est.method, "residual": est.residual})
    return 0


def cmd_hopflax(args, ctx):
    space, f = _space_and_field(args, ctx)
    p, _ = exponents(args)
    prof = hopf_lax(space, f, args.t, p)
    od = outdir(args)
    out = od / "profile.csv"
    io.write_table(out, ("point", "Q", "d_minus", "d_plus", "argmin_count"),
                   [(pt, float(a), float(b), float(c), len(s)) for pt, a, b, c, s in
                    zip(space.points, prof.values, prof.d_minus, prof.d_plus, prof.argmins)])
    reps = [difference_bound_check(space, f, p, args.t), lipschitz_bound_check(space, f, p, args.t)]
    rj = od / "report.json"
    rj.write_text(json.dumps([r.to_dict() for r in reps], indent=1) + "\n")
    ctx["outputs"] += [out, rj]
    return 0 if all(r.ok for r in reps) else 1


def cmd_hjcheck(args, ctx):
    p, _ = exponents(args)
    od = outdir(args)
    if args.space:
        space, f = _space_and_field(args, ctx)
        r = np.asarray(hj_residual(space, f, p, args.t))
        out = od / "hj_residual.csv"
        io.write_field(out, space, r, ("point", "residual"))
        ctx["outputs"].append(out)
        emit({"max_positive_residual": float(max(r.max(), 0.0)), "mesh": space.mesh_size})
        return 0
    rows, ok = hj_mesh_study(meshes(args), args.t, p, field=args.f or "x1")
    out = od / "hj_mesh.csv"
    io.write_table(out, ("step", "mesh", "points", "max_positive_residual"),
                   [(r["step"], r["mesh"], r["points"], r["max_positive_residual"]) for r in rows])
    ctx["outputs"].append(out)
    if args.plot:
        svg = od / "hj_mesh.svg"
        write_chart(svg, {"residual": ([r["mesh"] for r in rows],
                                       [r["max_positive_residual"] for r in rows])},
                    title="HJ residual", xlabel="mesh", ylabel="max positive residual")
        ctx["outputs"].append(svg)
    emit({"rows": rows, "monotone": ok})
    return 0 if ok else 1


def _two_measures(args, ctx):
    space, path = resolve_space(args.space)
    ctx["inputs"].append(path)
    if args.mu is None or args.nu is None:
        raise InputError("--mu and --nu are required")
    return space, resolve_measure(args.mu, space, ctx["inputs"]), resolve_measure(args.nu, space, ctx["inputs"])


def cmd_wasserstein(args, ctx):
    space, mu, nu = _two_measures(args, ctx)
    p, _ = exponents(args)
    w, plan = wasserstein(space, mu, nu, p)
    od = outdir(args)
    out = od / "coupling.csv"
    io.write_matrix(out, plan.plan)
    ctx["outputs"].append(out)
    emit({"p": p, "W": w})
    return 0


def cmd_dual(args, ctx):
    space, mu, nu = _two_measures(args, ctx)
    p, _ = exponents(args)
    res = kantorovich_dual(space, mu, nu, p)
    od = outdir(args)
    out = od / "potentials.csv"
    io.write_table(out, ("point", "psi", "phi"),
                   [(pt, float(a), float(b)) for pt, a, b in zip(space.points, res.psi, res.phi)])
    rj = od / "report.json"
    rj.write_text(json.dumps(res.report.to_dict(), indent=1) + "\n")
    ctx["outputs"] += [out, rj]
    emit({"primal": res.primal_value, "dual": res.dual_value, "gap": res.gap, "ok": res.report.ok})
    return 0 if res.report.ok else 1


def cmd_krw1(args, ctx):
    space, mu, nu = _two_measures(args, ctx)
    value, psi = kr_w1(space, mu, nu)
    out = outdir(args) / "kr_potential.csv"
    io.write_field(out, space, psi, ("point", "psi"))
    ctx["outputs"].append(out)
    emit({"W1": value})
    return 0


def cmd_kuwada(args, ctx):
    space, f = _space_and_field(args, ctx)
    p, q = exponents(args)
    f = f / float(f @ space.measure)
    traj = heat_flow(space, f, q, T=args.T, steps=args.steps, tol=args.tol)
    rep = kuwada_check(space, traj, p, h_index=args.h_index)
    od = outdir(args)
    out = od / "kuwada.csv"
    rows = rep.data["rows"]
    io.write_table(out, ("step", "time", "speed", "bound", "ok"),
                   [(r["k"], r["t"], r["speed"], r["bound"], int(r["ok"])) for r in rows])
    ctx["outputs"].append(out)
    if args.plot:
        svg = od / "kuwada.svg"
        t = [r["t"] for r in rows]
        write_chart(svg, {"speed": (t, [r["speed"] for r in rows]),
                          "bound": (t, [r["bound"] for r in rows])},
                    title="backward speed", xlabel="t", ylabel="")
        ctx["outputs"].append(svg)
    emit(rep.checks)
    return 0 if rep.ok else 1


def cmd_sobolev(args, ctx):
    if (args.model or "funk") != "funk":
        raise InputError("sobolev-asymmetry is defined on the Funk ball only")
    _, q = exponents(args)
    rows, ok = sobolev_asymmetry(meshes(args), q, args.f or "neg-sqrt")
    od = outdir(args)
    out = od / "sobolev.csv"
    io.write_table(out, ("step", "radius", "points", "ch_f", "ch_neg_f", "ratio"),
                   [tuple(r.values()) for r in rows])
    ctx["outputs"].append(out)
    if args.plot:
        svg = od / "sobolev.svg"
        write_chart(svg, {"ratio": ([r["step"] for r in rows], [r["ratio"] for r in rows])},
                    title="Ch(-f) / Ch(f)", xlabel="mesh", ylabel="ratio")
        ctx["outputs"].append(svg)
    emit({"rows": rows, "increasing": ok})
    return 0 if ok else 1


COMMANDS = {
    "validate": cmd_validate,
    "sample": cmd_sample,
    "slope": cmd_slope,
    "cheeger": cmd_cheeger,
    "mwug": cmd_mwug,
    "heatflow": cmd_heatflow,
    "laplacian": cmd_laplacian,
    "hopflax": cmd_hopflax,
    "hjcheck": cmd_hjcheck,
    "wasserstein": cmd_wasserstein,
    "dual": cmd_dual,
    "krw1": cmd_krw1,
    "kuwada": cmd_kuwada,
    "sobolev-asymmetry": cmd_sobolev,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="asym-mms", description=__doc__.splitlines()[0],
                                 formatter_class=argparse.RawDescriptionHelpFormatter,
                                 epilog="\n".join(__doc__.splitlines()[2:]))
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--space", help="space JSON file (or 'two_point' for the bundled example)")
    common.add_argument("--model", choices=("funk", "randers", "interp"))
    common.add_argument("--alpha", type=float, default=0.5, help="interp weight")
    common.add_argument("--points", help="point-cloud CSV for 'sample'")
    common.add_argument("--k", type=int, default=4, help="nearest neighbors for 'sample'")
    common.add_argument("--f", help="field: CSV file, comma list, or name (%s)" % ", ".join(sorted(FIELDS)))
    common.add_argument("--mu", help="source measure (CSV or comma list)")
    common.add_argument("--nu", help="target measure (CSV or comma list)")
    common.add_argument("--p", type=float)
    common.add_argument("--q", type=float)
    common.add_argument("--free-exponents", action="store_true", help="allow non-conjugate p and q")
    common.add_argument("--t", type=float, default=0.5)
    common.add_argument("--T", type=float, default=1.0)
    common.add_argument("--steps", type=int, default=100)
    common.add_argument("--h-index", type=int, default=None, help="lag in steps for 'kuwada'")
    common.add_argument("--tol", type=float)
    common.add_argument("--mesh", help="comma-separated grid steps for mesh studies")
    common.add_argument("--policy", choices=("edges", "paths", "geodesics"), default="edges")
    common.add_argument("--max-edges", type=int, default=None)
    common.add_argument("--out", help="output directory")
    common.add_argument("--plot", action="store_true", help="also write SVG charts")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.tol is not None and not 0 < args.tol < 1:
        print("error: --tol must lie in (0, 1)", file=sys.stderr)
        return 2
    ctx = {"inputs": [], "outputs": []}
    try:
        code = COMMANDS[args.command](args, ctx)
    except AsymMMSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if ctx["outputs"]:
        params = {k: v for k, v in vars(args).items() if v is not None}
        io.write_manifest(outdir(args), args.command, params, ctx["inputs"], ctx["outputs"])
    return code


if __name__ == "__main__":
    sys.exit(main())
