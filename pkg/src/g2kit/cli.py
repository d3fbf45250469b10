"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a check fails (the first
failing record goes to stderr), 2 for bad arguments.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from . import models as M
from .exceptions import G2KitError
from .fieldio import grid_points, read_field, write_field
from .moments import build_moment_chart, singular_image
from .reduction import classify_action, classify_arrays, leaf_triples, quotient_triple
from .verify import SUITES, rec, run_suite


def _model_params(args):
    return {k: v for k, v in (("pi", args.pi), ("a", args.a), ("eps", args.eps)) if v is not None}


def _model(args):
    return M.build(args.model, **_model_params(args))


def _report(command, records, data=None, model=None, timing=None):
    return {
        "tool": "g2kit",
        "version": __version__,
        "command": command,
        "model": model,
        "records": [r.as_dict() if hasattr(r, "as_dict") else r for r in records],
        "data": data or {},
        "timing": timing or {},
    }


def _emit(report, out=None):
    text = json.dumps(report, indent=2, sort_keys=True, default=_jsonable)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return _status(report["records"])


def _status(records):
    for r in records:
        if not r["pass"]:
            print("FAILED: " + json.dumps(r, default=_jsonable), file=sys.stderr)
            return 1
    return 0


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"not serialisable: {type(x)}")


def _reduction_records(r):
    tol = {"phi_U": 1e-10, "det_B_variation": 1e-8, "a_variation": 1e-8, "bracket": 1e-10,
           "invariance": 1e-10, "d_phi": 1e-8, "beta_alpha_equation": 1e-8, "d_omega": 1e-8}
    out = []
    for k, v in {**r.residuals, **r.field_residuals}.items():
        out.append(rec(k, f"structure check: {k.replace('_', ' ')}", v, tol.get(k, 1e-9)))
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_construct(args):
    m = _model(args)
    dom = m.chart_domain(args.grid)
    pts = m.grid_points(dom)
    values = m.phi(pts).comps
    write_field(args.out, dom, 3, values, dim=7, model=m.name, params=_model_params(args),
                coords="base" if m.is_invariant else "full")
    flat = pts.reshape(-1, 7)
    sub = flat[np.random.default_rng(args.seed).choice(len(flat), min(len(flat), 4096), replace=False)]
    gp = m.g2(sub)
    records = [rec("positive", "phi is positive on sampled grid points", float(np.max(1 - gp.orientation)), 0.5)]
    return _emit(_report("construct", records, {"out": args.out, "grid": list(dom.shape)}, m.name), args.json)


def _parse_generators(spec, header):
    if spec in (None, "model"):
        if "model" not in header:
            raise ValueError("field file names no model; pass --generators explicitly")
        return M.build(header["model"], **header.get("params", {}))
    rows = [r for r in spec.replace(" ", "").split(";") if r]
    vecs = np.array([[float(v) for v in r.split(",")] for r in rows])
    if vecs.shape != (3, 7):
        raise ValueError("generators must be three 7-vectors")
    return vecs


def cmd_classify(args):
    if args.infile:
        header, dom, values = read_field(args.infile)
        if header.get("degree") != 3 or header.get("dim") != 7:
            raise ValueError("classify needs a 3-form field on R^7")
        gen = _parse_generators(args.generators, header)
        pts = _points(dom).reshape(-1, 7)
        values = values.reshape(-1, values.shape[-1])
        # the pointwise reduction is memory hungry, so classify a seeded subsample
        idx = np.random.default_rng(args.seed).choice(len(pts), min(len(pts), args.samples), replace=False)
        pts, values = pts[np.sort(idx)], values[np.sort(idx)]
        U = np.broadcast_to(gen, (len(pts), 3, 7)) if isinstance(gen, np.ndarray) else gen.U(pts)
        r = classify_arrays(values, U, pts, name=header.get("model", args.infile))
        name = r.model
    else:
        if not args.model:
            raise ValueError("pass --model or --in")
        m = _model(args)
        r = classify_action(m, n=args.samples, rng=np.random.default_rng(args.seed),
                            grid=args.grid if m.is_invariant else None)
        name = m.name
    records = _reduction_records(r)
    data = r.summary()
    data["a_mean"] = float(np.mean(r.a))
    return _emit(_report("classify", records, data, name), args.json)


def _points(dom):
    pts = grid_points(dom)
    if dom.dim < 7:
        pts = np.concatenate([pts, np.zeros(pts.shape[:-1] + (7 - dom.dim,))], axis=-1)
    return pts


def cmd_reduce(args):
    m = _model(args)
    rng = np.random.default_rng(args.seed)
    r = classify_action(m, n=args.samples, rng=rng)
    data = {"orbit_type": r.orbit_type}
    if r.orbit_type == 3:
        p0 = r.points[0]
        L = leaf_triples(m, p0)
        tol = {"d_omega": 1e-8, "phi_restriction": 1e-12, "starphi_volume": 1e-10, "closed_form": 1e-10}
        records = [rec(f"leaf.{k}", f"leaf check: {k.replace('_', ' ')}", v, tol[k]) for k, v in L.residuals.items()]
        data["leaf_point"] = p0
    else:
        from .fieldcalc import Domain

        dom = Domain.torus(4, args.grid) if m.is_invariant else None
        q = quotient_triple(m, domain=dom, rng=rng)
        records = [rec("quotient.wedge", "omega_i ^ omega_j = 2 A_ij mu", q.residuals["wedge"], 1e-12),
                   rec("quotient.horizontal", "quotient triple is basic", q.residuals["horizontal"], 1e-12)]
        if "d_omega" in q.residuals:
            records.append(rec("quotient.d_omega", "quotient triple is closed", q.residuals["d_omega"], 1e-8))
            data["q_variation"] = q.residuals["q_variation"]
            data["torsion"] = q.residuals["torsion"]
    return _emit(_report("reduce", records, data, m.name), args.json)


def cmd_moment(args):
    m = _model(args)
    rng = np.random.default_rng(args.seed)
    center = np.array([float(v) for v in args.base.split(",")]) if args.base else np.zeros(7)
    if center.shape != (7,):
        raise ValueError("--base needs 7 comma-separated coordinates")
    chart = build_moment_chart(m, center, rng=rng)
    pts = center + rng.uniform(-0.5, 0.5, size=(args.samples, 7))
    nu = chart.nu(pts)
    records = [rec("loop", "alpha integrates to zero around closed loops", chart.loop_residual(rng, 8), 1e-10),
               rec("gradient", "d nu = alpha", chart.gradient_residual(pts[:50]), 1e-6)]
    data = {"center": center, "samples": [{"point": p, "nu": v} for p, v in zip(pts, nu)]}
    if m.singular and m.stabilizer_dim(center) > 0:
        si = singular_image(chart, rng=rng)
        records.append(rec("singular_image", "singular orbits land on the line/ray configuration", si.residual, 1e-8))
        data["rays_hit"] = list(si.rays_hit)
        if args.csv:
            si.to_csv(args.csv)
            data["csv"] = args.csv
    return _emit(_report("moment", records, data, m.name), args.json)


def cmd_verify(args):
    t0 = time.perf_counter()
    records, timing = run_suite(args.suite, seed=args.seed)
    timing["total"] = round(time.perf_counter() - t0, 3)
    # wall-clock timing would break bit-for-bit reproducibility, so it is opt-in
    report = _report(f"verify --suite {args.suite}", records, {"seed": args.seed}, None,
                     timing if args.timing else None)
    if not args.quiet:
        for r in records:
            print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<45} {r.residual:.3e}  "
                  f"({'<' if r.compare == 'lt' else '>'} {r.tolerance:.0e})  {r.anchor}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True, default=_jsonable)
    n_fail = sum(not r.passed for r in records)
    print(f"{len(records) - n_fail}/{len(records)} checks passed in {timing['total']:.1f} s")
    return _status(report["records"])


def cmd_report(args):
    with open(args.infile) as fh:
        report = json.load(fh)
    for r in report.get("records", []):
        print(f"{'PASS' if r['pass'] else 'FAIL'}  {r['name']:<45} {r['residual']:.3e}  {r['anchor']}")
    return _status(report.get("records", []))


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="g2kit", description="Closed G2-structures with T^3-symmetry.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def model_opts(sp, required=True):
        sp.add_argument("--model", choices=M.MODEL_NAMES, required=required)
        sp.add_argument("--pi", help="plane for flat_quotient: preset name or 'v1;v2;v3' integer vectors")
        sp.add_argument("--a", type=float, help="constant a for type 1 families")
        sp.add_argument("--eps", type=float, help="amplitude of the T^4 family")

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--json", help="write the JSON report here instead of stdout")

    sp = sub.add_parser("construct", help="sample phi of a model and write a field file")
    model_opts(sp)
    sp.add_argument("--grid", type=int, default=8, help="points per axis (at least 8)")
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("classify", help="orbit type and structure checks")
    model_opts(sp, required=False)
    sp.add_argument("--in", dest="infile")
    sp.add_argument("--generators", help="'model' or three constant 7-vectors 'v1;v2;v3'")
    sp.add_argument("--samples", type=int, default=24,
                    help="sampled points (for --in, grid points drawn from the file)")
    sp.add_argument("--grid", type=int, default=12)
    common(sp)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("reduce", help="quotient triple (types 1, 2) or leaf triple (type 3)")
    model_opts(sp)
    sp.add_argument("--samples", type=int, default=8)
    sp.add_argument("--grid", type=int, default=12)
    common(sp)
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("moment", help="multi-moment map samples and singular image")
    model_opts(sp)
    sp.add_argument("--base", help="chart centre, 7 comma-separated coordinates")
    sp.add_argument("--samples", type=int, default=20)
    sp.add_argument("--csv", help="write the singular image here")
    common(sp)
    sp.set_defaults(func=cmd_moment)

    sp = sub.add_parser("verify", help="run a verification suite")
    sp.add_argument("--suite", choices=sorted(SUITES), default="all")
    sp.add_argument("--quiet", action="store_true")
    sp.add_argument("--timing", action="store_true", help="include wall-clock timing in the JSON report")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("report", help="summarise a JSON report")
    sp.add_argument("--in", dest="infile", required=True)
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 2
    threads = os.environ.get("G2KIT_THREADS")
    try:
        if threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=int(threads)):
                return args.func(args)
        return args.func(args)
    except (ValueError, KeyError, OSError, G2KitError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
