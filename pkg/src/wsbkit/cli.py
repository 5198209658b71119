"""Command-line interface: ``wsbkit <command> ...``."""
import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .config import eval_angle, load_config
from .dynamics import lagrange_points
from .errors import DomainError, IntegrationError, WSBError
from .integrate import IntegratorConfig, fmt
from .products import (CUT_HEADER, cell, ITERATE_HEADER, ORBIT_HEADER, OUTCOME_HEADER, outcome_row,
                       plot_product, write_csv, write_sweep)

EXIT_OK, EXIT_INPUT, EXIT_INTEGRATION, EXIT_PARTIAL = 0, 2, 3, 4


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return max(1, int(args.threads))
    env = os.environ.get("WSB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"WSB_THREADS must be an integer, got {env!r}")
    return 1


def _integrator(args) -> IntegratorConfig:
    kw = {}
    if getattr(args, "rtol", None) is not None:
        kw["rel_tol"] = args.rtol
    if getattr(args, "atol", None) is not None:
        kw["abs_tol"] = args.atol
    if getattr(args, "t_max", None) is not None:
        kw["t_max"] = args.t_max
    return IntegratorConfig(**kw)


def _angle(text):
    try:
        return eval_angle(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}")


def cmd_lagrange(args):
    eq = lagrange_points(args.mu)
    rows = [{"point": f"L{i + 1}", "y1": float(p[0]), "y2": float(p[1]), "C": float(c)}
            for i, (p, c) in enumerate(zip(eq.positions, eq.jacobi))]
    if args.json:
        print(json.dumps({"mu": args.mu, "points": rows}, indent=2))
    else:
        print("point,y1,y2,C")
        for r in rows:
            print(f"{r['point']},{fmt(r['y1'])},{fmt(r['y2'])},{fmt(r['C'])}")
    return EXIT_OK


def cmd_classify(args):
    from .integrate import propagate
    from .dynamics import to_p1_frame
    from .wsb import PeriapsisIC, classify

    ic = PeriapsisIC(args.r, args.theta, args.e, args.mu)
    cfg = _integrator(args)
    out = classify(ic, args.n, cfg)
    print(",".join(OUTCOME_HEADER))
    print(",".join(cell(v) for v in outcome_row(args.r, args.theta, args.e, args.mu, out)))
    if args.trajectory:
        traj = propagate(to_p1_frame(ic.state), (0.0, out.t_final), args.mu, cfg)
        traj.write_csv(args.trajectory)
    return EXIT_OK


def cmd_sweep(args):
    from .sweep import sweep

    run, manifest = load_config(args.config)
    outdir = args.out or run.output
    if manifest is None:
        manifest = run.manifest()
    res = sweep(run.theta_grid, run.e_grid, run.n_list, run.mu, run.integrator,
                tuple(manifest.r_range), run.K, run.refine_tol, threads=_threads(args),
                refine=run.refine, manifest=manifest)
    paths = write_sweep(res, outdir)
    for k in sorted(paths):
        print(f"{k}: {paths[k]}")
    if res.errors:
        print(f"{len(res.errors)} work item(s) failed; see {paths['errors']}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_section(args):
    from .section import SectionPoint, iterate, sstar_orbit
    from .wsb import PeriapsisIC

    cfg = _integrator(args)
    if args.ic:
        r, th, e = (float(eval_angle(x)) for x in args.ic.split(","))
        orb = sstar_orbit(PeriapsisIC(r, th, e, args.mu), args.k_max, cfg)
    else:
        if args.C is None or args.r is None:
            raise DomainError("give --ic r,theta,e or --r/--rdot/--C")
        orb = iterate(SectionPoint(args.r, args.rdot, args.theta0, args.C, args.mu),
                      args.k_max, cfg)
    if args.out:
        write_csv(args.out, ITERATE_HEADER, orb.rows())
    verdict = "bounded" if orb.bounded else "unbounded"
    print(f"termination={orb.termination} iterates={len(orb.points) - 1} verdict={verdict} "
          f"E2_negative={int(orb.e2_negative)}")
    return EXIT_OK


def cmd_manifold(args):
    from .manifolds import globalize, lyapunov_family, section_cuts, wn_vs_manifold

    cfg = _integrator(args)
    os.makedirs(args.out, exist_ok=True)
    orb = lyapunov_family(args.mu, args.C, args.neck, cfg)
    sp = orb.spectrum
    write_csv(os.path.join(args.out, "orbit.csv"), ORBIT_HEADER,
              [[args.neck, args.mu, orb.C, orb.period, *orb.state, sp.lam,
                orb.periodicity_residual(cfg)]])
    trajs = globalize(orb, args.branch, args.epsilon, args.n_seeds, cfg, args.duration,
                      args.theta0)
    cuts = section_cuts(trajs, args.theta0, args.k_max, orb)
    rows = [[c.branch, c.which_neck, c.k, ph, r, rd, C] for c in cuts
            for ph, r, rd, C in zip(c.seed_phase, c.r, c.rdot, c.C)]
    write_csv(os.path.join(args.out, "cuts.csv"), CUT_HEADER, rows)
    print(f"orbit: C={fmt(orb.C)} T={fmt(orb.period)} lambda={fmt(sp.lam)}")
    for c in cuts:
        print(f"cut k={c.k}: {len(c)} points")
    if args.compare:
        r_star, e, n = (float(x) for x in args.compare.split(","))
        rep = wn_vs_manifold(args.theta0, e, int(n), args.mu, cfg, r_star=r_star,
                             epsilon=args.epsilon, n_seeds=args.n_seeds, duration=args.duration)
        doc = {"theta0": rep.theta0, "e": rep.e, "n": rep.n, "r_star": rep.r_star, "C": rep.C,
               "status": rep.status,
               "distances": {k: (None if not math.isfinite(v) else v)
                             for k, v in rep.distances.items()},
               "intersections": [vars(p) for p in rep.intersections]}
        with open(os.path.join(args.out, "comparison.json"), "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"comparison: status={rep.status} distances={doc['distances']}")
    return EXIT_OK


def cmd_plot(args):
    plot_product(args.product, args.kind, args.out)
    print(args.out)
    return EXIT_OK


def cmd_version(args):
    print(f"wsbkit {__version__}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="wsbkit", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, integ=True):
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (fallback: WSB_THREADS, else 1)")
        if integ:
            sp.add_argument("--rtol", type=float, default=None)
            sp.add_argument("--atol", type=float, default=None)
            sp.add_argument("--t-max", dest="t_max", type=float, default=None)

    s = sub.add_parser("lagrange", help="Lagrange points and their Jacobi constants")
    s.add_argument("--mu", type=float, required=True)
    s.add_argument("--json", action="store_true")
    common(s, integ=False)
    s.set_defaults(func=cmd_lagrange)

    s = sub.add_parser("classify", help="classify one periapsis initial condition")
    s.add_argument("--mu", type=float, required=True)
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--theta", type=_angle, required=True)
    s.add_argument("--e", type=float, required=True)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--trajectory", help="write the trajectory CSV here")
    common(s)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("sweep", help="run a grid sweep from an INI config or manifest JSON")
    s.add_argument("config")
    s.add_argument("--out", help="output directory (default: config [run] output)")
    common(s, integ=False)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("section", help="iterate the return map on a section ray")
    s.add_argument("--mu", type=float, required=True)
    s.add_argument("--ic", help="periapsis IC as r,theta,e")
    s.add_argument("--r", type=float)
    s.add_argument("--rdot", type=float, default=0.0)
    s.add_argument("--theta0", type=_angle, default=0.0)
    s.add_argument("--C", type=float)
    s.add_argument("--k-max", dest="k_max", type=int, default=10)
    s.add_argument("--out", help="iterate table CSV")
    common(s)
    s.set_defaults(func=cmd_section)

    s = sub.add_parser("manifold", help="Lyapunov orbit, manifold cuts, boundary comparison")
    s.add_argument("--mu", type=float, required=True)
    s.add_argument("--C", type=float, required=True)
    s.add_argument("--neck", choices=["L1", "L2"], default="L1")
    s.add_argument("--theta0", type=_angle, default=math.pi)
    s.add_argument("--k-max", dest="k_max", type=int, default=2)
    s.add_argument("--branch", default="stable-interior")
    s.add_argument("--epsilon", type=float, default=1e-6)
    s.add_argument("--n-seeds", dest="n_seeds", type=int, default=100)
    s.add_argument("--duration", type=float, default=4 * math.pi)
    s.add_argument("--compare", help="r_star,e,n of a boundary point to compare against")
    s.add_argument("--out", default="manifold_out")
    common(s)
    s.set_defaults(func=cmd_manifold)

    s = sub.add_parser("plot", help="deterministic SVG of a CSV product")
    s.add_argument("product")
    s.add_argument("--kind", default=None,
                   help="scans, intervals, boundaries, iterates or cuts (default: from header)")
    s.add_argument("--out", required=True)
    common(s, integ=False)
    s.set_defaults(func=cmd_plot)

    s = sub.add_parser("version", help="print the tool version")
    s.set_defaults(func=cmd_version)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        _threads(args)
        return args.func(args)
    except IntegrationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except (DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except WSBError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())
