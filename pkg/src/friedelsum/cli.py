"""Command-line interface.

Curves and tables are written as CSV preceded by ``# key=value`` metadata
lines; the full sum-rule report is JSON. Floats are printed with ``repr``
so identical inputs give byte-identical output.

Exit codes: 0 success, 2 usage error, 3 invalid input, 4 numerical failure.
Errors go to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import boundstates, finitebox, friedel, phaseshift, radial, specfun
from .errors import ComputationError, FriedelError, ValidationError
from .potential import load_potential, zero_potential

EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_COMPUTATION = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _positive(text):
    x = float(text)
    if not (math.isfinite(x) and x > 0):
        raise argparse.ArgumentTypeError(f"expected a finite number > 0, got {text!r}")
    return x


def _nonneg_int(text):
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {text!r}")
    return n


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv(meta, header, rows):
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}={_fmt(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _json(obj):
    def clean(o):
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        if isinstance(o, np.ndarray):
            return [clean(v) for v in o.tolist()]
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        return o

    return json.dumps(clean(obj), indent=2, sort_keys=True) + "\n"


def _potential(args):
    if args.potential is None:
        return zero_potential()
    return load_potential(args.potential)


def _meta_potential(args, v):
    return {"potential": args.potential or "V=0", "kind": v.kind, "support_radius": v.support_radius}


# ---------------------------------------------------------------- subcommands


def cmd_bessel(args):
    rho = np.geomspace(args.rho_min, args.rho_max, args.n)
    b = specfun.riccati_bessel(args.ell, rho)
    rows = zip(rho, b.jhat, b.nhat, b.jhat_d, b.nhat_d, b.wronskian() - 1.0)
    meta = {"ell": args.ell, "rho_min": args.rho_min, "rho_max": args.rho_max, "n": args.n}
    return _csv(meta, ["rho", "jhat", "nhat", "jhat_d", "nhat_d", "wronskian_residual"], rows)


def cmd_radial(args):
    v = _potential(args)
    sol = radial.integrate_regular(v, args.ell, args.energy, args.r_max, args.h)
    meta = {**_meta_potential(args, v), "ell": args.ell, "energy": args.energy, "h": sol.h, "log_scale": sol.log_scale}
    return _csv(meta, ["r", "f"], zip(sol.r, sol.f))


def cmd_phases(args):
    v = _potential(args)
    if v.is_zero:
        k = phaseshift.default_k_grid(args.k_max, args.n_samples, args.k_min)
        rows = [(args.ell, x, 0.0) for x in k]
        meta = {"k_anchor": args.k_max, "eta_zero": 0.0, "branch_certificate": 0.0}
    else:
        c = phaseshift.build_curve(
            v,
            args.ell,
            args.k_max,
            args.n_samples,
            k_min=args.k_min,
            anchor_tol=args.anchor_tol,
            match_tol=args.match_tol,
        )
        rows = [(args.ell, x, e) for x, e in zip(c.k_grid, c.eta)]
        meta = {"k_anchor": c.k_anchor, "eta_zero": c.eta_zero, "branch_certificate": c.branch_certificate}
    meta = {**_meta_potential(args, v), **meta, "anchor_tol": args.anchor_tol, "match_tol": args.match_tol}
    return _csv(meta, ["ell", "k", "eta"], rows)


def cmd_bound(args):
    v = _potential(args)
    t = boundstates.build_table(v, None, args.ell_max, args.tol)
    meta = {
        **_meta_potential(args, v),
        "tol": args.tol,
        "ell_max": t.ell_max,
        "n_b": t.n_b,
        "n_levels": t.n_b_radial,
        "counts": " ".join(str(c) for c in t.counts),
    }
    return _csv(meta, ["ell", "index", "energy"], t.rows())


def cmd_levinson(args):
    v = _potential(args)
    rows = friedel.levinson_check(v, args.ell_max, k_max=args.k_max)
    out = [(r.ell, r.eta_zero, r.pi_n, r.n_bound, r.discrepancy, r.flagged, r.note) for r in rows]
    meta = {**_meta_potential(args, v), "tolerance": 0.05}
    return _csv(meta, ["ell", "eta_zero", "pi_n", "n_bound", "discrepancy", "flagged", "note"], out)


def cmd_densitycheck(args):
    v = _potential(args)
    d = friedel.density_identity_check(v, args.ell, args.k, args.R, args.dk)
    meta = {**_meta_potential(args, v), "dk": args.dk}
    header = ["ell", "k", "R", "lhs", "deta_dk", "g_value", "residual"]
    return _csv(meta, header, [(d.ell, d.k, d.R, d.lhs, d.deta_dk, d.g_value, d.residual)])


def cmd_friedel(args):
    v = _potential(args)
    rep = friedel.friedel_report(v, args.e_fermi, args.R, args.ell_max, tuple(args.beta), workers=args.workers)
    d = rep.to_dict()
    d["potential"] = args.potential or "V=0"
    return _json(d)


def cmd_boxscan(args):
    v = _potential(args)
    s = finitebox.scan(
        v, args.e_fermi, args.l_min, args.l_max, args.step, window=args.window, budget=args.budget, workers=args.workers
    )
    meta = {**_meta_potential(args, v), "e_fermi": args.e_fermi, "window": s.window}
    meta.update(s.fluctuation_stats)
    rows = zip(s.L_grid, s.d_values, s.ell_max, s.window_amplitude)
    return _csv(meta, ["L", "D", "ell_max", "window_amplitude"], rows)


def defaults():
    return {
        "specfun.ELL_CAP": specfun.ELL_CAP,
        "radial.points_per_wavelength": radial.POINTS_PER_WAVELENGTH,
        "radial.points_per_support": radial.POINTS_PER_SUPPORT,
        "phaseshift.anchor_tol": phaseshift.ANCHOR_TOL,
        "phaseshift.match_tol": phaseshift.MATCH_TOL,
        "phaseshift.k_min": phaseshift.K_MIN,
        "phaseshift.max_jump": phaseshift.MAX_JUMP,
        "phaseshift.max_depth": phaseshift.MAX_DEPTH,
        "phaseshift.matching_radii": "support_radius + 1, support_radius + 2",
        "boundstates.tol": boundstates.LEVEL_TOL,
        "boundstates.max_bisections": boundstates.MAX_BISECTIONS,
        "boundstates.points_per_support": boundstates.POINTS_PER_SUPPORT,
        "friedel.R": friedel.DEFAULT_R,
        "friedel.betas": list(friedel.DEFAULT_BETAS),
        "friedel.born_cutoff": friedel.BORN_CUTOFF,
        "friedel.panel_nodes": friedel.PANEL_NODES,
        "friedel.levinson_tol": 0.05,
        "finitebox.budget": finitebox.DEFAULT_BUDGET,
        "finitebox.extra_channels": finitebox.EXTRA_CHANNELS,
        "workers_env": friedel.WORKERS_ENV,
    }


def cmd_defaults(args):
    return _json(defaults())


def build_parser():
    p = _Parser(prog="friedelsum", description="Phase shifts, bound states and the Friedel sum rule for a spherical potential.")
    p.add_argument("--output", "-o", help="write to this file instead of stdout")
    p.add_argument(
        "--workers",
        type=int,
        default=None,
        help=f"worker threads (default: ${friedel.WORKERS_ENV} or 1)",
    )
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def pot(sp):
        sp.add_argument("--potential", help="potential file (default: V=0)")

    s = sub.add_parser("bessel", help="Riccati-Bessel table on a log grid")
    s.add_argument("--ell", type=_nonneg_int, required=True)
    s.add_argument("--rho-min", type=_positive, default=1e-2, help="default 0.01")
    s.add_argument("--rho-max", type=_positive, default=1e3, help="default 1000")
    s.add_argument("--n", type=int, default=200, help="default 200")
    s.set_defaults(func=cmd_bessel)

    s = sub.add_parser("radial", help="regular radial solution on its grid")
    pot(s)
    s.add_argument("--ell", type=_nonneg_int, default=0)
    s.add_argument("--energy", type=float, required=True)
    s.add_argument("--r-max", type=_positive, default=None, help="default support_radius + max(10, 4 pi/k)")
    s.add_argument("--h", type=_positive, default=None, help="default from the step rule")
    s.set_defaults(func=cmd_radial)

    s = sub.add_parser("phases", help="unwrapped phase-shift curve")
    pot(s)
    s.add_argument("--ell", type=_nonneg_int, default=0)
    s.add_argument("--k-max", type=_positive, default=3.0, help="default 3")
    s.add_argument("--n-samples", type=int, default=64, help="default 64")
    s.add_argument("--k-min", type=_positive, default=phaseshift.K_MIN, help=f"default {phaseshift.K_MIN}")
    s.add_argument("--anchor-tol", type=_positive, default=phaseshift.ANCHOR_TOL, help=f"default {phaseshift.ANCHOR_TOL}")
    s.add_argument("--match-tol", type=_positive, default=phaseshift.MATCH_TOL, help=f"default {phaseshift.MATCH_TOL}")
    s.set_defaults(func=cmd_phases)

    s = sub.add_parser("bound", help="bound-state table")
    pot(s)
    s.add_argument("--ell-max", type=_nonneg_int, default=None, help="default: last channel that can bind")
    s.add_argument("--tol", type=_positive, default=boundstates.LEVEL_TOL, help=f"default {boundstates.LEVEL_TOL}")
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("levinson", help="threshold phases against bound-state counts")
    pot(s)
    s.add_argument("--ell-max", type=_nonneg_int, default=None)
    s.add_argument("--k-max", type=_positive, default=2.0, help="curve range, default 2")
    s.set_defaults(func=cmd_levinson)

    s = sub.add_parser("densitycheck", help="density/phase-shift identity at one (ell, k, R)")
    pot(s)
    s.add_argument("--ell", type=_nonneg_int, default=0)
    s.add_argument("--k", type=_positive, default=1.0)
    s.add_argument("--R", type=_positive, default=40.0)
    s.add_argument("--dk", type=_positive, default=1e-3)
    s.set_defaults(func=cmd_densitycheck)

    s = sub.add_parser("friedel", help="JSON sum-rule report")
    pot(s)
    s.add_argument("--e-fermi", type=_positive, default=1.0, help="default 1")
    s.add_argument("--R", type=_positive, default=friedel.DEFAULT_R, help=f"density radius, default {friedel.DEFAULT_R}")
    s.add_argument("--ell-max", type=_nonneg_int, default=None, help="default from the Born estimate")
    s.add_argument("--beta", type=float, nargs="*", default=list(friedel.DEFAULT_BETAS))
    s.set_defaults(func=cmd_friedel)

    s = sub.add_parser("boxscan", help="level-count difference D(L) in a hard-wall ball")
    pot(s)
    s.add_argument("--e-fermi", type=_positive, default=1.0)
    s.add_argument("--l-min", type=_positive, default=10.0)
    s.add_argument("--l-max", type=_positive, default=200.0)
    s.add_argument("--step", type=_positive, default=1.0)
    s.add_argument("--window", type=int, default=None, help="sliding window length, default n/10")
    s.add_argument("--budget", type=int, default=finitebox.DEFAULT_BUDGET)
    s.set_defaults(func=cmd_boxscan)

    s = sub.add_parser("defaults", help="print every default tolerance as JSON")
    s.set_defaults(func=cmd_defaults)
    return p


def _fail(code, kind, message, module=None):
    err = {"error": kind, "message": message, "exit_code": code}
    if module:
        err["module"] = module
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.workers is not None and args.workers < 1:
            raise _UsageError("--workers must be >= 1")
        if getattr(args, "beta", None) is not None and any(not (math.isfinite(b) and b >= 0) for b in args.beta):
            raise _UsageError("--beta values must be finite and >= 0")
    except _UsageError as exc:
        return _fail(EXIT_USAGE, "UsageError", str(exc))
    try:
        text = args.func(args)
    except ValidationError as exc:
        return _fail(EXIT_VALIDATION, type(exc).__name__, str(exc), exc.module)
    except ComputationError as exc:
        return _fail(EXIT_COMPUTATION, type(exc).__name__, str(exc), exc.module)
    except FriedelError as exc:
        return _fail(EXIT_COMPUTATION, type(exc).__name__, str(exc), exc.module)
    except OSError as exc:
        return _fail(EXIT_VALIDATION, "OSError", str(exc))
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
