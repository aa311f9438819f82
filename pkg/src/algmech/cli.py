"""Command-line surface: model listing and validation, simulation with
energy reports, Dirac-structure certification, and Hamilton–Jacobi
verification.

All sampling is driven by a seeded 64-bit generator (default seed 42),
and every report line is printed with full double precision, so a
repeated command is byte-identical.  Wall-clock time goes to stderr to
keep stdout deterministic.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from .algebroid import BasePoint, DualPoint
from .config import bundle_from_config, load_config
from .dirac import (
    DiracPair,
    check_self_orthogonal,
    dirac_generators,
    dirac_member_poisson,
    dirac_member_symplectic,
)
from .dynamics import energy_drift, integrate, residual
from .errors import (
    BadParams,
    ConfigError,
    Degenerate,
    HypothesisViolated,
    NewtonDivergence,
    ParseError,
    UnknownModel,
)
from .hj import check_closedness, check_in_K, verify_theorem
from .models import get_model, model_names
from .prolong import ProlongCovector, ProlongVector

EXIT_PASS = 0
EXIT_FAIL = 2
EXIT_DEGENERATE = 3
EXIT_NEWTON = 4
EXIT_HYPOTHESIS = 5
EXIT_CONFIG = 6


def _g(v: float) -> str:
    return format(float(v), ".17g")


def _load_bundle(args):
    if args.config is not None:
        return bundle_from_config(load_config(args.config), name=args.config)
    if args.model is None:
        raise ConfigError("need --model or --config")
    return get_model(args.model)


def _sample_base(bundle, rng, count):
    pts = []
    for _ in range(count):
        x = np.array([rng.uniform(lo, hi) for lo, hi in bundle.box])
        pts.append(BasePoint(x))
    return pts


def _parse_floats(text, count, what):
    items = [t for t in text.split(",") if t.strip()] if text else []
    if len(items) != count:
        raise ConfigError(f"{what} needs {count} comma-separated numbers")
    try:
        return np.array([float(t) for t in items])
    except ValueError:
        raise ConfigError(f"{what} contains a non-number") from None


def cmd_list_models(args) -> int:
    for name in model_names():
        print(f"{name}: {get_model(name).doc}")
    return EXIT_PASS


def cmd_validate(args) -> int:
    bundle = _load_bundle(args)
    rng = np.random.default_rng(args.seed)
    pts = _sample_base(bundle, rng, args.samples)
    report = bundle.system.A.validate_structure(pts, args.tol)
    rank_ok = True
    for pt in pts:
        try:
            bundle.system.U.completion(pt)
        except Exception:
            rank_ok = False
            break
    print(f"model: {bundle.name}")
    print(f"samples: {args.samples}  tol: {_g(args.tol)}")
    print(f"residual_eq1: {_g(report.max_residual_eq1)}")
    print(f"residual_eq2: {_g(report.max_residual_eq2)}")
    print(f"subbundle_rank_ok: {rank_ok}")
    ok = report.passed and rank_ok
    print(f"verdict: {'pass' if ok else 'fail'}")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_simulate(args) -> int:
    bundle = _load_bundle(args)
    sys_ = bundle.system
    m, n, r = sys_.A.m, sys_.A.n, sys_.U.r
    x0 = _parse_floats(args.x0, m, "--x0")
    ya0 = _parse_floats(args.y0, r, "--y0")
    traj = integrate(sys_, (x0, ya0), args.h, args.T, args.method)
    E0, drift = energy_drift(sys_, traj)

    xs = np.array([st.x for st in traj.states])
    ps = np.array([st.p for st in traj.states])

    def fd(vals):
        d = np.empty_like(vals)
        if len(vals) >= 3:
            d[1:-1] = (vals[2:] - vals[:-2]) / (2.0 * args.h)
            d[0] = (-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * args.h)
            d[-1] = (3.0 * vals[-1] - 4.0 * vals[-2] + vals[-3]) / (2.0 * args.h)
        else:
            d[:] = 0.0
        return d

    xdots, pdots = fd(xs), fd(ps)
    if args.out:
        from .prolong import energies
        from .algebroid import FiberPoint

        cols = (
            ["t"]
            + [f"x{i + 1}" for i in range(m)]
            + [f"y{a + 1}" for a in range(n)]
            + [f"p{a + 1}" for a in range(n)]
            + ["E_L", "res_kin", "res_mom"]
        )
        lines = [",".join(cols)]
        for k, st in enumerate(traj.states):
            rep = residual(sys_, st, xdots[k], pdots[k], tol=np.inf)
            E = energies(sys_.Lg, FiberPoint(st.x, st.y), st.p)[1]
            row = (
                [traj.times[k]]
                + list(st.x)
                + list(st.y)
                + list(st.p)
                + [E, rep.r_kin, rep.r_mom]
            )
            lines.append(",".join(_g(v) for v in row))
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    print(f"model: {bundle.name}  method: {args.method}")
    print(f"h: {_g(args.h)}  T: {_g(args.T)}  steps: {len(traj.states) - 1}")
    print(f"E0: {_g(E0)}")
    print(f"max_energy_drift: {_g(drift)}")
    if args.out:
        print(f"csv: {args.out}")
    return EXIT_PASS


def cmd_dirac_check(args) -> int:
    bundle = _load_bundle(args)
    sys_ = bundle.system
    A, U = sys_.A, sys_.U
    n = A.n
    rng = np.random.default_rng(args.seed)
    worst_orth = 0.0
    rank_ok = True
    points = []
    for _ in range(args.points):
        x = np.array([rng.uniform(lo, hi) for lo, hi in bundle.box])
        p = rng.standard_normal(n)
        points.append(DualPoint(x, p))
    for pt in points:
        basis = dirac_generators(A, U, pt)
        worst_orth = max(worst_orth, check_self_orthogonal(basis))
        if np.linalg.matrix_rank(basis.matrix(), tol=1e-9) != 2 * n:
            rank_ok = False
    agree = True
    for k in range(args.pairs):
        pt = points[k % len(points)]
        if rng.uniform() < 0.5:
            basis = dirac_generators(A, U, pt)
            coeff = rng.standard_normal(2 * n)
            v = coeff @ basis.matrix()
        else:
            v = rng.standard_normal(4 * n)
        cand = DiracPair(
            ProlongVector(pt, v[:n], v[n : 2 * n]),
            ProlongCovector(pt, v[2 * n : 3 * n], v[3 * n :]),
        )
        a = dirac_member_symplectic(A, U, cand, tol=1e-8)
        b = dirac_member_poisson(A, U, cand, tol=1e-8)
        if a.member != b.member:
            agree = False
    print(f"model: {bundle.name}")
    print(f"points: {args.points}  pairs: {args.pairs}")
    print(f"generator_rank_ok: {rank_ok}")
    print(f"self_orthogonality: {_g(worst_orth)}")
    print(f"constructions_agree: {agree}")
    ok = rank_ok and worst_orth <= 1e-10 and agree
    print(f"verdict: {'pass' if ok else 'fail'}")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_hj_check(args) -> int:
    bundle = _load_bundle(args)
    sys_ = bundle.system
    try:
        section = bundle.hj_sections[args.section]
    except KeyError:
        raise ConfigError(
            f"model {bundle.name!r} has no section {args.section!r}"
        ) from None
    x0 = BasePoint(_parse_floats(args.x0, sys_.A.m, "--x0"))
    start = check_in_K(sys_, section, x0, tol=1e-8)
    closed = check_closedness(sys_, section, x0)
    report = verify_theorem(sys_, section, x0, args.h, args.T, args.tol)
    print(f"model: {bundle.name}  section: {args.section}")
    print(f"in_U_at_x0: {start.in_U}  legendre_gap: {_g(start.legendre_gap)}")
    print(f"closedness_at_x0: {_g(closed)}")
    print(f"max_hj_residual: {_g(report.max_hj_residual)}")
    print(f"max_lift_residual: {_g(report.max_lift_residual)}")
    print(f"hj_pass: {report.hj_pass}  lift_pass: {report.lift_pass}")
    print(f"consistent: {report.consistent}")
    ok = report.hj_pass and report.lift_pass and report.consistent
    print(f"verdict: {'pass' if ok else 'fail'}")
    return EXIT_PASS if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="algmech",
        description="Constrained implicit Lagrangian mechanics toolkit.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--model", help="built-in model name")
        p.add_argument("--config", help="JSON model description")
        p.add_argument("--seed", type=int, default=42)

    sub.add_parser("list-models", help="list built-in models")

    p = sub.add_parser("validate", help="check the structure equations")
    common(p)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-10)

    p = sub.add_parser("simulate", help="integrate and report energy drift")
    common(p)
    p.add_argument("--x0", default="", help="comma-separated base point")
    p.add_argument("--y0", default="", help="comma-separated velocity components")
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--method", choices=("rk4", "implicit_midpoint"), default="rk4")
    p.add_argument("--out", help="trajectory CSV path")

    p = sub.add_parser("dirac-check", help="certify the induced structure")
    common(p)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--pairs", type=int, default=1000)

    p = sub.add_parser("hj-check", help="verify a candidate section")
    common(p)
    p.add_argument("--section", default="default")
    p.add_argument("--x0", default="", help="comma-separated base point")
    p.add_argument("--h", type=float, default=5e-3)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-8)

    return ap


_COMMANDS = {
    "list-models": cmd_list_models,
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "dirac-check": cmd_dirac_check,
    "hj-check": cmd_hj_check,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        code = _COMMANDS[args.command](args)
    except Degenerate as e:
        print(f"error: degenerate system: {e}")
        code = EXIT_DEGENERATE
    except NewtonDivergence as e:
        print(f"error: implicit solver diverged: {e}")
        code = EXIT_NEWTON
    except HypothesisViolated as e:
        print(f"error: hypothesis violated: {e}")
        code = EXIT_HYPOTHESIS
    except (ConfigError, ParseError, UnknownModel, BadParams) as e:
        print(f"error: {e}")
        code = EXIT_CONFIG
    print(f"wall_time_s: {time.perf_counter() - started:.3f}", file=sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
