"""Acceptance gate: ten end-to-end criteria, each printing a single
pass/fail line with its measured figure of merit and runtime."""

import json
import subprocess
import sys
import time

import numpy as np

from algmech import expr
from algmech.algebroid import BasePoint, DualPoint, FiberPoint, LieAlgebroid
from algmech.dirac import (
    DiracPair,
    check_self_orthogonal,
    dirac_generators,
    dirac_member_poisson,
    dirac_member_symplectic,
)
from algmech.dynamics import energy_drift, integrate
from algmech.hj import verify_theorem
from algmech.models import get_model, model_names, oracle_trajectory
from algmech.prolong import (
    A_E_inverse,
    A_E_map,
    ProlongCovector,
    ProlongVector,
    d_TEE_L,
    dirac_differential,
    gamma_E_map,
    omega_flat,
    omega_sharp,
)

NO_BASE = np.zeros(0)


def _report(capfd, tag: str, ok: bool, detail: str, started: float, budget: float):
    elapsed = time.perf_counter() - started
    line = (
        f"[{tag}] {'PASS' if ok else 'FAIL'} ({detail}; {elapsed:.2f}s / {budget:g}s)"
    )
    with capfd.disabled():
        print(line, flush=True)
    assert ok, line
    assert elapsed < budget, line


def _sample_points(bundle, rng, count):
    if bundle.box:
        return [
            BasePoint([rng.uniform(lo, hi) for lo, hi in bundle.box])
            for _ in range(count)
        ]
    return [BasePoint(NO_BASE) for _ in range(count)]


def test_criterion_01_structure_certification(capfd):
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    worst = 0.0
    for name in model_names():
        b = get_model(name)
        rep = b.system.A.validate_structure(_sample_points(b, rng, 100), 1e-10)
        worst = max(worst, rep.max_residual_eq1, rep.max_residual_eq2)
    broken = LieAlgebroid(1, 2, [["1", "x1"]], {})
    bad = broken.validate_structure([BasePoint([0.25])], 1e-10)
    ok = worst <= 1e-10 and bad.max_residual_eq1 >= 0.5
    _report(
        capfd,
        "criterion 01 structure equations",
        ok,
        f"max residual {worst:.2e}, broken residual {bad.max_residual_eq1:.2f}",
        t0,
        1.0,
    )


def test_criterion_02_dirac_certification(capfd):
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    worst = 0.0
    rank_ok = True
    agree = True
    names = model_names()
    for name in names:
        b = get_model(name)
        A, U = b.system.A, b.system.U
        n = A.n
        pts = []
        for bp in _sample_points(b, rng, 100):
            pts.append(DualPoint(bp.x, rng.standard_normal(n)))
        for pt in pts:
            basis = dirac_generators(A, U, pt)
            worst = max(worst, check_self_orthogonal(basis))
            if np.linalg.matrix_rank(basis.matrix(), tol=1e-9) != 2 * n:
                rank_ok = False
        for k in range(1000 // len(names) + 1):
            pt = pts[k % len(pts)]
            if k % 2:
                v = rng.standard_normal(2 * n) @ dirac_generators(A, U, pt).matrix()
            else:
                v = rng.standard_normal(4 * n)
            cand = DiracPair(
                ProlongVector(pt, v[:n], v[n : 2 * n]),
                ProlongCovector(pt, v[2 * n : 3 * n], v[3 * n :]),
            )
            if (
                dirac_member_symplectic(A, U, cand, 1e-8).member
                != dirac_member_poisson(A, U, cand, 1e-8).member
            ):
                agree = False
    ok = rank_ok and worst <= 1e-10 and agree
    _report(
        capfd,
        "criterion 02 induced structure",
        ok,
        f"rank ok {rank_ok}, self-orth {worst:.2e}, agree {agree}",
        t0,
        5.0,
    )


def test_criterion_03_canonical_map_identities(capfd):
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    worst = 0.0
    for name in model_names():
        b = get_model(name)
        A, Lg = b.system.A, b.system.Lg
        m, n = A.m, A.n
        for _ in range(1000):
            if b.box:
                x = np.array([rng.uniform(lo, hi) for lo, hi in b.box])
            else:
                x = NO_BASE
            pt = DualPoint(x, rng.standard_normal(n))
            X = ProlongVector(pt, rng.standard_normal(n), rng.standard_normal(n))
            w = A_E_map(A, X)
            a1 = gamma_E_map(A, w)
            a2 = omega_flat(A, A_E_inverse(A, w))
            worst = max(worst, np.abs(a1.r - a2.r).max(), np.abs(a1.v - a2.v).max())
            Y = omega_sharp(A, omega_flat(A, X))
            worst = max(worst, np.abs(Y.z - X.z).max(), np.abs(Y.u - X.u).max())
            e = FiberPoint(x, rng.standard_normal(n))
            DL = dirac_differential(Lg, e)
            comp = gamma_E_map(A, d_TEE_L(Lg, e))
            worst = max(
                worst, np.abs(DL.r - comp.r).max(), np.abs(DL.v - comp.v).max()
            )
    ok = worst <= 1e-12
    _report(
        capfd,
        "criterion 03 canonical maps",
        ok,
        f"max identity residual {worst:.2e}",
        t0,
        2.0,
    )


def test_criterion_04_euler_lagrange_recovery(capfd):
    t0 = time.perf_counter()
    b = get_model("pendulum")
    init = ([np.pi / 2], [0.0])
    traj = integrate(b.system, init, 1e-3, 10.0)
    ref = oracle_trajectory(b, init, 1e-3, 10.0)
    err = max(
        max(
            abs(traj.states[k].x[0] - ref.states[k].x[0]),
            abs(traj.states[k].y[0] - ref.states[k].y[0]),
        )
        for k in range(len(traj.states))
    )
    _report(
        capfd,
        "criterion 04 second-order recovery",
        err <= 1e-6,
        f"max deviation from oracle {err:.2e}",
        t0,
        2.0,
    )


def test_criterion_05_reduced_rigid_body_recovery(capfd):
    t0 = time.perf_counter()
    b = get_model("rigid-body")
    init = (NO_BASE, [1.0, 1.0, 1.0])
    traj = integrate(b.system, init, 1e-3, 10.0)
    ref = oracle_trajectory(b, init, 1e-3, 10.0)
    err = max(
        np.abs(traj.states[k].y - ref.states[k].y).max()
        for k in range(len(traj.states))
    )
    _, drift = energy_drift(b.system, traj)
    # the fine-step drift sits at roundoff, so the factor-16 order
    # certification is run at steps where truncation still dominates
    d_coarse = energy_drift(b.system, integrate(b.system, init, 0.02, 10.0))[1]
    d_half = energy_drift(b.system, integrate(b.system, init, 0.01, 10.0))[1]
    ratio = d_coarse / d_half
    order_ok = 8 <= ratio <= 64 or max(d_coarse, d_half) <= 1e-12
    ok = err <= 1e-8 and drift <= 1e-8 and order_ok
    _report(
        capfd,
        "criterion 05 reduced rigid body",
        ok,
        f"oracle dev {err:.2e}, drift {drift:.2e}, halving ratio {ratio:.1f}",
        t0,
        3.0,
    )


def test_criterion_06_nonholonomic_recovery(capfd):
    t0 = time.perf_counter()
    b = get_model("suslov", inertia=(2.0, 1.5, 1.0))
    traj = integrate(b.system, (NO_BASE, [0.3, 0.4]), 1e-3, 5.0)
    const_dev = max(np.abs(st.y - traj.states[0].y).max() for st in traj.states)

    I = np.array([[2.0, 0.3, 0.0], [0.3, 1.5, 0.0], [0.0, 0.0, 1.0]])
    b2 = get_model("suslov", inertia=I)
    init = (NO_BASE, [0.3, 0.4])
    t2 = integrate(b2.system, init, 1e-3, 5.0)
    r2 = oracle_trajectory(b2, init, 1e-3, 5.0)
    err = max(
        np.abs(t2.states[k].y - r2.states[k].y).max() for k in range(len(t2.states))
    )
    ok = const_dev <= 1e-12 and err <= 1e-6
    _report(
        capfd,
        "criterion 06 constrained body",
        ok,
        f"constant dev {const_dev:.2e}, multiplier-oracle dev {err:.2e}",
        t0,
        3.0,
    )


def test_criterion_07_hamilton_jacobi_biconditional(capfd):
    t0 = time.perf_counter()
    scenarios = (("free-particle", [0.0, 0.0]), ("harmonic-oscillator", [0.0]))
    base_ok = True
    exceptions = 0
    for name, x0 in scenarios:
        b = get_model(name)
        rep = verify_theorem(
            b.system, b.hj_sections["default"], BasePoint(x0), 5e-3, 1.0, 1e-8
        )
        base_ok = base_ok and rep.hj_pass and rep.lift_pass and rep.consistent
        for seed in range(10):
            rng = np.random.default_rng(seed)
            s = b.perturb(rng, failing=(seed % 2 == 0))
            rep = verify_theorem(b.system, s, BasePoint(x0), 5e-3, 1.0, 1e-8)
            if not rep.consistent:
                exceptions += 1
    ok = base_ok and exceptions == 0
    _report(
        capfd,
        "criterion 07 characteristic-section equivalence",
        ok,
        f"base sections ok {base_ok}, biconditional exceptions {exceptions}",
        t0,
        5.0,
    )


def test_criterion_08_energy_conservation_order(capfd):
    t0 = time.perf_counter()
    cases = [
        ("pendulum", ([np.pi / 2], [0.0])),
        ("rigid-body", (NO_BASE, [1.0, 1.0, 1.0])),
        ("suslov", (NO_BASE, [0.5, -0.4])),
        ("free-particle", ([0.0, 0.0], [1.0, -0.5])),
        ("harmonic-oscillator", ([0.8], [0.0])),
        ("affine-rank2", ([0.1], [0.2, 0.3])),
    ]
    details = []
    ok = True
    for name, init in cases:
        b = get_model(name)
        d1 = energy_drift(b.system, integrate(b.system, init, 0.02, 5.0))[1]
        d2 = energy_drift(b.system, integrate(b.system, init, 0.01, 5.0))[1]
        if max(d1, d2) <= 1e-12:  # conserved to roundoff at both steps
            details.append(f"{name} floor")
            continue
        ratio = d1 / d2
        if not (8 <= ratio <= 64):
            ok = False
        details.append(f"{name} x{ratio:.0f}")
    _report(
        capfd,
        "criterion 08 discrete energy order",
        ok,
        ", ".join(details),
        t0,
        5.0,
    )


def test_criterion_09_derivative_integrity(capfd):
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(1000):
        k = int(rng.integers(1, 4))
        names = [f"x{i + 1}" for i in range(k)]
        terms = []
        for _ in range(int(rng.integers(2, 6))):
            degs = rng.integers(0, 3, size=k)
            while degs.sum() > 4:
                degs = rng.integers(0, 3, size=k)
            t = repr(float(rng.uniform(-2, 2)))
            for nm, d in zip(names, degs):
                if d:
                    t += f" * {nm}^{int(d)}"
            terms.append(t)
        e = expr.parse(" + ".join(terms))
        b = {nm: float(rng.uniform(-1, 1)) for nm in names}
        _, g, h = expr.eval_jet2(e, b, names)

        def ev(binding):
            return expr.evaluate(e, binding)

        s = 1e-5
        for i, nm in enumerate(names):
            b1, b2 = dict(b), dict(b)
            b1[nm] += s
            b2[nm] -= s
            fd = (ev(b1) - ev(b2)) / (2 * s)
            worst = max(worst, abs(fd - g[i]) / (1 + abs(g[i])))
        sh = 3e-4
        for i in range(k):
            for j in range(i, k):
                bpp, bpm, bmp, bmm = (dict(b) for _ in range(4))
                bpp[names[i]] += sh
                bpp[names[j]] += sh
                bpm[names[i]] += sh
                bpm[names[j]] -= sh
                bmp[names[i]] -= sh
                bmp[names[j]] += sh
                bmm[names[i]] -= sh
                bmm[names[j]] -= sh
                fd = (ev(bpp) - ev(bpm) - ev(bmp) + ev(bmm)) / (4 * sh * sh)
                worst = max(worst, abs(fd - h[i, j]) / (1 + abs(h[i, j])))
    _report(
        capfd,
        "criterion 09 derivative integrity",
        worst <= 1e-6,
        f"max relative deviation from finite differences {worst:.2e}",
        t0,
        1.0,
    )


def test_criterion_10_determinism(capfd, tmp_path):
    t0 = time.perf_counter()

    def run(args, out_csv=None):
        cmd = [sys.executable, "-m", "algmech.cli", *args]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        body = proc.stdout if out_csv is None else out_csv.read_bytes()
        return proc.returncode, body

    identical = True
    for args, with_csv in (
        (["dirac-check", "--model", "suslov", "--points", "20", "--pairs", "100"], False),
        (["hj-check", "--model", "harmonic-oscillator", "--x0", "0"], False),
        (["simulate", "--model", "rigid-body", "--y0", "1,1,1", "--h", "0.01",
          "--T", "1"], True),
    ):
        outs = []
        for k in range(2):
            full = list(args)
            csv = None
            if with_csv:
                csv = tmp_path / f"run{k}.csv"
                full += ["--out", str(csv)]
            code, body = run(full, csv)
            assert code == 0
            outs.append(body)
        if outs[0] != outs[1]:
            identical = False
    _report(
        capfd,
        "criterion 10 determinism",
        identical,
        "repeated commands byte-identical",
        t0,
        20.0,
    )
