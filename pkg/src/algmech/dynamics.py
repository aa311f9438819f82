"""Constrained implicit dynamics of a Lagrangian on a Lie algebroid with
a velocity subbundle U: pointwise residual evaluation, an explicit
fourth-order integrator on the adapted reduction, an implicit midpoint
integrator that carries the momentum constraint, and energy monitoring.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr
from .algebroid import (
    BasePoint,
    FiberPoint,
    LieAlgebroid,
    Subbundle,
    base_names,
    fiber_names,
)
from .errors import Degenerate, EvaluationFault, NewtonDivergence
from .prolong import Lagrangian, energies

HESSIAN_CONDITION_LIMIT = 1e12
NEWTON_MAX_ITERS = 25

__all__ = [
    "ImplicitSystem",
    "State",
    "Trajectory",
    "ResidualReport",
    "residual",
    "adapted_rhs",
    "integrate",
    "energy_drift",
]


@dataclass(frozen=True)
class ImplicitSystem:
    A: LieAlgebroid
    Lg: Lagrangian
    U: Subbundle

    def __post_init__(self):
        if self.Lg.algebroid is not self.A or self.U.parent is not self.A:
            raise ValueError("Lagrangian and subbundle must share the algebroid")


@dataclass(frozen=True, eq=False)
class State:
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray

    def __init__(self, x, y, p):
        for name, v in (("x", x), ("y", y), ("p", p)):
            a = np.asarray(v, dtype=float).reshape(-1)
            if not np.isfinite(a).all():
                raise ValueError(f"state component {name} must be finite")
            object.__setattr__(self, name, a)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: tuple
    h: float
    method: str


@dataclass(frozen=True)
class ResidualReport:
    r_U: float
    r_kin: float
    r_leg: float
    r_mom: float
    passed: bool


def residual(sys: ImplicitSystem, st: State, xdot, pdot, tol: float) -> ResidualReport:
    """Defects of a state with candidate time derivatives against the
    implicit equations: velocity in U, kinematics, Legendre relation and
    the momentum equation paired against the spanning columns of U."""
    A, Lg, U = sys.A, sys.Lg, sys.U
    x = BasePoint(st.x)
    xdot = np.asarray(xdot, dtype=float).reshape(-1)
    pdot = np.asarray(pdot, dtype=float).reshape(-1)
    _, Lx, Ly, _, _, _ = Lg.jet(FiberPoint(st.x, st.y))
    rho = A.anchor_at(x)
    C = A.structure_at(x)
    r_U = U.member_distance(x, st.y)
    kin = xdot - rho @ st.y
    r_kin = float(np.abs(kin).max()) if kin.size else 0.0
    r_leg = float(np.abs(st.p - Ly).max()) if A.n else 0.0
    force = pdot + np.einsum("gab,g,b->a", C, st.p, st.y) - rho.T @ Lx
    S = U.span_at(x)
    r_mom = float(np.abs(force @ S).max()) if S.size else 0.0
    passed = max(r_U, r_kin, r_leg, r_mom) <= tol
    return ResidualReport(r_U, r_kin, r_leg, r_mom, passed)


class _AdaptedField:
    """Right-hand side of the adapted reduction.  Keeps the raw compiled
    jet of L, index maps into its packed Hessian, constant structure
    data, and a cached factorization of the restricted velocity Hessian,
    so a single evaluation stays cheap inside the integrator loop."""

    def __init__(self, sys: ImplicitSystem):
        if not sys.U.adapted:
            raise ValueError("explicit path needs the subbundle in adapted form")
        self.sys = sys
        A = sys.A
        self.m, self.n, self.r = A.m, A.n, sys.U.r
        m, r = self.m, self.r
        self._names = base_names(A.m) + fiber_names(A.n)
        self._raw = expr.compile_jet2(sys.Lg.L, self._names).raw
        k = self.m + self.n

        def tri(j, l):
            if j > l:
                j, l = l, j
            return j * k - j * (j - 1) // 2 + (l - j)

        self._idx_M = [[tri(m + a, m + b) for b in range(r)] for a in range(r)]
        self._idx_xy = [[tri(i, m + a) for i in range(m)] for a in range(r)]
        self._const = A._const
        if self._const:
            origin = BasePoint(np.zeros(m))
            self._rho = A.anchor_at(origin)
            self._C = A.structure_at(origin)
        self._lu_key = None
        self._lu_inv = None

    def _solve(self, M: np.ndarray, b: np.ndarray) -> np.ndarray:
        key = M.tobytes()
        if key != self._lu_key:
            s = np.linalg.svd(M, compute_uv=False)
            cond = np.inf if s[-1] == 0.0 else s[0] / s[-1]
            if cond >= HESSIAN_CONDITION_LIMIT:
                raise Degenerate(
                    f"restricted velocity Hessian has condition number {cond:.3g}"
                )
            self._lu_key = key
            self._lu_inv = np.linalg.inv(M)
        return self._lu_inv @ b

    def __call__(self, x: np.ndarray, ya: np.ndarray):
        m, n, r = self.m, self.n, self.r
        y = np.zeros(n)
        y[:r] = ya
        binding = {}
        names = self._names
        for i in range(m):
            binding[names[i]] = x[i]
        for a in range(n):
            binding[names[m + a]] = y[a]
        try:
            _, g, h = self._raw(binding)
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise EvaluationFault(str(exc)) from exc
        Lx = np.array(g[:m])
        Ly = np.array(g[m:])
        if self._const:
            rho, C = self._rho, self._C
        else:
            bp = BasePoint(x)
            rho, C = self.sys.A.anchor_at(bp), self.sys.A.structure_at(bp)
        rho_a = rho[:, :r]
        xdot = rho_a @ ya
        pdot_a = -np.tensordot(Ly, C[:, :r, :], axes=1) @ y + rho_a.T @ Lx
        rhs = pdot_a
        if m:
            Lxy_a = np.array([[h[j] for j in row] for row in self._idx_xy])
            rhs = pdot_a - Lxy_a @ xdot
        M = np.array([[h[j] for j in row] for row in self._idx_M])
        ydot_a = self._solve(M, rhs)
        return xdot, ydot_a, Ly


def adapted_rhs(sys: ImplicitSystem, x, ya):
    """Explicit field of the reduced equations at (x, y) with the
    complementary velocity components pinned to zero; returns
    (xdot, ydot_a, p) with p the full Legendre image."""
    x = np.asarray(x, dtype=float).reshape(-1)
    ya = np.asarray(ya, dtype=float).reshape(-1)
    return _AdaptedField(sys)(x, ya)


def _steps(h: float, T: float) -> int:
    if h <= 0 or T <= 0:
        raise ValueError("step and horizon must be positive")
    N = int(round(T / h))
    if abs(N * h - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"horizon {T} is not a multiple of step {h}")
    return N


def _integrate_rk4(sys: ImplicitSystem, x0, ya0, h, T) -> Trajectory:
    field = _AdaptedField(sys)
    r, n = sys.U.r, sys.A.n
    N = _steps(h, T)
    x = np.array(x0, dtype=float).reshape(-1)
    ya = np.array(ya0, dtype=float).reshape(-1)
    states = []

    def embed(ya):
        y = np.zeros(n)
        y[:r] = ya
        return y

    for _ in range(N):
        k1x, k1y, p = field(x, ya)
        states.append(State(x, embed(ya), p))
        k2x, k2y, _ = field(x + 0.5 * h * k1x, ya + 0.5 * h * k1y)
        k3x, k3y, _ = field(x + 0.5 * h * k2x, ya + 0.5 * h * k2y)
        k4x, k4y, _ = field(x + h * k3x, ya + h * k3y)
        x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        ya = ya + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    states.append(State(x, embed(ya), field(x, ya)[2]))
    times = np.arange(N + 1) * h
    return Trajectory(times, tuple(states), h, "rk4")


def _integrate_midpoint(sys: ImplicitSystem, x0, ya0, h, T) -> Trajectory:
    A, Lg, U = sys.A, sys.Lg, sys.U
    if not U.adapted:
        raise ValueError("implicit path needs the subbundle in adapted form")
    m, n, r = A.m, A.n, U.r
    N = _steps(h, T)

    def embed(ya):
        y = np.zeros(n)
        y[:r] = ya
        return y

    def legendre_p(x, ya):
        return Lg.jet(FiberPoint(x, embed(ya)))[2]

    def step_residual(prev, unknown):
        x0_, ya0_, p0_ = prev
        x1 = unknown[:m]
        ya1 = unknown[m : m + r]
        p1 = unknown[m + r :]
        xm = 0.5 * (x0_ + x1)
        yam = 0.5 * (ya0_ + ya1)
        pm = 0.5 * (p0_ + p1)
        ym = embed(yam)
        bm = BasePoint(xm)
        _, Lx, _, _, _, _ = Lg.jet(FiberPoint(xm, ym))
        rho = A.anchor_at(bm)
        C = A.structure_at(bm)
        kin = (x1 - x0_) / h - rho @ ym
        mom = (
            (p1[:r] - p0_[:r]) / h
            + np.einsum("gab,g,b->a", C[:, :r, :], pm, ym)
            - rho[:, :r].T @ Lx
        )
        leg = p1 - legendre_p(x1, ya1)
        return np.concatenate([kin, mom, leg])

    x = np.array(x0, dtype=float).reshape(-1)
    ya = np.array(ya0, dtype=float).reshape(-1)
    p = legendre_p(x, ya)
    states = [State(x, embed(ya), p)]
    dim = m + r + n
    for k in range(N):
        prev = (x, ya, p)
        guess = np.concatenate([x, ya, p])
        F = step_residual(prev, guess)
        converged = False
        for _ in range(NEWTON_MAX_ITERS):
            tol = 1e-11 * (1.0 + float(np.linalg.norm(guess)))
            nF = float(np.abs(F).max()) if dim else 0.0
            if nF <= tol:
                converged = True
                break
            J = np.empty((dim, dim))
            for j in range(dim):
                dq = 1e-7 * (1.0 + abs(guess[j]))
                bumped = guess.copy()
                bumped[j] += dq
                J[:, j] = (step_residual(prev, bumped) - F) / dq
            try:
                delta = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError:
                raise NewtonDivergence(k, nF) from None
            t = 1.0
            while t >= 1.0 / 1024.0:
                trial = guess + t * delta
                Ft = step_residual(prev, trial)
                if float(np.abs(Ft).max()) < nF:
                    guess, F = trial, Ft
                    break
                t *= 0.5
            else:
                raise NewtonDivergence(k, nF)
        if not converged:
            raise NewtonDivergence(k, float(np.abs(F).max()))
        x = guess[:m]
        ya = guess[m : m + r]
        p = guess[m + r :]
        states.append(State(x, embed(ya), p))
    times = np.arange(N + 1) * h
    return Trajectory(times, tuple(states), h, "implicit_midpoint")


def integrate(sys: ImplicitSystem, initial, h: float, T: float, method: str = "rk4") -> Trajectory:
    """Integrate from initial = (x0, ya0), the base point and the
    U-components of the velocity, over [0, T] with uniform step h."""
    x0, ya0 = initial
    if method == "rk4":
        return _integrate_rk4(sys, x0, ya0, h, T)
    if method == "implicit_midpoint":
        return _integrate_midpoint(sys, x0, ya0, h, T)
    raise ValueError(f"unknown method {method!r}")


def energy_drift(sys: ImplicitSystem, traj: Trajectory):
    """(E0, max_abs_drift) of the generalized energy p·y - L along the
    trajectory."""
    values = [
        energies(sys.Lg, FiberPoint(st.x, st.y), st.p)[1] for st in traj.states
    ]
    E0 = values[0]
    drift = max(abs(v - E0) for v in values)
    return E0, drift
