"""Hamilton–Jacobi verification machinery for the constrained implicit
dynamics: hypothesis checks on a candidate section (velocity part in U,
momentum part Legendre-consistent, closedness on U-pairs), the pointwise
Hamilton–Jacobi residual, the induced base flow, and the solution-lift
equivalence check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr
from .algebroid import BasePoint, FiberPoint, base_names
from .dynamics import ImplicitSystem, State, Trajectory, residual
from .errors import FlowBlowUp, HypothesisViolated

FLOW_BOUND = 1e6
DEFAULT_HYPOTHESIS_TOL = 1e-8

__all__ = [
    "HJSection",
    "BaseTrajectory",
    "check_in_K",
    "check_closedness",
    "hj_residual",
    "base_flow",
    "verify_theorem",
]


class HJSection:
    """Candidate section x -> (gamma(x), gammabar(x)): a velocity part
    and a momentum part, each n expressions of the base coordinates."""

    def __init__(self, n: int, m: int, gamma, gammabar):
        conv = lambda e: expr.parse(e) if isinstance(e, str) else e
        self.gamma = [conv(e) for e in gamma]
        self.gammabar = [conv(e) for e in gammabar]
        if len(self.gamma) != n or len(self.gammabar) != n:
            raise ValueError(f"section needs {n} components per part")
        self.n = n
        self._x = base_names(m)

    def velocity(self, x: BasePoint) -> np.ndarray:
        b = x.binding()
        return np.array([expr.evaluate(e, b) for e in self.gamma])

    def momentum(self, x: BasePoint) -> np.ndarray:
        b = x.binding()
        return np.array([expr.evaluate(e, b) for e in self.gammabar])

    def momentum_jacobian(self, x: BasePoint) -> np.ndarray:
        """J[a, i] = d gammabar_a / d x^i."""
        b = x.binding()
        return np.array(
            [expr.eval_jet2(e, b, self._x)[1] for e in self.gammabar]
        ).reshape(self.n, len(self._x))


@dataclass(frozen=True)
class BaseTrajectory:
    times: np.ndarray
    points: np.ndarray


@dataclass(frozen=True)
class SectionReport:
    in_U: bool
    legendre_gap: float


def check_in_K(sys: ImplicitSystem, s: HJSection, x: BasePoint, tol: float) -> SectionReport:
    """Velocity part in U(x) and momentum part equal to the Legendre
    image of the velocity part."""
    g = s.velocity(x)
    in_U = sys.U.member(x, g, tol)
    _, _, Ly, _, _, _ = sys.Lg.jet(FiberPoint(x.x, g))
    gap = float(np.abs(s.momentum(x) - Ly).max()) if sys.A.n else 0.0
    return SectionReport(in_U, gap)


def check_closedness(sys: ImplicitSystem, s: HJSection, x: BasePoint) -> float:
    """Largest defect, over pairs of U spanning columns (v, w), of the
    antisymmetrized derivative condition on the momentum part:
    (rho^i_b d gammabar_d/dx^i - rho^i_d d gammabar_b/dx^i
     - gammabar_a C^a_bd) v^b w^d."""
    A = sys.A
    J = s.momentum_jacobian(x)
    gb = s.momentum(x)
    rho = A.anchor_at(x)
    C = A.structure_at(x)
    R = rho.T @ J.T  # R[b, d] = rho^i_b d gammabar_d / dx^i
    R = R - R.T - np.einsum("a,abd->bd", gb, C)
    S = sys.U.span_at(x)
    if S.size == 0:
        return 0.0
    return float(np.abs(S.T @ R @ S).max())


def hj_residual(sys: ImplicitSystem, s: HJSection, x: BasePoint) -> np.ndarray:
    """Component for each U spanning column v of
    (gamma^b d gammabar_b/dx^i - dL/dx^i(x, gamma(x))) rho^i_a v^a."""
    A = sys.A
    g = s.velocity(x)
    J = s.momentum_jacobian(x)
    _, Lx, _, _, _, _ = sys.Lg.jet(FiberPoint(x.x, g))
    grad = g @ J - Lx
    rho = A.anchor_at(x)
    return (grad @ rho) @ sys.U.span_at(x)


def base_flow(sys: ImplicitSystem, s: HJSection, x0: BasePoint, h: float, T: float) -> BaseTrajectory:
    """Fourth-order integration of the induced base field
    c' = rho(c) gamma(c)."""
    A = sys.A
    N = int(round(T / h))
    if h <= 0 or N <= 0 or abs(N * h - T) > 1e-9 * max(1.0, T):
        raise ValueError("horizon must be a positive multiple of step")

    def field(x):
        bp = BasePoint(x)
        return A.anchor_at(bp) @ s.velocity(bp)

    x = np.array(x0.x, dtype=float)
    pts = [x]
    for k in range(N):
        k1 = field(x)
        k2 = field(x + 0.5 * h * k1)
        k3 = field(x + 0.5 * h * k2)
        k4 = field(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if x.size and np.abs(x).max() > FLOW_BOUND:
            raise FlowBlowUp(
                f"base flow left |x| <= {FLOW_BOUND:g} at t={(k + 1) * h:g}"
            )
        pts.append(x)
    return BaseTrajectory(np.arange(N + 1) * h, np.array(pts))


@dataclass(frozen=True)
class TheoremReport:
    hj_pass: bool
    lift_pass: bool
    consistent: bool
    max_hj_residual: float
    max_lift_residual: float


def _fd_derivatives(values: np.ndarray, h: float) -> np.ndarray:
    """Second-order finite differences along axis 0: centered in the
    interior, one-sided three-point stencils at the ends."""
    d = np.empty_like(values)
    d[1:-1] = (values[2:] - values[:-2]) / (2.0 * h)
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
    d[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * h)
    return d


def verify_theorem(
    sys: ImplicitSystem,
    s: HJSection,
    x0: BasePoint,
    h: float,
    T: float,
    tol: float,
    hypothesis_tol: float = DEFAULT_HYPOTHESIS_TOL,
) -> TheoremReport:
    """Check the equivalence: the Hamilton–Jacobi residual vanishes
    along the base flow iff the lifted curve solves the implicit
    equations (with finite-difference time derivatives)."""
    flow = base_flow(sys, s, x0, h, T)
    pts = [BasePoint(x) for x in flow.points]
    for bp in pts:
        rep = check_in_K(sys, s, bp, hypothesis_tol)
        if not rep.in_U:
            raise HypothesisViolated("velocity part outside U", bp.x, float("nan"))
        if rep.legendre_gap > hypothesis_tol:
            raise HypothesisViolated(
                "momentum part is not the Legendre image", bp.x, rep.legendre_gap
            )
        closed = check_closedness(sys, s, bp)
        if closed > hypothesis_tol:
            raise HypothesisViolated("closedness on U-pairs", bp.x, closed)

    res = [hj_residual(sys, s, bp) for bp in pts]
    max_hj = max((float(np.abs(r).max()) if r.size else 0.0) for r in res)
    hj_pass = max_hj <= tol

    xs = flow.points
    ps = np.array([s.momentum(bp) for bp in pts])
    ys = np.array([s.velocity(bp) for bp in pts])
    xdots = _fd_derivatives(xs, h) if xs.size else np.zeros_like(xs)
    pdots = _fd_derivatives(ps, h)
    scale = 1.0 + max(
        float(np.abs(a).max()) if a.size else 0.0 for a in (xs, ys, ps)
    )
    lift_tol = tol + 50.0 * h * h * scale
    max_lift = 0.0
    for k, bp in enumerate(pts):
        rep = residual(
            sys, State(xs[k], ys[k], ps[k]), xdots[k], pdots[k], lift_tol
        )
        max_lift = max(max_lift, rep.r_U, rep.r_kin, rep.r_leg, rep.r_mom)
    lift_pass = max_lift <= lift_tol
    return TheoremReport(hj_pass, lift_pass, hj_pass == lift_pass, max_hj, max_lift)
