"""Lie algebroids in local coordinates: anchor, structure functions,
structure-equation validation, exterior differential and the linear
Poisson bracket on the dual bundle.

Everything lives in a single chart.  Base coordinates are named
``x1..xm``, fiber coordinates ``y1..yn``, dual fiber coordinates
``p1..pn``; anchor and structure entries are :mod:`algmech.expr`
expressions of the base coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr
from .errors import RankDeficient

DEFAULT_RANK_TOL = 1e-9

__all__ = [
    "BasePoint",
    "FiberPoint",
    "DualPoint",
    "ScalarField",
    "StructureReport",
    "LieAlgebroid",
    "Subbundle",
    "base_names",
    "fiber_names",
    "momentum_names",
]


def base_names(m: int):
    return tuple(f"x{i + 1}" for i in range(m))


def fiber_names(n: int):
    return tuple(f"y{a + 1}" for a in range(n))


def momentum_names(n: int):
    return tuple(f"p{a + 1}" for a in range(n))


def _finite_vector(v, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(-1)
    if not np.isfinite(a).all():
        raise ValueError(f"{name} must be finite, got {a}")
    return a


@dataclass(frozen=True, eq=False)
class BasePoint:
    x: np.ndarray

    def __init__(self, x):
        object.__setattr__(self, "x", _finite_vector(x, "x"))

    def binding(self) -> dict:
        return {f"x{i + 1}": v for i, v in enumerate(self.x)}


@dataclass(frozen=True, eq=False)
class FiberPoint:
    x: np.ndarray
    y: np.ndarray

    def __init__(self, x, y):
        object.__setattr__(self, "x", _finite_vector(x, "x"))
        object.__setattr__(self, "y", _finite_vector(y, "y"))

    @property
    def base(self) -> BasePoint:
        return BasePoint(self.x)


@dataclass(frozen=True, eq=False)
class DualPoint:
    x: np.ndarray
    p: np.ndarray

    def __init__(self, x, p):
        object.__setattr__(self, "x", _finite_vector(x, "x"))
        object.__setattr__(self, "p", _finite_vector(p, "p"))

    @property
    def base(self) -> BasePoint:
        return BasePoint(self.x)

    def binding(self) -> dict:
        b = {f"x{i + 1}": v for i, v in enumerate(self.x)}
        b.update({f"p{a + 1}": v for a, v in enumerate(self.p)})
        return b


class ScalarField:
    """A scalar expression together with its derivative oracle."""

    def __init__(self, expression):
        if isinstance(expression, str):
            expression = expr.parse(expression)
        self.expression = expression

    def value(self, binding) -> float:
        return expr.evaluate(self.expression, binding)

    def jet(self, binding, wrt):
        return expr.eval_jet2(self.expression, binding, wrt)

    def __str__(self) -> str:
        return str(self.expression)


@dataclass(frozen=True)
class StructureReport:
    max_residual_eq1: float
    max_residual_eq2: float
    passed: bool


def _as_expression(e):
    return expr.parse(e) if isinstance(e, str) else e


class LieAlgebroid:
    """Local-coordinate Lie algebroid: base dimension ``m``, rank ``n``,
    anchor matrix ``rho[i][alpha]`` and structure functions stored only for
    ``alpha < beta`` (the full array is antisymmetrized on read, so the
    antisymmetry of the bracket cannot be violated by construction).
    """

    def __init__(self, m: int, n: int, anchor, structure):
        self.m = int(m)
        self.n = int(n)
        if len(anchor) != self.m or any(len(row) != self.n for row in anchor):
            raise ValueError(f"anchor must be {m}x{n} expressions")
        self.anchor = [[_as_expression(e) for e in row] for row in anchor]
        self.structure = {}
        for (g, a, b), e in dict(structure).items():
            if not (0 <= g < self.n and 0 <= a < b < self.n):
                raise ValueError(f"bad structure index {(g, a, b)} (need alpha < beta)")
            self.structure[(g, a, b)] = _as_expression(e)
        self._x = base_names(self.m)
        self._const = all(
            not expr.free_variables(e)
            for e in self._all_expressions()
        )
        self._cache = {}

    def _all_expressions(self):
        for row in self.anchor:
            yield from row
        yield from self.structure.values()

    # -- pointwise evaluation ------------------------------------------

    def anchor_at(self, x: BasePoint) -> np.ndarray:
        """Anchor matrix rho[i, alpha], shape (m, n)."""
        return self.anchor_jet_at(x)[0]

    def anchor_jet_at(self, x: BasePoint):
        """(rho, drho) with drho[i, alpha, j] = d rho^i_alpha / d x^j."""
        key = ("anchor", None if self._const else x.x.tobytes())
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        b = x.binding()
        rho = np.zeros((self.m, self.n))
        drho = np.zeros((self.m, self.n, self.m))
        for i, row in enumerate(self.anchor):
            for a, e in enumerate(row):
                v, g, _ = expr.eval_jet2(e, b, self._x)
                rho[i, a] = v
                drho[i, a] = g
        result = (rho, drho)
        if self._const or len(self._cache) < 4:
            self._cache[key] = result
        return result

    def structure_at(self, x: BasePoint) -> np.ndarray:
        """Structure array C[gamma, alpha, beta], antisymmetric in (alpha, beta)."""
        return self.structure_jet_at(x)[0]

    def structure_jet_at(self, x: BasePoint):
        """(C, dC) with dC[gamma, alpha, beta, i] = d C^gamma_ab / d x^i."""
        key = ("structure", None if self._const else x.x.tobytes())
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        b = x.binding()
        C = np.zeros((self.n, self.n, self.n))
        dC = np.zeros((self.n, self.n, self.n, self.m))
        for (g, a, bb), e in self.structure.items():
            v, grad, _ = expr.eval_jet2(e, b, self._x)
            C[g, a, bb] = v
            C[g, bb, a] = -v
            dC[g, a, bb] = grad
            dC[g, bb, a] = -grad
        result = (C, dC)
        if self._const or len(self._cache) < 4:
            self._cache[key] = result
        return result

    # -- structure equations -------------------------------------------

    def validate_structure(self, points, tol: float) -> StructureReport:
        """Check both structure equations at the given sample points."""
        if not points:
            raise ValueError("need at least one sample point")
        r1 = 0.0
        r2 = 0.0
        for pt in points:
            rho, drho = self.anchor_jet_at(pt)
            C, dC = self.structure_jet_at(pt)
            # eq1: rho^j_a d_j rho^i_b - rho^j_b d_j rho^i_a = rho^i_g C^g_ab
            lhs = np.einsum("ja,ibj->iab", rho, drho)
            lhs = lhs - lhs.transpose(0, 2, 1)
            rhs = np.einsum("ig,gab->iab", rho, C)
            if lhs.size:
                r1 = max(r1, float(np.abs(lhs - rhs).max()))
            # eq2: cyclic sum over (a,b,g) of rho^i_a d_i C^d_bg + C^d_an C^n_bg
            T = np.einsum("ia,dbgi->dabg", rho, dC) + np.einsum(
                "dan,nbg->dabg", C, C
            )
            cyc = T + T.transpose(0, 2, 3, 1) + T.transpose(0, 3, 1, 2)
            if cyc.size:
                r2 = max(r2, float(np.abs(cyc).max()))
        return StructureReport(r1, r2, passed=(r1 <= tol and r2 <= tol))

    # -- differential calculus -----------------------------------------

    def d_function(self, f: ScalarField, x: BasePoint) -> np.ndarray:
        """Coefficients of the exterior differential of ``f`` in the dual
        frame: (df/dx^i rho^i_alpha)_alpha."""
        _, grad, _ = f.jet(x.binding(), self._x)
        return grad @ self.anchor_at(x)

    def d_one_section(self, theta, x: BasePoint) -> np.ndarray:
        """Exterior differential of the 1-section ``theta`` (n expressions
        of x) as an exactly antisymmetric coefficient matrix M[beta, gamma].

        Convention: M is the full antisymmetrization in (beta, gamma) of
        d theta_gamma/dx^i rho^i_beta - (1/2) theta_alpha C^alpha_bg.
        """
        theta = [_as_expression(t) for t in theta]
        if len(theta) != self.n:
            raise ValueError(f"theta must have {self.n} components")
        b = x.binding()
        vals = np.empty(self.n)
        grads = np.zeros((self.n, self.m))
        for a, t in enumerate(theta):
            v, g, _ = expr.eval_jet2(t, b, self._x)
            vals[a] = v
            grads[a] = g
        rho = self.anchor_at(x)
        C = self.structure_at(x)
        a_mat = grads @ rho  # a[gamma, beta] = d theta_g / dx^i rho^i_b
        raw = a_mat.T - 0.5 * np.einsum("a,abg->bg", vals, C)
        return 0.5 * (raw - raw.T)

    def poisson_bracket(self, F: ScalarField, G: ScalarField, pt: DualPoint) -> float:
        """Linear Poisson bracket on the dual bundle:
        {F,G} = rho^i_a (dF/dx^i dG/dp_a - dG/dx^i dF/dp_a)
                - C^g_ab p_g dF/dp_a dG/dp_b.
        """
        names = self._x + momentum_names(self.n)
        b = pt.binding()
        _, gF, _ = F.jet(b, names)
        _, gG, _ = G.jet(b, names)
        Fx, Fp = gF[: self.m], gF[self.m :]
        Gx, Gp = gG[: self.m], gG[self.m :]
        rho = self.anchor_at(pt.base)
        C = self.structure_at(pt.base)
        first = float(Fx @ rho @ Gp - Gx @ rho @ Fp)
        second = float(np.einsum("gab,g,a,b->", C, pt.p, Fp, Gp))
        return first - second


class Subbundle:
    """Constant-rank subbundle of the fiber, presented by a spanning map
    x -> n x r matrix whose columns span U(x)."""

    def __init__(self, parent: LieAlgebroid, r: int, span, adapted: bool = False):
        self.parent = parent
        self.r = int(r)
        n = parent.n
        if not (0 <= self.r <= n):
            raise ValueError(f"rank must be in [0, {n}]")
        if adapted:
            span = [
                [("1" if a == c else "0") for c in range(self.r)] for a in range(n)
            ]
        if len(span) != n or any(len(row) != self.r for row in span):
            raise ValueError(f"span must be {n}x{r} expressions")
        self.span = [[_as_expression(e) for e in row] for row in span]
        self.adapted = bool(adapted)
        self._const_span = None
        if all(not expr.free_variables(e) for row in self.span for e in row):
            self._const_span = np.array(
                [[expr.evaluate(e, {}) for e in row] for row in self.span]
            )

    @classmethod
    def full(cls, parent: LieAlgebroid) -> "Subbundle":
        return cls(parent, parent.n, None, adapted=True)

    @classmethod
    def adapted_rank(cls, parent: LieAlgebroid, r: int) -> "Subbundle":
        return cls(parent, r, None, adapted=True)

    def span_at(self, x: BasePoint) -> np.ndarray:
        if self._const_span is not None:
            return self._const_span
        b = x.binding()
        return np.array(
            [[expr.evaluate(e, b) for e in row] for row in self.span]
        )

    def _orthonormal_frames(self, x: BasePoint, tol: float):
        """(Q, Qc): orthonormal bases of U(x) and of its complement."""
        S = self.span_at(x)
        n = self.parent.n
        if self.r == 0:
            return np.zeros((n, 0)), np.eye(n)
        U, s, _ = np.linalg.svd(S, full_matrices=True)
        smax = s[0] if s.size else 0.0
        rank = int(np.sum(s > tol * max(smax, 1.0)))
        if rank != self.r:
            raise RankDeficient(
                f"span has numerical rank {rank}, expected {self.r} at x={x.x}"
            )
        return U[:, : self.r], U[:, self.r :]

    def annihilator(self, x: BasePoint, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
        """(n - r) orthonormal covectors spanning the annihilator (rows)."""
        _, Qc = self._orthonormal_frames(x, tol)
        return Qc.T

    def completion(self, x: BasePoint, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
        """Orthonormal n x n frame whose first r columns span U(x)."""
        Q, Qc = self._orthonormal_frames(x, tol)
        return np.hstack([Q, Qc])

    def member(self, x: BasePoint, v, tol: float = DEFAULT_RANK_TOL) -> bool:
        v = np.asarray(v, dtype=float)
        return self.member_distance(x, v, tol) <= tol * (1.0 + np.linalg.norm(v))

    def member_distance(self, x: BasePoint, v, tol: float = DEFAULT_RANK_TOL) -> float:
        v = np.asarray(v, dtype=float)
        Q, _ = self._orthonormal_frames(x, tol)
        return float(np.linalg.norm(v - Q @ (Q.T @ v)))

    def member_annihilator(self, x: BasePoint, xi, tol: float = DEFAULT_RANK_TOL) -> bool:
        xi = np.asarray(xi, dtype=float)
        return self.annihilator_residual(x, xi, tol) <= tol * (
            1.0 + np.linalg.norm(xi)
        )

    def annihilator_residual(
        self, x: BasePoint, xi, tol: float = DEFAULT_RANK_TOL
    ) -> float:
        """Largest pairing of ``xi`` with the spanning columns of U(x)."""
        xi = np.asarray(xi, dtype=float)
        S = self.span_at(x)
        self._orthonormal_frames(x, tol)  # rank check
        if S.shape[1] == 0:
            return 0.0
        return float(np.abs(xi @ S).max())
