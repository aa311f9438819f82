"""Built-in systems: algebroid data, Lagrangians, velocity constraints,
candidate Hamilton–Jacobi sections, and independent classical oracles.

Every oracle is a hand-coded classical formulation (second-order ODE,
Euler equations, Lagrange-multiplier equations) integrated with plain
numpy, so agreement with the main integrator is evidence rather than a
tautology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebroid import LieAlgebroid, Subbundle
from .dynamics import ImplicitSystem, State, Trajectory
from .errors import BadParams, UnknownModel
from .hj import HJSection
from .prolong import Lagrangian

__all__ = ["ModelBundle", "get_model", "oracle_trajectory", "model_names"]

# so(3) in the standard frame: bracket constants are the alternating
# symbol, stored for alpha < beta only.
SO3_STRUCTURE = {(2, 0, 1): "1", (1, 0, 2): "-1", (0, 1, 2): "1"}


@dataclass(frozen=True)
class ModelBundle:
    name: str
    system: ImplicitSystem
    box: tuple  # per base coordinate: (lo, hi)
    doc: str
    params: dict = field(default_factory=dict)
    hj_sections: dict = field(default_factory=dict)
    oracle: object = None
    perturb: object = None  # (rng, failing) -> HJSection


def _rk4(f, q0, h, N):
    q = np.array(q0, dtype=float)
    out = [q]
    for _ in range(N):
        k1 = f(q)
        k2 = f(q + 0.5 * h * k1)
        k3 = f(q + 0.5 * h * k2)
        k4 = f(q + h * k3)
        q = q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out.append(q)
    return np.array(out)


def _steps(h, T):
    N = int(round(T / h))
    if h <= 0 or N <= 0 or abs(N * h - T) > 1e-9 * max(1.0, T):
        raise ValueError("horizon must be a positive multiple of step")
    return N


def _traj(times, states, h):
    return Trajectory(np.asarray(times), tuple(states), h, "oracle")


def _num(v) -> str:
    return repr(float(v))


def _inertia(params, default):
    I = params.pop("inertia", None)
    if I is None:
        I = np.diag(default)
    else:
        I = np.asarray(I, dtype=float)
        if I.shape == (3,):
            I = np.diag(I)
    if I.shape != (3, 3) or not np.allclose(I, I.T):
        raise BadParams("inertia must be 3 diagonal entries or a symmetric 3x3 matrix")
    if np.linalg.eigvalsh(I).min() <= 0:
        raise BadParams("inertia must be positive definite")
    return I


def _quadratic_lagrangian(I) -> str:
    terms = []
    n = I.shape[0]
    for a in range(n):
        for b in range(a, n):
            c = I[a, b] if a == b else 2.0 * I[a, b]
            if c != 0.0:
                terms.append(f"{_num(0.5 * c)} * y{a + 1} * y{b + 1}")
    return " + ".join(terms) if terms else "0"


def _no_extra(params):
    if params:
        raise BadParams(f"unknown parameters: {sorted(params)}")


# -- free particle on a flat base -----------------------------------------


def _free_particle(params):
    d = int(params.pop("d", 2))
    _no_extra(params)
    if d < 1:
        raise BadParams("d must be at least 1")
    A = LieAlgebroid(
        d, d, [[("1" if i == j else "0") for j in range(d)] for i in range(d)], {}
    )
    L = " + ".join(f"0.5 * y{a + 1}^2" for a in range(d))
    Lg = Lagrangian(A, L)
    U = Subbundle.full(A)
    sys = ImplicitSystem(A, Lg, U)

    consts = [1.0, 0.5, -0.75, 0.25][:d] + [0.3] * max(0, d - 4)
    default = HJSection(d, d, [_num(c) for c in consts], [_num(c) for c in consts])

    def oracle(initial, h, T):
        x0, v0 = (np.asarray(q, dtype=float) for q in initial)
        N = _steps(h, T)
        times = np.arange(N + 1) * h
        states = [State(x0 + t * v0, v0, v0) for t in times]
        return _traj(times, states, h)

    def perturb(rng, failing):
        a = consts + 0.2 * rng.uniform(-1.0, 1.0, size=d)
        comps = [_num(v) for v in a]
        if not failing:
            return HJSection(d, d, comps, comps)
        eps = rng.uniform(0.1, 0.3)
        B = rng.uniform(0.5, 1.0, size=(d, d))
        B = eps * 0.5 * (B + B.T)
        comps = [
            " + ".join([_num(a[i])] + [f"{_num(B[i, j])} * x{j + 1}" for j in range(d)])
            for i in range(d)
        ]
        return HJSection(d, d, comps, comps)

    return ModelBundle(
        "free-particle",
        sys,
        tuple((-1.0, 1.0) for _ in range(d)),
        f"Unconstrained free particle on a flat {d}-dimensional base.",
        {"d": d},
        {"default": default},
        oracle,
        perturb,
    )


# -- pendulum --------------------------------------------------------------


def _pendulum(params):
    _no_extra(params)
    A = LieAlgebroid(1, 1, [["1"]], {})
    Lg = Lagrangian(A, "0.5 * y1^2 - (1 - cos(x1))")
    sys = ImplicitSystem(A, Lg, Subbundle.full(A))

    def oracle(initial, h, T):
        x0, v0 = initial
        q0 = [float(np.asarray(x0).reshape(-1)[0]), float(np.asarray(v0).reshape(-1)[0])]

        def f(q):
            return np.array([q[1], -math.sin(q[0])])

        N = _steps(h, T)
        qs = _rk4(f, q0, h, N)
        states = [State([q[0]], [q[1]], [q[1]]) for q in qs]
        return _traj(np.arange(N + 1) * h, states, h)

    return ModelBundle(
        "pendulum",
        sys,
        ((-math.pi, math.pi),),
        "Planar pendulum as an unconstrained system on the tangent bundle of a circle chart.",
        {},
        {},
        oracle,
        None,
    )


# -- harmonic oscillator (carries the closed-form HJ section) --------------


def _harmonic_oscillator(params):
    _no_extra(params)
    A = LieAlgebroid(1, 1, [["1"]], {})
    Lg = Lagrangian(A, "0.5 * y1^2 - 0.5 * x1^2")
    sys = ImplicitSystem(A, Lg, Subbundle.full(A))
    default = HJSection(1, 1, ["sqrt(2 - x1^2)"], ["sqrt(2 - x1^2)"])

    def oracle(initial, h, T):
        x0, v0 = initial
        x0 = float(np.asarray(x0).reshape(-1)[0])
        v0 = float(np.asarray(v0).reshape(-1)[0])
        N = _steps(h, T)
        times = np.arange(N + 1) * h
        states = []
        for t in times:
            x = x0 * math.cos(t) + v0 * math.sin(t)
            v = -x0 * math.sin(t) + v0 * math.cos(t)
            states.append(State([x], [v], [v]))
        return _traj(times, states, h)

    def perturb(rng, failing):
        if failing:
            delta = rng.uniform(0.05, 0.15)
            g = f"sqrt(2 - x1^2) + {_num(delta)}"
        else:
            E = rng.uniform(0.8, 1.2)
            g = f"sqrt({_num(2.0 * E)} - x1^2)"
        return HJSection(1, 1, [g], [g])

    return ModelBundle(
        "harmonic-oscillator",
        sys,
        ((-1.0, 1.0),),
        "Unit-frequency harmonic oscillator; its classical characteristic-function"
        " section sqrt(2E - x^2) is bundled for Hamilton-Jacobi checks.",
        {},
        {"default": default},
        oracle,
        perturb,
    )


# -- rigid body ------------------------------------------------------------


def _so3(I):
    A = LieAlgebroid(0, 3, [], SO3_STRUCTURE)
    Lg = Lagrangian(A, _quadratic_lagrangian(I))
    return A, Lg


def _rigid_body(params):
    I = _inertia(params, (1.0, 2.0, 3.0))
    _no_extra(params)
    A, Lg = _so3(I)
    sys = ImplicitSystem(A, Lg, Subbundle.full(A))
    Iinv = np.linalg.inv(I)

    def oracle(initial, h, T):
        _, w0 = initial

        def f(w):
            return Iinv @ np.cross(I @ w, w)

        N = _steps(h, T)
        ws = _rk4(f, np.asarray(w0, dtype=float), h, N)
        states = [State([], w, I @ w) for w in ws]
        return _traj(np.arange(N + 1) * h, states, h)

    return ModelBundle(
        "rigid-body",
        sys,
        (),
        "Free rigid body reduced to its body angular velocity.",
        {"inertia": I.tolist()},
        {},
        oracle,
        None,
    )


# -- Suslov problem --------------------------------------------------------


def _suslov(params):
    axis = int(params.pop("axis", 3))
    if axis not in (1, 2, 3):
        raise BadParams("axis must be 1, 2 or 3")
    I_raw = _inertia(params, (2.0, 1.5, 1.0))
    _no_extra(params)
    # cyclic relabelling putting the constrained axis last keeps the
    # bracket constants unchanged (even permutation)
    perm = {3: (0, 1, 2), 1: (1, 2, 0), 2: (2, 0, 1)}[axis]
    I = I_raw[np.ix_(perm, perm)]
    A, Lg = _so3(I)
    U = Subbundle.adapted_rank(A, 2)
    sys = ImplicitSystem(A, Lg, U)
    Iinv = np.linalg.inv(I)
    e3 = np.array([0.0, 0.0, 1.0])
    denom = float(e3 @ Iinv @ e3)

    def oracle(initial, h, T):
        _, wa0 = initial
        w0 = np.zeros(3)
        w0[:2] = np.asarray(wa0, dtype=float).reshape(-1)

        def f(w):
            tau = np.cross(I @ w, w)
            lam = -float(e3 @ Iinv @ tau) / denom
            return Iinv @ (tau + lam * e3)

        N = _steps(h, T)
        ws = _rk4(f, w0, h, N)
        states = [State([], w, I @ w) for w in ws]
        return _traj(np.arange(N + 1) * h, states, h)

    return ModelBundle(
        "suslov",
        sys,
        (),
        "Rigid body with the body angular velocity constrained to a"
        " coordinate plane; oracle uses the Lagrange-multiplier form.",
        {"inertia": I.tolist(), "axis": 3},
        {},
        oracle,
        None,
    )


# -- degenerate demonstration ----------------------------------------------


def _degenerate_demo(params):
    _no_extra(params)
    A = LieAlgebroid(1, 2, [["0", "0"]], {})
    Lg = Lagrangian(A, "0.5 * y1^2")
    sys = ImplicitSystem(A, Lg, Subbundle.full(A))
    return ModelBundle(
        "degenerate-demo",
        sys,
        ((-1.0, 1.0),),
        "Rank-two bundle with a Lagrangian that ignores one velocity;"
        " exercises the degeneracy guards.",
        {},
        {},
        None,
        None,
    )


# -- x-dependent structure functions ---------------------------------------


def _affine_rank2(params):
    _no_extra(params)
    A = LieAlgebroid(1, 2, [["1", "x1"]], {(0, 0, 1): "1"})
    Lg = Lagrangian(A, "0.5 * y1^2 + 0.5 * y2^2")
    sys = ImplicitSystem(A, Lg, Subbundle.full(A))
    return ModelBundle(
        "affine-rank2",
        sys,
        ((-0.5, 0.5),),
        "Rank-two bundle over a line with base-dependent anchor and"
        " bracket; exercises derivative terms of the structure data.",
        {},
        {},
        None,
        None,
    )


_REGISTRY = {
    "free-particle": _free_particle,
    "pendulum": _pendulum,
    "harmonic-oscillator": _harmonic_oscillator,
    "rigid-body": _rigid_body,
    "suslov": _suslov,
    "degenerate-demo": _degenerate_demo,
    "affine-rank2": _affine_rank2,
}


def model_names():
    return sorted(_REGISTRY)


def get_model(name: str, **params) -> ModelBundle:
    try:
        builder = _REGISTRY[name]
    except KeyError:
        raise UnknownModel(
            f"unknown model {name!r}; available: {', '.join(model_names())}"
        ) from None
    return builder(dict(params))


def oracle_trajectory(bundle: ModelBundle, initial, h: float, T: float) -> Trajectory:
    if bundle.oracle is None:
        raise BadParams(f"model {bundle.name!r} has no reference oracle")
    return bundle.oracle(initial, h, T)
