import numpy as np
import pytest

from algmech.algebroid import BasePoint
from algmech.dynamics import integrate
from algmech.errors import BadParams, UnknownModel
from algmech.models import get_model, model_names, oracle_trajectory

NO_BASE = np.zeros(0)


def test_registry_contents():
    assert model_names() == [
        "affine-rank2",
        "degenerate-demo",
        "free-particle",
        "harmonic-oscillator",
        "pendulum",
        "rigid-body",
        "suslov",
    ]


def test_unknown_model_and_bad_params():
    with pytest.raises(UnknownModel):
        get_model("heavy-top")
    with pytest.raises(BadParams):
        get_model("rigid-body", inertia=[[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(BadParams):
        get_model("rigid-body", inertia=(1.0, -1.0, 2.0))
    with pytest.raises(BadParams):
        get_model("suslov", axis=4)
    with pytest.raises(BadParams):
        get_model("pendulum", mass=2.0)
    with pytest.raises(BadParams):
        get_model("free-particle", d=0)


def test_every_model_passes_structure_validation():
    rng = np.random.default_rng(100)
    for name in model_names():
        b = get_model(name)
        if b.box:
            pts = [
                BasePoint([rng.uniform(lo, hi) for lo, hi in b.box])
                for _ in range(100)
            ]
        else:
            pts = [BasePoint(NO_BASE)]
        rep = b.system.A.validate_structure(pts, 1e-10)
        assert rep.passed, (name, rep)


def test_oracle_first_derivative_rigid_body():
    b = get_model("rigid-body")
    traj = oracle_trajectory(b, (NO_BASE, [1.0, 1.0, 1.0]), 1e-4, 1e-2)
    d = (traj.states[1].y - traj.states[0].y) / 1e-4
    assert np.allclose(d, [-1.0, 1.0, -1.0 / 3.0], atol=1e-3)


def test_oracle_energy_is_conserved_internally():
    b = get_model("pendulum")
    traj = oracle_trajectory(b, ([np.pi / 2], [0.0]), 1e-3, 2.0)
    for st in traj.states:
        E = 0.5 * st.y[0] ** 2 + (1 - np.cos(st.x[0]))
        assert E == pytest.approx(1.0, abs=1e-9)


def test_oracle_suslov_diagonal_is_constant():
    b = get_model("suslov", inertia=(2.0, 1.5, 1.0))
    traj = oracle_trajectory(b, (NO_BASE, [0.3, 0.4]), 1e-3, 1.0)
    assert np.abs(traj.states[-1].y - traj.states[0].y).max() <= 1e-12


def test_models_without_oracle_say_so():
    b = get_model("degenerate-demo")
    with pytest.raises(BadParams):
        oracle_trajectory(b, ([0.0], [0.1, 0.1]), 0.1, 0.1)


def test_suslov_axis_relabelling():
    # constraining axis 1 with inertia diag(a,b,c) must behave like
    # constraining axis 3 with the cyclically relabelled inertia
    b1 = get_model("suslov", inertia=(1.0, 2.0, 3.0), axis=1)
    b3 = get_model("suslov", inertia=(2.0, 3.0, 1.0), axis=3)
    t1 = integrate(b1.system, (NO_BASE, [0.4, 0.5]), 1e-2, 1.0)
    t3 = integrate(b3.system, (NO_BASE, [0.4, 0.5]), 1e-2, 1.0)
    for s1, s3 in zip(t1.states, t3.states):
        assert np.abs(s1.y - s3.y).max() == 0.0


def test_free_particle_dimension_parameter():
    b = get_model("free-particle", d=3)
    assert b.system.A.m == 3 and b.system.A.n == 3
    traj = oracle_trajectory(b, ([0.0, 0.0, 0.0], [1.0, 2.0, 3.0]), 0.1, 1.0)
    assert np.allclose(traj.states[-1].x, [1.0, 2.0, 3.0])
