import numpy as np
import pytest

from hetagg.integrate import IntegratorConfig, Trajectory, detect_convergence, integrate, rk4_step, run
from hetagg.models import Coupling, ModelKind
from hetagg.scenario import sample_initial
from hetagg.statespace import NumericError


def test_config_counts():
    cfg = IntegratorConfig(dt=0.01, t_end=1.0, record_stride=3)
    assert cfg.n_steps == 100
    assert cfg.n_records == 34
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(dt=2.0, t_end=1.0)


def test_rk4_exact_on_cubic():
    # y' = 3 t^2 written autonomously as (y, t)' = (3 t^2, 1): RK4 integrates cubics exactly
    out = rk4_step(lambda s: np.array([3 * s[1] ** 2, 1.0]), np.array([0.0, 0.0]), 0.5)
    assert out == pytest.approx([0.125, 0.5], abs=1e-15)


def test_rk4_tuple_state():
    out = rk4_step(lambda s: (-s[0], 2 * s[1]), (np.array([1.0]), np.array([1.0])), 0.1)
    assert isinstance(out, tuple)
    assert out[0][0] == pytest.approx(np.exp(-0.1), abs=1e-6)
    assert out[1][0] == pytest.approx(np.exp(0.2), abs=1e-5)


def test_time_grid_and_records():
    traj = integrate(lambda y: -y, np.array([1.0]), IntegratorConfig(dt=0.1, t_end=1.0, record_stride=2))
    assert len(traj) == 6
    assert traj.times[-1] == pytest.approx(1.0)
    assert np.allclose(traj.times, 0.2 * np.arange(6))


def test_numeric_error_carries_partial_trajectory():
    with pytest.raises(NumericError) as info:
        integrate(lambda y: y ** 3, np.array([10.0]), IntegratorConfig(dt=1.0, t_end=50.0))
    exc = info.value
    assert isinstance(exc.trajectory, Trajectory)
    assert exc.t == exc.trajectory.times[-1]


def test_sphere_run_stays_on_manifold():
    w = sample_initial(0, ModelKind.SCHRODINGER_LOHE, 3, 5)
    traj = run(ModelKind.SCHRODINGER_LOHE, w, np.linspace(-0.2, 0.2, 5), Coupling(1.0),
               IntegratorConfig(dt=0.05, t_end=5.0))
    assert traj.monitors["manifold_drift"].max() < 1e-14
    assert traj.monitors["pre_projection_drift"].max() > 0


def test_unitary_run_stays_on_manifold():
    u = sample_initial(0, ModelKind.LOHE_MATRIX, 3, 4)
    traj = run(ModelKind.LOHE_MATRIX, u, np.linspace(-0.2, 0.2, 4), Coupling(1.0),
               IntegratorConfig(dt=0.05, t_end=5.0))
    assert traj.monitors["manifold_drift"].max() < 1e-12


def test_kuramoto_phase_sum_conserved():
    a = np.array([-1.0, 0.2, 0.8])
    traj = run(ModelKind.KURAMOTO, np.array([0.5, -0.2, -0.3]), a, Coupling(2.0), IntegratorConfig(dt=0.01, t_end=20))
    assert np.abs(traj.monitors["phase_sum"]).max() < 1e-12


def _fake(speeds, dt=0.5):
    speeds = np.asarray(speeds, dtype=float)
    return Trajectory(dt * np.arange(speeds.size), np.zeros((speeds.size, 1)), {"max_rhs_norm": speeds})


def test_detect_convergence_window():
    rep = detect_convergence(_fake([1, 1, 1e-9, 1e-9, 1e-9, 1e-9]), tol=1e-8, window=1.0)
    assert rep.converged and rep.t_converged == pytest.approx(2.0)
    rep = detect_convergence(_fake([1, 1, 1, 1, 1e-9, 1e-9]), tol=1e-8, window=1.0)
    assert not rep.converged and rep.t_converged is None
    rep = detect_convergence(_fake([1, 1, 1, 1, 1, 1]), tol=1e-8, window=1.0)
    assert not rep.converged
