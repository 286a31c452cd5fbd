import numpy as np
import pytest

from hetagg.integrate import IntegratorConfig
from hetagg.models import ConfigError, Coupling, ModelKind
from hetagg.reduction import (
    block_diameter, check_diameter_inequality, diameter_H, diameter_R, diameter_V, diameter_W,
    gauge_transform, inequality_bound, initial_diameters, kuramoto_trapping, paired_run, phase_diameter,
)
from hetagg.scenario import block_frequencies, draw_certified, sample_initial


def test_diameters_small_examples():
    z = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex)
    assert diameter_R(z) == pytest.approx(1.0)
    assert diameter_H(z) == pytest.approx(1.0)
    assert diameter_W(z) == pytest.approx(np.sqrt(2))
    assert phase_diameter(np.array([0.3, -0.1, 0.5])) == pytest.approx(0.6)
    v = np.stack([np.eye(2), -np.eye(2)]).astype(complex)
    assert diameter_V(v) == pytest.approx(2 * np.sqrt(2))
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert block_diameter(x) == pytest.approx(2.0)


def test_diameters_accept_time_axis(rng):
    z = rng.standard_normal((7, 3, 2)) + 1j * rng.standard_normal((7, 3, 2))
    series = diameter_H(z)
    assert series.shape == (7,)
    assert series[4] == pytest.approx(diameter_H(z[4]))


def test_gauge_transform_round_trip(rng):
    w = sample_initial(2, ModelKind.COMPLEX_SPHERE, 2, 4)
    th = rng.standard_normal(4)
    assert np.allclose(gauge_transform(ModelKind.COMPLEX_SPHERE, gauge_transform(ModelKind.COMPLEX_SPHERE, w, th),
                                       th, inverse=True), w)
    u = sample_initial(2, ModelKind.LOHE_MATRIX, 2, 4)
    assert np.allclose(gauge_transform(ModelKind.LOHE_MATRIX, u, th)[1], np.exp(-1j * th[1]) * u[1])


def test_initial_diameters_keys():
    rs = initial_diameters(ModelKind.REAL_SPHERE, sample_initial(0, ModelKind.REAL_SPHERE, 2, 3))
    assert {"D_theta", "R0", "D_block", "D_W"} <= set(rs)
    lm = initial_diameters(ModelKind.LOHE_MATRIX, sample_initial(0, ModelKind.LOHE_MATRIX, 2, 3))
    assert lm["D_U"] == lm["D_V"]
    assert lm["R0"] == 1.0


def test_paired_run_rejects_bad_input():
    w = sample_initial(0, ModelKind.COMPLEX_SPHERE, 2, 3)
    with pytest.raises(ConfigError):
        paired_run(ModelKind.COMPLEX_SPHERE, w, a=np.array([1.0, 0.0, 0.0]), c=Coupling(1.0))
    with pytest.raises(ConfigError):
        paired_run(ModelKind.KURAMOTO, np.zeros(3), c=Coupling(1.0))
    with pytest.raises(ConfigError):
        paired_run(ModelKind.REAL_SPHERE, sample_initial(0, ModelKind.REAL_SPHERE, 2, 3), c=Coupling(1.0))


def test_real_sphere_with_common_drift_pairs_exactly(rng):
    # a non-zero common block drift is removed by the co-rotating frame
    A = np.array([[0.0, 0.7], [-0.7, 0.0]])
    B = np.array([[0.3, 0.1], [0.1, -0.2]])
    a = np.array([-0.1, 0.02, 0.08])
    om = block_frequencies(a, 2, {"A": A, "B": B})
    x0 = sample_initial(3, ModelKind.REAL_SPHERE, 2, 3, spread=0.05)
    p = paired_run(ModelKind.REAL_SPHERE, x0, c=Coupling(1.0), cfg=IntegratorConfig(dt=0.01, t_end=5.0),
                   omegas=om, integrate_auxiliary=True)
    assert np.allclose(p.a, a)
    assert p.gauge_error().max() < 1e-9


def test_homogeneous_sync_collapses_diameters():
    w = sample_initial(5, ModelKind.SCHRODINGER_LOHE, 2, 4, spread=0.2)
    p = paired_run(ModelKind.SCHRODINGER_LOHE, w, a=np.zeros(4), c=Coupling(1.0),
                   cfg=IntegratorConfig(dt=0.02, t_end=30.0))
    assert p.diameters.D_H[-1] < 1e-10
    assert np.all(p.diameters.D_theta == 0)


def test_inequality_bound_signs():
    c = Coupling(1.0, 0.1)
    for kind in (ModelKind.COMPLEX_SPHERE, ModelKind.SCHRODINGER_LOHE, ModelKind.LOHE_HERMITIAN_SPHERE,
                 ModelKind.LOHE_MATRIX):
        assert inequality_bound(kind, c, 0.0, 0.01) < 0
        assert inequality_bound(kind, c, 0.0, 0.0) == 0


@pytest.mark.parametrize("theorem", ["T3.1", "T4.SL", "T4.LHS", "T5.1"])
def test_diameter_inequality_short_runs(theorem):
    setup, _ = draw_certified(theorem, 3)
    p = paired_run(setup.kind, setup.initial, setup.theta0, a=setup.a, c=setup.coupling,
                   cfg=IntegratorConfig(dt=0.01, t_end=8.0))
    res = check_diameter_inequality(p)
    assert res["fraction"] >= 0.99


def test_trapping_report():
    th = np.array([[0.0, 0.1], [0.0, 0.3]])
    rep = kuramoto_trapping(th, np.array([-0.1, 0.1]), 1.0)
    assert rep["bound"] == pytest.approx(0.2)
    assert rep["max_excess"] == pytest.approx(0.1)
