import math

import numpy as np
import pytest

from hetagg.certify import (
    CalibrationError, FitError, RootError, StateError, beta_residual, calibrate_kappa, check_hypotheses,
    chain_residuals, fit_decay_rate, order_parameter, solve_beta, verify_limits,
)
from hetagg.integrate import ConvergenceReport, IntegratorConfig, detect_convergence, run
from hetagg.models import Coupling, ModelKind
from hetagg.reduction import initial_diameters, paired_run
from hetagg.scenario import draw_certified, sample_initial

FIG_A = np.array([-0.2831, -0.0196, 0.0708, 0.2318])
FIG_A = FIG_A - FIG_A.mean()
FIG_GAPS = [0.0, 0.2726, 0.3647, 0.5310]


def _grid_root(f, hi, n=2_000_001):
    s = np.linspace(0.0, hi, n)
    vals = np.array([f(x) for x in s]) if n < 10 else f(s)
    idx = np.nonzero(np.diff(np.sign(vals)))[0]
    assert idx.size == 1
    return s[idx[0]]


ORACLES = {
    "sphere": (lambda s: np.sqrt(np.clip(2 * (1 - 2 * s) / (1 + s), 0, None)) - 2 * np.sin(s / 2), 0.5, {}),
    "sl": (lambda s: 1 - 3 * s - 2 * np.sin(s / 2), 1 / 3, {}),
    "matrix": (lambda s: 1 - s - 4 * np.sin(s / 2), 1.0, {"d": 2}),
}


@pytest.mark.parametrize("eq", sorted(ORACLES))
def test_beta_against_grid_scan(eq):
    f, hi, kw = ORACLES[eq]
    assert solve_beta(eq, **kw) == pytest.approx(_grid_root(f, hi), abs=1e-6)


def test_beta_values():
    assert solve_beta("sphere") == pytest.approx(0.434, abs=5e-3)
    assert solve_beta("sl") == pytest.approx(0.250, abs=5e-3)
    assert solve_beta("matrix", d=2) == pytest.approx(0.3344, abs=1e-4)


@pytest.mark.parametrize("eq,kw", [("sphere", {}), ("sl", {}), ("lhs", {"rho": 4.0}), ("lhs", {"rho": 50.0}),
                                   ("matrix", {"d": 1}), ("matrix", {"d": 3})])
def test_beta_residuals(eq, kw):
    root = solve_beta(eq, **kw)
    assert abs(beta_residual(eq, root, **kw)) < 1e-9
    assert beta_residual(eq, 0.0, **kw) > 0


def test_beta_lhs_limits():
    assert solve_beta("lhs", rho=math.inf) == solve_beta("sl")
    assert solve_beta("lhs", rho=1e8) == pytest.approx(solve_beta("sl"), abs=1e-6)
    with pytest.raises(RootError):
        solve_beta("lhs", rho=2.0)
    with pytest.raises(RootError):
        solve_beta("matrix", d=0)
    with pytest.raises(RootError):
        solve_beta("cubic")


def test_p31_with_figure_frequencies():
    init = {"D_theta": 0.0, "D_R": 0.01}
    cert = check_hypotheses("P3.1", FIG_A, Coupling(2.0), init)
    first = cert.conditions[0]
    assert first.holds and first.lhs == pytest.approx(1.0298, abs=1e-4)
    upper = np.ptp(FIG_A) / 2.0
    assert upper == pytest.approx(0.2575, abs=1e-4)
    assert 0.0 < cert.delta_star < upper
    assert cert.verdict


def test_homogeneous_branch():
    u = sample_initial(1, ModelKind.LOHE_MATRIX, 2, 3, spread=0.01)
    cert = check_hypotheses("T5.1", np.zeros(3), Coupling(1.0), initial_diameters(ModelKind.LOHE_MATRIX, u), d=2)
    assert cert.mode == "homogeneous"
    assert cert.delta_star is None
    assert cert.verdict


def test_p21_threshold_at_synchronised_phases():
    init = {"D_theta": 0.0, "R0": order_parameter(np.zeros(4))}
    cert = check_hypotheses("P2.1ii", FIG_A, Coupling(1.0), init)
    assert cert.conditions[1].lhs == pytest.approx(1.6 * np.ptp(FIG_A))
    assert cert.verdict
    assert not check_hypotheses("P2.1ii", FIG_A, Coupling(0.8), init).verdict


def test_certificate_serialises():
    setup, cert = draw_certified("T4.LHS", 0)
    doc = cert.to_dict()
    assert doc["verdict"] is True
    assert all(c["margin"] > 0 for c in doc["conditions"])
    assert any("D(a)" in n for n in doc["notes"])


@pytest.mark.parametrize("theorem", ["P4.1", "P5.1", "T5.1"])
def test_certificate_monotone_in_kappa(theorem):
    for seed in range(10):
        setup, cert = draw_certified(theorem, seed)
        init = initial_diameters(setup.kind, setup.initial, setup.theta0)
        doubled = Coupling(2 * setup.coupling.kappa, 2 * setup.coupling.kappa1)
        assert check_hypotheses(theorem, setup.a, doubled, init, d=2).verdict


def test_order_parameter():
    assert order_parameter(np.zeros(5)) == pytest.approx(1.0)
    assert order_parameter(np.array([0.0, np.pi])) == pytest.approx(0.0, abs=1e-8)
    assert order_parameter(np.array([0, np.pi / 2, np.pi, 3 * np.pi / 2])) == pytest.approx(0.0, abs=1e-7)
    th = np.random.default_rng(3).uniform(-3, 3, 7)
    assert abs(order_parameter(th) - abs(np.exp(1j * th).mean())) < 1e-12


def test_fit_exact_exponential():
    t = np.linspace(0, 10, 1001)
    fit = fit_decay_rate(t, np.exp(-3 * t))
    assert fit.rate == pytest.approx(3.0, abs=1e-6)
    assert fit.r_squared > 0.999999
    assert fit.window[0] >= 0 and fit.samples >= 10


def test_fit_rejects_short_band():
    t = np.linspace(0, 1, 50)
    with pytest.raises(FitError):
        fit_decay_rate(t, np.full(50, 0.5))


def test_fit_two_oscillators():
    # D' = -kappa sin D: the linearised rate is kappa
    traj = run(ModelKind.KURAMOTO, np.array([-0.05, 0.05]), np.zeros(2), Coupling(1.0),
               IntegratorConfig(dt=0.01, t_end=30.0))
    D = traj.states[:, 1] - traj.states[:, 0]
    fit = fit_decay_rate(traj.times, D)
    assert fit.rate == pytest.approx(1.0, abs=1e-3)
    exact = 2 * np.arctan(np.tan(0.05) * np.exp(-traj.times))
    assert np.abs(D - exact).max() < 1e-9


def test_verify_limits_homogeneous():
    w = np.tile(np.array([0.6, 0.8j]), (3, 1))
    rep = verify_limits(ModelKind.COMPLEX_SPHERE, w, np.zeros(3), np.zeros(3), 1.0)
    assert all(v < 1e-15 for v in rep.residuals.values())
    u = np.stack([np.eye(2)] * 3).astype(complex)
    rep = verify_limits(ModelKind.LOHE_MATRIX, u, np.zeros(3), np.zeros(3), 1.0)
    assert all(v < 1e-15 for v in rep.residuals.values())


def test_verify_limits_on_published_final_states():
    w = np.array([[-0.5002 - 0.4755j, -0.3890 - 0.6102j], [-0.3537 - 0.5926j, -0.2104 - 0.6924j],
                  [-0.2977 - 0.6226j, -0.1458 - 0.7089j], [-0.1906 - 0.6633j, -0.0265 - 0.7232j]])
    w = w / np.linalg.norm(w, axis=1, keepdims=True)
    rep = verify_limits(ModelKind.COMPLEX_SPHERE, w, None, FIG_A, 1.0)
    assert rep.residuals["gram_modulus"] < 1e-3
    assert rep.residuals["geodesic_chain"] < 1e-3
    g = rep.geodesics
    assert g[0, 1] + g[1, 2] == pytest.approx(g[0, 2], abs=1e-3)


def test_verify_limits_requires_convergence():
    bad = ConvergenceReport(False, None, 1.0, 1.0, 1e-8)
    with pytest.raises(StateError):
        verify_limits(ModelKind.COMPLEX_SPHERE, np.eye(2, dtype=complex), None, np.zeros(2), 1.0, bad)


def test_chain_residuals_on_collinear_points():
    ang = np.array([0.0, 0.2, 0.5, 0.9])
    geo = np.abs(ang[:, None] - ang[None, :])
    assert chain_residuals(geo, [0, 1, 2, 3]).max() < 1e-15
    assert chain_residuals(geo, [1, 0, 2, 3]).max() > 0.1


def test_matrix_limit_structure_regression():
    rng = np.random.default_rng(0)
    a = rng.uniform(-0.3, 0.3, 3)
    a -= a.mean()
    u = sample_initial(0, ModelKind.LOHE_MATRIX, 2, 3, spread=0.1)
    p = paired_run(ModelKind.LOHE_MATRIX, u, a=a, c=Coupling(5.0), cfg=IntegratorConfig(dt=0.01, t_end=20.0))
    conv = detect_convergence(p.primary)
    rep = verify_limits(ModelKind.LOHE_MATRIX, p.primary.final, p.kuramoto.final, a, p.kappa_eff, conv)
    assert rep.residuals["offdiag"] < 1e-6
    assert rep.residuals["phase_match"] < 1e-6


def test_calibrate_figure_gaps():
    k = calibrate_kappa(FIG_GAPS, FIG_A)
    assert 0.9 <= k <= 1.1
    assert k > np.ptp(FIG_A) / FIG_GAPS[-1] - 0.1


def test_calibrate_round_trip():
    rng = np.random.default_rng(8)
    a = rng.uniform(-0.5, 0.5, 5)
    a -= a.mean()
    traj = run(ModelKind.KURAMOTO, np.zeros(5), a, Coupling(2.0), IntegratorConfig(dt=0.01, t_end=60.0))
    th = traj.final
    assert calibrate_kappa(th - th[0], a) == pytest.approx(2.0, abs=1e-6)


def test_calibrate_degenerate():
    with pytest.raises(CalibrationError):
        calibrate_kappa(np.zeros(4), np.zeros(4))
    with pytest.raises(CalibrationError):
        calibrate_kappa([0.0], [0.0])


def test_printed_trapping_bound_fails_but_arcsin_bound_holds():
    # two oscillators locked at sin D = D(a)/kappa sit above D(a)/kappa
    a = np.array([-0.25, 0.25])
    traj = run(ModelKind.KURAMOTO, np.zeros(2), a, Coupling(1.0), IntegratorConfig(dt=0.01, t_end=40.0))
    D = np.ptp(traj.states, axis=1)
    assert D.max() > 0.5
    assert D.max() <= math.asin(0.5) + 1e-9


def test_arcsin_trapping_bound_randomised():
    for seed in range(20):
        rng = np.random.default_rng([11, seed])
        n = 5
        kappa = rng.uniform(1.0, 3.0)
        a = rng.uniform(-1, 1, n)
        a -= a.mean()
        a *= rng.uniform(0.05, 0.95) * kappa / np.ptp(a)
        cap = math.asin(np.ptp(a) / kappa)
        th = rng.uniform(-1, 1, n)
        th -= th.mean()
        th *= rng.uniform(0.0, 1.0) * cap / np.ptp(th)
        traj = run(ModelKind.KURAMOTO, th, a, Coupling(kappa), IntegratorConfig(dt=0.01, t_end=30.0))
        assert np.ptp(traj.states, axis=1).max() <= cap + 1e-9


@pytest.mark.parametrize("theorem", ["P2.1ii", "T3.1", "T3.2", "T4.SL", "T4.LHS", "T5.1"])
def test_certified_runs_converge(theorem):
    from conftest import N_SEEDS, certified_run

    for seed in range(N_SEEDS):
        setup, cert, res = certified_run(theorem, seed, with_aux=False)
        assert cert.verdict
        traj = res if setup.kind is ModelKind.KURAMOTO else res.primary
        assert detect_convergence(traj).converged, (theorem, seed)
        assert fit_decay_rate(traj.times, traj.monitors["max_rhs_norm"]).rate > 0
