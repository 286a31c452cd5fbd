"""Hypothesis checks, threshold roots, decay-rate fits and limit-state checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .complexify import real_to_complex_state
from .integrate import ConvergenceReport
from .models import Coupling, ModelKind
from .statespace import geodesic_matrix


class RootError(ValueError):
    pass


class FitError(ValueError):
    pass


class CalibrationError(ValueError):
    pass


class StateError(ValueError):
    pass


THEOREMS = ("P2.1ii", "P3.1", "T3.1", "T3.2", "P4.1", "T4.SL", "P4.2", "T4.LHS", "P5.1", "T5.1")


# -- threshold roots ----------------------------------------------------------

def _beta_problem(equation, rho=None, d=None):
    if equation == "sphere":
        return (lambda s: math.sqrt(max(2 * (1 - 2 * s) / (1 + s), 0.0)) - 2 * math.sin(s / 2)), 0.5
    if equation == "sl":
        return (lambda s: 1 - 3 * s - 2 * math.sin(s / 2)), 1 / 3
    if equation == "lhs":
        if rho is None or not rho > 2:
            raise RootError("the lhs threshold needs rho = kappa0 / kappa1 > 2")
        if math.isinf(rho):
            return _beta_problem("sl")
        return (lambda s: (rho - 2 - (3 * rho + 2) * s) / (rho + 2) - 2 * math.sin(s / 2)), (rho - 2) / (3 * rho + 2)
    if equation == "matrix":
        if d is None or d < 1:
            raise RootError("the matrix threshold needs d >= 1")
        return (lambda s: 1 - s - 2 * d * math.sin(s / 2)), 1.0
    raise RootError(f"unknown threshold equation {equation!r}")


def beta_residual(equation, s, rho=None, d=None) -> float:
    """Left minus right side of a threshold equation at ``s``."""
    f, _ = _beta_problem(equation, rho, d)
    return f(s)


def solve_beta(equation, rho=None, d=None, xtol=1e-11) -> float:
    """Unique positive root of the threshold equation by bisection.

    ``equation`` is ``"sphere"``, ``"sl"``, ``"lhs"`` (with ``rho``) or
    ``"matrix"`` (with ``d``).  The bracket is ``[0, s_max]`` where the
    left-hand side stops being positive.
    """
    f, s_max = _beta_problem(equation, rho, d)
    if not (f(0.0) > 0 > f(s_max)):
        raise RootError("no sign change on the bracket")
    return optimize.bisect(f, 0.0, s_max, xtol=xtol)


def order_parameter(theta) -> float:
    """``sqrt(N^-2 sum_{i,j} cos(theta_i - theta_j))``."""
    theta = np.asarray(getattr(theta, "phases", theta), dtype=float)
    n = theta.size
    s = np.cos(theta[:, None] - theta[None, :]).sum() / n ** 2
    return math.sqrt(max(s, 0.0))


# -- certificates ------------------------------------------------------------

@dataclass(frozen=True)
class Condition:
    name: str
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.margin > 0


@dataclass
class Certificate:
    theorem_id: str
    conditions: list
    delta_star: float | None = None
    mode: str = "heterogeneous"
    notes: list = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return all(c.holds for c in self.conditions)

    @property
    def min_margin(self) -> float:
        return min(c.margin for c in self.conditions)

    def to_dict(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "verdict": self.verdict,
            "mode": self.mode,
            "delta_star": self.delta_star,
            "conditions": [
                {"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "margin": c.margin} for c in self.conditions
            ],
            "notes": list(self.notes),
        }


def _spec(theorem_id, da, c: Coupling, D, d):
    """Fixed conditions, the heterogeneity ratio with its cap, and the
    delta-dependent condition ``(name, measured, bound(delta))``."""
    k, k1 = c.kappa, c.kappa1
    sin = np.sin
    if theorem_id == "P3.1":
        fixed = [Condition("kappa > 2 D(a)", 2 * da, k)]
        return fixed, ("D(a)/kappa", da / k, 0.5), ("D(R0) < (1-2δ)/(1+δ)", D["D_R"], lambda s: (1 - 2 * s) / (1 + s))
    if theorem_id in ("T3.1", "T3.2"):
        key, label = ("D_W", "D(W0)") if theorem_id == "T3.1" else ("D_block", "D_block(x0)")
        fixed = [Condition("kappa > 2 D(a)", 2 * da, k)]
        bound = lambda s: np.sqrt(2 * (1 - 2 * s) / (1 + s)) - 2 * sin(s / 2)
        return fixed, ("D(a)/kappa", da / k, solve_beta("sphere")), (f"{label} < sqrt(2(1-2δ)/(1+δ)) - 2 sin(δ/2)", D[key], bound)
    if theorem_id == "P4.1":
        fixed = [Condition("kappa > 3/2 D(a)", 1.5 * da, k)]
        return fixed, ("D(a)/(2 kappa)", da / (2 * k), 1 / 3), ("D(H0) < 1-3δ", D["D_H"], lambda s: 1 - 3 * s)
    if theorem_id == "T4.SL":
        fixed = [Condition("kappa > 3/2 D(a)", 1.5 * da, k)]
        return fixed, ("D(a)/kappa", da / k, solve_beta("sl")), ("D(Psi0) < 1-3δ-2 sin(δ/2)", D["D_Psi"], lambda s: 1 - 3 * s - 2 * sin(s / 2))
    if theorem_id in ("P4.2", "T4.LHS"):
        fixed = [Condition("kappa0 > 2 kappa1", 2 * k1, k)]
        if k > 2 * k1:
            fixed.append(Condition("2(k0-2k1)(k0+k1)/(3k0+2k1) > D(a)", da, 2 * (k - 2 * k1) * (k + k1) / (3 * k + 2 * k1)))
        ratio = da / (2 * (k + k1))
        lin = lambda s: (k - 2 * k1 - (3 * k + 2 * k1) * s) / (k + 2 * k1)
        if theorem_id == "P4.2":
            cap = (2 * k - 4 * k1) / (6 * k + 4 * k1)
            return fixed, ("D(a)/(2(k0+k1))", ratio, cap), ("D(H0) < (k0-2k1-(3k0+2k1)δ)/(k0+2k1)", D["D_H"], lin)
        rho = math.inf if k1 == 0 else k / k1
        cap = solve_beta("lhs", rho=rho) if rho > 2 else 0.0
        return fixed, ("D(a)/(2(k0+k1))", ratio, cap), ("D(Z0) < (k0-2k1-(3k0+2k1)δ)/(k0+2k1) - 2 sin(δ/2)", D["D_Z"], lambda s: lin(s) - 2 * sin(s / 2))
    if theorem_id == "P5.1":
        fixed = [Condition("kappa > D(a)", da, k)]
        return fixed, ("D(a)/kappa", da / k, 1.0), ("D(V0) < 1-δ", D["D_V"], lambda s: 1 - s)
    if theorem_id == "T5.1":
        if d is None:
            raise ValueError("T5.1 needs the matrix size d")
        fixed = [Condition("kappa > D(a)", da, k)]
        return fixed, ("D(a)/kappa", da / k, solve_beta("matrix", d=d)), (f"D(U0) < 1-δ-{2 * d} sin(δ/2)", D["D_U"], lambda s: 1 - s - 2 * d * sin(s / 2))
    raise ValueError(f"unknown theorem {theorem_id!r}")


def check_hypotheses(theorem_id, a, coupling: Coupling, initial: dict, d: int | None = None,
                     grid: int = 10_000) -> Certificate:
    """Evaluate the hypotheses of a convergence result on given initial data.

    ``initial`` carries the initial diameters (see
    :func:`hetagg.reduction.initial_diameters`).  The existential choice of
    ``δ`` is resolved on a ``grid``-point scan of its admissible open interval;
    ``delta_star`` maximises the smallest margin.
    """
    a = np.asarray(getattr(a, "values", a), dtype=float)
    da = float(a.max() - a.min())
    if theorem_id == "P2.1ii":
        r0 = initial["R0"]
        conds = [Condition("R0 > 0", 0.0, r0)]
        if r0 > 0:
            conds.append(Condition("kappa > 1.6 D(a)/R0", 1.6 * da / r0, coupling.kappa))
        mode = "homogeneous" if da == 0 else "heterogeneous"
        return Certificate(theorem_id, conds, mode=mode)

    if not coupling.kappa > 0:
        return Certificate(theorem_id, [Condition("kappa > 0", 0.0, coupling.kappa)])
    fixed, (rname, ratio, cap), (dname, measured, bound) = _spec(theorem_id, da, coupling, initial, d)
    notes = []
    if theorem_id in ("P4.2", "T4.LHS", "P5.1"):
        notes.append("D(Omega) in the printed condition evaluated as D(a)")
    if theorem_id == "T4.SL":
        notes.append("ratio is D(a)/kappa here, D(a)/(2 kappa) in P4.1")

    if da == 0:
        # heterogeneous conditions are vacuous; use the delta -> 0 limit
        conds = fixed + [Condition(dname.replace("δ", "0"), measured, float(bound(0.0)))]
        return Certificate(theorem_id, conds, mode="homogeneous", notes=notes + ["D(a) = 0"])

    conds = fixed + [Condition(f"{rname} < {cap:.6g}", ratio, cap)]
    lo, hi = initial["D_theta"], min(ratio, cap)
    conds.append(Condition("D(Theta0) < D(a)/kappa_eff (delta interval nonempty)", lo, hi))
    if hi <= lo:
        return Certificate(theorem_id, conds, notes=notes)
    deltas = np.linspace(lo, hi, grid + 2)[1:-1]
    margins = np.minimum.reduce([deltas - lo, ratio - deltas, bound(deltas) - measured])
    best = int(np.argmax(margins))
    ds = float(deltas[best])
    conds += [
        Condition("D(Theta0) < δ", lo, ds),
        Condition(f"δ < {rname}", ds, ratio),
        Condition(dname, measured, float(bound(ds))),
    ]
    return Certificate(theorem_id, conds, delta_star=ds, notes=notes)


# -- decay rates ---------------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    rate: float
    r_squared: float
    window: tuple
    samples: int


def fit_decay_rate(t, D, band=(1e-10, 1e-2), min_samples: int = 10) -> RateFit:
    """Least-squares slope of ``log D`` versus ``t`` inside ``band``."""
    t = np.asarray(t, dtype=float)
    D = np.asarray(D, dtype=float)
    mask = (D >= band[0]) & (D <= band[1])
    if mask.sum() < min_samples:
        raise FitError(f"only {int(mask.sum())} samples inside the fit band {band}")
    res = stats.linregress(t[mask], np.log(D[mask]))
    return RateFit(rate=float(-res.slope), r_squared=float(res.rvalue ** 2),
                   window=(float(t[mask].min()), float(t[mask].max())), samples=int(mask.sum()))


# -- limit states -------------------------------------------------------------

@dataclass
class LimitReport:
    final_states: np.ndarray
    theta_inf: np.ndarray
    residuals: dict
    geodesics: np.ndarray | None = None
    order: np.ndarray | None = None


def kuramoto_residual(theta, a, kappa) -> float:
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    s = np.sin(theta[None, :] - theta[:, None]).sum(axis=1)
    return float(np.abs(np.asarray(a) + kappa / n * s).max())


def chain_residuals(geo: np.ndarray, order) -> np.ndarray:
    """``|G[o_i, o_k] - sum_{m=i}^{k-1} G[o_m, o_{m+1}]|`` for all ``i < k`` along ``order``."""
    g = geo[np.ix_(order, order)]
    steps = np.concatenate([[0.0], np.cumsum(np.diag(g, 1))])
    n = len(order)
    res = np.zeros((n, n))
    for i in range(n):
        for k in range(i + 1, n):
            res[i, k] = abs(g[i, k] - (steps[k] - steps[i]))
    return res


def verify_limits(kind, final_states, theta_inf, a, kappa_eff: float,
                  convergence: ConvergenceReport | None = None) -> LimitReport:
    """Structure checks on a (numerically) converged final state.

    Residual keys (all non-negative): ``gram_modulus``, ``geodesic_chain``,
    ``geodesic_locked`` for vector models; ``block_identity`` for real-sphere
    runs; ``offdiag``, ``diag_spread``, ``scalar_modulus``, ``phase_match``
    for Lohe-matrix runs; ``kuramoto_locked`` whenever ``theta_inf`` is given
    (the only check for ``kind="kuramoto"``, where ``final_states`` is unused).
    """
    if convergence is not None and not convergence.converged:
        raise StateError("limit checks need a converged run")
    kind = ModelKind(kind)
    a = np.asarray(a, dtype=float)
    final = None if final_states is None else np.asarray(final_states)
    res = {}
    geo = order = None
    if theta_inf is not None:
        res["kuramoto_locked"] = kuramoto_residual(theta_inf, a, kappa_eff)
    if kind is ModelKind.KURAMOTO:
        pass
    elif kind is ModelKind.LOHE_MATRIX:
        d = final.shape[-1]
        X = final[:, None] @ np.conj(np.swapaxes(final, -1, -2))[None, :]
        diag = np.diagonal(X, axis1=-2, axis2=-1)
        off = X - diag[..., None] * np.eye(d)
        res["offdiag"] = float(np.sqrt((np.abs(off) ** 2).sum(axis=(-2, -1))).max())
        mean = diag.mean(axis=-1)
        res["diag_spread"] = float(np.abs(diag - mean[..., None]).max())
        res["scalar_modulus"] = float(np.abs(np.abs(mean) - 1.0).max())
        if theta_inf is not None:
            th = np.asarray(theta_inf)
            target = np.exp(1j * (th[:, None] - th[None, :]))[..., None, None] * np.eye(d)
            res["phase_match"] = float(np.abs(X - target).max())
    else:
        w = real_to_complex_state(final) if kind is ModelKind.REAL_SPHERE else final
        h = w @ np.conj(w).T
        res["gram_modulus"] = float(np.abs(np.abs(h) - 1.0).max())
        geo = geodesic_matrix(w)
        order = np.argsort(a, kind="stable")
        res["geodesic_chain"] = float(chain_residuals(geo, order).max())
        gaps = np.empty_like(a)
        gaps[order] = geo[order[0], order]
        res["geodesic_locked"] = kuramoto_residual(gaps, a, kappa_eff)
        if kind is ModelKind.REAL_SPHERE:
            dd = final.shape[-1] // 2
            y, z = final[:, :dd], final[:, dd:]
            ident = (final @ final.T) ** 2 + (z @ y.T - y @ z.T) ** 2
            res["block_identity"] = float(np.abs(ident - 1.0).max())
    return LimitReport(final_states=final, theta_inf=None if theta_inf is None else np.asarray(theta_inf),
                       residuals=res, geodesics=geo, order=order)


def calibrate_kappa(gaps, a) -> float:
    """Coupling that best makes ``theta = gaps`` a Kuramoto equilibrium.

    Closed-form scalar least squares: ``kappa = -N sum a_j s_j / sum s_j^2``
    with ``s_j = sum_k sin(gap_k - gap_j)``.
    """
    gaps = np.asarray(gaps, dtype=float)
    a = np.asarray(a, dtype=float)
    if gaps.size != a.size or gaps.size < 2:
        raise CalibrationError("need matching gaps and frequencies for N >= 2 agents")
    s = np.sin(gaps[None, :] - gaps[:, None]).sum(axis=1)
    ss = float(s @ s)
    if ss < 1e-300:
        raise CalibrationError("gaps carry no information on kappa (all coupling sums vanish)")
    return float(-gaps.size * (a @ s) / ss)
