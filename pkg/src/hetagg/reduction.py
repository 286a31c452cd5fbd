"""Pairing of an aggregation model with its Kuramoto companion.

A primary run and a Kuramoto run share the scalar frequencies ``a``.  The
auxiliary (gauge) states strip the companion phase from every agent,

    z_j = w_j e^{-i theta_j},   V_j = e^{-i theta_j} U_j,

and the diameter functionals below quantify how far each ensemble is from
consensus.  All diameter helpers accept arbitrary leading (time) axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complexify import effective_frequencies, real_to_complex_state
from .integrate import IntegratorConfig, Trajectory, integrate, manifold_tools, run
from .models import REDUCED_OF, ConfigError, Coupling, ModelKind, rhs_primary, rhs_reduced
from .statespace import DimensionError


def coupling_map(kind, c: Coupling) -> float:
    """Coupling of the Kuramoto companion of ``kind``."""
    kind = ModelKind(kind)
    if kind in (ModelKind.REAL_SPHERE, ModelKind.COMPLEX_SPHERE, ModelKind.LOHE_MATRIX):
        return float(c.kappa)
    if kind is ModelKind.SCHRODINGER_LOHE:
        return 2.0 * c.kappa
    if kind is ModelKind.LOHE_HERMITIAN_SPHERE:
        return 2.0 * (c.kappa + c.kappa1)
    raise ConfigError(f"{kind.value} has no Kuramoto companion")


# -- diameter functionals ---------------------------------------------------

def _gram(z):
    return z @ np.conj(np.swapaxes(z, -1, -2))


def phase_diameter(theta):
    theta = np.asarray(theta)
    return theta.max(axis=-1) - theta.min(axis=-1)


def diameter_R(z):
    """``max |1 - Re<z_i, z_j>|``."""
    return np.abs(1.0 - _gram(z).real).max(axis=(-2, -1))


def diameter_H(z):
    """``max |1 - <z_i, z_j>|``."""
    return np.abs(1.0 - _gram(z)).max(axis=(-2, -1))


def diameter_W(w):
    """``max |w_i - w_j|``."""
    diff = w[..., :, None, :] - w[..., None, :, :]
    return np.sqrt((np.abs(diff) ** 2).sum(axis=-1)).max(axis=(-2, -1))


def diameter_V(v):
    """``max ||I - V_i V_j^+||_F``."""
    v = np.asarray(v)
    vd = np.conj(np.swapaxes(v, -1, -2))
    blocks = v[..., :, None, :, :] @ vd[..., None, :, :, :]
    dev = blocks - np.eye(v.shape[-1])
    return np.sqrt((np.abs(dev) ** 2).sum(axis=(-2, -1))).max(axis=(-2, -1))


def block_diameter(x):
    """``max (|y_i - y_j| + |z_i - z_j|)`` for real states ``x = (y, z)``."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1] // 2
    y, z = x[..., :d], x[..., d:]
    return (diameter_pairs(y) + diameter_pairs(z)).max(axis=(-2, -1))


def diameter_pairs(x):
    diff = x[..., :, None, :] - x[..., None, :, :]
    return np.sqrt((np.abs(diff) ** 2).sum(axis=-1))


def primary_diameter(kind, w):
    """Diameter of the un-gauged (complexified, for real_sphere) states."""
    kind = ModelKind(kind)
    if kind in (ModelKind.REAL_SPHERE, ModelKind.COMPLEX_SPHERE):
        return diameter_W(w)
    if kind in (ModelKind.SCHRODINGER_LOHE, ModelKind.LOHE_HERMITIAN_SPHERE):
        return diameter_H(w)
    return diameter_V(w)


def aux_diameter(kind, aux):
    kind = ModelKind(kind)
    if kind in (ModelKind.REAL_SPHERE, ModelKind.COMPLEX_SPHERE):
        return diameter_R(aux)
    if kind in (ModelKind.SCHRODINGER_LOHE, ModelKind.LOHE_HERMITIAN_SPHERE):
        return diameter_H(aux)
    return diameter_V(aux)


@dataclass
class DiameterRecord:
    """Diameters of one snapshot (or, with array fields, of a whole series).

    Fields not defined for a model flavor are ``None``.
    """

    D_theta: object
    D_primary: object
    D_R: object = None
    D_H: object = None
    D_V: object = None
    D_block: object = None

    def aux(self, kind):
        kind = ModelKind(kind)
        if kind in (ModelKind.REAL_SPHERE, ModelKind.COMPLEX_SPHERE):
            return self.D_R
        if kind is ModelKind.LOHE_MATRIX:
            return self.D_V
        return self.D_H


def diameters(kind, primary, theta, aux=None, real_primary=None) -> DiameterRecord:
    """Diameter functionals of a snapshot or of stacked snapshots.

    ``primary`` holds complex states (complexified for real_sphere);
    ``aux`` defaults to the plain gauge transform of ``primary``.
    """
    kind = ModelKind(kind)
    if aux is None:
        aux = gauge_transform(kind, primary, theta)
    rec = DiameterRecord(D_theta=phase_diameter(theta), D_primary=primary_diameter(kind, primary))
    if kind is ModelKind.LOHE_MATRIX:
        rec.D_V = diameter_V(aux)
    else:
        rec.D_R = diameter_R(aux)
        rec.D_H = diameter_H(aux)
    if real_primary is not None:
        rec.D_block = block_diameter(real_primary)
    return rec


def gauge_transform(kind, states, theta, inverse=False):
    """``states * exp(-i theta)`` agent by agent (``+i`` when ``inverse``)."""
    sign = 1.0 if inverse else -1.0
    phase = np.exp(sign * 1j * np.asarray(theta))
    if ModelKind(kind) is ModelKind.LOHE_MATRIX:
        return phase[..., None, None] * states
    return phase[..., None] * states


class _CoRotation:
    """``exp(-Xi t)`` for a common skew-Hermitian drift ``Xi`` (identity when Xi = 0)."""

    def __init__(self, xi):
        self.xi = None if xi is None or np.abs(xi).max() < 1e-14 else np.asarray(xi)
        if self.xi is not None:
            lam, q = np.linalg.eigh(1j * self.xi)  # Xi = -i Q diag(lam) Q^+
            self._lam, self._q = lam, q

    def apply(self, t, w, inverse=False):
        """Apply ``exp(-Xi t)`` (or its inverse) to ``w`` of shape ``(T, N, d)``."""
        if self.xi is None:
            return w
        sign = -1.0 if inverse else 1.0
        t = np.atleast_1d(t)
        # Xi = -i Q diag(lam) Q^+  =>  exp(-Xi t) = Q diag(exp(i lam t)) Q^+
        ph =np.exp(sign * 1j * self._lam[None, :] * t[:, None])
        qd = np.conj(self._q).T
        coeff = np.einsum("ab,tnb->tna", qd, w)
        return np.einsum("ab,tnb->tna", self._q, ph[:, None, :] * coeff)


@dataclass
class PairedTrajectory:
    kind: ModelKind
    a: np.ndarray
    coupling: Coupling
    kappa_eff: float
    primary: Trajectory
    kuramoto: Trajectory
    complex_states: np.ndarray
    auxiliary: np.ndarray
    diameters: DiameterRecord
    direct_auxiliary: Trajectory | None = None
    xi_common: np.ndarray | None = None

    @property
    def times(self):
        return self.primary.times

    @property
    def theta(self):
        return self.kuramoto.states

    def gauge_error(self) -> np.ndarray:
        """Per-time ``max_j |primary_j - (aux_j e^{i theta_j})|`` using the directly integrated aux."""
        if self.direct_auxiliary is None:
            raise ValueError("run paired_run(..., integrate_auxiliary=True) first")
        aux, theta = self.direct_auxiliary.states
        rebuilt = gauge_transform(self.kind, aux, theta, inverse=True)
        if self.kind is not ModelKind.LOHE_MATRIX:
            rebuilt = _CoRotation(self.xi_common).apply(self.times, rebuilt, inverse=True)
        diff = self.complex_states - rebuilt
        axes = (-2, -1) if self.kind is ModelKind.LOHE_MATRIX else (-1,)
        return np.sqrt((np.abs(diff) ** 2).sum(axis=axes)).max(axis=-1)


def _zero_sum(vec, what):
    vec = np.asarray(vec, dtype=float)
    if abs(vec.sum()) > 1e-12 * max(1.0, np.abs(vec).sum()):
        raise ConfigError(f"{what} must sum to zero (sum = {vec.sum():.3e})")
    return vec


def paired_run(kind, primary_initial, theta_initial=None, a=None, c: Coupling = None,
               cfg: IntegratorConfig = None, omegas=None, integrate_auxiliary=False) -> PairedTrajectory:
    """Integrate a primary model and its Kuramoto companion on the same grid.

    For ``real_sphere`` the scalar frequencies and the common drift are read
    off the block-structured ``omegas``; the auxiliary states are then taken in
    the frame co-rotating with the common drift.
    """
    kind = ModelKind(kind)
    if kind not in REDUCED_OF:
        raise ConfigError(f"{kind.value} cannot be paired")
    if c is None:
        raise ConfigError("a Coupling is required")
    cfg = cfg or IntegratorConfig()
    x0 = np.array(primary_initial)
    n = x0.shape[0]
    xi_common = None
    if kind is ModelKind.REAL_SPHERE:
        if omegas is None:
            raise ConfigError("real_sphere needs frequency matrices")
        if x0.shape[1] % 2:
            raise DimensionError("odd real dimension; augment_odd the system first")
        a_eff, xi_common = effective_frequencies(omegas)
        if a is not None and np.abs(np.asarray(a) - a_eff).max() > 1e-10:
            raise ConfigError("given frequencies disagree with the frequency matrices")
        a = a_eff
    a = _zero_sum(a if a is not None else np.zeros(n), "frequencies")
    if a.size != n:
        raise DimensionError("frequency count does not match the ensemble")
    theta0 = np.zeros(n) if theta_initial is None else _zero_sum(theta_initial, "initial phases")

    kappa_eff = coupling_map(kind, c)
    primary = run(kind, x0, a, c, cfg, omegas=omegas)
    kur = run(ModelKind.KURAMOTO, theta0, a, Coupling(kappa_eff), cfg)
    theta = kur.states

    if kind is ModelKind.REAL_SPHERE:
        w = real_to_complex_state(primary.states)
    else:
        w = primary.states
    rot = _CoRotation(xi_common)
    aux = gauge_transform(kind, w, theta)
    if kind is not ModelKind.LOHE_MATRIX:
        aux = rot.apply(primary.times, aux)

    direct = None
    if integrate_auxiliary:
        red = REDUCED_OF[kind]
        w0 = real_to_complex_state(x0) if kind is ModelKind.REAL_SPHERE else x0
        aux0 = gauge_transform(kind, w0, theta0)
        project, drift = manifold_tools("unitary" if kind is ModelKind.LOHE_MATRIX else "complex")
        kc = Coupling(kappa_eff)

        def rhs(state):
            s, th = state
            return rhs_reduced(red, s, th, c), rhs_primary(ModelKind.KURAMOTO, th, a, kc)

        direct = integrate(rhs, (aux0, theta0.copy()), cfg,
                           project=lambda st: (project(st[0]), st[1]),
                           drift=lambda st: drift(st[0]))

    real_states = primary.states if kind is ModelKind.REAL_SPHERE else None
    diam = diameters(kind, w, theta, aux=aux, real_primary=real_states)
    return PairedTrajectory(kind=kind, a=a, coupling=c, kappa_eff=kappa_eff, primary=primary,
                            kuramoto=kur, complex_states=w, auxiliary=aux, diameters=diam,
                            direct_auxiliary=direct, xi_common=xi_common)


def initial_diameters(kind, primary0, theta0=None, omegas=None) -> dict:
    """Initial-data quantities entering the theorem hypotheses."""
    kind = ModelKind(kind)
    x0 = np.asarray(primary0)
    n = x0.shape[0]
    theta0 = np.zeros(n) if theta0 is None else np.asarray(theta0, dtype=float)
    out = {"D_theta": float(phase_diameter(theta0)),
           "R0": float(np.abs(np.exp(1j * theta0).mean()))}
    if kind is ModelKind.REAL_SPHERE:
        out["D_block"] = float(block_diameter(x0))
        w0 = real_to_complex_state(x0)
    else:
        w0 = x0
    aux0 = gauge_transform(kind, w0, theta0)
    if kind is ModelKind.LOHE_MATRIX:
        out["D_V"] = float(diameter_V(aux0))
        out["D_U"] = float(diameter_V(w0))
    else:
        out["D_R"] = float(diameter_R(aux0))
        out["D_H"] = float(diameter_H(aux0))
        out["D_W"] = float(diameter_W(w0))
        out["D_Psi"] = out["D_Z"] = float(diameter_H(w0))
    return out


def inequality_bound(kind, c: Coupling, d_theta, D):
    """Right-hand side of the diameter differential inequality for ``kind``."""
    kind = ModelKind(kind)
    s = np.sin(0.5 * np.asarray(d_theta))
    k = c.kappa
    if kind in (ModelKind.REAL_SPHERE, ModelKind.COMPLEX_SPHERE):
        return -k * (1 - 4 * s) * D + 2 * k * (np.abs(s) + 0.5) * D ** 2
    if kind is ModelKind.SCHRODINGER_LOHE:
        return -2 * k * (1 - 6 * s) * D + 2 * k * D ** 2
    if kind is ModelKind.LOHE_HERMITIAN_SPHERE:
        k0, k1 = c.kappa, c.kappa1
        return -2 * (k0 - 2 * k1 - (6 * k0 + 4 * k1) * s) * D + 2 * (k0 + 2 * k1) * D ** 2
    return -k * (1 - 2 * s) * D + k * D ** 2


def check_diameter_inequality(paired: PairedTrajectory, slack: float = 1e-6) -> dict:
    """Compare central differences of the auxiliary diameter with its bound.

    Interior grid points only.  Returns the per-point verdicts, the fraction
    satisfied and the largest excess over the bound.
    """
    t = paired.times
    D = np.asarray(paired.diameters.aux(paired.kind))
    h = t[1] - t[0]
    deriv = (D[2:] - D[:-2]) / (2 * h)
    bound = inequality_bound(paired.kind, paired.coupling, paired.diameters.D_theta[1:-1], D[1:-1])
    excess = deriv - bound
    holds = excess <= slack
    return {"holds": holds, "fraction": float(holds.mean()), "worst_excess": float(excess.max())}


def kuramoto_trapping(theta_traj, a, kappa: float) -> dict:
    """Largest excursion of the phase diameter above ``D(a) / kappa``."""
    da = float(np.ptp(a))
    dth = phase_diameter(np.asarray(theta_traj))
    return {"bound": da / kappa, "max_diameter": float(dth.max()),
            "max_excess": float((dth - da / kappa).max())}
