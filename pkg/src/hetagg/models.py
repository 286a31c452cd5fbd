"""Right-hand sides of the aggregation models and their gauge-reduced forms.

All models are all-to-all with the usual ``1/N`` normalisation (``1/(2N)``
for the Lohe matrix model).  Inner products are conjugate-linear in the
second slot, so ``<z_j, m> = sum_d z_j[d] * conj(m[d])``.

Primary models (state -> tangent):

* ``kuramoto``               theta_j' = a_j + k/N sum sin(theta_k - theta_j)
* ``real_sphere``            x_j' = Omega_j x_j + k/N sum (x_k - <x_j,x_k> x_j)
* ``complex_sphere``         w_j' = i a_j w_j + k/N sum (w_k - Re<w_k,w_j> w_j)
* ``schrodinger_lohe``       psi_j' = i a_j psi_j + k/N sum (psi_k - <psi_j,psi_k> psi_j)
* ``lohe_hermitian_sphere``  z_j' = i a_j z_j + k0/N sum (z_k - <z_j,z_k> z_j)
                                    + k1/N sum (<z_k,z_j> - <z_j,z_k>) z_j
* ``lohe_matrix``            U_j' = i a_j U_j + k/(2N) sum (U_k - U_j U_k^+ U_j)

The reduced systems describe ``z_j = w_j exp(-i theta_j)`` (and its analogues)
where ``theta`` solves the paired Kuramoto model; they contain no free flow.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .statespace import DimensionError


class ConfigError(ValueError):
    """Inconsistent model configuration."""


class ModelKind(str, Enum):
    KURAMOTO = "kuramoto"
    REAL_SPHERE = "real_sphere"
    COMPLEX_SPHERE = "complex_sphere"
    SCHRODINGER_LOHE = "schrodinger_lohe"
    LOHE_HERMITIAN_SPHERE = "lohe_hermitian_sphere"
    LOHE_MATRIX = "lohe_matrix"
    REDUCED_SPHERE_Z = "reduced_sphere_z"
    REDUCED_SL_XI = "reduced_sl_xi"
    REDUCED_LHS_XI = "reduced_lhs_xi"
    REDUCED_LM_V = "reduced_lm_v"

    @property
    def flavor(self) -> str:
        if self is ModelKind.KURAMOTO:
            return "phase"
        if self in (ModelKind.LOHE_MATRIX, ModelKind.REDUCED_LM_V):
            return "unitary"
        if self is ModelKind.REAL_SPHERE:
            return "real"
        return "complex"


PRIMARY_KINDS = (
    ModelKind.KURAMOTO,
    ModelKind.REAL_SPHERE,
    ModelKind.COMPLEX_SPHERE,
    ModelKind.SCHRODINGER_LOHE,
    ModelKind.LOHE_HERMITIAN_SPHERE,
    ModelKind.LOHE_MATRIX,
)

REDUCED_OF = {
    ModelKind.REAL_SPHERE: ModelKind.REDUCED_SPHERE_Z,
    ModelKind.COMPLEX_SPHERE: ModelKind.REDUCED_SPHERE_Z,
    ModelKind.SCHRODINGER_LOHE: ModelKind.REDUCED_SL_XI,
    ModelKind.LOHE_HERMITIAN_SPHERE: ModelKind.REDUCED_LHS_XI,
    ModelKind.LOHE_MATRIX: ModelKind.REDUCED_LM_V,
}


@dataclass(frozen=True)
class Coupling:
    """Coupling strengths; ``kappa`` doubles as kappa_0 for the Lohe Hermitian sphere."""

    kappa: float
    kappa1: float = 0.0

    def __post_init__(self):
        if not (self.kappa >= 0 and self.kappa1 >= 0):
            raise ConfigError("coupling strengths must be non-negative")


def _inner_rows(u, v):
    """Row-wise ``<u_j, v_j>``."""
    return np.sum(u * np.conj(v), axis=-1)


def _dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def kuramoto(theta, a, kappa):
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    diff = theta[None, :] - theta[:, None]
    return np.asarray(a, dtype=float) + (kappa / n) * np.sin(diff).sum(axis=1)


def real_sphere(x, omegas, kappa):
    m = x.mean(axis=0)
    drift = np.einsum("jab,jb->ja", omegas, x)
    return drift + kappa * (m[None, :] - (x @ m)[:, None] * x)


def complex_sphere(w, a, kappa, xi=None):
    m = w.mean(axis=0)
    out = 1j * np.asarray(a)[:, None] * w
    if xi is not None:
        xi = np.asarray(xi)
        out = out + (xi @ w.T).T if xi.ndim == 2 else out + np.einsum("jab,jb->ja", xi, w)
    return out + kappa * (m[None, :] - _inner_rows(m[None, :], w).real[:, None] * w)


def schrodinger_lohe(psi, a, kappa):
    m = psi.mean(axis=0)
    coupling = m[None, :] - _inner_rows(psi, m[None, :])[:, None] * psi
    return 1j * np.asarray(a)[:, None] * psi + kappa * coupling


def lohe_hermitian_sphere(z, a, kappa0, kappa1):
    m = z.mean(axis=0)
    zm = _inner_rows(z, m[None, :])
    mz = np.conj(zm)
    out = 1j * np.asarray(a)[:, None] * z
    out = out + kappa0 * (m[None, :] - zm[:, None] * z)
    return out + kappa1 * (mz - zm)[:, None] * z


def lohe_matrix(u, a, kappa):
    m = u.mean(axis=0)
    coupling = m[None] - u @ _dagger(m)[None] @ u
    return 1j * np.asarray(a)[:, None, None] * u + 0.5 * kappa * coupling


def _phase_factors(theta):
    """``E[j, k] = exp(i (theta_k - theta_j))``."""
    theta = np.asarray(theta, dtype=float)
    return np.exp(1j * (theta[None, :] - theta[:, None]))


def _twisted_sum(states, theta):
    """``T_j = sum_k E[j, k] (s_k - s_j)`` for vectors or matrices."""
    e = _phase_factors(theta)
    tail = states.shape[1:]
    flat = states.reshape(states.shape[0], -1)
    t = e @ flat - e.sum(axis=1)[:, None] * flat
    return t.reshape((states.shape[0],) + tail)


def reduced_sphere_z(z, theta, kappa):
    n = z.shape[0]
    t = _twisted_sum(z, theta)
    return (kappa / n) * (t - _inner_rows(t, z).real[:, None] * z)


def reduced_sl_xi(xi, theta, kappa):
    n = xi.shape[0]
    t = _twisted_sum(xi, theta)
    return (kappa / n) * (t - _inner_rows(xi, t)[:, None] * xi)


def reduced_lhs_xi(xi, theta, kappa0, kappa1):
    n = xi.shape[0]
    t = _twisted_sum(xi, theta)
    xt = _inner_rows(xi, t)
    tx = np.conj(xt)
    return (kappa0 / n) * (t - xt[:, None] * xi) + (kappa1 / n) * (tx - xt)[:, None] * xi


def reduced_lm_v(v, theta, kappa):
    n = v.shape[0]
    t = _twisted_sum(v, theta)
    return (kappa / (2 * n)) * (t - v @ _dagger(t) @ v)


def _check_n(state, a):
    if a is not None and np.asarray(a).size != state.shape[0]:
        raise DimensionError(f"{np.asarray(a).size} frequencies for {state.shape[0]} agents")


def rhs_primary(kind, state, a=None, c: Coupling | None = None, omegas=None, xi=None):
    """Evaluate a primary model's vector field at ``state``."""
    kind = ModelKind(kind)
    if c is None:
        raise ConfigError("a Coupling is required")
    state = np.asarray(state)
    if kind is ModelKind.REAL_SPHERE:
        if omegas is None:
            raise ConfigError("real_sphere needs the per-agent frequency matrices")
        if np.iscomplexobj(state):
            raise TypeError("real_sphere expects real states")
        omegas = np.asarray(omegas, dtype=float)
        if omegas.shape != (state.shape[0], state.shape[1], state.shape[1]):
            raise DimensionError("frequency matrices do not match the state shape")
        return real_sphere(state, omegas, c.kappa)
    if omegas is not None:
        raise ConfigError("frequency matrices are only used by real_sphere")
    if a is None:
        a = np.zeros(state.shape[0])
    _check_n(state, a)
    if kind is ModelKind.KURAMOTO:
        if state.ndim != 1:
            raise TypeError("kuramoto expects a 1-d phase vector")
        return kuramoto(state, a, c.kappa)
    expected = 3 if kind is ModelKind.LOHE_MATRIX else 2
    if state.ndim != expected:
        raise TypeError(f"{kind.value} expects a {expected}-d state array")
    if kind is ModelKind.COMPLEX_SPHERE:
        return complex_sphere(state, a, c.kappa, xi)
    if kind is ModelKind.SCHRODINGER_LOHE:
        return schrodinger_lohe(state, a, c.kappa)
    if kind is ModelKind.LOHE_HERMITIAN_SPHERE:
        return lohe_hermitian_sphere(state, a, c.kappa, c.kappa1)
    if kind is ModelKind.LOHE_MATRIX:
        return lohe_matrix(state, a, c.kappa)
    raise ConfigError(f"{kind.value} is not a primary model")


def rhs_reduced(kind, aux_state, theta, c: Coupling):
    """Evaluate a gauge-reduced vector field driven by Kuramoto phases ``theta``."""
    kind = ModelKind(kind)
    aux_state = np.asarray(aux_state)
    theta = np.asarray(theta, dtype=float)
    if theta.size != aux_state.shape[0]:
        raise DimensionError("theta and auxiliary state have different N")
    if kind is ModelKind.REDUCED_SPHERE_Z:
        return reduced_sphere_z(aux_state, theta, c.kappa)
    if kind is ModelKind.REDUCED_SL_XI:
        return reduced_sl_xi(aux_state, theta, c.kappa)
    if kind is ModelKind.REDUCED_LHS_XI:
        return reduced_lhs_xi(aux_state, theta, c.kappa, c.kappa1)
    if kind is ModelKind.REDUCED_LM_V:
        return reduced_lm_v(aux_state, theta, c.kappa)
    raise ConfigError(f"{kind.value} is not a reduced model")


def rhs_gram(kind, aux_state, theta, c: Coupling):
    """Time derivative of the pairwise overlaps of a reduced ensemble.

    * ``reduced_sphere_z``: returns ``d/dt (1 - Re<z_i, z_j>)`` assembled from
      the twisted increments ``A = (e^{i(theta_k - theta_i)} - 1)(z_k - z_i)``
      and ``B`` (same with ``j``).
    * ``reduced_sl_xi`` / ``reduced_lhs_xi``: returns ``d/dt <xi_i, xi_j>``,
      which depends on the Gram matrix and the phases only.
    * ``reduced_lm_v``: returns ``d/dt (V_i V_j^+)`` as an ``(N, N, d, d)`` array.
    """
    kind = ModelKind(kind)
    aux_state = np.asarray(aux_state)
    theta = np.asarray(theta, dtype=float)
    n = aux_state.shape[0]
    e = _phase_factors(theta)  # e[i, k] = exp(i(theta_k - theta_i))
    if kind is ModelKind.REDUCED_SPHERE_Z:
        z = aux_state
        R = (z @ np.conj(z).T).real
        u = 1.0 - R
        # P[i, k] = (e[i, k] - 1) (z_k - z_i); RA[i, j, k] = Re<P[i, k], z_j>
        P = (e - 1.0)[:, :, None] * (z[None, :, :] - z[:, None, :])
        RA = np.einsum("ikd,jd->ijk", P, np.conj(z)).real
        RAii = np.einsum("iik->ik", RA)
        along = RA + np.swapaxes(RA, 0, 1)
        cross = RA - RAii[:, None, :] - RAii[None, :, :] + np.swapaxes(RA, 0, 1)
        quad = (u.sum(axis=1)[:, None] + u.sum(axis=0)[None, :]) * u
        twist = (along * u[:, :, None] + R[:, :, None] * cross).sum(axis=2)
        return c.kappa * (-2.0 * u + (quad - twist) / n)
    if kind in (ModelKind.REDUCED_SL_XI, ModelKind.REDUCED_LHS_XI):
        h = aux_state @ np.conj(aux_state).T
        ec = np.conj(e)
        # sums over k, written with matrix products on the k index
        s1 = (e * 1.0) @ h - e.sum(1)[:, None] * h  # sum_k e_ik (h_kj - h_ij)
        s2 = ((ec * (1.0 - h)).sum(1)[:, None]) * h  # sum_k conj(e_ik)(1 - h_ik) h_ij
        s3 = h @ ec.T - ec.sum(1)[None, :] * h  # sum_k conj(e_jk)(h_ik - h_ij)
        s4 = ((e * (1.0 - h.T)).sum(1)[None, :]) * h  # sum_k e_jk (1 - h_kj) h_ij
        out = (c.kappa / n) * (s1 + s2 + s3 + s4)
        if kind is ModelKind.REDUCED_LHS_XI:
            hm1 = h - 1.0
            t1 = (e * hm1.T).sum(1)[:, None]  # sum_k e_ik (h_ki - 1)
            t2 = (ec * hm1).sum(1)[:, None]  # sum_k conj(e_ik)(h_ik - 1)
            t3 = (ec * hm1).sum(1)[None, :]  # sum_k conj(e_jk)(h_jk - 1)
            t4 = (e * hm1.T).sum(1)[None, :]  # sum_k e_jk (h_kj - 1)
            out = out + (c.kappa1 / n) * (t1 - t2 + t3 - t4) * h
        return out
    if kind is ModelKind.REDUCED_LM_V:
        v = aux_state
        d = v.shape[-1]
        eye = np.eye(d)
        X = v[:, None] @ _dagger(v)[None, :]  # X[i, j] = V_i V_j^+
        out = np.zeros_like(X)
        for k in range(n):
            eik = e[:, k][:, None, None, None]
            ejk = e[:, k][None, :, None, None]
            Xik = X[:, k][:, None]
            Xkj = X[k, :][None, :]
            out += eik * (Xkj - X)
            out -= np.conj(eik) * ((Xik - eye) @ X)
            out += np.conj(ejk) * (Xik - X)
            out -= ejk * (X @ (Xkj - eye))
        return (c.kappa / (2 * n)) * out
    raise ConfigError(f"no Gram dynamics for {kind.value}")
