"""State containers, inner products and manifold projections.

Conventions
-----------
* Phases are real and unwrapped; nothing is ever reduced mod 2*pi.
* The Hermitian inner product is conjugate-linear in the *second* slot,
  ``<u, v> = sum_i u_i * conj(v_i)``.
* Ensembles are stored as plain arrays: ``(N,)`` phases, ``(N, d)`` sphere
  states (real or complex) and ``(N, d, d)`` unitary matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TOL_MANIFOLD = 1e-9


class DimensionError(ValueError):
    """Shapes of the inputs are incompatible."""


class DegenerateStateError(ValueError):
    """A state cannot be projected back onto its manifold."""


class NumericError(ArithmeticError):
    """An iteration failed to converge or produced non-finite values."""


@dataclass(frozen=True)
class PhaseEnsemble:
    """N unwrapped Kuramoto phases."""

    phases: np.ndarray
    zero_sum: bool = False

    def __post_init__(self):
        phases = np.asarray(self.phases, dtype=float).reshape(-1)
        if phases.size < 1:
            raise DimensionError("a phase ensemble needs at least one phase")
        if self.zero_sum and abs(phases.sum()) > 1e-12:
            raise ValueError(f"phases do not sum to zero (sum={phases.sum():.3e})")
        object.__setattr__(self, "phases", phases)

    def __len__(self):
        return self.phases.size

    @classmethod
    def zeros(cls, n: int) -> "PhaseEnsemble":
        return cls(np.zeros(n), zero_sum=True)


@dataclass(frozen=True)
class FrequencySpectrum:
    """Scalar natural frequencies, mean-subtracted at construction."""

    values: np.ndarray
    diameter: float = field(init=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        values = values - values.mean()
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "diameter", float(values.max() - values.min()))

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class SphereEnsemble:
    """N unit vectors on the real sphere or the Hermitian sphere."""

    states: np.ndarray
    tol: float = TOL_MANIFOLD

    def __post_init__(self):
        states = np.asarray(self.states)
        if states.ndim != 2:
            raise DimensionError(f"expected (N, d) states, got shape {states.shape}")
        if not np.iscomplexobj(states):
            states = states.astype(float)
        drift = np.abs(np.linalg.norm(states, axis=1) - 1.0).max()
        if drift > self.tol:
            raise ValueError(f"states are off the unit sphere by {drift:.3e}")
        object.__setattr__(self, "states", states)

    @property
    def flavor(self) -> str:
        return "complex" if np.iscomplexobj(self.states) else "real"

    @property
    def dimension(self) -> int:
        return self.states.shape[1]

    def __len__(self):
        return self.states.shape[0]


@dataclass(frozen=True)
class UnitaryEnsemble:
    """N unitary d x d matrices."""

    matrices: np.ndarray
    tol: float = TOL_MANIFOLD

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=complex)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise DimensionError(f"expected (N, d, d) matrices, got shape {mats.shape}")
        drift = unitarity_drift(mats)
        if drift > self.tol:
            raise ValueError(f"matrices are not unitary (drift {drift:.3e})")
        object.__setattr__(self, "matrices", mats)

    @property
    def dimension(self) -> int:
        return self.matrices.shape[1]

    def __len__(self):
        return self.matrices.shape[0]


@dataclass(frozen=True)
class GramMatrix:
    """Pairwise overlaps of an ensemble.

    For vector ensembles ``entries[i, j] = <x_i, x_j>``.  For unitary
    ensembles ``blocks[i, j] = U_i U_j^dagger`` and ``entries`` holds the
    trace-normalised scalar ``tr(U_i U_j^dagger) / d``.
    """

    entries: np.ndarray
    flavor: str = "vector-inner"
    blocks: np.ndarray | None = None


def _raw(ensemble) -> np.ndarray:
    for attr in ("states", "matrices", "phases"):
        if hasattr(ensemble, attr):
            return getattr(ensemble, attr)
    return np.asarray(ensemble)


def hermitian_inner(u, v) -> complex:
    """Return ``sum_i u_i * conj(v_i)``."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise DimensionError(f"length mismatch: {u.shape} vs {v.shape}")
    return complex(np.sum(u * np.conj(v)))


def pairwise_inner(states: np.ndarray) -> np.ndarray:
    """Matrix of ``<x_i, x_j>`` for the rows of ``states``."""
    return states @ np.conj(states).T


def renormalize(ensemble):
    """Project every state radially onto the unit sphere."""
    states = _raw(ensemble)
    norms = np.linalg.norm(states, axis=-1, keepdims=True)
    if np.any(norms < 1e-6):
        raise DegenerateStateError("cannot renormalize a (near) zero vector")
    out = states / norms
    if isinstance(ensemble, SphereEnsemble):
        return SphereEnsemble(out, tol=ensemble.tol)
    return out


def unitarity_drift(mats: np.ndarray) -> float:
    """Largest ``||U U^dagger - I||_F`` over a stack of matrices."""
    mats = np.asarray(mats)
    if mats.ndim == 2:
        mats = mats[None]
    eye = np.eye(mats.shape[-1])
    prod = mats @ np.conj(np.swapaxes(mats, -1, -2))
    return float(np.linalg.norm(prod - eye, axis=(-2, -1)).max())


def unitarize(m, tol: float = 1e-13, max_iter: int = 50) -> np.ndarray:
    """Unitary polar factor by the Newton iteration ``M <- (M + M^{-dagger}) / 2``.

    Accepts a single matrix or a stack ``(N, d, d)``; the stack is iterated
    jointly until every member meets ``tol``.
    """
    m = np.array(m, dtype=complex)
    single = m.ndim == 2
    if single:
        m = m[None]
    if unitarity_drift(m) >= 0.5:
        raise DegenerateStateError("input too far from U(d) for the Newton polar iteration")
    for _ in range(max_iter + 1):
        if unitarity_drift(m) < tol:
            return m[0] if single else m
        try:
            inv_adj = np.conj(np.swapaxes(np.linalg.inv(m), -1, -2))
        except np.linalg.LinAlgError as exc:
            raise DegenerateStateError("singular matrix") from exc
        m = 0.5 * (m + inv_adj)
    raise NumericError(f"polar iteration did not converge in {max_iter} iterations")


def gram(ensemble) -> GramMatrix:
    """Gram matrix of a sphere or unitary ensemble."""
    raw = _raw(ensemble)
    if raw.ndim == 3:
        blocks = raw[:, None] @ np.conj(np.swapaxes(raw, -1, -2))[None, :]
        entries = np.trace(blocks, axis1=-2, axis2=-1) / raw.shape[-1]
        return GramMatrix(entries, flavor="matrix-product", blocks=blocks)
    return GramMatrix(pairwise_inner(raw))


def geodesic_distance(u, v) -> float:
    """Great-circle distance ``arccos(1 - |u - v|^2 / 2)`` on the unit sphere."""
    chord2 = float(np.sum(np.abs(np.asarray(u) - np.asarray(v)) ** 2))
    return float(np.arccos(np.clip(1.0 - 0.5 * chord2, -1.0, 1.0)))


def geodesic_matrix(states: np.ndarray) -> np.ndarray:
    """All pairwise geodesic distances between unit vectors."""
    diff = states[:, None, :] - states[None, :, :]
    chord2 = np.sum(np.abs(diff) ** 2, axis=-1)
    return np.arccos(np.clip(1.0 - 0.5 * chord2, -1.0, 1.0))
