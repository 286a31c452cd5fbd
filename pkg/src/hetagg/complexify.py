"""Real <-> complex identification of the swarm sphere model.

A point ``x = (y, z)`` of R^{2d} is identified with ``w = y + i z`` in C^d.
A skew-symmetric drift written in blocks ``[[A, B], [-B^T, C]]`` becomes the
skew-Hermitian drift ``A - iB`` on C^d provided ``A == C`` and ``B`` is
symmetric.

Sign convention: with ``w = y + i z`` the block ``+b I`` in the upper right
corner turns into ``-i b`` on the complex side.  The scalar family built by
:func:`build_frequency` with offsets ``a_j`` therefore produces the reduced
complex model with frequencies ``-a_j``; :func:`effective_frequencies` returns
exactly these numbers so that pairing with a Kuramoto system is automatic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statespace import DimensionError


class StructureError(ValueError):
    """A matrix lacks the required (skew-)symmetry or block structure."""


def _is_skew(m, tol):
    return np.linalg.norm(m + m.T) <= tol


@dataclass(frozen=True)
class BlockFrequency:
    """Block-structured frequency ``[[A, B + a I], [-(B + a I), A]]``."""

    A: np.ndarray
    B: np.ndarray
    a: float = 0.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape != B.shape or A.shape[0] != A.shape[1]:
            raise DimensionError("A and B must be square and of equal size")
        if np.linalg.norm(A + A.T) > 1e-12:
            raise StructureError("A must be skew-symmetric")
        if np.linalg.norm(B - B.T) > 1e-12:
            raise StructureError("B must be symmetric")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def half_dimension(self) -> int:
        return self.A.shape[0]

    def matrix(self) -> np.ndarray:
        return build_frequency(self.A, self.B, self.a)


@dataclass(frozen=True)
class ComplexFrequency:
    """Skew-Hermitian drift matrix on C^d."""

    Xi: np.ndarray

    def __post_init__(self):
        Xi = np.atleast_2d(np.asarray(self.Xi, dtype=complex))
        if np.linalg.norm(Xi + Xi.conj().T) > 1e-12:
            raise StructureError("Xi must be skew-Hermitian")
        object.__setattr__(self, "Xi", Xi)

    @property
    def dimension(self) -> int:
        return self.Xi.shape[0]


def decompose_blocks(omega, tol: float = 1e-10):
    """Split a ``2d x 2d`` skew matrix into quadrant blocks.

    Returns ``(A, B, C, valid)`` where ``valid`` tells whether the blocks
    admit the complex reformulation (``A == C`` and ``B`` symmetric).
    """
    omega = np.asarray(omega, dtype=float)
    n = omega.shape[0]
    if omega.shape != (n, n):
        raise DimensionError("frequency matrix must be square")
    if n % 2:
        raise DimensionError("odd dimension; call augment_odd first")
    if not _is_skew(omega, tol):
        raise StructureError("frequency matrix is not skew-symmetric")
    d = n // 2
    A, B, C = omega[:d, :d], omega[:d, d:], omega[d:, d:]
    valid = np.linalg.norm(A - C) <= tol and np.linalg.norm(B - B.T) <= tol
    return A.copy(), B.copy(), C.copy(), bool(valid)


def complexify_matrix(A, B) -> ComplexFrequency:
    """``Xi = A - iB``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if np.linalg.norm(A + A.T) > 1e-10:
        raise StructureError("A must be skew-symmetric")
    if np.linalg.norm(B - B.T) > 1e-10:
        raise StructureError("B must be symmetric")
    return ComplexFrequency(A - 1j * B)


def real_to_complex_state(x) -> np.ndarray:
    """Map ``(..., 2d)`` real arrays to ``(..., d)`` complex arrays, ``y + iz``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] % 2:
        raise DimensionError("real state must have even length")
    d = x.shape[-1] // 2
    return x[..., :d] + 1j * x[..., d:]


def complex_to_real_state(w) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    return np.concatenate([w.real, w.imag], axis=-1)


def augment_odd(omega, x):
    """Pad an odd-dimensional frequency matrix and state with a trailing zero.

    ``x`` may be a single vector or an ``(N, n)`` ensemble.
    """
    omega = np.atleast_2d(np.asarray(omega, dtype=float))
    x = np.asarray(x, dtype=float)
    n = omega.shape[0]
    padded = np.zeros((n + 1, n + 1))
    padded[:n, :n] = omega
    pad_width = [(0, 0)] * (x.ndim - 1) + [(0, 1)]
    return padded, np.pad(x, pad_width)


def build_frequency(A, B, a_j: float) -> np.ndarray:
    """Assemble ``[[A, B], [-B, A]] + a_j [[0, I], [-I, 0]]``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if np.linalg.norm(A + A.T) > 1e-12:
        raise StructureError("A must be skew-symmetric")
    if np.linalg.norm(B - B.T) > 1e-12:
        raise StructureError("B must be symmetric")
    Bj = B + a_j * np.eye(A.shape[0])
    return np.block([[A, Bj], [-Bj.T, A]])


def frequency_family(a, A=None, B=None, d: int | None = None) -> np.ndarray:
    """Stack of :func:`build_frequency` matrices for offsets ``a``."""
    a = np.asarray(a, dtype=float)
    if A is None and B is None and d is None:
        raise DimensionError("give A, B or the half dimension d")
    if d is None:
        d = np.atleast_2d(A if A is not None else B).shape[0]
    A = np.zeros((d, d)) if A is None else A
    B = np.zeros((d, d)) if B is None else B
    return np.stack([build_frequency(A, B, aj) for aj in a])


def complexify_frequencies(omegas) -> np.ndarray:
    """Complex drifts ``A_j - iB_j`` for a stack of block-structured matrices."""
    out = []
    for om in np.asarray(omegas, dtype=float):
        A, B, _, valid = decompose_blocks(om)
        if not valid:
            raise StructureError("frequency matrix violates A == C, B == B^T")
        out.append(A - 1j * B)
    return np.stack(out)


def effective_frequencies(omegas, tol: float = 1e-10):
    """Split complexified drifts as ``Xi_j = Xi + i a_j I`` with ``sum a_j = 0``.

    Returns ``(a, Xi)``.  Raises :class:`StructureError` when the drifts do
    not differ by multiples of the identity.
    """
    xis = complexify_frequencies(omegas)
    d = xis.shape[-1]
    scal = np.trace(xis, axis1=1, axis2=2).imag / d
    a = scal - scal.mean()
    common = xis - 1j * a[:, None, None] * np.eye(d)
    if np.abs(common - common[0]).max() > tol:
        raise StructureError("frequencies do not share a common skew-Hermitian part")
    return a, common.mean(axis=0)
