"""Fixed-step RK4 with optional projection back to the state manifold.

States are numpy arrays or tuples of arrays (used for the joint
auxiliary/phase system).  Time is computed as ``step * dt`` so that the
recorded grid does not accumulate roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .models import Coupling, ModelKind, rhs_primary
from .statespace import DegenerateStateError, NumericError, renormalize, unitarity_drift, unitarize


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 0.01
    t_end: float = 100.0
    renormalize_every: int = 1
    record_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        if self.renormalize_every < 0 or self.record_stride < 1:
            raise ValueError("renormalize_every >= 0 and record_stride >= 1 required")

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.t_end / self.dt + 1e-9))

    @property
    def n_records(self) -> int:
        return self.n_steps // self.record_stride + 1


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray | tuple
    monitors: dict = field(default_factory=dict)

    def __len__(self):
        return self.times.size

    @property
    def final(self):
        if isinstance(self.states, tuple):
            return tuple(s[-1] for s in self.states)
        return self.states[-1]


@dataclass(frozen=True)
class ConvergenceReport:
    converged: bool
    t_converged: float | None
    final_rhs_norm: float
    window: float
    tol: float


def _axpy(x, a, y):
    """``x + a * y`` for arrays or tuples of arrays."""
    if isinstance(x, tuple):
        return tuple(xi + a * yi for xi, yi in zip(x, y))
    return x + a * y


def _combine(x, dt, k1, k2, k3, k4):
    if isinstance(x, tuple):
        return tuple(_combine(*parts) for parts in zip(x, (dt,) * len(x), k1, k2, k3, k4))
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _all_finite(x):
    if isinstance(x, tuple):
        return all(np.all(np.isfinite(xi)) for xi in x)
    return bool(np.all(np.isfinite(x)))


def rk4_step(rhs: Callable, state, dt: float, k1=None):
    """One classical Runge--Kutta step of the autonomous field ``rhs``."""
    if k1 is None:
        k1 = rhs(state)
    k2 = rhs(_axpy(state, 0.5 * dt, k1))
    k3 = rhs(_axpy(state, 0.5 * dt, k2))
    k4 = rhs(_axpy(state, dt, k3))
    out = _combine(state, dt, k1, k2, k3, k4)
    if not _all_finite(out):
        raise NumericError("RK4 step produced non-finite values")
    return out


def _stack(records):
    if isinstance(records[0], tuple):
        return tuple(np.stack(parts) for parts in zip(*records))
    return np.stack(records)


def integrate(rhs: Callable, initial, cfg: IntegratorConfig, project=None, drift=None, monitor=None):
    """Integrate ``rhs`` from ``t = 0`` to ``cfg.t_end``.

    ``project`` maps a state back to its manifold, ``drift`` measures the
    distance from it (recorded before projection), ``monitor(state, k1)``
    returns extra per-record scalars; ``k1`` is the field at ``state``.
    On failure a :class:`NumericError` is raised carrying ``.t`` (last good
    time) and ``.trajectory`` (records so far).
    """
    state = initial
    times, records, mon = [], [], {}
    last_drift = drift(state) if drift is not None else 0.0

    def record(step, k1):
        times.append(step * cfg.dt)
        records.append(state)
        values = {"pre_projection_drift": last_drift}
        if monitor is not None:
            values.update(monitor(state, k1))
        for key, val in values.items():
            mon.setdefault(key, []).append(val)

    def partial():
        return Trajectory(np.array(times), _stack(records) if records else None,
                          {k: np.array(v) for k, v in mon.items()})

    n = cfg.n_steps
    # overflow shows up as non-finite values, which are checked explicitly
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(n + 1):
            k1 = rhs(state)
            if step % cfg.record_stride == 0:
                record(step, k1)
            if step == n:
                break
            try:
                if not _all_finite(k1):
                    raise NumericError("vector field produced non-finite values")
                state = rk4_step(rhs, state, cfg.dt, k1=k1)
                if drift is not None:
                    last_drift = drift(state)
                if project is not None and cfg.renormalize_every and (step + 1) % cfg.renormalize_every == 0:
                    try:
                        state = project(state)
                    except DegenerateStateError as exc:
                        raise NumericError(f"projection failed: {exc}") from exc
            except NumericError as exc:
                exc.t = step * cfg.dt
                exc.trajectory = partial()
                raise
    return partial()


def manifold_tools(flavor: str):
    """``(project, drift)`` callables for a state flavor."""
    if flavor in ("real", "complex"):
        return renormalize, lambda s: float(np.abs(np.linalg.norm(s, axis=-1) - 1.0).max())
    if flavor == "unitary":
        return unitarize, unitarity_drift
    return None, None


def _agent_norms(k):
    return np.sqrt(np.sum(np.abs(k.reshape(k.shape[0], -1)) ** 2, axis=1))


def run(kind, initial, a, coupling: Coupling, cfg: IntegratorConfig, omegas=None, xi=None) -> Trajectory:
    """Integrate a primary model with per-step projection and standard monitors.

    Monitors: ``max_rhs_norm`` (largest per-agent speed), ``manifold_drift``
    (of the recorded state), ``pre_projection_drift`` and, for Kuramoto,
    ``phase_sum``.
    """
    kind = ModelKind(kind)
    initial = np.array(initial)
    project, drift = manifold_tools(kind.flavor)

    def rhs(s):
        return rhs_primary(kind, s, a, coupling, omegas=omegas, xi=xi)

    def monitor(s, k1):
        out = {"max_rhs_norm": float(_agent_norms(k1).max())}
        out["manifold_drift"] = drift(s) if drift is not None else 0.0
        if kind is ModelKind.KURAMOTO:
            out["phase_sum"] = float(s.sum())
        return out

    return integrate(rhs, initial, cfg, project=project, drift=drift, monitor=monitor)


def detect_convergence(traj: Trajectory, tol: float = 1e-8, window: float = 1.0) -> ConvergenceReport:
    """Windowed test on the ``max_rhs_norm`` monitor.

    The run counts as converged when the speed stays below ``tol`` over the
    trailing ``window``; ``t_converged`` is the first recorded time after the
    last violation plus the window (``t_0 + window`` when there is none).
    """
    t = traj.times
    speed = traj.monitors["max_rhs_norm"]
    bad = np.nonzero(~(speed < tol))[0]
    if bad.size == 0:
        start = t[0]
    elif bad[-1] + 1 < t.size:
        start = t[bad[-1] + 1]
    else:
        start = np.inf
    t_conv = start + window
    converged = bool(t_conv <= t[-1] + 1e-12)
    return ConvergenceReport(
        converged=converged,
        t_converged=float(t_conv) if converged else None,
        final_rhs_norm=float(speed[-1]),
        window=window,
        tol=tol,
    )
