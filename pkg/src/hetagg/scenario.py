"""Run configurations, seeded initial data and scenario execution.

Configs are JSON documents (see :func:`parse_config`).  All randomness comes
from ``numpy.random.default_rng(seed)`` (PCG64), which produces the same
stream on every platform for a given numpy major version.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from .certify import FitError, calibrate_kappa, check_hypotheses, fit_decay_rate, verify_limits
from .complexify import build_frequency
from .integrate import IntegratorConfig, detect_convergence, run
from .models import ConfigError, Coupling, ModelKind
from .reduction import initial_diameters, paired_run, phase_diameter
from .statespace import NumericError

SCHEMA_VERSION = 1

CSV_COLUMNS = ("t", "D_theta", "D_primary", "D_aux", "max_rhs_norm", "sum_theta", "max_manifold_drift")

THEOREMS_OF = {
    ModelKind.KURAMOTO: ("P2.1ii",),
    ModelKind.COMPLEX_SPHERE: ("P3.1", "T3.1"),
    ModelKind.REAL_SPHERE: ("T3.2",),
    ModelKind.SCHRODINGER_LOHE: ("P4.1", "T4.SL"),
    ModelKind.LOHE_HERMITIAN_SPHERE: ("P4.2", "T4.LHS"),
    ModelKind.LOHE_MATRIX: ("P5.1", "T5.1"),
}

_FIELDS = {
    "schema_version", "model", "d", "N", "kappa", "kappa1", "frequencies", "blocks",
    "initial", "theta_initial", "dt", "t_end", "renormalize_every", "record_stride",
    "certificates", "kappa_from_gaps", "convergence_tol", "convergence_window", "outputs",
}


class ParseError(ConfigError):
    """Schema violation; ``field`` names the offending entry."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name
        self.message = message

    def __reduce__(self):
        return type(self), (self.field, self.message)


@dataclass
class RunConfig:
    model: ModelKind
    d: int
    N: int
    kappa: float
    kappa1: float = 0.0
    frequencies: dict = field(default_factory=lambda: {"seed": 0, "spread": 0.0})
    blocks: dict | None = None
    initial: dict = field(default_factory=lambda: {"seed": 0})
    theta_initial: list | None = None
    dt: float = 0.01
    t_end: float = 100.0
    renormalize_every: int = 1
    record_stride: int = 1
    certificates: list = field(default_factory=list)
    kappa_from_gaps: list | None = None
    convergence_tol: float = 1e-8
    convergence_window: float = 1.0
    outputs: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list, compare=False)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(dt=self.dt, t_end=self.t_end, renormalize_every=self.renormalize_every,
                                record_stride=self.record_stride)


def _finite(name, value, positive=False):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ParseError(name, "expected a number") from None
    if not math.isfinite(v) or (positive and not v > 0):
        raise ParseError(name, "must be finite" + (" and positive" if positive else ""))
    return v


def _int(name, value, minimum):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ParseError(name, f"expected an integer >= {minimum}")
    return value


def _complex_array(name, values):
    arr = np.asarray(values, dtype=float)
    if arr.shape[-1:] != (2,):
        raise ParseError(name, "complex entries are written as [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def state_shape(kind: ModelKind, d: int, N: int) -> tuple:
    if kind is ModelKind.KURAMOTO:
        return (N,)
    if kind is ModelKind.LOHE_MATRIX:
        return (N, d, d)
    if kind is ModelKind.REAL_SPHERE:
        return (N, 2 * d)
    return (N, d)


def parse_config(text: str) -> RunConfig:
    """Validate a JSON config and fill defaults.

    Explicit frequencies with a non-zero mean are shifted to zero mean and
    explicit sphere states off the unit sphere are renormalised; both events
    are logged in ``RunConfig.warnings``.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("<document>", str(exc)) from None
    if not isinstance(raw, dict):
        raise ParseError("<document>", "top level must be an object")
    unknown = sorted(set(raw) - _FIELDS)
    if unknown:
        raise ParseError(unknown[0], "unknown field")
    for key in ("model", "d", "N", "kappa"):
        if key not in raw:
            raise ParseError(key, "required")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ParseError("schema_version", f"unsupported version {version!r}")
    try:
        kind = ModelKind(raw["model"])
    except ValueError:
        raise ParseError("model", f"unknown model {raw['model']!r}") from None
    if kind not in THEOREMS_OF:
        raise ParseError("model", "reduced systems are not run directly")

    cfg = RunConfig(model=kind, d=_int("d", raw["d"], 1), N=_int("N", raw["N"], 1),
                    kappa=_finite("kappa", raw["kappa"]))
    cfg.kappa1 = _finite("kappa1", raw.get("kappa1", 0.0))
    if cfg.kappa < 0 or cfg.kappa1 < 0:
        raise ParseError("kappa", "coupling strengths must be non-negative")
    cfg.dt = _finite("dt", raw.get("dt", 0.01), positive=True)
    cfg.t_end = _finite("t_end", raw.get("t_end", 100.0), positive=True)
    cfg.renormalize_every = _int("renormalize_every", raw.get("renormalize_every", 1), 0)
    cfg.record_stride = _int("record_stride", raw.get("record_stride", 1), 1)
    cfg.convergence_tol = _finite("convergence_tol", raw.get("convergence_tol", 1e-8), positive=True)
    cfg.convergence_window = _finite("convergence_window", raw.get("convergence_window", 1.0), positive=True)
    if cfg.dt > cfg.t_end:
        raise ParseError("dt", "larger than t_end")

    n = cfg.N
    freq = raw.get("frequencies", {"seed": 0, "spread": 0.0})
    if not isinstance(freq, dict) or ("values" in freq) == ("seed" in freq):
        raise ParseError("frequencies", "give either 'values' or 'seed' (+ 'spread')")
    if "values" in freq:
        if set(freq) != {"values"}:
            raise ParseError("frequencies", "'values' takes no companions")
        vals = np.asarray(freq["values"], dtype=float)
        if vals.shape != (n,) or not np.all(np.isfinite(vals)):
            raise ParseError("frequencies.values", f"expected {n} finite numbers")
        mean = float(vals.mean())
        if abs(mean) > 1e-15:
            cfg.warnings.append(f"frequencies shifted by {-mean:.3g} to zero mean")
        cfg.frequencies = {"values": vals.tolist()}
    else:
        if set(freq) - {"seed", "spread"}:
            raise ParseError("frequencies", "unexpected keys")
        _int("frequencies.seed", freq["seed"], 0)
        _finite("frequencies.spread", freq.get("spread", 0.0))
        cfg.frequencies = {"seed": freq["seed"], "spread": float(freq.get("spread", 0.0))}

    blocks = raw.get("blocks")
    if blocks is not None:
        if kind is not ModelKind.REAL_SPHERE:
            raise ParseError("blocks", "only used by real_sphere")
        if not isinstance(blocks, dict) or set(blocks) - {"A", "B"}:
            raise ParseError("blocks", "expected an object with A and/or B")
        for key, m in blocks.items():
            if np.asarray(m, dtype=float).shape != (cfg.d, cfg.d):
                raise ParseError(f"blocks.{key}", f"expected a {cfg.d}x{cfg.d} matrix")
        cfg.blocks = {k: np.asarray(v, dtype=float).tolist() for k, v in blocks.items()}

    init = raw.get("initial", {"seed": 0})
    if not isinstance(init, dict) or ("values" in init) == ("seed" in init):
        raise ParseError("initial", "give either 'values' or 'seed' (+ 'spread')")
    if "values" in init:
        if kind is ModelKind.KURAMOTO:
            raise ParseError("initial", "kuramoto runs take their state from theta_initial")
        shape = state_shape(kind, cfg.d, n)
        try:
            arr = (np.asarray(init["values"], dtype=float) if kind is ModelKind.REAL_SPHERE
                   else _complex_array("initial.values", init["values"]))
        except ValueError:
            raise ParseError("initial.values", "not a numeric array") from None
        if arr.shape != shape:
            raise ParseError("initial.values", f"shape {arr.shape} != {shape}")
        if kind is not ModelKind.LOHE_MATRIX:
            dev = float(np.abs(np.linalg.norm(arr, axis=-1) - 1.0).max())
            if dev > 1e-14:
                cfg.warnings.append(f"initial states renormalised (max norm deviation {dev:.2e})")
        cfg.initial = {"values": init["values"]}
    else:
        if set(init) - {"seed", "spread"}:
            raise ParseError("initial", "unexpected keys")
        _int("initial.seed", init["seed"], 0)
        cfg.initial = {"seed": init["seed"]}
        if init.get("spread") is not None:
            cfg.initial["spread"] = _finite("initial.spread", init["spread"], positive=True)

    th = raw.get("theta_initial")
    if th is not None:
        th = np.asarray(th, dtype=float)
        if th.shape != (n,) or not np.all(np.isfinite(th)):
            raise ParseError("theta_initial", f"expected {n} finite numbers")
        if abs(th.sum()) > 1e-12 * max(1.0, np.abs(th).sum()):
            raise ParseError("theta_initial", "phases must sum to zero")
        cfg.theta_initial = th.tolist()

    certs = raw.get("certificates", [])
    allowed = THEOREMS_OF[kind]
    for t in certs:
        if t not in allowed:
            raise ParseError("certificates", f"{t!r} does not apply to {kind.value} (allowed: {allowed})")
    cfg.certificates = list(certs)

    gaps = raw.get("kappa_from_gaps")
    if gaps is not None:
        if np.asarray(gaps, dtype=float).shape != (n,):
            raise ParseError("kappa_from_gaps", f"expected {n} numbers")
        cfg.kappa_from_gaps = [float(g) for g in gaps]

    out = raw.get("outputs", {})
    if not isinstance(out, dict) or set(out) - {"csv", "json"}:
        raise ParseError("outputs", "expected an object with 'csv' and/or 'json'")
    cfg.outputs = dict(out)
    for w in cfg.warnings:
        warnings.warn(w, stacklevel=2)
    return cfg


def serialize(cfg: RunConfig) -> str:
    """Inverse of :func:`parse_config` (warnings are not stored)."""
    doc = asdict(cfg)
    doc.pop("warnings")
    doc["model"] = cfg.model.value
    doc = {"schema_version": SCHEMA_VERSION, **{k: v for k, v in doc.items() if v is not None}}
    return json.dumps(doc, indent=2, sort_keys=True)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def bundled_config(name: str = "fig1") -> RunConfig:
    text = resources.files("hetagg").joinpath("data", f"{name}.json").read_text(encoding="utf-8")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return parse_config(text)


# -- initial data ------------------------------------------------------------

def _haar(rng, d):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph[None, :]


def sample_initial(seed: int, kind, d: int, N: int, spread: float | None = None) -> np.ndarray:
    """Seeded random ensemble for ``kind``.

    With ``spread=None`` the states are independent: normalised Gaussians on
    the sphere, Haar unitaries for the matrix model.  A positive ``spread``
    clusters them around a random base point (Gaussian offsets of relative
    size ``spread`` for spheres, ``base @ expm(spread * H)`` with Gaussian
    skew-Hermitian ``H`` for unitaries), which is how small initial diameters
    are produced.
    """
    kind = ModelKind(kind)
    rng = np.random.default_rng(seed)
    if kind is ModelKind.KURAMOTO:
        th = rng.uniform(-np.pi, np.pi, N) if spread is None else spread * rng.standard_normal(N)
        return th - th.mean()
    if kind is ModelKind.LOHE_MATRIX:
        if spread is None:
            return np.stack([_haar(rng, d) for _ in range(N)])
        base = _haar(rng, d)
        out = []
        for _ in range(N):
            h = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            out.append(base @ expm(0.5 * spread * (h - h.conj().T)))
        return np.stack(out)
    if kind is ModelKind.REAL_SPHERE:
        x = rng.standard_normal((N, 2 * d))
        if spread is not None:
            base = rng.standard_normal(2 * d)
            x = base + spread * np.linalg.norm(base) * x
    else:
        x = rng.standard_normal((N, d)) + 1j * rng.standard_normal((N, d))
        if spread is not None:
            base = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            x = base + spread * np.linalg.norm(base) * x
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def sample_frequencies(seed: int, N: int, spread: float) -> np.ndarray:
    a = np.random.default_rng(seed).uniform(-spread, spread, N)
    return a - a.mean()


@dataclass
class Setup:
    """Concrete arrays derived from a config."""

    kind: ModelKind
    a: np.ndarray
    coupling: Coupling
    initial: np.ndarray
    theta0: np.ndarray
    omegas: np.ndarray | None = None


def block_frequencies(a, d, blocks=None):
    """Real-sphere frequency matrices whose complex drifts are ``Xi + i a_j``.

    The offsets enter ``build_frequency`` with a minus sign, see
    :mod:`hetagg.complexify`.
    """
    blocks = blocks or {}
    A = np.asarray(blocks.get("A", np.zeros((d, d))), dtype=float)
    B = np.asarray(blocks.get("B", np.zeros((d, d))), dtype=float)
    return np.stack([build_frequency(A, B, -aj) for aj in a])


def materialize(cfg: RunConfig) -> Setup:
    kind, n, d = cfg.model, cfg.N, cfg.d
    if "values" in cfg.frequencies:
        a = np.asarray(cfg.frequencies["values"], dtype=float)
        a = a - a.mean()
    else:
        a = sample_frequencies(cfg.frequencies["seed"], n, cfg.frequencies["spread"])
    theta0 = np.zeros(n) if cfg.theta_initial is None else np.asarray(cfg.theta_initial, dtype=float)
    if kind is ModelKind.KURAMOTO:
        x0 = theta0
    elif "values" in cfg.initial:
        if kind is ModelKind.REAL_SPHERE:
            x0 = np.asarray(cfg.initial["values"], dtype=float)
        else:
            x0 = _complex_array("initial.values", cfg.initial["values"])
        if kind is not ModelKind.LOHE_MATRIX:
            x0 = x0 / np.linalg.norm(x0, axis=-1, keepdims=True)
    else:
        x0 = sample_initial(cfg.initial["seed"], kind, d, n, cfg.initial.get("spread"))
    omegas = block_frequencies(a, d, cfg.blocks) if kind is ModelKind.REAL_SPHERE else None
    kappa = cfg.kappa
    if cfg.kappa_from_gaps is not None:
        kappa = calibrate_kappa(cfg.kappa_from_gaps, a)
    return Setup(kind, a, Coupling(kappa, cfg.kappa1), x0, theta0, omegas)


def certificates_for(setup: Setup, theorems, d) -> list:
    if setup.kind is ModelKind.KURAMOTO:
        diam = {"R0": float(np.abs(np.exp(1j * setup.initial).mean())),
                "D_theta": float(phase_diameter(setup.initial))}
    else:
        diam = initial_diameters(setup.kind, setup.initial, setup.theta0, setup.omegas)
    return [check_hypotheses(t, setup.a, setup.coupling, diam, d=d) for t in theorems]


def draw_certified(theorem_id: str, seed: int, N: int = 4, d: int = 2, max_tries: int = 500):
    """Seeded random configuration that passes ``check_hypotheses(theorem_id)``.

    Couplings are drawn in ``[1, 3]``, the heterogeneity ratio ``D(a)/kappa``
    in ``[0.05, 0.25]`` and initial states clustered with spread in
    ``[0.01, 0.08]``; draws are repeated until the certificate passes.
    Returns ``(setup, certificate)``.
    """
    kind = next(k for k, ths in THEOREMS_OF.items() if theorem_id in ths)
    rng = np.random.default_rng([seed, sum(map(ord, theorem_id))])
    for _ in range(max_tries):
        kappa = rng.uniform(1.0, 3.0)
        kappa1 = kappa * rng.uniform(0.0, 0.3) if kind is ModelKind.LOHE_HERMITIAN_SPHERE else 0.0
        a = rng.uniform(-1.0, 1.0, N)
        a -= a.mean()
        a *= rng.uniform(0.05, 0.25) * kappa / np.ptp(a)
        x0 = sample_initial(int(rng.integers(2 ** 63)), kind, d, N, spread=rng.uniform(0.01, 0.08))
        theta0 = np.zeros(N)
        omegas = block_frequencies(a, d) if kind is ModelKind.REAL_SPHERE else None
        setup = Setup(kind, a, Coupling(kappa, kappa1), x0, theta0, omegas)
        cert = certificates_for(setup, [theorem_id], d)[0]
        if cert.verdict:
            return setup, cert
    raise RuntimeError(f"no certified configuration for {theorem_id} in {max_tries} draws")


# -- execution ---------------------------------------------------------------

def _cplx(x):
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return np.stack([x.real, x.imag], axis=-1).tolist()
    return x.tolist()


def _json_clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_clean(obj.item())
    return obj


def render_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(["%.17g" % v for v in row])
    return buf.getvalue()


def _series(setup, traj, paired):
    t = traj.times
    if paired is None:
        d_theta = phase_diameter(traj.states)
        cols = (t, d_theta, d_theta, d_theta, traj.monitors["max_rhs_norm"],
                traj.monitors["phase_sum"], traj.monitors["manifold_drift"])
    else:
        diam = paired.diameters
        cols = (t, diam.D_theta, diam.D_primary, diam.aux(setup.kind), traj.monitors["max_rhs_norm"],
                paired.kuramoto.monitors["phase_sum"], traj.monitors["manifold_drift"])
    return np.column_stack([np.asarray(c, dtype=float) for c in cols])


@dataclass
class RunSummary:
    config: RunConfig
    kappa: float
    convergence: object
    certificates: list
    limits: object = None
    rate_fits: dict = field(default_factory=dict)
    final_states: np.ndarray | None = None
    theta_inf: np.ndarray | None = None
    rows: np.ndarray | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        conv = self.convergence
        doc = {
            "schema_version": SCHEMA_VERSION,
            "model": self.config.model.value,
            "kappa": self.kappa,
            "kappa_calibrated": self.config.kappa_from_gaps is not None,
            "warnings": list(self.config.warnings),
            "convergence": None if conv is None else {
                "converged": conv.converged, "t_converged": conv.t_converged,
                "final_rhs_norm": conv.final_rhs_norm, "tol": conv.tol, "window": conv.window},
            "certificates": [c.to_dict() for c in self.certificates],
            "rate_fits": {k: asdict(v) if v is not None else None for k, v in self.rate_fits.items()},
            "final_states": None if self.final_states is None else _cplx(self.final_states),
            "theta_inf": None if self.theta_inf is None else self.theta_inf.tolist(),
        }
        if self.limits is not None:
            doc["limits"] = {"residuals": self.limits.residuals}
            if self.limits.geodesics is not None:
                doc["limits"]["delta_theta"] = self.limits.geodesics.tolist()
            if self.config.model is not ModelKind.LOHE_MATRIX and self.final_states is not None:
                w = self.final_states
                if self.config.model is ModelKind.REAL_SPHERE:
                    w = w[:, : w.shape[1] // 2] + 1j * w[:, w.shape[1] // 2:]
                doc["limits"]["gram_modulus"] = np.abs(w @ np.conj(w).T).tolist()
        if self.error is not None:
            doc["error"] = self.error
        return _json_clean(doc)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _write(summary: RunSummary, cfg: RunConfig):
    if cfg.outputs.get("csv") and summary.rows is not None:
        text = render_csv(summary.rows)
        if summary.error is not None:
            text += f"# error: {summary.error}\n"
        Path(cfg.outputs["csv"]).write_text(text, encoding="utf-8")
    if cfg.outputs.get("json"):
        Path(cfg.outputs["json"]).write_text(summary.to_json(), encoding="utf-8")


def run_scenario(cfg: RunConfig, write: bool = True) -> RunSummary:
    """Integrate a configured scenario and evaluate all diagnostics.

    On a numeric failure the records gathered so far are written together
    with an ``error`` marker and the :class:`NumericError` is re-raised.
    """
    setup = materialize(cfg)
    certs = certificates_for(setup, cfg.certificates, cfg.d)
    summary = RunSummary(config=cfg, kappa=setup.coupling.kappa, convergence=None, certificates=certs)
    icfg = cfg.integrator()
    try:
        if setup.kind is ModelKind.KURAMOTO:
            traj = run(ModelKind.KURAMOTO, setup.initial, setup.a, setup.coupling, icfg)
            paired = None
        else:
            paired = paired_run(setup.kind, setup.initial, setup.theta0,
                                a=None if setup.kind is ModelKind.REAL_SPHERE else setup.a,
                                c=setup.coupling, cfg=icfg, omegas=setup.omegas)
            traj = paired.primary
    except NumericError as exc:
        part = getattr(exc, "trajectory", None)
        summary.error = f"numeric failure at t={getattr(exc, 't', float('nan')):.6g}: {exc}"
        if part is not None and part.states is not None:
            nan = np.full(part.times.size, np.nan)
            summary.rows = np.column_stack([part.times, nan, nan, nan, part.monitors["max_rhs_norm"],
                                            part.monitors.get("phase_sum", nan), part.monitors["manifold_drift"]])
        if write:
            _write(summary, cfg)
        raise

    summary.rows = _series(setup, traj, paired)
    conv = detect_convergence(traj, tol=cfg.convergence_tol, window=cfg.convergence_window)
    summary.convergence = conv
    summary.final_states = traj.final
    theta = traj.states if paired is None else paired.theta
    summary.theta_inf = np.asarray(theta[-1])
    kappa_eff = setup.coupling.kappa if paired is None else paired.kappa_eff
    if conv.converged:
        if paired is not None:
            summary.limits = verify_limits(setup.kind, traj.final, summary.theta_inf, setup.a, kappa_eff, conv)
            series = {"D_aux": paired.diameters.aux(setup.kind), "max_rhs_norm": traj.monitors["max_rhs_norm"]}
        else:
            summary.limits = verify_limits(ModelKind.KURAMOTO, None, summary.theta_inf, setup.a, kappa_eff, conv)
            series = {"max_rhs_norm": traj.monitors["max_rhs_norm"]}
        for key, vals in series.items():
            try:
                summary.rate_fits[key] = fit_decay_rate(traj.times, vals)
            except FitError:
                summary.rate_fits[key] = None
    if write:
        _write(summary, cfg)
    return summary


def with_outputs(cfg: RunConfig, csv_path=None, json_path=None) -> RunConfig:
    out = copy.deepcopy(cfg)
    out.outputs = {k: str(v) for k, v in (("csv", csv_path), ("json", json_path)) if v is not None}
    return out
