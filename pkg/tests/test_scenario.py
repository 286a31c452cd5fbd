import json
import warnings
from pathlib import Path

import numpy as np
import pytest

from hetagg.models import ModelKind
from hetagg.scenario import (
    CSV_COLUMNS, ParseError, bundled_config, materialize, parse_config, run_scenario, sample_initial,
    serialize, with_outputs,
)
from hetagg.statespace import NumericError, unitarity_drift

GOLDEN = Path(__file__).parent / "data" / "sample_initial_seed42.json"


def _cfg(**kw):
    doc = {"model": "complex_sphere", "d": 2, "N": 3, "kappa": 1.0}
    doc.update(kw)
    return json.dumps(doc)


def test_defaults_filled():
    cfg = parse_config(_cfg())
    assert cfg.dt == 0.01 and cfg.renormalize_every == 1 and cfg.theta_initial is None
    assert cfg.frequencies == {"seed": 0, "spread": 0.0}
    setup = materialize(cfg)
    assert np.all(setup.theta0 == 0)


@pytest.mark.parametrize("doc,field", [
    ({"model": "complex_sphere", "d": 2, "N": 3}, "kappa"),
    ({"model": "complex_sphere", "d": 2, "N": 3, "kappa": 1, "colour": 1}, "colour"),
    ({"model": "nope", "d": 2, "N": 3, "kappa": 1}, "model"),
    ({"model": "complex_sphere", "d": 2, "N": 3, "kappa": "x"}, "kappa"),
    ({"model": "complex_sphere", "d": 2, "N": 3, "kappa": 1, "dt": -1}, "dt"),
    ({"model": "complex_sphere", "d": 2, "N": 3, "kappa": 1, "frequencies": {"values": [1, 2]}}, "frequencies.values"),
    ({"model": "complex_sphere", "d": 2, "N": 3, "kappa": 1, "theta_initial": [1, 1, 1]}, "theta_initial"),
    ({"model": "complex_sphere", "d": 2, "N": 3, "kappa": 1, "certificates": ["T5.1"]}, "certificates"),
    ({"model": "complex_sphere", "d": 2, "N": 2, "kappa": 1, "initial": {"values": [[[1, 0]], [[1, 0]]]}},
     "initial.values"),
    ({"model": "reduced_sl_xi", "d": 2, "N": 3, "kappa": 1}, "model"),
    ({"model": "complex_sphere", "d": 2, "N": 3, "kappa": 1, "schema_version": 9}, "schema_version"),
])
def test_schema_violations_name_the_field(doc, field):
    with pytest.raises(ParseError) as info:
        parse_config(json.dumps(doc))
    assert info.value.field == field


def test_mean_subtraction_warns():
    with pytest.warns(UserWarning, match="zero mean"):
        cfg = parse_config(_cfg(frequencies={"values": [1.0, 2.0, 3.0]}))
    assert materialize(cfg).a == pytest.approx([-1.0, 0.0, 1.0])


def test_bundled_figure_config():
    cfg = bundled_config("fig1")
    setup = materialize(cfg)
    assert (cfg.d, cfg.N) == (2, 4)
    assert cfg.frequencies["values"] == [-0.2831, -0.0196, 0.0708, 0.2318]
    assert setup.initial[0] == pytest.approx(np.array([0.3895 - 0.9178j, -0.0770 + 0.0004j]) /
                                             np.linalg.norm([0.3895 - 0.9178j, -0.0770 + 0.0004j]))
    assert 0.9 < setup.coupling.kappa < 1.1
    assert len(cfg.warnings) == 2


@pytest.mark.parametrize("text", [
    _cfg(),
    _cfg(frequencies={"values": [-1.0, 0.5, 0.5]}, theta_initial=[0.1, -0.1, 0.0], certificates=["P3.1"]),
    json.dumps({"model": "real_sphere", "d": 1, "N": 2, "kappa": 2.0, "blocks": {"A": [[0.0]], "B": [[0.5]]},
                "initial": {"seed": 3, "spread": 0.1}, "outputs": {"csv": "x.csv"}}),
])
def test_round_trip(text):
    cfg = parse_config(text)
    assert parse_config(serialize(cfg)) == cfg


def test_sample_initial_manifolds():
    for seed in (0, 1, 2 ** 63 + 5):
        w = sample_initial(seed, ModelKind.SCHRODINGER_LOHE, 3, 6)
        assert np.abs(np.linalg.norm(w, axis=1) - 1).max() < 1e-14
        x = sample_initial(seed, ModelKind.REAL_SPHERE, 2, 6, spread=0.1)
        assert x.dtype == float and np.abs(np.linalg.norm(x, axis=1) - 1).max() < 1e-14
        u = sample_initial(seed, ModelKind.LOHE_MATRIX, 3, 5)
        assert unitarity_drift(u) < 1e-13
    assert np.array_equal(sample_initial(9, ModelKind.LOHE_MATRIX, 2, 3), sample_initial(9, ModelKind.LOHE_MATRIX, 2, 3))


def test_sample_initial_golden():
    golden = json.loads(GOLDEN.read_text())
    for kind, ref in golden.items():
        got = sample_initial(42, kind, 2, 4)
        ref = np.asarray(ref)
        if ref.shape[-1] == 2 and kind != "real_sphere":
            ref = ref[..., 0] + 1j * ref[..., 1]
        assert np.array_equal(got, ref), kind


def test_csv_rows_and_determinism(tmp_path):
    text = _cfg(t_end=2.0, dt=0.01, record_stride=3, frequencies={"seed": 1, "spread": 0.2},
                initial={"seed": 4}, certificates=["P3.1"])
    outs = []
    for tag in ("a", "b"):
        cfg = with_outputs(parse_config(text), tmp_path / f"{tag}.csv", tmp_path / f"{tag}.json")
        run_scenario(cfg)
        outs.append(((tmp_path / f"{tag}.csv").read_bytes(), (tmp_path / f"{tag}.json").read_bytes()))
    assert outs[0] == outs[1]
    lines = outs[0][0].decode().splitlines()
    assert lines[0].split(",") == list(CSV_COLUMNS)
    assert len(lines) - 1 == int(np.floor(2.0 / (0.01 * 3))) + 1
    summary = json.loads(outs[0][1])
    assert summary["certificates"][0]["theorem_id"] == "P3.1"
    assert np.asarray(summary["final_states"]).shape == (3, 2, 2)


def test_homogeneous_scenario():
    cfg = parse_config(_cfg(model="schrodinger_lohe", t_end=40.0, initial={"seed": 2, "spread": 0.3}))
    s = run_scenario(cfg, write=False)
    assert s.convergence.converged
    assert s.rows[-1, 2] < 1e-8 and s.rows[-1, 3] < 1e-8


def test_matrix_scenario_regression():
    cfg = parse_config(json.dumps({"model": "lohe_matrix", "d": 2, "N": 3, "kappa": 5.0,
                                   "frequencies": {"seed": 7, "spread": 0.5}, "initial": {"seed": 7},
                                   "t_end": 30.0}))
    s = run_scenario(cfg, write=False)
    assert s.convergence.converged
    for key in ("offdiag", "diag_spread", "scalar_modulus", "phase_match"):
        assert s.limits.residuals[key] < 1e-6


def test_kuramoto_scenario():
    cfg = parse_config(json.dumps({"model": "kuramoto", "d": 1, "N": 4, "kappa": 2.0,
                                   "frequencies": {"seed": 3, "spread": 0.4},
                                   "theta_initial": [0.3, -0.1, -0.1, -0.1], "certificates": ["P2.1ii"],
                                   "t_end": 40.0}))
    s = run_scenario(cfg, write=False)
    assert s.certificates[0].verdict and s.convergence.converged
    assert s.limits.residuals["kuramoto_locked"] < 1e-8


def test_numeric_failure_flushes_partial_output(tmp_path):
    text = _cfg(model="schrodinger_lohe", kappa=1000.0, dt=1.0, t_end=50.0, renormalize_every=0)
    cfg = with_outputs(parse_config(text), tmp_path / "f.csv", tmp_path / "f.json")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        with pytest.raises(NumericError):
            run_scenario(cfg)
    assert "# error:" in (tmp_path / "f.csv").read_text()
    assert "error" in json.loads((tmp_path / "f.json").read_text())
