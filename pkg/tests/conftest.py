import functools

import numpy as np
import pytest

from hetagg.integrate import IntegratorConfig, run
from hetagg.models import ModelKind
from hetagg.reduction import initial_diameters, paired_run
from hetagg.scenario import bundled_config, draw_certified, run_scenario

N_SEEDS = 20
CERT_CFG = IntegratorConfig(dt=0.01, t_end=40.0)


@functools.lru_cache(maxsize=None)
def certified_run(theorem_id: str, seed: int, with_aux: bool = True):
    """Cached ``(setup, certificate, paired)`` for a seeded certified draw.

    Kuramoto draws return the plain trajectory in place of the paired run.
    """
    setup, cert = draw_certified(theorem_id, seed)
    if setup.kind is ModelKind.KURAMOTO:
        return setup, cert, run(ModelKind.KURAMOTO, setup.initial, setup.a, setup.coupling, CERT_CFG)
    paired = paired_run(setup.kind, setup.initial, setup.theta0,
                        a=None if setup.omegas is not None else setup.a,
                        c=setup.coupling, cfg=CERT_CFG, omegas=setup.omegas,
                        integrate_auxiliary=with_aux)
    return setup, cert, paired


@functools.lru_cache(maxsize=None)
def fig1_summary():
    return run_scenario(bundled_config("fig1"), write=False)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def report(label: str, ok: bool, detail: str = ""):
    print(f"[{'PASS' if ok else 'FAIL'}] {label}" + (f": {detail}" if detail else ""))
    return ok


__all__ = ["certified_run", "fig1_summary", "report", "initial_diameters", "N_SEEDS", "CERT_CFG"]
