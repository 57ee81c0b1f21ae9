"""
End-to-end runs of every shipped config. These take minutes; deselect with
``pytest -m "not slow"``.
"""

from pathlib import Path

import pytest

from balance_flux.config import parse_config
from balance_flux.verify import convergence_study, run_suite

CONFIG_DIR = Path(__file__).resolve().parents[2] / "config"
VERIFY_CONFIGS = [
    "burgers_shock_1d.json",
    "burgers_oblique_disk.json",
    "burgers_2d_ledger.json",
    "shallow_water_dam_break.json",
    "constant_state.json",
    "advection_step.json",
    "burgers_expansion_shock.json",
]

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("name", VERIFY_CONFIGS)
def test_shipped_config_verifies(name):
    config = parse_config(CONFIG_DIR / name)
    reports = run_suite(config)
    assert reports
    failed = {r.claim: [c.name for c in r.cases if not c.passed] for r in reports if not r.passed}
    assert not failed, failed


def test_ledger_balance_is_exact_to_roundoff():
    config = parse_config(CONFIG_DIR / "burgers_2d_ledger.json")
    (discrete,) = [r for r in run_suite(config) if r.claim == "discrete-balance"]
    assert all(case.metric <= 1e-12 for case in discrete.cases)


def test_expansion_shock_is_weak_but_not_entropic():
    """The expansion shock passes the weak form exactly like an admissible solution"""
    config = parse_config(CONFIG_DIR / "burgers_expansion_shock.json")
    (weak,) = [r for r in run_suite(config) if r.claim == "weak-form"]
    assert weak.passed
    assert max(case.metric for case in weak.cases) <= 1e-8


def test_default_convergence_study():
    config = parse_config(CONFIG_DIR / "convergence.json")
    report, rows = convergence_study(config.convergence, 0.45, config.tolerances.quadrature_tol)
    assert report.passed, [(c.name, c.values) for c in report.cases]
    assert len(rows) == 12
