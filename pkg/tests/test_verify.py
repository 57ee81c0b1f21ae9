import numpy as np
import pytest

from balance_flux.config import ConvergenceSpec, validate_config
from balance_flux.exact import Cylinder
from balance_flux.exceptions import PreconditionError
from balance_flux.geometry import Box, foliate
from balance_flux.verify import (
    FaceSection,
    applicable_claims,
    check_balance_exact,
    check_box_corollary,
    check_discrete_balance,
    check_flux_divergence,
    check_instantaneous_jump,
    check_time_continuity,
    check_trace_lipschitz,
    check_weak_form,
    convergence_study,
    errors_decrease,
    merge_reports,
    resolve_t_grid,
    run_suite,
)

TOL = 1e-9


class BrokenSampler:
    """Sampler whose masses cannot be evaluated"""

    provenance = "broken"

    def face_flux(self, face, t1, t2, tol):
        raise RuntimeError("no fluxes here")

    def mass(self, domain, t, tol):
        raise RuntimeError("no masses here")

    def state_range(self):
        return np.zeros(1), np.ones(1)

    def state_bound(self):
        return 1.0

    def flux_bound(self, face):
        return np.ones(1)


def test_balance_on_domain_and_leaves(burgers_shock, unit_interval):
    foliation = foliate(unit_interval, 0.5, 0.2, 5)
    report = check_balance_exact(burgers_shock, unit_interval, 0.0, 1.0, TOL, foliation)
    assert report.passed
    assert report.claim == "balance"
    assert len(report.cases) == 7
    geometry = report.cases[1]
    assert geometry.name == "foliation geometry"
    assert geometry.passed
    assert geometry.values["quadrature_order"] == 8
    domain = report.cases[0]
    assert domain.values["mass_change"] == pytest.approx([0.5], abs=1e-9)
    assert domain.values["outward_flux"] == pytest.approx([-0.5], abs=1e-9)
    assert len(report.inputs_digest) == 64


def test_balance_for_shallow_water(dam_break):
    report = check_balance_exact(dam_break, Box((-0.5,), (0.5,)), 0.05, 0.25, 1e-8)
    assert report.passed, report.cases[0]


def test_failing_case_does_not_abort(unit_interval):
    report = check_balance_exact(BrokenSampler(), unit_interval, 0.0, 1.0, TOL)
    assert not report.passed
    case = report.cases[0]
    assert case.provenance == "broken"
    assert case.error == "RuntimeError: no masses here"
    assert np.isnan(case.metric)


def test_lipschitz_on_section(burgers_shock, unit_interval):
    section = FaceSection(unit_interval, 0, 0.0, 0.5)
    report = check_trace_lipschitz(
        burgers_shock, 0.0, 1.0, [2, 4, 8, 16, 32, 64], TOL, section=section, exact_slope=1.0
    )
    assert report.passed
    names = [c.name for c in report.cases]
    assert names[-2:] == ["section axis 0 stabilization", "section axis 0 limit"]
    assert report.cases[-1].metric <= 1e-6
    assert report.notes


def test_lipschitz_on_foliation(shock_oracle, unit_interval):
    foliation = foliate(unit_interval, 0.5, 0.2, 5)
    report = check_trace_lipschitz(shock_oracle, 0.0, 1.0, [2, 4, 8], TOL, foliation=foliation)
    assert report.passed
    assert report.cases[0].values["analytic_bound"] == pytest.approx([2.0])


def test_lipschitz_on_ledger(shock_trajectory, unit_interval):
    """Ledger sections at mesh lines reproduce the exact slope to within the smearing"""
    section = FaceSection(unit_interval, 0, 0.0, 0.5)
    report = check_trace_lipschitz(
        shock_trajectory, 0.0, 1.0, [2, 4, 8], TOL, section=section, exact_slope=1.0, slope_tol=0.1
    )
    assert report.passed
    assert report.cases[0].provenance == "solver-ledger"


def test_lipschitz_needs_exactly_one_family(burgers_shock, unit_interval):
    with pytest.raises(PreconditionError):
        check_trace_lipschitz(burgers_shock, 0.0, 1.0, [2, 4, 8], TOL)
    with pytest.raises(PreconditionError):
        check_trace_lipschitz(
            burgers_shock,
            0.0,
            1.0,
            [2, 4, 8],
            TOL,
            foliation=foliate(unit_interval, 0.5, 0.2, 3),
            section=FaceSection(unit_interval, 0, 0.0, 0.5),
        )


def test_time_continuity(burgers_shock, unit_interval):
    report = check_time_continuity(burgers_shock, unit_interval.boundary_faces(), [0.0, 0.25, 0.5, 0.75, 1.0], TOL)
    assert report.passed
    assert report.cases[0].metric == pytest.approx(0.5, abs=1e-8)
    assert report.cases[0].tolerance == pytest.approx(1.0)


def test_instantaneous_jump(burgers_shock, burgers_rarefaction):
    assert check_instantaneous_jump(burgers_shock, [0.25], [1.0], 0.5).passed
    # the rarefaction is continuous at x = 0.25 once the fan has arrived
    smooth = check_instantaneous_jump(burgers_rarefaction, [0.25], [1.0], 0.5)
    assert not smooth.passed
    assert smooth.metric == pytest.approx(0.0, abs=1e-6)


def test_weak_form_trials(burgers_shock):
    cylinder = Cylinder(Box((-0.5,), (1.0,)), 0.1, 0.6)
    report = check_weak_form(burgers_shock, cylinder, 3, seed=5, tol=1e-8)
    assert report.passed
    assert report.seed == 5
    assert [c.name for c in report.cases] == ["trial 0", "trial 1", "trial 2"]


def test_weak_form_is_reproducible(burgers_rarefaction):
    cylinder = Cylinder(Box((-0.5,), (1.0,)), 0.1, 0.6)
    first = check_weak_form(burgers_rarefaction, cylinder, 2, seed=9)
    second = check_weak_form(burgers_rarefaction, cylinder, 2, seed=9)
    assert [c.values for c in first.cases] == [c.values for c in second.cases]
    assert first.inputs_digest == second.inputs_digest


def test_box_corollary_oracle(oblique_shock, unit_square):
    report = check_box_corollary(oblique_shock, unit_square, 0.0, 0.5, TOL)
    assert report.passed
    assert report.cases[0].provenance == "quadrature"


def test_box_corollary_ledger(oblique_trajectory):
    box = Box((0.25, 0.25), (0.75, 0.75))
    report = check_box_corollary(oblique_trajectory, box, 0.1, 0.2, 1e-12)
    assert report.passed
    assert report.cases[0].provenance == "solver-ledger"


def test_box_corollary_off_grid_fails_cleanly(oblique_trajectory):
    report = check_box_corollary(oblique_trajectory, Box((0.1, 0.25), (0.75, 0.75)), 0.1, 0.2, 1e-12)
    assert not report.passed
    assert report.cases[0].error.startswith("SamplerDomainError")


def test_flux_divergence_bounded(burgers_shock):
    report = check_flux_divergence(burgers_shock, [[0.25], [0.5]], [0.2, 0.1, 0.05], 0.0, 1.0, TOL)
    assert report.passed
    assert len(report.cases) == 6
    assert report.cases[0].metric == pytest.approx(1.0, abs=1e-6)


def test_discrete_balance(shock_trajectory):
    report = check_discrete_balance(shock_trajectory, 20, seed=3)
    assert report.passed
    assert [c.name for c in report.cases] == ["whole domain", "random unions"]
    assert report.cases[1].values["unions"] == 20
    assert report.seed == 3


def test_merge_reports(burgers_shock, unit_interval):
    first = check_balance_exact(burgers_shock, unit_interval, 0.0, 0.5, TOL)
    second = check_balance_exact(BrokenSampler(), unit_interval, 0.0, 0.5, TOL)
    merged = merge_reports([first, second])
    assert len(merged.cases) == 2
    assert not merged.passed
    with pytest.raises(PreconditionError):
        merge_reports([])
    other = check_time_continuity(burgers_shock, unit_interval.boundary_faces(), [0.0, 0.5], TOL)
    with pytest.raises(PreconditionError):
        merge_reports([first, other])


def test_convergence_study():
    spec = ConvergenceSpec(resolutions=[128, 256], cases=["advection-sine", "burgers-shock"])
    report, rows = convergence_study(spec)
    assert report.passed, [c.values for c in report.cases]
    assert [(r.case, r.N) for r in rows] == [
        ("advection-sine", 128),
        ("advection-sine", 256),
        ("burgers-shock", 128),
        ("burgers-shock", 256),
    ]
    assert rows[1].order >= 0.9
    # the discrete shock never reaches back to x = 1/4, so the ledger flux is exact
    assert rows[3].error <= 1e-12


def test_applicable_claims(config_data):
    config = validate_config(config_data("burgers_shock_1d.json"))
    assert applicable_claims(config) == [
        "balance",
        "time-continuity",
        "weak-form",
        "lipschitz-trace",
        "corollary-box",
        "flux-divergence",
        "discrete-balance",
    ]


def test_suite_isolates_failing_claims():
    config = validate_config(
        {
            "model": {"name": "burgers"},
            "domain": {"lower": [0.0], "upper": [1.0]},
            "oracle": {"u_l": [1.0], "u_r": [0.0]},
            "verify": {"checks": ["balance", "discrete-balance"], "t1": 0.0, "t2": 1.0},
        }
    )
    balance, discrete = run_suite(config)
    assert balance.passed
    assert not discrete.passed
    assert discrete.cases[0].name == "setup"
    assert "solver" in discrete.cases[0].error


@pytest.mark.parametrize(
    "errors, expected",
    [
        ([4e-3, 2e-3, 1e-3, 5e-4], True),
        ([4e-3, 2e-3, 2e-3, 1e-3], False),
        ([4e-3, 2e-3, 3e-3, 1e-3], False),
        ([1e-15, 0.0, 2e-16, 0.0], True),
        ([1e-3, 1e-4, 1e-5, 1e-4], False),
    ],
)
def test_refinement_errors_strictly_decrease(errors, expected):
    assert errors_decrease(errors, [32, 64, 128, 256]) is expected


def test_refinement_starts_at_coarsest_checked_level():
    # the 32 -> 64 pair is not checked
    assert errors_decrease([1e-3, 2e-3, 1e-3], [32, 64, 128])


def test_default_time_grid_reaches_the_ledger():
    config = validate_config(
        {
            "model": {"name": "burgers"},
            "domain": {"lower": [0.0], "upper": [1.0]},
            "oracle": {"u_l": [1.0], "u_r": [0.0]},
            "solver": {"mesh": {"lower": [-0.5], "upper": [1.5], "cells": [128]}, "t_end": 1.0},
            "verify": {"checks": ["time-continuity"], "t1": 0.0, "t2": 1.0},
        }
    )
    t_grid = resolve_t_grid(config)
    assert len(t_grid) == 11
    assert t_grid[0] == 0.0 and t_grid[-1] == 1.0
    (report,) = run_suite(config)
    assert report.passed, [(c.name, c.error) for c in report.cases]
    providers = {c.name: c.provenance for c in report.cases}
    assert providers["boundary (ledger)"] == "solver-ledger"
    assert providers["boundary"] == "quadrature"
