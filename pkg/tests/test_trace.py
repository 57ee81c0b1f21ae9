import numpy as np
import pytest

from balance_flux.exceptions import PreconditionError
from balance_flux.exact import OracleSampler
from balance_flux.geometry import Box, Disk, foliate
from balance_flux.trace import (
    FluxTrace,
    TraceProfile,
    analytic_lipschitz_bound,
    estimate_lipschitz,
    face_flux_profile,
    flux_trace,
    time_continuity_bound,
    time_modulus,
    trace_profile,
)

TOL = 1e-9


def _profile(ys, values):
    samples = tuple(FluxTrace(np.array([v]), y, 0.0, 1.0, "test", 0.0) for y, v in zip(ys, values))
    return TraceProfile(samples, 0.0, 1.0, TOL)


def test_net_outward_flux_of_interval(shock_oracle, unit_interval):
    """Mass 1/2 enters through x = 0 over [0, 1]"""
    trace = flux_trace(shock_oracle, unit_interval.boundary_faces(), 0.0, 1.0, TOL)
    assert trace.value == pytest.approx([-0.5], abs=1e-9)
    assert trace.provenance == "quadrature"
    assert trace.error_estimate <= TOL


def test_flux_trace_requires_faces(shock_oracle):
    with pytest.raises(PreconditionError):
        flux_trace(shock_oracle, [], 0.0, 1.0, TOL)


def test_face_flux_profile(shock_oracle, unit_interval):
    profile = face_flux_profile(shock_oracle, unit_interval, 0, [0.0, 0.25, 0.5], 0.0, 1.0, TOL)
    assert profile.values[:, 0] == pytest.approx([0.5, 0.25, 0.0], abs=1e-9)
    assert list(profile.ys) == [0.0, 0.25, 0.5]


def test_lipschitz_of_shock_section(shock_oracle, unit_interval):
    """F(x) = 1/2 - x on [0, 1/2]: every first difference has slope 1"""
    positions = np.linspace(0.0, 0.5, 9)
    profile = face_flux_profile(shock_oracle, unit_interval, 0, positions, 0.0, 1.0, TOL)
    report = estimate_lipschitz(profile)
    assert report.value == pytest.approx(1.0, abs=1e-6)
    assert [k for k, _ in report.history] == [2, 4, 8]
    assert report.growth() == pytest.approx([1.0, 1.0], abs=1e-6)


def test_lipschitz_ignores_repeated_parameters():
    report = estimate_lipschitz(_profile([0.0, 0.5, 0.5, 1.0], [0.0, 1.0, 3.0, 1.5]))
    assert report.value == pytest.approx(3.0)


def test_lipschitz_needs_three_samples():
    with pytest.raises(PreconditionError):
        estimate_lipschitz(_profile([0.0, 1.0], [0.0, 1.0]))


def test_profile_must_be_sorted():
    with pytest.raises(PreconditionError):
        _profile([0.0, 1.0, 0.5], [0.0, 1.0, 2.0])


def test_trace_profile_over_foliation(shock_oracle, unit_interval):
    """h(rho) = -(1/2 - |rho|) for rho < 0 and -1/2 for rho >= 0"""
    foliation = foliate(unit_interval, 0.5, 0.2, 5)
    profile = trace_profile(shock_oracle, foliation, 0.0, 1.0, 4, TOL)
    assert profile.ys == pytest.approx([-0.1, -0.05, 0.0, 0.05, 0.1])
    assert profile.values[:, 0] == pytest.approx([-0.4, -0.45, -0.5, -0.5, -0.5], abs=1e-9)
    bound = analytic_lipschitz_bound(shock_oracle, foliation)
    assert bound == pytest.approx([2.0])
    assert estimate_lipschitz(profile, bound).value <= 2.0


def test_coarse_profile_nests_in_refined_profile(oblique_shock):
    sampler = OracleSampler(oblique_shock)
    foliation = foliate(Box((0.0, 0.0), (1.0, 1.0)), 0.5, 0.2, 3)
    coarse = trace_profile(sampler, foliation, 0.0, 0.5, 2, TOL)
    fine = trace_profile(sampler, foliation, 0.0, 0.5, 4, TOL)
    assert coarse.ys == pytest.approx(fine.ys[::2], abs=1e-15)
    assert coarse.values == pytest.approx(fine.values[::2], abs=2 * TOL)


def test_trace_profile_on_disk(oblique_shock):
    """Balance on every concentric leaf: h = m(0) - m(1/2)"""
    sampler = OracleSampler(oblique_shock)
    foliation = foliate(Disk((0.0, 0.0), 1.0), 0.5, 0.2, 3)
    profile = trace_profile(sampler, foliation, 0.0, 0.5, 2, TOL)
    for rho, trace in zip(profile.ys, profile.samples):
        leaf = foliation.domain_at(rho)
        change = sampler.mass(leaf, 0.5, 1e-10).value - sampler.mass(leaf, 0.0, 1e-10).value
        assert trace.value + change == pytest.approx([0.0], abs=1e-8)


def test_trace_of_square_matches_mass_change(oblique_shock, unit_square):
    sampler = OracleSampler(oblique_shock)
    trace = flux_trace(sampler, unit_square.boundary_faces(), 0.0, 1.0, TOL)
    assert trace.value == pytest.approx([-0.5], abs=1e-8)


def test_time_modulus_is_additive(shock_oracle, unit_interval):
    faces = unit_interval.boundary_faces()
    increments = time_modulus(shock_oracle, faces, 0.0, [0.0, 0.25, 0.5, 1.0], TOL)
    assert [inc.dt for inc in increments] == [0.25, 0.25, 0.5]
    total = sum(float(inc.dh[0]) for inc in increments)
    assert total == pytest.approx(flux_trace(shock_oracle, faces, 0.0, 1.0, TOL).value[0], abs=1e-9)
    bound = time_continuity_bound(shock_oracle, faces)
    assert bound == pytest.approx([1.0])
    assert all(inc.ratio[0] <= bound[0] for inc in increments)


def test_time_modulus_requires_sorted_times(shock_oracle, unit_interval):
    with pytest.raises(PreconditionError):
        time_modulus(shock_oracle, unit_interval.boundary_faces(), 0.0, [0.5, 0.25], TOL)


def test_profile_subsample():
    profile = _profile([0.0, 0.25, 0.5, 0.75, 1.0], [0.0, 1.0, 2.0, 3.0, 4.0])
    assert list(profile.subsample(2).ys) == [0.0, 0.5, 1.0]


def test_trace_rejects_inverted_interval(shock_oracle):
    with pytest.raises(PreconditionError):
        flux_trace(shock_oracle, Box((0.0,), (1.0,)).boundary_faces(), 1.0, 0.0, TOL)
