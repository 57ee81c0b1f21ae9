import math

import numpy as np
import pytest

from balance_flux.quadrature import (
    gauss_legendre,
    gauss_on_interval,
    integrate,
    piecewise_gauss_nodes,
    split_points,
    stable_sum,
)


def test_gauss_legendre_is_cached_and_read_only():
    nodes, weights = gauss_legendre(5)
    assert gauss_legendre(5)[0] is nodes
    assert math.fsum(weights) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        nodes[0] = 0.0


def test_gauss_on_interval_exactness():
    nodes, weights = gauss_on_interval(1.0, 3.0, 3)
    # exact up to degree 5
    assert math.fsum(weights * nodes**5) == pytest.approx((3.0**6 - 1.0) / 6.0, rel=1e-14)


def test_split_points():
    assert split_points(0.0, 1.0, [0.5, 0.5, 2.0, 0.0, 0.25]) == [0.0, 0.25, 0.5, 1.0]
    assert split_points(0.0, 1.0, None) == [0.0, 1.0]


def test_stable_sum_is_exactly_rounded():
    parts = [np.array([1e16, 1.0]), np.array([1.0, 1e-16]), np.array([-1e16, -1.0])]
    assert stable_sum(parts) == pytest.approx([1.0, 1e-16], rel=0, abs=0)


def test_integrate_step_with_breakpoint():
    """A jump listed as a breakpoint is integrated to roundoff"""
    result = integrate(lambda x: np.array([1.0 if x < 0.3 else 2.0, x]), 0.0, 1.0, 1e-12, breakpoints=[0.3])
    assert result.value == pytest.approx([0.3 + 2.0 * 0.7, 0.5], abs=1e-12)
    assert result.error <= 1e-12


def test_integrate_empty_interval():
    result = integrate(lambda x: np.array([x, x]), 2.0, 2.0, 1e-10)
    assert result.value == pytest.approx([0.0, 0.0])
    assert result.error == 0.0


def test_integrate_rejects_inverted_limits():
    with pytest.raises(ValueError):
        integrate(lambda x: np.array([x]), 1.0, 0.0, 1e-10)


def test_piecewise_nodes_fixed_shape_with_clipped_breaks():
    """Breaks outside [lo, hi] collapse to zero-length pieces with zero weight"""
    lo, hi = np.array([0.0, 1.0]), np.array([1.0, 2.0])
    breaks = np.array([[0.5], [5.0]])
    nodes, weights = piecewise_gauss_nodes(lo, hi, breaks, 4, 2)
    assert nodes.shape == weights.shape == (2, 2 * 2 * 4)
    assert weights.sum(axis=-1) == pytest.approx([1.0, 1.0])
    # x^7 is integrated exactly on every piece
    assert np.sum(weights * nodes**7, axis=-1) == pytest.approx([1.0 / 8.0, (2.0**8 - 1.0) / 8.0], rel=1e-13)


def test_piecewise_nodes_without_breaks():
    nodes, weights = piecewise_gauss_nodes(np.array(0.0), np.array(2.0), np.zeros(0), 3, 1)
    assert nodes.shape == (3,)
    assert math.fsum(weights) == pytest.approx(2.0)
