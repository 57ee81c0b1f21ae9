import math

import numpy as np
import pytest

from balance_flux.exceptions import GeometryError, PreconditionError
from balance_flux.geometry import (
    BOX_INFLATION,
    AxisFace,
    BoundaryFoliation,
    Box,
    Disk,
    SphereFace,
    audit_foliation,
    axis_face,
    boundary_faces,
    boundary_measure,
    foliate,
    outward_normal,
    surface_quadrature,
)


@pytest.mark.parametrize("lower, upper", [((1.0,), (0.0,)), ((0.0,), (0.0,)), ((0.0, 0.0), (1.0,))])
def test_invalid_boxes(lower, upper):
    with pytest.raises(GeometryError):
        Box(lower, upper)


def test_degenerate_box_allowed_on_request():
    box = Box.degenerate((0.0, 0.5), (1.0, 0.5))
    assert box.measure == 0.0


def test_box_faces_and_orientation(unit_square):
    faces = boundary_faces(unit_square)
    assert len(faces) == 4
    normals = [tuple(f.unit_normal) for f in faces]
    assert normals == [(-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0)]
    assert [f.measure for f in faces] == [1.0, 1.0, 1.0, 1.0]
    assert boundary_measure(unit_square) == 4.0


def test_interval_faces_are_points(unit_interval):
    faces = unit_interval.boundary_faces()
    assert [f.position for f in faces] == [0.0, 1.0]
    assert [f.orientation for f in faces] == [-1, 1]
    assert boundary_measure(unit_interval) == 2.0


def test_outward_normals():
    box = Box((0.0, 0.0), (2.0, 1.0))
    right = axis_face(box, 0, 2.0, 1)
    assert outward_normal(right, [2.0, 0.5]) == pytest.approx([1.0, 0.0])
    circle = Disk((0.0, 0.0), 1.0).boundary_faces()[0]
    assert outward_normal(circle, [0.0, 1.0]) == pytest.approx([0.0, 1.0])
    assert outward_normal(circle.reversed(), [0.0, 1.0]) == pytest.approx([0.0, -1.0])


def test_outward_normal_off_face(unit_square):
    face = axis_face(unit_square, 0, 1.0)
    with pytest.raises(PreconditionError):
        outward_normal(face, [0.5, 0.5])


def test_circle_quadrature_weights_sum_to_circumference():
    quad = surface_quadrature(Disk((0.3, -0.2), 1.0).boundary_faces()[0], 8)
    assert math.fsum(quad.weights) == pytest.approx(2.0 * math.pi, rel=1e-14)
    radii = np.linalg.norm(quad.nodes - np.array([0.3, -0.2]), axis=-1)
    assert radii == pytest.approx(np.ones_like(radii))
    # outward normals point along the radius
    assert np.einsum("ij,ij->i", quad.normals, quad.nodes - np.array([0.3, -0.2])) == pytest.approx(radii)


def test_axis_face_quadrature_integrates_polynomials():
    face = AxisFace(0, 2.0, ((0.0, 3.0),))
    quad = surface_quadrature(face, 4)
    assert math.fsum(quad.weights) == pytest.approx(3.0)
    # int_0^3 y^5 dy = 3^6 / 6
    assert math.fsum(quad.weights * quad.nodes[:, 1] ** 5) == pytest.approx(3.0**6 / 6.0, rel=1e-13)
    assert np.all(quad.nodes[:, 0] == 2.0)


def test_sphere_face_contains_wraps_angles():
    arc = SphereFace((0.0, 0.0), 2.0, (0.5 * math.pi, 1.5 * math.pi))
    assert arc.contains([-2.0, 0.0])
    assert not arc.contains([2.0, 0.0])
    assert arc.measure == pytest.approx(2.0 * math.pi)


def test_foliation_offsets(unit_square):
    foliation = foliate(unit_square, 0.5, 0.1, 3)
    assert foliation.offsets == pytest.approx((-0.05, 0.0, 0.05))
    assert foliation.offset_range == pytest.approx((-0.05, 0.05))
    inner = foliation.domain_at(-0.05)
    assert inner.lower == pytest.approx((0.05, 0.05))
    assert inner.upper == pytest.approx((0.95, 0.95))
    assert foliation.sample_offsets(4) == pytest.approx([-0.05, -0.025, 0.0, 0.025, 0.05])


def test_foliation_leaves_of_disk():
    foliation = foliate(Disk((0.0, 0.0), 1.0), 0.25, 0.4, 5, quadrature_order=3)
    radii = [foliation.boundary_at(rho)[0].radius for rho in foliation.offsets]
    assert radii == pytest.approx([0.9, 1.0, 1.1, 1.2, 1.3])
    (rule,) = foliation.leaf_quadrature(0.0)
    # four quarter-circle panels of three nodes each
    assert rule.order == 3
    assert len(rule.weights) == 12


@pytest.mark.parametrize("base", [Box((0.0, 0.0), (1.0, 1.0)), Box((0.0,), (1.0,)), Disk((0.0, 0.0), 1.0)])
def test_foliation_leaves_are_closed_and_nested(base):
    audit = audit_foliation(foliate(base, 0.5, 0.1, 5))
    assert audit.closure_error <= 1e-12
    assert audit.nested


def test_repeated_leaves_are_not_nested(unit_square):
    foliation = BoundaryFoliation(BOX_INFLATION, unit_square, 0.5, 0.1, (0.0, 0.0, 0.5))
    audit = audit_foliation(foliation)
    assert not audit.nested
    assert audit.nesting_violations == (0.0,)


def test_perimeters():
    assert Box((0.0, 0.0), (2.0, 1.0)).perimeter == 6.0
    assert Box((0.0,), (1.0,)).perimeter == 2.0
    assert Disk((1.0, 1.0), 0.5).perimeter == pytest.approx(math.pi)


def test_foliation_range_enforced(unit_square):
    foliation = foliate(unit_square, 0.5, 0.1, 3)
    with pytest.raises(PreconditionError):
        foliation.domain_at(0.2)


@pytest.mark.parametrize(
    "delta, width, count, error",
    [
        (0.0, 0.1, 3, PreconditionError),
        (1.0, 0.1, 3, PreconditionError),
        (0.5, -0.1, 3, PreconditionError),
        (0.5, 0.1, 1, PreconditionError),
        (0.5, 4.0, 3, GeometryError),  # innermost leaf would be empty
    ],
)
def test_invalid_foliations(unit_square, delta, width, count, error):
    with pytest.raises(error):
        foliate(unit_square, delta, width, count)


def test_disk_inflation():
    disk = Disk((0.0, 0.0), 1.0)
    assert disk.inflate(0.5).radius == 1.5
    with pytest.raises(GeometryError):
        disk.inflate(-1.0)
