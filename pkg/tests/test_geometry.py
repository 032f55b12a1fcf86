import math

import numpy as np
import pytest

from core.errors import CapacityError, GeometryError, OutOfHemisphereError
from iqa.geometry import (
    SphericalPoint,
    angular_distance,
    build_layout,
    face_solid_angles,
    gnomonic_forward,
    gnomonic_inverse,
    lat_lon_to_vectors,
    project_directions,
    subdivide_icosahedron,
    unproject,
    vectors_to_lat_lon,
    view_count,
)


def _random_directions(count: int, seed: int = 3) -> np.ndarray:
    rng = np.random.default_rng(seed)
    vectors = rng.standard_normal((count, 3))
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


@pytest.mark.parametrize("level, expected", [(0, 20), (1, 80), (2, 320), (3, 1280)])
def test_view_count(level, expected):
    assert view_count(level) == expected


def test_view_count_rejects_negative_level():
    with pytest.raises(GeometryError):
        view_count(-1)


@pytest.mark.parametrize("level", [0, 1, 2, 3])
def test_mesh_is_closed_sphere(level):
    mesh = subdivide_icosahedron(level)
    assert len(mesh.faces) == view_count(level)
    assert len(mesh.vertices) == 10 * 4 ** level + 2
    assert mesh.euler_characteristic == 2
    np.testing.assert_allclose(np.linalg.norm(mesh.vertices, axis=1), 1.0, atol=1e-12)


def test_base_mesh_has_vertex_at_north_pole():
    mesh = subdivide_icosahedron(0)
    np.testing.assert_allclose(mesh.vertices[0], [0.0, 0.0, 1.0], atol=1e-12)


def test_mesh_arrays_are_read_only():
    mesh = subdivide_icosahedron(1)
    with pytest.raises(ValueError):
        mesh.vertices[0, 0] = 2.0


@pytest.mark.parametrize("level", [0, 1, 2])
def test_solid_angles_cover_the_sphere(level):
    angles = face_solid_angles(subdivide_icosahedron(level))
    assert np.all(angles > 0)
    assert math.isclose(float(angles.sum()), 4.0 * math.pi, abs_tol=1e-6)


def test_base_faces_have_equal_solid_angle():
    angles = face_solid_angles(subdivide_icosahedron(0))
    np.testing.assert_allclose(angles, 4.0 * math.pi / 20.0, rtol=1e-9)


def test_capacity_guard():
    with pytest.raises(CapacityError):
        subdivide_icosahedron(9)
    with pytest.raises(CapacityError):
        build_layout(3, 256, max_level=2)


def test_view_dim_follows_widest_fov():
    layout = build_layout(0, 384)
    assert layout.view_dim == 104
    widest = max(plane.fov for plane in layout.planes)
    assert layout.view_dim % 2 == 0
    assert layout.view_dim >= widest * 384 / (2.0 * math.pi)

    assert build_layout(1, 768).view_dim == 116


def test_view_dim_is_even_for_every_level():
    for level in range(3):
        assert build_layout(level, 1000).view_dim % 2 == 0


def test_padding_bounds():
    with pytest.raises(GeometryError):
        build_layout(0, 256, padding=0.9)
    with pytest.raises(GeometryError):
        build_layout(0, 256, padding=2.5)
    with pytest.raises(GeometryError):
        build_layout(0, 8)


def test_plane_bases_are_orthonormal_and_upright():
    layout = build_layout(1, 512)
    for plane in layout.planes:
        frame = np.stack([plane.basis_u, plane.basis_v, plane.center])
        np.testing.assert_allclose(frame @ frame.T, np.eye(3), atol=1e-12)
        assert plane.basis_v[2] > 0.0
        assert 0.0 < plane.fov < math.pi


def test_fov_cones_cover_every_direction():
    directions = _random_directions(100_000)
    for level in (0, 1):
        layout = build_layout(level, 512, padding=1.3)
        assert layout.coverage_fraction(directions) == 1.0


def test_padded_fov_reaches_past_every_face_corner():
    mesh = subdivide_icosahedron(1)
    layout = build_layout(1, 512, padding=1.0)
    corners = mesh.face_corners()
    for plane, face in zip(layout.planes, corners):
        reach = angular_distance(plane.center[None, :], face).max()
        assert plane.fov / 2.0 >= reach - 1e-12


def test_gnomonic_round_trip():
    layout = build_layout(1, 512)
    rng = np.random.default_rng(11)
    for plane in layout.planes:
        x, y = rng.uniform(-plane.half_extent, plane.half_extent, size=(2, 10_000))
        directions = unproject(plane, x, y)
        back_x, back_y = project_directions(plane, directions)
        assert np.abs(back_x - x).max() < 1e-9
        assert np.abs(back_y - y).max() < 1e-9
        again = unproject(plane, back_x, back_y)
        assert angular_distance(directions, again).max() < 1e-9


def test_gnomonic_point_round_trip():
    layout = build_layout(1, 512)
    rng = np.random.default_rng(12)
    for plane in layout.planes[::7]:
        for x, y in rng.uniform(-0.8, 0.8, size=(25, 2)):
            point = gnomonic_inverse(plane, float(x), float(y))
            back = gnomonic_forward(plane, point)
            assert back == pytest.approx((x, y), abs=1e-9)


def test_gnomonic_center_maps_to_origin():
    layout = build_layout(0, 256)
    plane = layout.planes[3]
    x, y = gnomonic_forward(plane, SphericalPoint.from_vector(plane.center))
    assert x == pytest.approx(0.0, abs=1e-12)
    assert y == pytest.approx(0.0, abs=1e-12)


def test_gnomonic_rejects_far_hemisphere():
    plane = build_layout(0, 256).planes[0]
    with pytest.raises(OutOfHemisphereError):
        gnomonic_forward(plane, SphericalPoint.from_vector(-plane.center))


def test_gnomonic_inverse_rejects_non_finite():
    plane = build_layout(0, 256).planes[0]
    with pytest.raises(GeometryError):
        gnomonic_inverse(plane, math.inf, 0.0)


def test_spherical_point_normalizes_longitude():
    point = SphericalPoint(lat=0.2, lon=3.0 * math.pi / 2.0)
    assert point.lon == pytest.approx(-math.pi / 2.0)
    with pytest.raises(GeometryError):
        SphericalPoint(lat=2.0, lon=0.0)


def test_layout_to_dict():
    layout = build_layout(0, 256)
    document = layout.to_dict()
    assert document["schema_version"] == 1
    assert document["level"] == 0
    assert document["view_dim"] == layout.view_dim
    assert len(document["planes"]) == 20
    assert set(document["planes"][0]) == {"center", "u", "v", "fov"}
    assert all(len(plane["center"]) == 3 for plane in document["planes"])


def test_lat_lon_vector_round_trip():
    vectors = _random_directions(500)
    lat, lon = vectors_to_lat_lon(vectors)
    np.testing.assert_allclose(lat_lon_to_vectors(lat, lon), vectors, atol=1e-12)
    assert np.all(np.abs(lat) <= math.pi / 2) and np.all(np.abs(lon) <= math.pi)
