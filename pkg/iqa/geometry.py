"""Icosahedral tessellation of the unit sphere and gnomonic tangent-plane math.

Coordinates: unit vectors (x, y, z) with z towards the north pole and
longitude measured from +x towards +y.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from core.config import SCHEMA_VERSION
from core.errors import CapacityError, GeometryError, OutOfHemisphereError

BASE_FACES = 20
MAX_LEVEL = 8
HEMISPHERE_EPS = 1e-9
POLE_EPS = 1e-9

_GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
_BASE_VERTICES = np.array([
    [-1.0, _GOLDEN, 0.0],
    [1.0, _GOLDEN, 0.0],
    [-1.0, -_GOLDEN, 0.0],
    [1.0, -_GOLDEN, 0.0],
    [0.0, -1.0, _GOLDEN],
    [0.0, 1.0, _GOLDEN],
    [0.0, -1.0, -_GOLDEN],
    [0.0, 1.0, -_GOLDEN],
    [_GOLDEN, 0.0, -1.0],
    [_GOLDEN, 0.0, 1.0],
    [-_GOLDEN, 0.0, -1.0],
    [-_GOLDEN, 0.0, 1.0],
])
_BASE_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
])


def _normalize_lon(lon: float) -> float:
    wrapped = math.fmod(lon + math.pi, 2.0 * math.pi)
    if wrapped < 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def _unit(vectors: np.ndarray) -> np.ndarray:
    return vectors / np.linalg.norm(vectors, axis=-1, keepdims=True)


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SphericalPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise GeometryError(f"Non-finite spherical point ({self.lat}, {self.lon})")
        if abs(self.lat) > math.pi / 2 + 1e-12:
            raise GeometryError(f"Latitude out of range: {self.lat}")
        object.__setattr__(self, "lat", max(-math.pi / 2, min(math.pi / 2, float(self.lat))))
        object.__setattr__(self, "lon", _normalize_lon(float(self.lon)))

    def to_vector(self) -> np.ndarray:
        cos_lat = math.cos(self.lat)
        return np.array([cos_lat * math.cos(self.lon), cos_lat * math.sin(self.lon), math.sin(self.lat)])

    @classmethod
    def from_vector(cls, vector: Any) -> "SphericalPoint":
        x, y, z = (float(c) for c in vector)
        return cls(lat=math.atan2(z, math.hypot(x, y)), lon=math.atan2(y, x))


def lat_lon_to_vectors(lat: np.ndarray, lon: np.ndarray) -> np.ndarray:
    cos_lat = np.cos(lat)
    return np.stack([cos_lat * np.cos(lon), cos_lat * np.sin(lon), np.sin(lat)], axis=-1)


def vectors_to_lat_lon(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x, y, z = vectors[..., 0], vectors[..., 1], vectors[..., 2]
    return np.arctan2(z, np.hypot(x, y)), np.arctan2(y, x)


def angular_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Angle between direction arrays, stable near 0 and pi."""
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    return np.arctan2(cross, np.sum(a * b, axis=-1))


def view_count(level: int) -> int:
    if level < 0:
        raise GeometryError(f"Level must be non-negative, got {level}")
    return BASE_FACES * 4 ** level


@dataclass(frozen=True, eq=False)
class IcosahedronMesh:
    vertices: np.ndarray
    faces: np.ndarray
    level: int

    @property
    def edge_count(self) -> int:
        edges = np.sort(np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]]), axis=1)
        return int(np.unique(edges, axis=0).shape[0])

    @property
    def euler_characteristic(self) -> int:
        return len(self.vertices) - self.edge_count + len(self.faces)

    def face_corners(self) -> np.ndarray:
        return self.vertices[self.faces]

    def face_centers(self) -> np.ndarray:
        return _unit(self.face_corners().mean(axis=1))


def face_solid_angles(mesh: IcosahedronMesh) -> np.ndarray:
    """Solid angle of each spherical triangle (Van Oosterom-Strackee)."""
    corners = mesh.face_corners()
    a, b, c = corners[:, 0], corners[:, 1], corners[:, 2]
    triple = np.abs(np.sum(a * np.cross(b, c), axis=1))
    denom = 1.0 + np.sum(a * b, axis=1) + np.sum(b * c, axis=1) + np.sum(c * a, axis=1)
    return 2.0 * np.arctan2(triple, denom)


def _rotation_to_north(vector: np.ndarray) -> np.ndarray:
    north = np.array([0.0, 0.0, 1.0])
    axis = np.cross(vector, north)
    sin_theta = np.linalg.norm(axis)
    cos_theta = float(np.dot(vector, north))
    if sin_theta < 1e-15:
        return np.eye(3)
    k = axis / sin_theta
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + sin_theta * kx + (1.0 - cos_theta) * (kx @ kx)


def _base_icosahedron() -> tuple[np.ndarray, np.ndarray]:
    vertices = _unit(_BASE_VERTICES)
    rotation = _rotation_to_north(vertices[0])
    vertices = _unit(vertices @ rotation.T)
    faces = _BASE_FACES.copy()
    corners = vertices[faces]
    normals = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    inward = np.sum(normals * corners.mean(axis=1), axis=1) < 0
    faces[inward] = faces[inward][:, [0, 2, 1]]
    return vertices, faces


def subdivide_icosahedron(level: int, max_level: int = MAX_LEVEL) -> IcosahedronMesh:
    """Loop-style 4-way midpoint subdivision, new vertices pushed to the unit sphere."""
    if level < 0:
        raise GeometryError(f"Level must be non-negative, got {level}")
    if level > max_level:
        raise CapacityError(f"Level {level} exceeds the subdivision guard ({max_level})")

    base_vertices, base_faces = _base_icosahedron()
    vertices = [row for row in base_vertices]
    faces = [tuple(int(i) for i in face) for face in base_faces]

    for _ in range(level):
        midpoints: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (i, j) if i < j else (j, i)
            index = midpoints.get(key)
            if index is None:
                mid = vertices[i] + vertices[j]
                vertices.append(mid / np.linalg.norm(mid))
                index = len(vertices) - 1
                midpoints[key] = index
            return index

        refined: list[tuple[int, int, int]] = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined.extend([(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)])
        faces = refined

    return IcosahedronMesh(
        vertices=_readonly(np.array(vertices)),
        faces=_readonly(np.array(faces, dtype=np.int64)),
        level=level,
    )


@dataclass(frozen=True, eq=False)
class TangentPlane:
    center: np.ndarray
    basis_u: np.ndarray
    basis_v: np.ndarray
    fov: float

    def __post_init__(self) -> None:
        if not 0.0 < self.fov < math.pi:
            raise GeometryError(f"Field of view must lie in (0, pi), got {self.fov}")

    @property
    def half_extent(self) -> float:
        """Tangent-plane half width of the square view."""
        return math.tan(self.fov / 2.0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "center": [float(c) for c in self.center],
            "u": [float(c) for c in self.basis_u],
            "v": [float(c) for c in self.basis_v],
            "fov": float(self.fov),
        }


def _plane_at(center: np.ndarray, fov: float) -> TangentPlane:
    north = np.array([0.0, 0.0, 1.0])
    reference = north if abs(float(np.dot(center, north))) <= 1.0 - POLE_EPS else np.array([1.0, 0.0, 0.0])
    basis_v = reference - np.dot(reference, center) * center
    basis_v = basis_v / np.linalg.norm(basis_v)
    basis_u = np.cross(basis_v, center)
    basis_u = basis_u / np.linalg.norm(basis_u)
    return TangentPlane(
        center=_readonly(center.copy()),
        basis_u=_readonly(basis_u),
        basis_v=_readonly(basis_v),
        fov=float(fov),
    )


@dataclass(frozen=True, eq=False)
class TangentLayout:
    level: int
    planes: tuple[TangentPlane, ...]
    view_dim: int
    solid_angles: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def centers(self) -> np.ndarray:
        return np.stack([plane.center for plane in self.planes])

    def cone_membership(self, directions: np.ndarray) -> np.ndarray:
        """Boolean (N, planes) matrix: direction inside each plane's fov cone."""
        limits = np.cos(np.array([plane.fov for plane in self.planes]) / 2.0)
        return directions @ self.centers.T >= limits[None, :]

    def coverage_fraction(self, directions: np.ndarray) -> float:
        covered = self.cone_membership(directions).any(axis=1)
        return float(np.mean(covered))

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "level": self.level,
            "view_dim": self.view_dim,
            "planes": [plane.to_dict() for plane in self.planes],
        }


def build_layout(level: int, erp_width: int, padding: float = 1.3, max_level: int = MAX_LEVEL) -> TangentLayout:
    if erp_width < 16:
        raise GeometryError(f"ERP width must be at least 16 pixels, got {erp_width}")
    if not 1.0 <= padding <= 2.0:
        raise GeometryError(f"Padding must lie in [1.0, 2.0], got {padding}")

    mesh = subdivide_icosahedron(level, max_level=max_level)
    corners = mesh.face_corners()
    centers = mesh.face_centers()
    reach = angular_distance(centers[:, None, :], corners).max(axis=1)
    fovs = padding * 2.0 * reach
    if np.any(fovs >= math.pi):
        raise GeometryError(f"Padding {padding} at level {level} pushes the field of view past the hemisphere")

    planes = tuple(_plane_at(center, fov) for center, fov in zip(centers, fovs))
    pitch = 2.0 * math.pi / erp_width
    view_dim = int(math.ceil(float(fovs.max()) / pitch))
    if view_dim % 2:
        view_dim += 1
    return TangentLayout(level=level, planes=planes, view_dim=view_dim, solid_angles=_readonly(face_solid_angles(mesh)))


def project_directions(plane: TangentPlane, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central projection of direction vectors onto the plane's tangent coordinates."""
    cos_c = directions @ plane.center
    if np.any(cos_c <= HEMISPHERE_EPS):
        raise OutOfHemisphereError("Direction at or beyond the hemisphere boundary of the tangent plane")
    return (directions @ plane.basis_u) / cos_c, (directions @ plane.basis_v) / cos_c


def unproject(plane: TangentPlane, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Unit directions of tangent coordinates (x, y)."""
    x = np.asarray(x, dtype=np.float64)[..., None]
    y = np.asarray(y, dtype=np.float64)[..., None]
    return _unit(plane.center + x * plane.basis_u + y * plane.basis_v)


def gnomonic_forward(plane: TangentPlane, point: SphericalPoint) -> tuple[float, float]:
    x, y = project_directions(plane, point.to_vector()[None, :])
    return float(x[0]), float(y[0])


def gnomonic_inverse(plane: TangentPlane, x: float, y: float) -> SphericalPoint:
    if not (math.isfinite(x) and math.isfinite(y)):
        raise GeometryError(f"Non-finite tangent coordinates ({x}, {y})")
    return SphericalPoint.from_vector(unproject(plane, x, y))
