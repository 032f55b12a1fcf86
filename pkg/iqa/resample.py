"""Equirectangular sampling, tangent-view rendering and integer-factor resizing.

ERP convention: pixel (u, v) is sampled at its center, so
lon = ((u + 0.5) / W - 0.5) * 2pi and lat = (0.5 - (v + 0.5) / H) * pi.
Columns wrap around the +-pi seam; rows clamp at the poles.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np

from core.errors import AspectError, DimensionError, DomainError, GeometryError, ImageFormatError
from core.imageio import read_image, write_image
from core.logging import get_logger
from iqa.geometry import SphericalPoint, TangentLayout, unproject, vectors_to_lat_lon

logger = get_logger(__name__)

CATMULL_ROM_A = -0.5


class Interp(str, Enum):
    BILINEAR = "bilinear"
    BICUBIC = "bicubic"


class Kernel(str, Enum):
    BICUBIC = "bicubic"
    BILINEAR = "bilinear"
    NEAREST = "nearest"
    GAUSSIAN = "gaussian"


def _readonly_f32(data: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(data, dtype=np.float32)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ErpImage:
    """Equirectangular raster, (H, W, C) samples in [0, 1] stored as float32."""

    data: np.ndarray
    allow_any_aspect: bool = False

    def __post_init__(self) -> None:
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or data.shape[2] not in (1, 3):
            raise ImageFormatError(f"ERP data must be (H, W, 1|3), got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise DimensionError(f"Empty ERP image: {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ImageFormatError("ERP data contains non-finite samples")
        if data.min() < 0.0 or data.max() > 1.0:
            raise ImageFormatError(f"ERP samples must lie in [0, 1], got [{data.min()}, {data.max()}]")
        if not self.allow_any_aspect and data.shape[1] != 2 * data.shape[0]:
            raise AspectError(
                f"ERP must be 2:1 (width == 2 x height), got {data.shape[1]}x{data.shape[0]}; "
                "use --allow-any-aspect to override"
            )
        object.__setattr__(self, "data", _readonly_f32(data))

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def channels(self) -> int:
        return int(self.data.shape[2])

    def as_float64(self) -> np.ndarray:
        return self.data.astype(np.float64)

    @classmethod
    def load(cls, path: Union[str, Path], allow_any_aspect: bool = False) -> "ErpImage":
        return cls(read_image(path), allow_any_aspect=allow_any_aspect)

    def save(self, path: Union[str, Path], bit_depth: int = 8) -> None:
        write_image(path, self.data, bit_depth=bit_depth)


@dataclass(frozen=True, eq=False)
class TangentView:
    plane_index: int
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data)
        if data.ndim != 3 or data.shape[0] != data.shape[1] or data.shape[2] not in (1, 3):
            raise ImageFormatError(f"Tangent view must be (dim, dim, 1|3), got {data.shape}")
        object.__setattr__(self, "data", _readonly_f32(data))

    @property
    def dim(self) -> int:
        return int(self.data.shape[0])

    @property
    def channels(self) -> int:
        return int(self.data.shape[2])

    def save(self, path: Union[str, Path], bit_depth: int = 8) -> None:
        write_image(path, self.data, bit_depth=bit_depth)


@dataclass(frozen=True)
class DegradeSpec:
    scale: int = 4
    kernel: Kernel = Kernel.BICUBIC
    sigma: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kernel", Kernel(self.kernel))
        if int(self.scale) != self.scale or self.scale < 2:
            raise DimensionError(f"Degradation scale must be an integer >= 2, got {self.scale}")
        if self.kernel is Kernel.GAUSSIAN and (self.sigma is None or self.sigma <= 0):
            raise DomainError("Gaussian degradation needs sigma > 0")


def erp_pixel_to_sphere(u: float, v: float, width: int, height: int) -> SphericalPoint:
    if not (0 <= u < width and 0 <= v < height):
        raise GeometryError(f"Pixel ({u}, {v}) outside {width}x{height}")
    lon = ((u + 0.5) / width - 0.5) * 2.0 * math.pi
    lat = (0.5 - (v + 0.5) / height) * math.pi
    return SphericalPoint(lat=lat, lon=lon)


def sphere_to_erp_pixel(point: SphericalPoint, width: int, height: int) -> tuple[float, float]:
    """Fractional pixel coordinates; inverse of erp_pixel_to_sphere."""
    u, v = _fractional_coords(np.float64(point.lat), np.float64(point.lon), width, height)
    return float(u), float(v)


def _fractional_coords(lat: np.ndarray, lon: np.ndarray, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    u = (lon / (2.0 * math.pi) + 0.5) * width - 0.5
    v = (0.5 - lat / math.pi) * height - 0.5
    return u, v


def cubic_weights(offset: np.ndarray, a: float = CATMULL_ROM_A) -> np.ndarray:
    """Keys cubic convolution kernel; a = -0.5 is Catmull-Rom."""
    x = np.abs(offset)
    x2 = x * x
    x3 = x2 * x
    near = (a + 2.0) * x3 - (a + 3.0) * x2 + 1.0
    far = a * x3 - 5.0 * a * x2 + 8.0 * a * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


def _triangle_weights(offset: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, 1.0 - np.abs(offset))


def sample_grid(data: np.ndarray, u: np.ndarray, v: np.ndarray, interp: Interp) -> np.ndarray:
    """Interpolate (H, W, C) float64 data at fractional pixel coordinates."""
    height, width = data.shape[:2]
    u0 = np.floor(u)
    v0 = np.floor(v)
    du = u - u0
    dv = v - v0
    u0 = u0.astype(np.int64)
    v0 = v0.astype(np.int64)

    if Interp(interp) is Interp.BILINEAR:
        taps = (0, 1)
        weight = _triangle_weights
    else:
        taps = (-1, 0, 1, 2)
        weight = cubic_weights

    out = np.zeros(u.shape + (data.shape[2],), dtype=np.float64)
    for ty in taps:
        rows = np.clip(v0 + ty, 0, height - 1)
        wy = weight(dv - ty)
        for tx in taps:
            cols = np.mod(u0 + tx, width)
            wx = weight(du - tx)
            out += (wy * wx)[..., None] * data[rows, cols]
    return np.clip(out, 0.0, 1.0)


def sample_erp(img: ErpImage, point: SphericalPoint, interp: Interp = Interp.BICUBIC) -> np.ndarray:
    u, v = _fractional_coords(np.array([point.lat]), np.array([point.lon]), img.width, img.height)
    return sample_grid(img.as_float64(), u, v, interp)[0]


def view_grid(dim: int, half_extent: float) -> tuple[np.ndarray, np.ndarray]:
    """Tangent coordinates of every view pixel center; rows run top (+y) to bottom."""
    coords = (2.0 * (np.arange(dim) + 0.5) / dim - 1.0) * half_extent
    x = np.broadcast_to(coords[None, :], (dim, dim))
    y = np.broadcast_to(-coords[:, None], (dim, dim))
    return x, y


def _render(source: np.ndarray, layout: TangentLayout, plane_index: int, interp: Interp) -> TangentView:
    plane = layout.planes[plane_index]
    x, y = view_grid(layout.view_dim, plane.half_extent)
    lat, lon = vectors_to_lat_lon(unproject(plane, x, y))
    u, v = _fractional_coords(lat, lon, source.shape[1], source.shape[0])
    return TangentView(plane_index=plane_index, data=sample_grid(source, u, v, interp))


def render_view(img: ErpImage, layout: TangentLayout, plane_index: int, interp: Interp = Interp.BICUBIC) -> TangentView:
    if not 0 <= plane_index < len(layout.planes):
        raise GeometryError(f"Plane index {plane_index} outside layout of {len(layout.planes)} planes")
    return _render(img.as_float64(), layout, plane_index, Interp(interp))


def render_all_views(
    img: ErpImage,
    layout: TangentLayout,
    interp: Interp = Interp.BICUBIC,
    workers: int = 1,
) -> list[TangentView]:
    """Every view in face order; any worker count gives bit-identical output."""
    source = img.as_float64()
    interp = Interp(interp)
    indices = range(len(layout.planes))
    logger.debug("Rendering %d views of %d px", len(layout.planes), layout.view_dim)
    if workers <= 1:
        return [_render(source, layout, i, interp) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: _render(source, layout, i, interp), indices))


def _kernel_profile(kernel: Kernel, sigma: Optional[float]) -> tuple[float, object]:
    if kernel is Kernel.BICUBIC:
        return 2.0, cubic_weights
    if kernel is Kernel.BILINEAR:
        return 1.0, _triangle_weights
    if kernel is Kernel.GAUSSIAN:
        assert sigma is not None
        return math.ceil(3.0 * sigma), lambda d: np.exp(-0.5 * (d / sigma) ** 2)
    raise DomainError(f"No continuous profile for kernel {kernel.value}")


def resize_weights(
    in_len: int,
    out_len: int,
    kernel: Kernel,
    wrap: bool,
    sigma: Optional[float] = None,
) -> np.ndarray:
    """(out_len, in_len) resampling matrix for an integer factor in either direction.

    Decimation widens the kernel by the factor (area-style antialiasing);
    gaussian blurs with sigma in source pixels before taking output centers.
    """
    matrix = np.zeros((out_len, in_len), dtype=np.float64)
    downsampling = out_len < in_len
    factor = in_len / out_len if downsampling else out_len / in_len
    centers = (np.arange(out_len) + 0.5) * (in_len / out_len) - 0.5

    if kernel is Kernel.NEAREST:
        if downsampling:
            source = np.floor((np.arange(out_len) + 0.5) * factor).astype(np.int64)
        else:
            source = np.arange(out_len) // int(round(factor))
        matrix[np.arange(out_len), np.clip(source, 0, in_len - 1)] = 1.0
        return matrix

    radius, profile = _kernel_profile(kernel, sigma)
    stretch = factor if (downsampling and kernel is not Kernel.GAUSSIAN) else 1.0
    reach = radius * stretch
    for k, center in enumerate(centers):
        taps = np.arange(math.floor(center - reach), math.ceil(center + reach) + 1)
        weights = profile((taps - center) / stretch)
        if not np.any(weights):
            continue
        weights = weights / weights.sum()
        index = np.mod(taps, in_len) if wrap else np.clip(taps, 0, in_len - 1)
        np.add.at(matrix[k], index, weights)
    return matrix


def _apply_resize(data: np.ndarray, row_matrix: np.ndarray, col_matrix: np.ndarray) -> np.ndarray:
    rows = np.tensordot(row_matrix, data, axes=(1, 0))
    out = np.tensordot(rows, col_matrix, axes=(1, 1))
    return np.clip(np.transpose(out, (0, 2, 1)), 0.0, 1.0)


def degrade(img: ErpImage, spec: DegradeSpec) -> ErpImage:
    scale = int(spec.scale)
    if img.width % scale or img.height % scale:
        raise DimensionError(f"{img.width}x{img.height} is not divisible by scale {scale}")
    out_h, out_w = img.height // scale, img.width // scale
    rows = resize_weights(img.height, out_h, spec.kernel, wrap=False, sigma=spec.sigma)
    cols = resize_weights(img.width, out_w, spec.kernel, wrap=True, sigma=spec.sigma)
    return ErpImage(_apply_resize(img.as_float64(), rows, cols), allow_any_aspect=img.allow_any_aspect)


def upsample(img: ErpImage, scale: int, kernel: Kernel = Kernel.BICUBIC) -> ErpImage:
    kernel = Kernel(kernel)
    if int(scale) != scale or scale < 1:
        raise DimensionError(f"Upsampling scale must be a positive integer, got {scale}")
    if kernel is Kernel.GAUSSIAN:
        raise DomainError("Gaussian is a degradation kernel, not an interpolator")
    scale = int(scale)
    if scale == 1:
        return img
    rows = resize_weights(img.height, img.height * scale, kernel, wrap=False)
    cols = resize_weights(img.width, img.width * scale, kernel, wrap=True)
    return ErpImage(_apply_resize(img.as_float64(), rows, cols), allow_any_aspect=img.allow_any_aspect)
