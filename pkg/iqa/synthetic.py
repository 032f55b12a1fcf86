"""Seeded synthetic ERPs and distortion operators for desk-scale experiments."""

import math
from enum import Enum
from typing import Optional

import numpy as np
from scipy import ndimage

from core.errors import DimensionError, DomainError
from iqa.resample import DegradeSpec, ErpImage, Kernel, degrade, upsample


class Pattern(str, Enum):
    GRADIENT = "gradient"
    CHECKER = "checker"
    NOISE = "noise"
    RAMP = "ramp"
    POLES = "poles"


def _lat_lon_grid(width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    lon = ((np.arange(width) + 0.5) / width - 0.5) * 2.0 * math.pi
    lat = (0.5 - (np.arange(height) + 0.5) / height) * math.pi
    return np.meshgrid(lat, lon, indexing="ij")


def _blur_erp(data: np.ndarray, sigma: float) -> np.ndarray:
    out = ndimage.gaussian_filter1d(data, sigma, axis=1, mode="wrap")
    return ndimage.gaussian_filter1d(out, sigma, axis=0, mode="nearest")


def _stretch(channel: np.ndarray, lo: float = 0.05, hi: float = 0.95) -> np.ndarray:
    span = channel.max() - channel.min()
    if span == 0:
        return np.full_like(channel, 0.5 * (lo + hi))
    return lo + (hi - lo) * (channel - channel.min()) / span


def _noise_field(rng: np.random.Generator, width: int, height: int) -> np.ndarray:
    """Sum of octave-filtered white noise with roughly 1/f amplitude falloff."""
    field = np.zeros((height, width))
    sigma = 1.0
    while sigma < height / 4.0:
        field += sigma * _blur_erp(rng.standard_normal((height, width)), sigma)
        sigma *= 2.0
    return _stretch(field)


def make_pattern(kind: str, width: int, height: Optional[int] = None, seed: int = 0) -> ErpImage:
    """RGB test ERP; every random choice is drawn from ``seed``."""
    kind = Pattern(kind)
    height = height if height is not None else width // 2
    if width < 16 or height < 8:
        raise DimensionError(f"Pattern too small: {width}x{height}")
    rng = np.random.default_rng(seed)
    lat, lon = _lat_lon_grid(width, height)

    if kind is Pattern.GRADIENT:
        phase = rng.uniform(0.0, 2.0 * math.pi)
        channels = [
            0.5 + 0.45 * lat / (math.pi / 2.0),
            0.5 + 0.45 * np.cos(lon + phase) * np.cos(lat),
            0.5 + 0.45 * np.sin(lat + lon),
        ]
    elif kind is Pattern.CHECKER:
        cells = int(rng.integers(10, 17))
        board = np.sign(np.sin(cells * lon) * np.sin(cells * lat)) * 0.4 + 0.5
        board = _blur_erp(board, 1.0)
        channels = [board, 1.0 - board, 0.5 + 0.3 * (board - 0.5) * np.cos(lat)]
    elif kind is Pattern.NOISE:
        channels = [_noise_field(rng, width, height) for _ in range(3)]
    elif kind is Pattern.RAMP:
        k = int(rng.integers(2, 5))
        channels = [
            0.5 + 0.4 * np.sin(lon) * np.cos(lat),
            0.5 + 0.4 * np.sin(k * lon + lat),
            0.5 + 0.4 * np.cos(2.0 * lon) * np.cos(lat) ** 2,
        ]
    else:
        k = int(rng.integers(16, 33))
        polar = np.abs(np.sin(lat)) ** 3
        channels = [
            0.5 + 0.45 * polar * np.sin(k * lon),
            0.5 + 0.45 * polar * np.cos(k * lon + 4.0 * lat),
            0.5 + 0.2 * np.sin(lat),
        ]
    data = np.clip(np.stack(channels, axis=-1), 0.0, 1.0)
    return ErpImage(data, allow_any_aspect=width != 2 * height)


def gaussian_blur(img: ErpImage, sigma: float) -> ErpImage:
    """Separable blur that wraps across the seam and clamps at the poles."""
    if sigma < 0:
        raise DomainError(f"Blur sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return img
    data = _blur_erp(img.as_float64(), sigma)
    return ErpImage(np.clip(data, 0.0, 1.0), allow_any_aspect=img.allow_any_aspect)


def add_noise(img: ErpImage, sigma: float, seed: int = 0) -> ErpImage:
    if sigma < 0:
        raise DomainError(f"Noise sigma must be non-negative, got {sigma}")
    rng = np.random.default_rng(seed)
    data = img.as_float64() + rng.normal(0.0, sigma, size=img.data.shape)
    return ErpImage(np.clip(data, 0.0, 1.0), allow_any_aspect=img.allow_any_aspect)


def round_trip(img: ErpImage, scale: int = 4, kernel: Kernel = Kernel.BICUBIC) -> ErpImage:
    """Downscale then upscale with the same kernel; stands in for an SR output."""
    low = degrade(img, DegradeSpec(scale=scale, kernel=kernel))
    return upsample(low, scale, kernel)
