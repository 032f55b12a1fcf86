"""PNG / PGM / PPM codec on top of OpenCV; samples are normalized to [0, 1]."""

from pathlib import Path
from typing import Union

import cv2
import numpy as np

from core.errors import ImageFormatError
from core.fs import atomic_write_bytes

SUPPORTED_SUFFIXES = (".png", ".pgm", ".ppm", ".pnm")


def read_image(path: Union[str, Path]) -> np.ndarray:
    """Decode an 8/16-bit gray or RGB image into an (H, W, C) float64 array."""
    path = Path(path)
    if not path.exists():
        raise ImageFormatError(f"Image not found: {path}")
    raw = np.fromfile(str(path), dtype=np.uint8)
    decoded = cv2.imdecode(raw, cv2.IMREAD_UNCHANGED)
    if decoded is None:
        raise ImageFormatError(f"Unreadable image: {path}")

    if decoded.dtype == np.uint8:
        data = decoded.astype(np.float64) / 255.0
    elif decoded.dtype == np.uint16:
        data = decoded.astype(np.float64) / 65535.0
    else:
        raise ImageFormatError(f"Unsupported sample type {decoded.dtype} in {path}")

    if data.ndim == 2:
        return data[:, :, None]
    if data.shape[2] == 4:
        data = data[:, :, :3]
    if data.shape[2] == 3:
        return np.ascontiguousarray(data[:, :, ::-1])
    raise ImageFormatError(f"Unsupported channel count {data.shape[2]} in {path}")


def encode_image(data: np.ndarray, suffix: str = ".png", bit_depth: int = 8) -> bytes:
    if bit_depth not in (8, 16):
        raise ImageFormatError(f"Unsupported bit depth: {bit_depth}")
    if data.ndim == 2:
        data = data[:, :, None]
    if data.shape[2] not in (1, 3):
        raise ImageFormatError(f"Unsupported channel count {data.shape[2]}")
    scale = 255.0 if bit_depth == 8 else 65535.0
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    samples = np.rint(np.clip(np.asarray(data, dtype=np.float64), 0.0, 1.0) * scale).astype(dtype)
    if samples.shape[2] == 3:
        samples = samples[:, :, ::-1]
    else:
        samples = samples[:, :, 0]
    ok, buffer = cv2.imencode(suffix, np.ascontiguousarray(samples))
    if not ok:
        raise ImageFormatError(f"Encoding to {suffix} failed")
    return buffer.tobytes()


def write_image(path: Union[str, Path], data: np.ndarray, bit_depth: int = 8) -> None:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in SUPPORTED_SUFFIXES:
        raise ImageFormatError(f"Unsupported output format: {path.name}")
    atomic_write_bytes(path, encode_image(data, suffix=suffix, bit_depth=bit_depth))
