"""Full-reference IQA kernels on same-sized image pairs.

All built-ins score luma (Rec.601) in double precision with samples in
[0, 1]; constants from the original publications are rescaled from the
[0, 255] range where noted and can be overridden through MetricsConfig.
"""

import math
import re
from dataclasses import dataclass, field, fields
from enum import Enum
from functools import lru_cache
from typing import Any, Mapping, Optional, Protocol

import numpy as np
from scipy import ndimage

from core.errors import DomainError, PairingError, ShapeError, SupportError

_EXTERNAL_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")
_LUMA = np.array([0.299, 0.587, 0.114])


class Polarity(str, Enum):
    HIGHER_BETTER = "higher_better"
    LOWER_BETTER = "lower_better"

    @classmethod
    def parse(cls, text: str) -> "Polarity":
        lowered = text.strip().lower()
        if lowered in ("higher", "higher_better", "up"):
            return cls.HIGHER_BETTER
        if lowered in ("lower", "lower_better", "down"):
            return cls.LOWER_BETTER
        raise DomainError(f"Unknown polarity: {text}")

    def better(self, a: float, b: float) -> bool:
        return a > b if self is Polarity.HIGHER_BETTER else a < b


@dataclass(frozen=True)
class MetricId:
    name: str
    external: bool = False

    def __post_init__(self) -> None:
        if self.external:
            if not _EXTERNAL_NAME_RE.match(self.name) or self.name in BUILTIN_NAMES:
                raise DomainError(f"Invalid external metric name: {self.name!r}")
        elif self.name not in BUILTIN_NAMES:
            raise DomainError(f"Unknown built-in metric: {self.name!r}")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class MetricDescriptor:
    id: MetricId
    polarity: Polarity
    range_hint: Optional[tuple[float, float]] = None


@dataclass(frozen=True)
class MetricScore:
    id: MetricId
    value: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise DomainError(f"{self.id}: non-finite score {self.value}")


@dataclass(frozen=True)
class MetricsConfig:
    ssim_k1: float = 0.01
    ssim_k2: float = 0.03
    ssim_sigma: float = 1.5
    ssim_window: int = 11
    msssim_weights: tuple[float, ...] = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
    # 170 on [0, 255]^2
    gmsd_c: float = 0.0026
    # 2 on [0, 255]^2
    vifs_sigma_nsq: float = 2.0 / 255.0 ** 2
    vifs_eps: float = 1e-10 / 255.0 ** 2
    nlpd_sigma0: float = 0.17
    nlpd_levels: int = 6

    @classmethod
    def from_sections(cls, sections: Mapping[str, Mapping[str, Any]]) -> "MetricsConfig":
        """Build from config sections such as {"ssim": {"k1": 0.01}}."""
        known = {f.name for f in fields(cls)}
        values: dict[str, Any] = {}
        for section, entries in sections.items():
            for key, value in entries.items():
                name = f"{section}_{key}"
                if name not in known:
                    raise DomainError(f"Unknown metric constant: {section}.{key}")
                values[name] = tuple(value) if isinstance(value, list) else value
        return cls(**values)


BUILTIN_NAMES = ("ssim", "msssim", "gmsd", "vifs", "nlpd")

DESCRIPTORS: dict[str, MetricDescriptor] = {}


def _descriptor(name: str, polarity: Polarity, hint: Optional[tuple[float, float]]) -> None:
    DESCRIPTORS[name] = MetricDescriptor(MetricId(name), polarity, hint)


_descriptor("ssim", Polarity.HIGHER_BETTER, (-1.0, 1.0))
_descriptor("msssim", Polarity.HIGHER_BETTER, (0.0, 1.0))
_descriptor("gmsd", Polarity.LOWER_BETTER, (0.0, math.inf))
_descriptor("vifs", Polarity.HIGHER_BETTER, (0.0, math.inf))
_descriptor("nlpd", Polarity.LOWER_BETTER, (0.0, math.inf))


def to_luma(data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 2:
        return data
    if data.ndim == 3 and data.shape[2] == 1:
        return data[:, :, 0]
    if data.ndim == 3 and data.shape[2] == 3:
        return data @ _LUMA
    raise ShapeError(f"Expected (H, W), (H, W, 1) or (H, W, 3), got {data.shape}")


def _prepare(ref: Any, dist: Any) -> tuple[np.ndarray, np.ndarray]:
    ref = np.asarray(getattr(ref, "data", ref))
    dist = np.asarray(getattr(dist, "data", dist))
    if ref.shape != dist.shape:
        raise ShapeError(f"Shape mismatch: reference {ref.shape} vs distorted {dist.shape}")
    return to_luma(ref), to_luma(dist)


def _require_side(x: np.ndarray, minimum: int, metric: str) -> None:
    if min(x.shape) < minimum:
        raise SupportError(f"{metric} needs images of at least {minimum} px per side, got {x.shape[1]}x{x.shape[0]}")


def gaussian_window(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    window = np.exp(-0.5 * (offsets / sigma) ** 2)
    return window / window.sum()


def filter_valid(x: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Separable correlation keeping only fully supported outputs."""
    r = len(window) // 2
    out = ndimage.correlate1d(x, window, axis=0, mode="constant")
    out = ndimage.correlate1d(out, window, axis=1, mode="constant")
    return out[r:x.shape[0] - r, r:x.shape[1] - r]


def pool2(x: np.ndarray) -> np.ndarray:
    """2x2 mean pooling, dropping an odd trailing row/column."""
    h, w = (x.shape[0] // 2) * 2, (x.shape[1] // 2) * 2
    x = x[:h, :w]
    return 0.25 * (x[0::2, 0::2] + x[1::2, 0::2] + x[0::2, 1::2] + x[1::2, 1::2])


def _ssim_maps(x: np.ndarray, y: np.ndarray, cfg: MetricsConfig) -> tuple[np.ndarray, np.ndarray]:
    window = gaussian_window(cfg.ssim_window, cfg.ssim_sigma)
    c1 = cfg.ssim_k1 ** 2
    c2 = cfg.ssim_k2 ** 2
    mu_x = filter_valid(x, window)
    mu_y = filter_valid(y, window)
    sigma_xx = filter_valid(x * x, window) - mu_x * mu_x
    sigma_yy = filter_valid(y * y, window) - mu_y * mu_y
    sigma_xy = filter_valid(x * y, window) - mu_x * mu_y
    cs = (2.0 * sigma_xy + c2) / (sigma_xx + sigma_yy + c2)
    luminance = (2.0 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1)
    return luminance * cs, cs


def ssim(ref: Any, dist: Any, config: Optional[MetricsConfig] = None) -> MetricScore:
    cfg = config or MetricsConfig()
    x, y = _prepare(ref, dist)
    _require_side(x, cfg.ssim_window, "ssim")
    ssim_map, _ = _ssim_maps(x, y, cfg)
    return MetricScore(DESCRIPTORS["ssim"].id, float(np.mean(ssim_map)))


def msssim(ref: Any, dist: Any, config: Optional[MetricsConfig] = None) -> MetricScore:
    cfg = config or MetricsConfig()
    x, y = _prepare(ref, dist)
    weights = cfg.msssim_weights
    _require_side(x, cfg.ssim_window * 2 ** (len(weights) - 1), "msssim")

    value = 1.0
    for level, weight in enumerate(weights):
        ssim_map, cs_map = _ssim_maps(x, y, cfg)
        if level < len(weights) - 1:
            value *= max(float(np.mean(cs_map)), 0.0) ** weight
            x, y = pool2(x), pool2(y)
        else:
            value *= max(float(np.mean(ssim_map)), 0.0) ** weight
    return MetricScore(DESCRIPTORS["msssim"].id, value)


_PREWITT_SMOOTH = np.array([1.0, 1.0, 1.0]) / 3.0
_PREWITT_DIFF = np.array([1.0, 0.0, -1.0])


def _gradient_magnitude(x: np.ndarray) -> np.ndarray:
    gx = ndimage.correlate1d(ndimage.correlate1d(x, _PREWITT_DIFF, axis=1, mode="constant"), _PREWITT_SMOOTH, axis=0, mode="constant")
    gy = ndimage.correlate1d(ndimage.correlate1d(x, _PREWITT_DIFF, axis=0, mode="constant"), _PREWITT_SMOOTH, axis=1, mode="constant")
    return np.sqrt(gx * gx + gy * gy)[1:-1, 1:-1]


def gmsd(ref: Any, dist: Any, config: Optional[MetricsConfig] = None) -> MetricScore:
    cfg = config or MetricsConfig()
    x, y = _prepare(ref, dist)
    _require_side(x, 6, "gmsd")
    g_ref = _gradient_magnitude(pool2(x))
    g_dist = _gradient_magnitude(pool2(y))
    gms = (2.0 * g_ref * g_dist + cfg.gmsd_c) / (g_ref * g_ref + g_dist * g_dist + cfg.gmsd_c)
    return MetricScore(DESCRIPTORS["gmsd"].id, float(np.std(gms)))


VIFS_SCALES = 4


def _vifs_window(scale: int) -> np.ndarray:
    sigma = (2 ** (VIFS_SCALES - scale + 1) + 1) / 5.0
    return gaussian_window(2 * math.ceil(3.0 * sigma) + 1, sigma)


@lru_cache(maxsize=None)
def vifs_min_side() -> int:
    """Smallest square side for which every VIFs scale keeps a non-empty statistics map."""
    side = 1
    while True:
        size = side
        ok = True
        for scale in range(1, VIFS_SCALES + 1):
            span = len(_vifs_window(scale)) - 1
            if scale > 1:
                size = (size - span + 1) // 2 if size - span > 0 else 0
            if size - span < 1:
                ok = False
                break
        if ok:
            return side
        side += 1


def vifs(ref: Any, dist: Any, config: Optional[MetricsConfig] = None) -> MetricScore:
    cfg = config or MetricsConfig()
    x, y = _prepare(ref, dist)
    _require_side(x, vifs_min_side(), "vifs")
    eps = cfg.vifs_eps
    sigma_nsq = cfg.vifs_sigma_nsq

    num = 0.0
    den = 0.0
    for scale in range(1, VIFS_SCALES + 1):
        window = _vifs_window(scale)
        if scale > 1:
            x = filter_valid(x, window)[::2, ::2]
            y = filter_valid(y, window)[::2, ::2]
        mu_x = filter_valid(x, window)
        mu_y = filter_valid(y, window)
        sigma_xx = np.maximum(filter_valid(x * x, window) - mu_x * mu_x, 0.0)
        sigma_yy = np.maximum(filter_valid(y * y, window) - mu_y * mu_y, 0.0)
        sigma_xy = filter_valid(x * y, window) - mu_x * mu_y

        gain = sigma_xy / (sigma_xx + eps)
        sv_sq = sigma_yy - gain * sigma_xy

        flat_ref = sigma_xx < eps
        gain[flat_ref] = 0.0
        sv_sq[flat_ref] = sigma_yy[flat_ref]
        sigma_xx[flat_ref] = 0.0

        flat_dist = sigma_yy < eps
        gain[flat_dist] = 0.0
        sv_sq[flat_dist] = 0.0

        negative = gain < 0
        sv_sq[negative] = sigma_yy[negative]
        gain[negative] = 0.0
        sv_sq = np.maximum(sv_sq, eps)

        num += float(np.sum(np.log10(1.0 + gain * gain * sigma_xx / (sv_sq + sigma_nsq))))
        den += float(np.sum(np.log10(1.0 + sigma_xx / sigma_nsq)))

    # flat reference: no information to preserve, resolve 0/0 to the ideal value
    value = 1.0 if den == 0.0 else num / den
    return MetricScore(DESCRIPTORS["vifs"].id, value)


NLPD_TAPS = np.array([0.05, 0.25, 0.4, 0.25, 0.05])


def _binomial_blur(x: np.ndarray) -> np.ndarray:
    out = ndimage.correlate1d(x, NLPD_TAPS, axis=0, mode="reflect")
    return ndimage.correlate1d(out, NLPD_TAPS, axis=1, mode="reflect")


def normalized_laplacian_pyramid(x: np.ndarray, levels: int, sigma0: float) -> list[np.ndarray]:
    bands = []
    current = x
    for _ in range(levels):
        low = _binomial_blur(current)[::2, ::2]
        expanded = np.zeros_like(current)
        expanded[::2, ::2] = low
        band = current - 4.0 * _binomial_blur(expanded)
        bands.append(band / (sigma0 + _binomial_blur(np.abs(band))))
        current = low
    return bands


def nlpd(ref: Any, dist: Any, config: Optional[MetricsConfig] = None) -> MetricScore:
    cfg = config or MetricsConfig()
    x, y = _prepare(ref, dist)
    _require_side(x, 2 ** cfg.nlpd_levels, "nlpd")
    bands_x = normalized_laplacian_pyramid(x, cfg.nlpd_levels, cfg.nlpd_sigma0)
    bands_y = normalized_laplacian_pyramid(y, cfg.nlpd_levels, cfg.nlpd_sigma0)
    distances = [math.sqrt(float(np.mean((bx - by) ** 2))) for bx, by in zip(bands_x, bands_y)]
    return MetricScore(DESCRIPTORS["nlpd"].id, float(np.mean(distances)))


BUILTIN_KERNELS = {
    "ssim": ssim,
    "msssim": msssim,
    "gmsd": gmsd,
    "vifs": vifs,
    "nlpd": nlpd,
}


class ExternalScorer(Protocol):
    def score_views(self, name: str, ref: Any, dist: Any) -> MetricScore: ...

    def descriptor(self, name: str) -> MetricDescriptor: ...


@dataclass
class MetricSuite:
    """Resolves metric names to kernels or registered plugins."""

    config: MetricsConfig = field(default_factory=MetricsConfig)
    external: Optional[ExternalScorer] = None

    def metric_id(self, name: str) -> MetricId:
        if name in BUILTIN_NAMES:
            return DESCRIPTORS[name].id
        return MetricId(name, external=True)

    def descriptor(self, metric: MetricId) -> MetricDescriptor:
        if not metric.external:
            return DESCRIPTORS[metric.name]
        if self.external is None:
            raise DomainError(f"No plugin registry for external metric {metric.name}")
        return self.external.descriptor(metric.name)

    def score(self, ref: Any, dist: Any, metric: MetricId) -> MetricScore:
        if metric.external:
            if self.external is None:
                raise DomainError(f"No plugin registry for external metric {metric.name}")
            return self.external.score_views(metric.name, ref, dist)
        return BUILTIN_KERNELS[metric.name](ref, dist, self.config)


def score_pair(ref: Any, dist: Any, metric: MetricId, suite: Optional[MetricSuite] = None) -> MetricScore:
    """Score one tangent-view pair; both views must come from the same plane."""
    if getattr(ref, "plane_index", None) != getattr(dist, "plane_index", None):
        raise PairingError(f"Plane index mismatch: {getattr(ref, 'plane_index', None)} vs {getattr(dist, 'plane_index', None)}")
    if getattr(ref, "dim", None) != getattr(dist, "dim", None):
        raise ShapeError(f"View size mismatch: {getattr(ref, 'dim', None)} vs {getattr(dist, 'dim', None)}")
    return (suite or MetricSuite()).score(ref, dist, metric)
