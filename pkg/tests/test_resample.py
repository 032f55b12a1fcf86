import math

import numpy as np
import pytest

from core.errors import AspectError, DimensionError, DomainError, GeometryError, ImageFormatError
from iqa.geometry import build_layout
from iqa.resample import (
    DegradeSpec,
    ErpImage,
    Interp,
    Kernel,
    cubic_weights,
    degrade,
    erp_pixel_to_sphere,
    render_all_views,
    render_view,
    resize_weights,
    sample_erp,
    sample_grid,
    sphere_to_erp_pixel,
    upsample,
)


def test_erp_pixel_centers():
    point = erp_pixel_to_sphere(0, 0, 8, 4)
    assert point.lon == pytest.approx(-math.pi + math.pi / 8.0)
    assert point.lat == pytest.approx(math.pi / 2.0 - math.pi / 8.0)


@pytest.mark.parametrize("u, v", [(0, 0), (5, 3), (127, 63), (64, 31)])
def test_pixel_sphere_round_trip(u, v):
    point = erp_pixel_to_sphere(u, v, 128, 64)
    assert sphere_to_erp_pixel(point, 128, 64) == pytest.approx((u, v), abs=1e-9)


def test_pixel_outside_image():
    with pytest.raises(GeometryError):
        erp_pixel_to_sphere(128, 0, 128, 64)


@pytest.mark.parametrize("interp", [Interp.BILINEAR, Interp.BICUBIC])
def test_sample_at_pixel_center_returns_pixel(erp, interp):
    img = erp("noise", 128)
    for u, v in [(10, 12), (77, 40), (0, 31)]:
        value = sample_erp(img, erp_pixel_to_sphere(u, v, img.width, img.height), interp)
        np.testing.assert_allclose(value, img.data[v, u], atol=1e-6)


def test_catmull_rom_weights_partition_unity():
    for offset in np.linspace(0.0, 1.0, 9):
        weights = cubic_weights(offset - np.array([-1.0, 0.0, 1.0, 2.0]))
        assert weights.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(cubic_weights(np.array([0.0, 1.0, 2.0])), [1.0, 0.0, 0.0], atol=1e-12)


def test_columns_wrap_across_seam():
    data = np.zeros((4, 8, 1))
    data[:, 0, 0] = 1.0
    out = sample_grid(data, np.array([7.5]), np.array([1.0]), Interp.BILINEAR)
    assert out[0, 0] == pytest.approx(0.5)


def test_rows_clamp_at_poles():
    data = np.zeros((4, 8, 1))
    data[0, :, 0] = 1.0
    out = sample_grid(data, np.array([3.0]), np.array([-0.5]), Interp.BILINEAR)
    assert out[0, 0] == pytest.approx(1.0)


def test_constant_erp_gives_constant_views(constant_erp):
    img = constant_erp(0.5, width=128)
    layout = build_layout(0, img.width)
    for view in render_all_views(img, layout, Interp.BICUBIC):
        np.testing.assert_allclose(view.data, 0.5, atol=1e-6)


def test_views_have_layout_shape(erp):
    img = erp("gradient", 256)
    layout = build_layout(0, img.width)
    views = render_all_views(img, layout)
    assert len(views) == 20
    assert [view.plane_index for view in views] == list(range(20))
    assert all(view.data.shape == (layout.view_dim, layout.view_dim, 3) for view in views)
    assert all(view.data.dtype == np.float32 for view in views)


def test_views_are_upright(erp):
    # gradient's first channel increases towards the north pole
    img = erp("gradient", 256)
    layout = build_layout(1, img.width)
    equator = next(i for i, plane in enumerate(layout.planes) if abs(plane.center[2]) < 0.2)
    view = render_view(img, layout, equator)
    assert view.data[0, :, 0].mean() > view.data[-1, :, 0].mean()


def test_render_view_rejects_bad_index(erp):
    img = erp("gradient", 128)
    with pytest.raises(GeometryError):
        render_view(img, build_layout(0, img.width), 20)


def test_rendering_is_independent_of_worker_count(erp):
    img = erp("noise", 256)
    layout = build_layout(1, img.width)
    serial = render_all_views(img, layout, workers=1)
    parallel = render_all_views(img, layout, workers=4)
    for a, b in zip(serial, parallel):
        assert np.array_equal(a.data, b.data)


def test_erp_requires_two_to_one_aspect():
    with pytest.raises(AspectError):
        ErpImage(np.zeros((10, 30, 3)))
    img = ErpImage(np.zeros((10, 30, 3)), allow_any_aspect=True)
    assert img.width == 30


def test_erp_rejects_out_of_range_samples():
    with pytest.raises(ImageFormatError):
        ErpImage(np.full((8, 16, 3), 1.5))
    with pytest.raises(ImageFormatError):
        ErpImage(np.zeros((8, 16, 2)))


def test_erp_save_load_round_trip(tmp_path, erp):
    img = erp("ramp", 64)
    path = tmp_path / "ramp.png"
    img.save(path, bit_depth=16)
    loaded = ErpImage.load(path)
    assert loaded.data.shape == img.data.shape
    np.testing.assert_allclose(loaded.data, img.data, atol=1.0 / 65535.0)


@pytest.mark.parametrize("kernel", list(Kernel))
def test_degrade_dimensions(erp, kernel):
    img = erp("noise", 128)
    spec = DegradeSpec(scale=4, kernel=kernel, sigma=1.2 if kernel is Kernel.GAUSSIAN else None)
    low = degrade(img, spec)
    assert (low.height, low.width, low.channels) == (16, 32, 3)


def test_degrade_requires_divisible_size():
    img = ErpImage(np.zeros((50, 100, 3)))
    with pytest.raises(DimensionError):
        degrade(img, DegradeSpec(scale=4))


def test_degrade_spec_validation():
    with pytest.raises(DimensionError):
        DegradeSpec(scale=1)
    with pytest.raises(DomainError):
        DegradeSpec(scale=2, kernel=Kernel.GAUSSIAN)


@pytest.mark.parametrize("kernel", [Kernel.BICUBIC, Kernel.BILINEAR, Kernel.GAUSSIAN])
def test_resize_rows_are_normalized(kernel):
    sigma = 1.5 if kernel is Kernel.GAUSSIAN else None
    for wrap in (True, False):
        matrix = resize_weights(64, 16, kernel, wrap=wrap, sigma=sigma)
        np.testing.assert_allclose(matrix.sum(axis=1), 1.0)


def test_degrade_keeps_constant_images(constant_erp):
    low = degrade(constant_erp(0.25, width=64), DegradeSpec(scale=2))
    np.testing.assert_allclose(low.data, 0.25, atol=1e-6)


def test_nearest_upsample_replicates_pixels(erp):
    img = erp("noise", 32)
    high = upsample(img, 2, Kernel.NEAREST)
    assert (high.height, high.width) == (32, 64)
    for a in (0, 1):
        for b in (0, 1):
            assert np.array_equal(high.data[a::2, b::2], img.data)


def test_upsample_validation(erp):
    img = erp("noise", 32)
    assert upsample(img, 1) is img
    with pytest.raises(DomainError):
        upsample(img, 2, Kernel.GAUSSIAN)
    with pytest.raises(DimensionError):
        upsample(img, 0)


@pytest.mark.parametrize("pattern", ["gradient", "checker", "noise", "ramp", "poles"])
def test_patterns_are_continuous_across_the_seam(erp, pattern):
    data = erp(pattern, 768).as_float64()
    seam = np.abs(data[:, 0] - data[:, -1]).max()
    interior = np.abs(np.diff(data, axis=1)).max()
    assert seam <= 1.5 * interior + 1e-6
