from __future__ import annotations

import numpy as np
import pytest

from boardwatch import imaging
from boardwatch.errors import DegenerateGeometry, DimensionMismatch
from boardwatch.imaging import (
    BoardGeometry,
    DiffMap,
    GrayImage,
    RawFrame,
    apply_homography,
    board_homography,
    coarse_columns,
    compute_homography,
    high_pass,
    low_pass,
    mean_brightness,
    pixel_diff,
    rectified_size,
    rectify,
    region_grids,
    to_grayscale,
)

from oracles import (
    LOW_PASS_KERNEL,
    convolve3_oracle,
    diff_count_oracle,
    gray_oracle,
    grid_oracle,
    high_pass_kernel,
)


def gray(arr) -> GrayImage:
    return GrayImage(np.asarray(arr, dtype=np.uint8))


def frame(arr) -> RawFrame:
    return RawFrame(np.asarray(arr, dtype=np.uint8))


# --------------------------------------------------------------------------
# grayscale

def test_grayscale_black_is_zero():
    f = frame(np.zeros((4, 5, 3)))
    assert np.array_equal(to_grayscale(f).pixels, np.zeros((4, 5), dtype=np.uint8))


def test_grayscale_white_saturates():
    f = frame(np.full((3, 3, 3), 255))
    assert np.array_equal(to_grayscale(f).pixels, np.full((3, 3), 255, dtype=np.uint8))


def test_grayscale_matches_scalar_oracle():
    rng = np.random.default_rng(11)
    rgb = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
    got = to_grayscale(frame(rgb)).pixels
    assert np.array_equal(got, gray_oracle(rgb))


# --------------------------------------------------------------------------
# filters

def test_high_pass_constant_input():
    for k in (5.0, 6.0, 8.0):
        img = gray(np.full((6, 7), 60))
        expected = min(max(round(60 * (k - 4)), 0), 255)
        out = high_pass(img, k)
        assert np.all(out.pixels == expected)


def test_high_pass_single_bright_pixel():
    arr = np.zeros((5, 5), dtype=np.uint8)
    arr[2, 2] = 200
    out = high_pass(gray(arr), 5.0)
    # centre: 5*200 clamps at 255; 4-neighbours: -200 clamps at 0
    assert out.pixels[2, 2] == 255
    for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        assert out.pixels[2 + dy, 2 + dx] == 0


def test_high_pass_requires_k_above_four():
    with pytest.raises(ValueError):
        high_pass(gray(np.zeros((3, 3))), 4.0)


def test_low_pass_is_identity_on_constant():
    img = gray(np.full((9, 4), 173))
    assert np.array_equal(low_pass(img).pixels, img.pixels)


def test_low_pass_spreads_single_pixel():
    arr = np.zeros((7, 7), dtype=np.uint8)
    arr[3, 3] = 255
    out = low_pass(gray(arr))
    # interior 3x3 neighbourhood becomes round(255/9) = 28
    assert round(255 / 9) == 28
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            assert out.pixels[3 + dy, 3 + dx] == 28
    assert out.pixels[0, 0] == 0


@pytest.mark.parametrize("k", [5.0, 6.0, 8.0])
def test_filters_match_convolution_oracle(k):
    rng = np.random.default_rng(int(k) * 101)
    arr = rng.integers(0, 256, size=(16, 16), dtype=np.uint8)
    img = gray(arr)
    assert np.array_equal(high_pass(img, k).pixels, convolve3_oracle(arr, high_pass_kernel(k)))
    assert np.array_equal(low_pass(img).pixels, convolve3_oracle(arr, LOW_PASS_KERNEL))


def test_filters_match_oracle_on_many_random_images():
    rng = np.random.default_rng(42)
    for trial in range(50):
        arr = rng.integers(0, 256, size=(12, 12), dtype=np.uint8)
        img = gray(arr)
        k = float(rng.choice([5, 6, 7, 8]))
        assert np.array_equal(high_pass(img, k).pixels, convolve3_oracle(arr, high_pass_kernel(k)))
        assert np.array_equal(low_pass(img).pixels, convolve3_oracle(arr, LOW_PASS_KERNEL))


# --------------------------------------------------------------------------
# pixel diff / brightness

def test_pixel_diff_identity():
    rng = np.random.default_rng(7)
    arr = rng.integers(0, 256, size=(10, 10), dtype=np.uint8)
    d = pixel_diff(gray(arr), gray(arr), 10)
    assert d.changed_fraction == 0.0
    assert np.all(d.values == 0)


def test_pixel_diff_total_change():
    a = gray(np.zeros((10, 10)))
    b = gray(np.full((10, 10), 255))
    d = pixel_diff(a, b, 10)
    assert d.changed_fraction == 1.0


def test_pixel_diff_counts_exactly():
    # exactly 7 of 100 pixels differ by more than the tolerance
    a = np.full((10, 10), 100, dtype=np.uint8)
    b = a.copy()
    flat = b.reshape(-1)
    flat[:7] = 160
    flat[7:12] = 105  # below tolerance, must not count
    d = pixel_diff(gray(a), gray(b), 12)
    assert d.changed_fraction == pytest.approx(0.07)
    assert diff_count_oracle(a, b, 12) == 7


def test_pixel_diff_symmetric():
    rng = np.random.default_rng(3)
    a = rng.integers(0, 256, size=(9, 13), dtype=np.uint8)
    b = rng.integers(0, 256, size=(9, 13), dtype=np.uint8)
    d1 = pixel_diff(gray(a), gray(b), 12)
    d2 = pixel_diff(gray(b), gray(a), 12)
    assert np.array_equal(d1.values, d2.values)
    assert d1.changed_fraction == d2.changed_fraction


def test_pixel_diff_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        pixel_diff(gray(np.zeros((4, 4))), gray(np.zeros((4, 5))), 10)


def test_mean_brightness():
    assert mean_brightness(gray(np.zeros((5, 5)))) == 0.0
    assert mean_brightness(gray(np.full((5, 5), 200))) == 200.0
    arr = np.zeros((2, 10), dtype=np.uint8)
    arr[1, :] = 100
    assert mean_brightness(gray(arr)) == 50.0


# --------------------------------------------------------------------------
# region grids

def diff_from(values: np.ndarray, tolerance: int = 12) -> DiffMap:
    changed = int(np.count_nonzero(values > tolerance))
    return DiffMap(values.astype(np.uint8), changed / values.size, tolerance)


def test_region_grid_shape_for_1_6_aspect():
    assert coarse_columns(1.6) == 16
    d = diff_from(np.zeros((100, 160)))
    grids = region_grids(d, 1.6)
    assert grids.coarse.shape == (10, 16)
    assert grids.fine.shape == (100, 160)


def test_region_grids_all_zero():
    d = diff_from(np.zeros((100, 160)))
    grids = region_grids(d, 1.6)
    assert np.all(grids.coarse == 0)
    assert np.all(grids.fine == 0)


def test_region_grids_single_full_cell():
    # one fully-changed coarse cell; dimensions divisible by the fine grid
    values = np.zeros((100, 160), dtype=np.uint8)
    # coarse cell (row 3, col 5) covers rows 30..39, cols 50..59
    values[30:40, 50:60] = 200
    grids = region_grids(diff_from(values), 1.6)
    expected = np.zeros((10, 16))
    expected[3, 5] = 1.0
    assert np.array_equal(grids.coarse, expected)
    fine_block = grids.fine[30:40, 50:60]
    assert np.all(fine_block == 1.0)
    assert grids.fine.sum() == fine_block.size


def test_region_grids_match_counting_oracle():
    rng = np.random.default_rng(99)
    values = rng.integers(0, 256, size=(100, 160), dtype=np.uint8)
    d = diff_from(values, 100)
    grids = region_grids(d, 1.6)
    changed = values > 100
    assert np.allclose(grids.coarse, grid_oracle(changed, 10, 16))
    assert np.allclose(grids.fine, grid_oracle(changed, 100, 160))


def test_region_grids_coarse_equals_fine_block_sums():
    rng = np.random.default_rng(5)
    values = rng.integers(0, 256, size=(200, 320), dtype=np.uint8)
    grids = region_grids(diff_from(values, 128), 1.6)
    # dimensions divisible by the fine grid: counts aggregate exactly
    cell_h, cell_w = 20, 20
    fine_h, fine_w = 2, 2
    for r in range(10):
        for c in range(16):
            coarse_count = grids.coarse[r, c] * cell_h * cell_w
            block = grids.fine[r * 10 : (r + 1) * 10, c * 10 : (c + 1) * 10]
            fine_count = block.sum() * fine_h * fine_w
            assert coarse_count == pytest.approx(fine_count)


def test_region_grids_rejects_wrong_shape():
    d = diff_from(np.zeros((100, 320)))
    with pytest.raises(DimensionMismatch):
        region_grids(d, 1.6)


def test_region_grids_tolerates_one_cell_of_rounding():
    d = diff_from(np.zeros((99, 163)))
    grids = region_grids(d, 1.6)
    assert grids.coarse.shape == (10, 16)


# --------------------------------------------------------------------------
# rectification

def square_geometry() -> BoardGeometry:
    return BoardGeometry(((20.0, 10.0), (179.0, 10.0), (179.0, 109.0), (20.0, 109.0)), 1.6)


def test_rectified_size_convention():
    assert rectified_size(1.6, 100) == (160, 100)


def test_rectify_identity_crop():
    # corners already axis-aligned with matching aspect ratio: the output is
    # the cropped sub-image
    rng = np.random.default_rng(21)
    arr = rng.integers(0, 256, size=(130, 220), dtype=np.uint8)
    rgb = np.repeat(arr[:, :, None], 3, axis=2)
    out = rectify(RawFrame(rgb), square_geometry(), 100)
    expected = to_grayscale(RawFrame(rgb)).pixels[10:110, 20:180]
    assert out.pixels.shape == (100, 160)
    assert np.array_equal(out.pixels, expected)


def test_rectify_output_width_follows_aspect():
    rgb = np.zeros((130, 220, 3), dtype=np.uint8)
    out = rectify(RawFrame(rgb), square_geometry(), 100)
    assert out.width == 160 and out.height == 100


def test_geometry_rejects_nonconvex():
    with pytest.raises(DegenerateGeometry):
        BoardGeometry(((0.0, 0.0), (10.0, 0.0), (3.0, 3.0), (0.0, 10.0)), 1.0)
    with pytest.raises(DegenerateGeometry):
        BoardGeometry(((0.0, 0.0), (5.0, 0.0), (10.0, 0.0), (0.0, 10.0)), 1.0)


def test_homography_round_trip():
    src = [(3.0, 4.0), (90.0, 12.0), (85.0, 70.0), (8.0, 66.0)]
    dst = [(0.0, 0.0), (159.0, 0.0), (159.0, 99.0), (0.0, 99.0)]
    h = compute_homography(src, dst)
    mapped = apply_homography(h, src)
    assert np.allclose(mapped, dst, atol=1e-8)


def random_convex_quad(rng, width, height):
    """Perturbed rectangle corners, retried until strictly convex."""
    while True:
        margin = 0.18
        jitter = 0.1
        base = np.array(
            [
                [margin * width, margin * height],
                [(1 - margin) * width, margin * height],
                [(1 - margin) * width, (1 - margin) * height],
                [margin * width, (1 - margin) * height],
            ]
        )
        pts = base + rng.uniform(-jitter, jitter, size=(4, 2)) * [width, height]
        try:
            return BoardGeometry(tuple(map(tuple, pts)), float(rng.uniform(1.2, 1.9)))
        except DegenerateGeometry:
            continue


def test_corner_mapping_fidelity_on_random_quads():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        geom = random_convex_quad(rng, 320, 240)
        out_w, out_h = rectified_size(geom.aspect_ratio, 100)
        h = board_homography(geom, out_w, out_h)
        mapped = apply_homography(h, np.asarray(geom.corners))
        expected = np.array(
            [[0, 0], [out_w - 1, 0], [out_w - 1, out_h - 1], [0, out_h - 1]],
            dtype=np.float64,
        )
        assert np.max(np.abs(mapped - expected)) < 0.5


def checkerboard_value(bx: np.ndarray, by: np.ndarray, cell: float) -> np.ndarray:
    """Ideal checkerboard intensity over board coordinates."""
    return np.where(((np.floor(bx / cell) + np.floor(by / cell)) % 2) == 0, 255.0, 0.0)


def render_checkerboard_frame(geom: BoardGeometry, width, height, out_w, out_h, cell):
    """Project an analytic checkerboard into the frame quad, 3x3 supersampled."""
    forward = board_homography(geom, out_w, out_h)
    ys, xs = np.meshgrid(np.arange(height, dtype=np.float64), np.arange(width, dtype=np.float64), indexing="ij")
    acc = np.zeros((height, width))
    offsets = (-1 / 3, 0.0, 1 / 3)
    for oy in offsets:
        for ox in offsets:
            pts = np.stack([(xs + ox).ravel(), (ys + oy).ravel()], axis=1)
            board = apply_homography(forward, pts)
            bx = board[:, 0].reshape(height, width)
            by = board[:, 1].reshape(height, width)
            inside = (bx >= -0.5) & (bx <= out_w - 0.5) & (by >= -0.5) & (by <= out_h - 0.5)
            vals = np.where(inside, checkerboard_value(bx, by, cell), 128.0)
            acc += vals
    arr = np.clip(np.rint(acc / 9.0), 0, 255).astype(np.uint8)
    return RawFrame(np.repeat(arr[:, :, None], 3, axis=2))


def subpixel_crossing(profile: np.ndarray, near: float) -> float:
    """50%-level crossing of an edge profile closest to the expected position."""
    p = profile.astype(np.float64)
    crossings = []
    for i in range(len(p) - 1):
        lo, hi = p[i], p[i + 1]
        if (lo - 127.5) * (hi - 127.5) < 0:
            t = (127.5 - lo) / (hi - lo)
            crossings.append(i + t)
    if not crossings:
        return float("nan")
    return min(crossings, key=lambda c: abs(c - near))


def measure_corner(pixels: np.ndarray, cx: float, cy: float, probe: int) -> tuple[float, float]:
    lo = int(round(cx)) - probe
    hi = int(round(cx)) + probe + 1
    x1 = subpixel_crossing(pixels[int(round(cy - probe)), lo:hi], cx - lo) + lo
    x2 = subpixel_crossing(pixels[int(round(cy + probe)), lo:hi], cx - lo) + lo
    lo = int(round(cy)) - probe
    hi = int(round(cy)) + probe + 1
    y1 = subpixel_crossing(pixels[lo:hi, int(round(cx - probe))], cy - lo) + lo
    y2 = subpixel_crossing(pixels[lo:hi, int(round(cx + probe))], cy - lo) + lo
    return (x1 + x2) / 2.0, (y1 + y2) / 2.0


def test_checkerboard_rectifies_to_analytic_positions():
    rng = np.random.default_rng(77)
    cell = 20.0
    for _ in range(5):
        geom = random_convex_quad(rng, 320, 240)
        out_w, out_h = rectified_size(geom.aspect_ratio, 100)
        f = render_checkerboard_frame(geom, 320, 240, out_w, out_h, cell)
        out = rectify(f, geom, 100)
        # interior checkerboard corners sit at multiples of the cell size;
        # board coordinate u lands on rectified pixel-centre coordinate u
        for gx in range(1, int(out_w // cell)):
            for gy in range(1, int(out_h // cell)):
                cx = gx * cell
                cy = gy * cell
                if cx < 4 or cy < 4 or cx > out_w - 5 or cy > out_h - 5:
                    continue
                mx, my = measure_corner(out.pixels, cx, cy, 4)
                assert abs(mx - cx) < 0.5, (gx, gy, mx, cx)
                assert abs(my - cy) < 0.5, (gx, gy, my, cy)


def test_rectify_rejects_bad_out_height():
    with pytest.raises(ValueError):
        rectify(RawFrame(np.zeros((10, 10, 3), dtype=np.uint8)), square_geometry(), 0)


# --------------------------------------------------------------------------
# PNG round trips

def test_png_round_trip(tmp_path):
    rng = np.random.default_rng(13)
    rgb = rng.integers(0, 256, size=(16, 24, 3), dtype=np.uint8)
    f = RawFrame(rgb, 1234)
    p = tmp_path / "frame.png"
    imaging.save_frame(f, p)
    loaded = imaging.load_frame(p, 1234)
    assert np.array_equal(loaded.pixels, rgb)
    assert loaded.timestamp_ms == 1234

    g = GrayImage(rng.integers(0, 256, size=(16, 24), dtype=np.uint8))
    data = imaging.encode_gray_png(g)
    back = imaging.decode_gray_png(data)
    assert np.array_equal(back.pixels, g.pixels)


def test_load_frame_missing_file(tmp_path):
    with pytest.raises(imaging.MissingFile):
        imaging.load_frame(tmp_path / "nope.png")


def test_load_frame_decode_error(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"this is not a png")
    with pytest.raises(imaging.DecodeError):
        imaging.load_frame(bad)
