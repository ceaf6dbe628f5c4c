"""Pure image primitives: grayscale, rectification, filtering, diffs, region grids.

Everything here is a pure function of its inputs; image payloads are numpy
arrays frozen after construction, so values can be shared freely between
per-camera pipelines.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, DegenerateGeometry, DimensionMismatch, MissingFile

# Default per-pixel luminance tolerance below which a difference is treated as
# camera noise. Calibratable per camera.
DEFAULT_PIXEL_TOLERANCE = 12

# Default rectified working height (VGA-class board crops).
DEFAULT_OUT_HEIGHT = 480

GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])

COARSE_ROWS = 10
FINE_ROWS = 100


@dataclass(frozen=True)
class RawFrame:
    """8-bit RGB camera frame, row-major, with a capture timestamp."""

    pixels: np.ndarray  # (h, w, 3) uint8
    timestamp_ms: int = 0

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError("RawFrame pixels must have shape (h, w, 3)")
        if self.pixels.dtype != np.uint8:
            raise ValueError("RawFrame pixels must be uint8")
        if self.pixels.shape[0] <= 0 or self.pixels.shape[1] <= 0:
            raise ValueError("RawFrame dimensions must be positive")
        self.pixels.setflags(write=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class GrayImage:
    """8-bit luminance image, the working representation for filters and diffs."""

    pixels: np.ndarray  # (h, w) uint8

    def __post_init__(self):
        if self.pixels.ndim != 2:
            raise ValueError("GrayImage pixels must have shape (h, w)")
        if self.pixels.dtype != np.uint8:
            raise ValueError("GrayImage pixels must be uint8")
        self.pixels.setflags(write=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class BoardGeometry:
    """Board corner calibration in raw-frame coordinates.

    Corners are ordered top-left, top-right, bottom-right, bottom-left and must
    form a strictly convex quadrilateral.
    """

    corners: tuple[tuple[float, float], ...]
    aspect_ratio: float

    def __post_init__(self):
        if len(self.corners) != 4:
            raise DegenerateGeometry("exactly four corners required")
        if not self.aspect_ratio > 0:
            raise DegenerateGeometry("aspect_ratio must be positive")
        if not _strictly_convex(self.corners):
            raise DegenerateGeometry("corners must form a strictly convex quadrilateral")


@dataclass(frozen=True)
class DiffMap:
    """Per-pixel absolute difference plus the fraction above tolerance."""

    values: np.ndarray  # (h, w) uint8
    changed_fraction: float
    tolerance: int

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class RegionGridSet:
    """Square-cell change grids: a coarse X-by-10 set and a fine (10X)-by-100 set.

    Arrays are indexed (row, col); each cell holds the fraction of its pixels
    whose difference exceeded the tolerance.
    """

    coarse: np.ndarray  # (10, X) float64
    fine: np.ndarray  # (100, 10X) float64

    def __post_init__(self):
        self.coarse.setflags(write=False)
        self.fine.setflags(write=False)
        if self.coarse.shape[0] != COARSE_ROWS or self.fine.shape[0] != FINE_ROWS:
            raise ValueError("grids must have 10 coarse rows and 100 fine rows")
        if self.fine.shape[1] != 10 * self.coarse.shape[1]:
            raise ValueError("fine grid must be 10x the coarse grid in each dimension")

    @property
    def columns(self) -> int:
        """Number of coarse columns X (derived from the board aspect ratio)."""
        return self.coarse.shape[1]


def _strictly_convex(corners) -> bool:
    pts = np.asarray(corners, dtype=np.float64)
    cross = []
    for i in range(4):
        a = pts[(i + 1) % 4] - pts[i]
        b = pts[(i + 2) % 4] - pts[(i + 1) % 4]
        cross.append(a[0] * b[1] - a[1] * b[0])
    cross = np.array(cross)
    if np.any(np.abs(cross) < 1e-9):
        return False
    return bool(np.all(cross > 0) or np.all(cross < 0))


def to_grayscale(frame: RawFrame) -> GrayImage:
    """Convert RGB to luminance with the standard luma weights."""
    lum = frame.pixels @ GRAY_WEIGHTS  # promotes to float64
    return GrayImage(np.rint(lum).astype(np.uint8))


def compute_homography(src_pts, dst_pts) -> np.ndarray:
    """Solve the 3x3 projective transform mapping four src points to four dst points.

    Raises DegenerateGeometry when the correspondence is ill-conditioned
    (collinear or repeated points).
    """
    src = np.asarray(src_pts, dtype=np.float64)
    dst = np.asarray(dst_pts, dtype=np.float64)
    if src.shape != (4, 2) or dst.shape != (4, 2):
        raise ValueError("compute_homography expects four 2-d points on each side")
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for i in range(4):
        x, y = src[i]
        u, v = dst[i]
        a[2 * i] = [x, y, 1, 0, 0, 0, -x * u, -y * u]
        b[2 * i] = u
        a[2 * i + 1] = [0, 0, 0, x, y, 1, -x * v, -y * v]
        b[2 * i + 1] = v
    try:
        h = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise DegenerateGeometry(f"homography solve failed: {exc}") from exc
    if not np.all(np.isfinite(h)):
        raise DegenerateGeometry("homography solve produced non-finite values")
    return np.append(h, 1.0).reshape(3, 3)


def apply_homography(h: np.ndarray, pts) -> np.ndarray:
    """Apply a 3x3 projective transform to an (n, 2) array of points."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    ones = np.ones((pts.shape[0], 1))
    hom = np.hstack([pts, ones]) @ h.T
    return hom[:, :2] / hom[:, 2:3]


def rectified_size(aspect_ratio: float, out_height: int) -> tuple[int, int]:
    """(width, height) of the rectified board image for a given working height."""
    return int(round(aspect_ratio * out_height)), int(out_height)


def board_homography(geometry: BoardGeometry, out_width: int, out_height: int) -> np.ndarray:
    """Forward transform from raw-frame coordinates to rectified coordinates.

    The four geometry corners map exactly onto the four corner pixel centres of
    the out_width x out_height output.
    """
    dst = np.array(
        [
            [0.0, 0.0],
            [out_width - 1.0, 0.0],
            [out_width - 1.0, out_height - 1.0],
            [0.0, out_height - 1.0],
        ]
    )
    return compute_homography(np.asarray(geometry.corners, dtype=np.float64), dst)


def _bilinear_sample(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    h, w = pixels.shape
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    p = pixels.astype(np.float64)
    top = p[y0, x0] * (1 - fx) + p[y0, x1] * fx
    bot = p[y1, x0] * (1 - fx) + p[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def rectify(frame: RawFrame, geometry: BoardGeometry, out_height: int = DEFAULT_OUT_HEIGHT) -> GrayImage:
    """Warp the board quadrilateral into an axis-aligned grayscale rectangle.

    Non-board portions of the frame are cropped away implicitly; interior
    pixels are bilinearly sampled.
    """
    if out_height <= 0:
        raise ValueError("out_height must be positive")
    out_w, out_h = rectified_size(geometry.aspect_ratio, out_height)
    forward = board_homography(geometry, out_w, out_h)
    inverse = np.linalg.inv(forward)
    gray = to_grayscale(frame)
    xs, ys = np.meshgrid(np.arange(out_w, dtype=np.float64), np.arange(out_h, dtype=np.float64))
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1)
    src = apply_homography(inverse, pts)
    sampled = _bilinear_sample(gray.pixels, src[:, 0], src[:, 1])
    out = np.rint(sampled.reshape(out_h, out_w))
    return GrayImage(np.clip(out, 0, 255).astype(np.uint8))


def high_pass(img: GrayImage, k: float) -> GrayImage:
    """3x3 high-pass with kernel {0,-1,0; -1,k,-1; 0,-1,0}, edge replicated.

    Accentuates strokes while stripping low-frequency glare; requires k > 4.
    """
    if not k > 4:
        raise ValueError("high-pass kernel centre k must exceed 4")
    p = np.pad(img.pixels.astype(np.float64), 1, mode="edge")
    out = (
        k * p[1:-1, 1:-1]
        - p[:-2, 1:-1]
        - p[2:, 1:-1]
        - p[1:-1, :-2]
        - p[1:-1, 2:]
    )
    return GrayImage(np.clip(np.rint(out), 0, 255).astype(np.uint8))


def low_pass(img: GrayImage) -> GrayImage:
    """3x3 box blur (all-1/9 kernel), rounded, edge replicated."""
    p = np.pad(img.pixels.astype(np.float64), 1, mode="edge")
    acc = np.zeros_like(p[1:-1, 1:-1])
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            acc += p[1 + dy : p.shape[0] - 1 + dy, 1 + dx : p.shape[1] - 1 + dx]
    return GrayImage(np.clip(np.rint(acc / 9.0), 0, 255).astype(np.uint8))


def pixel_diff(a: GrayImage, b: GrayImage, tolerance: int = DEFAULT_PIXEL_TOLERANCE) -> DiffMap:
    """Symmetric per-pixel absolute difference with a changed-pixel fraction."""
    if a.pixels.shape != b.pixels.shape:
        raise DimensionMismatch(
            f"cannot diff {a.pixels.shape} against {b.pixels.shape}"
        )
    d = np.abs(a.pixels.astype(np.int16) - b.pixels.astype(np.int16)).astype(np.uint8)
    changed = int(np.count_nonzero(d > tolerance))
    return DiffMap(d, changed / d.size, tolerance)


def mean_brightness(img: GrayImage) -> float:
    """Arithmetic mean of all luminance values."""
    return float(img.pixels.mean())


def coarse_columns(aspect_ratio: float) -> int:
    """Coarse grid column count X = round(aspect_ratio * 10)."""
    return int(round(aspect_ratio * 10))


def _cell_index(extent: int, cells: int) -> np.ndarray:
    # Boundary pixels are assigned by floor of (pixel_index * cells / extent).
    return (np.arange(extent, dtype=np.int64) * cells) // extent


def cell_pixel_range(extent: int, cells: int, cell: int) -> tuple[int, int]:
    """Half-open pixel range [start, stop) covered by one grid cell."""
    idx = _cell_index(extent, cells)
    hits = np.nonzero(idx == cell)[0]
    if hits.size == 0:
        return 0, 0
    return int(hits[0]), int(hits[-1] + 1)


def _fraction_grid(changed: np.ndarray, rows: int, cols: int) -> np.ndarray:
    h, w = changed.shape
    row_idx = _cell_index(h, rows)
    col_idx = _cell_index(w, cols)
    flat = row_idx[:, None] * cols + col_idx[None, :]
    counts = np.bincount(flat.ravel(), weights=changed.ravel(), minlength=rows * cols)
    totals = np.bincount(flat.ravel(), minlength=rows * cols)
    with np.errstate(invalid="ignore"):
        frac = np.where(totals > 0, counts / totals, 0.0)
    return frac.reshape(rows, cols)


def region_grids(
    diff: DiffMap, aspect_ratio: float, tolerance: int | None = None
) -> RegionGridSet:
    """Coarse X-by-10 and fine (10X)-by-100 changed-pixel fraction grids."""
    cols = coarse_columns(aspect_ratio)
    if cols <= 0:
        raise DimensionMismatch("aspect ratio yields no grid columns")
    h, w = diff.values.shape
    # The diff must tile the grid to within one coarse cell of rounding.
    if abs(w - aspect_ratio * h) > h / COARSE_ROWS + 1e-9:
        raise DimensionMismatch(
            f"diff map {w}x{h} inconsistent with aspect ratio {aspect_ratio}"
        )
    tol = diff.tolerance if tolerance is None else tolerance
    changed = (diff.values > tol).astype(np.float64)
    coarse = _fraction_grid(changed, COARSE_ROWS, cols)
    fine = _fraction_grid(changed, FINE_ROWS, cols * 10)
    return RegionGridSet(coarse, fine)


# ---------------------------------------------------------------------------
# PNG I/O for fixtures, archives, and the wire format.

def load_frame(path, timestamp_ms: int = 0) -> RawFrame:
    try:
        with Image.open(path) as im:
            rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError as exc:
        raise MissingFile(str(path)) from exc
    except UnidentifiedImageError as exc:
        raise DecodeError(str(path)) from exc
    return RawFrame(rgb.copy(), timestamp_ms)


def save_frame(frame: RawFrame, path) -> None:
    Image.fromarray(frame.pixels, mode="RGB").save(path, format="PNG")


def load_gray(path) -> GrayImage:
    try:
        with Image.open(path) as im:
            gray = np.asarray(im.convert("L"), dtype=np.uint8)
    except FileNotFoundError as exc:
        raise MissingFile(str(path)) from exc
    except UnidentifiedImageError as exc:
        raise DecodeError(str(path)) from exc
    return GrayImage(gray.copy())


def save_gray(img: GrayImage, path) -> None:
    Image.fromarray(img.pixels, mode="L").save(path, format="PNG")


def encode_gray_png(img: GrayImage) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def decode_gray_png(data: bytes) -> GrayImage:
    try:
        with Image.open(io.BytesIO(data)) as im:
            gray = np.asarray(im.convert("L"), dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise DecodeError("not a decodable image") from exc
    return GrayImage(gray.copy())
