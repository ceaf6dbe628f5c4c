"""Content-change capture: burst acquisition, quality checks, filtered diffs.

One capture state machine per camera. A capture is attempted only when motion
was reported since the previous attempt; the candidate burst must agree with
itself (nobody walking through), be bright enough, and be free of large solid
occluders before the filtered diff against the last accepted content image
decides whether the board actually changed.

The diff reference is kept filtered so candidate and reference undergo
identical processing; the unfiltered rectified image is what gets archived.
The occlusion check runs on the unfiltered images, before filtering.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np
from scipy import ndimage

from .errors import CaptureDisabled, ContrastTooLow, Obstructed
from .imaging import (
    DEFAULT_PIXEL_TOLERANCE,
    BoardGeometry,
    GrayImage,
    RawFrame,
    RegionGridSet,
    high_pass,
    low_pass,
    mean_brightness,
    pixel_diff,
    rectify,
    region_grids,
)

TRIGGER_AUTOMATIC = "automatic"
TRIGGER_MANUAL = "manual"

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class CaptureConfig:
    burst_size: int = 3
    burst_spacing_ms: int = 200
    burst_agreement_tolerance: float = 0.01  # changed fraction between burst frames
    min_brightness: float = 40.0
    static_occlusion_area: float = 0.15  # fraction of board area
    occlusion_fill_ratio: float = 0.6
    high_pass_k: float = 6.0  # per camera
    change_threshold: float = 0.004  # t, per camera; see calibrate_threshold
    cell_change_tolerance: float = 0.05  # fraction for counting a grid cell changed
    pixel_tolerance: int = DEFAULT_PIXEL_TOLERANCE
    out_height: int = 480
    poll_interval_s: float = 10.0
    manual_retries: int = 5
    board_luminance: float = 200.0  # typical blank-board level seen by this camera

    def __post_init__(self):
        if self.burst_size < 2:
            raise ValueError("burst_size must be >= 2")
        for name in ("burst_agreement_tolerance", "static_occlusion_area",
                     "occlusion_fill_ratio", "change_threshold", "cell_change_tolerance"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must be in (0, 1)")


@dataclass(frozen=True)
class CaptureEvent:
    camera_id: str
    timestamp_ms: int
    image: GrayImage  # unfiltered rectified board image, what gets archived
    grids: RegionGridSet
    trigger: str  # automatic | manual
    changed_cell_count: int


class FrameSource(Protocol):
    """Anything that can hand the detector the current camera frame."""

    def grab(self) -> RawFrame:  # pragma: no cover - protocol
        ...


def filter_image(img: GrayImage, k: float) -> GrayImage:
    """The capture filter chain: high-pass to accentuate strokes, box blur for noise."""
    return low_pass(high_pass(img, k))


def changed_cell_count(grids: RegionGridSet, cell_change_tolerance: float) -> int:
    """Coarse cells whose changed fraction exceeds the cell tolerance."""
    return int(np.count_nonzero(grids.coarse > cell_change_tolerance))


def check_static_occlusion(candidate: GrayImage, last_accepted: GrayImage, cfg: CaptureConfig) -> bool:
    """True when a single dense changed region looks like a solid occluder.

    A chair parked in front of the board produces one large connected region
    whose bounding box is mostly filled; a sprawling new line drawing covers a
    big box too, but sparsely.
    """
    diff = pixel_diff(candidate, last_accepted, cfg.pixel_tolerance)
    mask = diff.values > cfg.pixel_tolerance
    if not mask.any():
        return False
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    board_area = mask.size
    areas = np.bincount(labels.ravel())
    for i, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        area = int(areas[i])
        if area <= cfg.static_occlusion_area * board_area:
            continue
        ys, xs = sl
        box_area = (ys.stop - ys.start) * (xs.stop - xs.start)
        if area / box_area > cfg.occlusion_fill_ratio:
            return True
    return False


class CaptureDetector:
    """Per-camera capture state machine owning its last-accepted reference images."""

    def __init__(
        self,
        camera_id: str,
        geometry: BoardGeometry,
        cfg: CaptureConfig | None = None,
        enabled: bool = True,
    ):
        self.camera_id = camera_id
        self.geometry = geometry
        self.cfg = cfg or CaptureConfig()
        self.enabled = enabled
        self._ref_plain: GrayImage | None = None
        self._ref_filtered: GrayImage | None = None

    @property
    def reference(self) -> GrayImage | None:
        """Unfiltered last-accepted board image (None until bootstrapped)."""
        return self._ref_plain

    @property
    def reference_filtered(self) -> GrayImage | None:
        return self._ref_filtered

    def prime(self, frame: RawFrame) -> None:
        """Seed the reference from a known board state (e.g. at installation)."""
        plain = rectify(frame, self.geometry, self.cfg.out_height)
        self._set_reference(plain)

    def _set_reference(self, plain: GrayImage) -> None:
        self._ref_plain = plain
        self._ref_filtered = filter_image(plain, self.cfg.high_pass_k)

    def _acquire_burst(self, source: FrameSource) -> list[GrayImage] | None:
        """Grab and rectify a burst; None when consecutive frames disagree."""
        rectified = []
        for _ in range(self.cfg.burst_size):
            frame = source.grab()
            rectified.append(rectify(frame, self.geometry, self.cfg.out_height))
        for a, b in zip(rectified, rectified[1:]):
            d = pixel_diff(a, b, self.cfg.pixel_tolerance)
            if d.changed_fraction > self.cfg.burst_agreement_tolerance:
                return None
        return rectified

    def _passes_quality(self, candidate: GrayImage) -> bool:
        # order: brightness, then static occlusion (burst agreement already held)
        if mean_brightness(candidate) < self.cfg.min_brightness:
            return False
        if self._ref_plain is not None and check_static_occlusion(candidate, self._ref_plain, self.cfg):
            return False
        return True

    def _build_event(self, candidate: GrayImage, timestamp_ms: int, trigger: str) -> CaptureEvent:
        filtered = filter_image(candidate, self.cfg.high_pass_k)
        reference = self._ref_filtered if self._ref_filtered is not None else filtered
        diff = pixel_diff(filtered, reference, self.cfg.pixel_tolerance)
        grids = region_grids(diff, self.geometry.aspect_ratio)
        event = CaptureEvent(
            camera_id=self.camera_id,
            timestamp_ms=timestamp_ms,
            image=candidate,
            grids=grids,
            trigger=trigger,
            changed_cell_count=changed_cell_count(grids, self.cfg.cell_change_tolerance),
        )
        self._ref_plain = candidate
        self._ref_filtered = filtered
        return event

    def attempt_capture(
        self,
        source: FrameSource,
        motion_since_last: bool,
        timestamp_ms: int,
        apply_change_threshold: bool = True,
    ) -> CaptureEvent | None:
        """One polling-cadence attempt; returns an event only for real changes.

        With no motion since the last attempt, any apparent change is assumed
        to be noise and nothing is even imaged. `apply_change_threshold=False`
        is the motion-only evaluation wiring: a stable, unobstructed image is
        captured without consulting the filtered diff threshold.
        """
        if not motion_since_last:
            return None
        burst = self._acquire_burst(source)
        if burst is None:
            return None
        candidate = burst[-1]
        if not self._passes_quality(candidate):
            return None
        if self._ref_filtered is None:
            # first stable image establishes the baseline silently
            self._set_reference(candidate)
            return None
        filtered = filter_image(candidate, self.cfg.high_pass_k)
        diff = pixel_diff(filtered, self._ref_filtered, self.cfg.pixel_tolerance)
        if apply_change_threshold and diff.changed_fraction <= self.cfg.change_threshold:
            return None
        return self._build_event(candidate, timestamp_ms, TRIGGER_AUTOMATIC)

    def manual_capture(self, source: FrameSource, timestamp_ms: int) -> CaptureEvent:
        """User-initiated capture: same quality gates, no change threshold."""
        if not self.enabled:
            raise CaptureDisabled(self.camera_id)
        for _ in range(self.cfg.manual_retries):
            burst = self._acquire_burst(source)
            if burst is None:
                continue
            candidate = burst[-1]
            if not self._passes_quality(candidate):
                continue
            return self._build_event(candidate, timestamp_ms, TRIGGER_MANUAL)
        raise Obstructed(
            f"camera {self.camera_id}: no stable unobstructed burst in "
            f"{self.cfg.manual_retries} attempts"
        )


def _synthetic_board(width: int, height: int, value: float) -> np.ndarray:
    return np.full((height, width), int(np.clip(round(value), 0, 255)), dtype=np.uint8)


def _measure_mark_response(
    width: int, height: int, mark_side: int, contrast: float, cfg: CaptureConfig
) -> float:
    blank = _synthetic_board(width, height, cfg.board_luminance)
    marked = blank.copy()
    y0 = (height - mark_side) // 2
    x0 = (width - mark_side) // 2
    marked[y0 : y0 + mark_side, x0 : x0 + mark_side] = int(
        np.clip(round(cfg.board_luminance - contrast), 0, 255)
    )
    blank_f = filter_image(GrayImage(blank), cfg.high_pass_k)
    marked_f = filter_image(GrayImage(marked), cfg.high_pass_k)
    return pixel_diff(marked_f, blank_f, cfg.pixel_tolerance).changed_fraction


def _noise_floor(width: int, height: int, cfg: CaptureConfig, amplitude: int, trials: int) -> float:
    """Worst filtered-diff response between independently jittered blank boards."""
    worst = 0.0
    for seed in range(trials):
        rng_a = np.random.default_rng(10_000 + seed)
        rng_b = np.random.default_rng(20_000 + seed)
        base = _synthetic_board(width, height, cfg.board_luminance).astype(np.int16)
        a = np.clip(base + rng_a.integers(-amplitude, amplitude + 1, size=base.shape), 0, 255)
        b = np.clip(base + rng_b.integers(-amplitude, amplitude + 1, size=base.shape), 0, 255)
        fa = filter_image(GrayImage(a.astype(np.uint8)), cfg.high_pass_k)
        fb = filter_image(GrayImage(b.astype(np.uint8)), cfg.high_pass_k)
        worst = max(worst, pixel_diff(fa, fb, cfg.pixel_tolerance).changed_fraction)
    return worst


def calibrate_threshold(
    board_area: int,
    stroke_contrast: float,
    cfg: CaptureConfig,
    noise_amplitude: int = 2,
    noise_trials: int = 5,
) -> float:
    """Pick the change threshold t so a mark of 1/100th board area triggers.

    Runs a synthetic mark through the full filter+diff pipeline and returns a
    threshold strictly below the measured response but safely above the
    measured noise floor. Raises ContrastTooLow when the mark's response is
    indistinguishable from noise.
    """
    if board_area <= 0:
        raise ValueError("board_area must be positive")
    height = max(int(round((board_area / 1.6) ** 0.5)), 10)
    width = max(int(round(board_area / height)), 10)
    mark_side = max(int(round((board_area / 100.0) ** 0.5)), 1)
    response = _measure_mark_response(width, height, mark_side, stroke_contrast, cfg)
    floor = _noise_floor(width, height, cfg, noise_amplitude, noise_trials)
    if response <= 0 or response <= 4 * floor:
        raise ContrastTooLow(
            f"mark response {response:.5f} vs noise floor {floor:.5f}"
        )
    # halfway between the noise floor and the mark's response: the largest
    # threshold that still leaves margin for per-frame jitter on real feeds
    return (response + floor) / 2.0 * 0.9
