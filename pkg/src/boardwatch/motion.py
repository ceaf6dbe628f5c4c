"""Per-frame motion analysis: background differencing, blob extraction, counting.

One detector instance per camera; each instance is single-threaded over its
own frame stream. Blob extraction is deterministic connected-component
labelling plus transitive bounding-box merging, which keeps the
person-counting contract testable without a stochastic background model.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch
from .imaging import DEFAULT_PIXEL_TOLERANCE, GrayImage

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class MotionConfig:
    """Motion gate and person-size band, calibratable per camera."""

    motion_gate: float = 0.05
    min_blob_area: float = 0.015  # fraction of frame area
    max_blob_area: float = 0.45
    pixel_tolerance: int = DEFAULT_PIXEL_TOLERANCE
    aggregation_frames: int = 1  # mask union window for the gate

    def __post_init__(self):
        if not 0 < self.motion_gate < 1:
            raise ValueError("motion_gate must be in (0, 1)")
        if not 0 < self.min_blob_area < self.max_blob_area <= 1:
            raise ValueError("blob area band must satisfy 0 < min < max <= 1")
        if self.aggregation_frames < 1:
            raise ValueError("aggregation_frames must be >= 1")


@dataclass(frozen=True)
class Blob:
    """Rectilinear motion blob: bounding box in pixels plus member pixel count."""

    x: int
    y: int
    w: int
    h: int
    area: int

    def overlaps(self, other: "Blob") -> bool:
        return (
            self.x < other.x + other.w
            and other.x < self.x + self.w
            and self.y < other.y + other.h
            and other.y < self.y + self.h
        )

    def box_area(self) -> int:
        return self.w * self.h


@dataclass(frozen=True)
class MotionSample:
    """Per-frame motion summary emitted to the collaboration detector."""

    camera_id: str
    timestamp_ms: int
    changed_fraction: float
    person_count: int


def frame_motion(prev: GrayImage, cur: GrayImage, cfg: MotionConfig) -> tuple[float, np.ndarray]:
    """Background-difference two frames: (changed fraction, boolean exceedance mask)."""
    if prev.pixels.shape != cur.pixels.shape:
        raise DimensionMismatch("motion frames must share dimensions")
    d = np.abs(prev.pixels.astype(np.int16) - cur.pixels.astype(np.int16))
    mask = d > cfg.pixel_tolerance
    return float(np.count_nonzero(mask) / mask.size), mask


def _merge_pass(blobs: list[Blob]) -> tuple[list[Blob], bool]:
    merged: list[Blob] = []
    changed = False
    for blob in blobs:
        hit = None
        for i, existing in enumerate(merged):
            if existing.overlaps(blob):
                hit = i
                break
        if hit is None:
            merged.append(blob)
        else:
            e = merged[hit]
            x0 = min(e.x, blob.x)
            y0 = min(e.y, blob.y)
            x1 = max(e.x + e.w, blob.x + blob.w)
            y1 = max(e.y + e.h, blob.y + blob.h)
            merged[hit] = Blob(x0, y0, x1 - x0, y1 - y0, e.area + blob.area)
            changed = True
    return merged, changed


def merge_overlapping(blobs: list[Blob]) -> list[Blob]:
    """Transitively combine overlapping boxes into their joint bounding box."""
    out = list(blobs)
    changed = True
    while changed:
        out, changed = _merge_pass(out)
    return out


def extract_blobs(mask: np.ndarray, cfg: MotionConfig) -> list[Blob]:
    """Cluster motion pixels into non-overlapping, person-sized blobs."""
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    if count == 0:
        return []
    areas = np.bincount(labels.ravel())
    blobs = []
    for i, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        ys, xs = sl
        blobs.append(
            Blob(int(xs.start), int(ys.start), int(xs.stop - xs.start), int(ys.stop - ys.start), int(areas[i]))
        )
    blobs = merge_overlapping(blobs)
    frame_area = mask.size
    lo = cfg.min_blob_area * frame_area
    hi = cfg.max_blob_area * frame_area
    return [b for b in blobs if lo <= b.area <= hi]


def estimate_person_count(blobs: list[Blob]) -> int:
    """Blob count as a person-count proxy; no tracking is attempted."""
    return len(blobs)


class MotionDetector:
    """Stateful per-camera analyser over a frame stream.

    Keeps the previous analysed frame as the background model and, when the
    aggregation window is wider than one frame, gates on the union of recent
    masks (used by 1 fps replays that mirror one-second aggregation).
    """

    def __init__(self, camera_id: str, cfg: MotionConfig | None = None):
        self.camera_id = camera_id
        self.cfg = cfg or MotionConfig()
        self._prev: GrayImage | None = None
        self._masks: deque[np.ndarray] = deque(maxlen=self.cfg.aggregation_frames)

    def analyze(self, frame: GrayImage, timestamp_ms: int) -> MotionSample:
        if self._prev is None:
            self._prev = frame
            return MotionSample(self.camera_id, timestamp_ms, 0.0, 0)
        _, mask = frame_motion(self._prev, frame, self.cfg)
        self._masks.append(mask)
        agg = self._masks[0]
        for m in list(self._masks)[1:]:
            agg = agg | m
        fraction = float(np.count_nonzero(agg) / agg.size)
        if fraction > self.cfg.motion_gate:
            count = estimate_person_count(extract_blobs(agg, self.cfg))
        else:
            # below the gate no blob analysis runs at all
            count = 0
        self._prev = frame
        return MotionSample(self.camera_id, timestamp_ms, fraction, count)
