"""Per-camera wiring of the motion, collaboration, and capture detectors.

The worker owns the motion-gate latch: motion observed anywhere in the frame
since the last capture attempt opens the gate for the next polling tick.
Variants rewire the same components the way the evaluation compares them:

  combined        motion gate + filtered-diff threshold (production wiring)
  motion_only     motion gate, change threshold bypassed
  filtering_only  gate forced open, threshold kept; motion analysis unused

Everything here is single-threaded per camera; events leave through plain
callbacks carrying immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .capture import CaptureConfig, CaptureDetector, CaptureEvent, FrameSource
from .collab import CollabConfig, CollabDetector, CollaborationInterval
from .errors import SourceUnavailable
from .imaging import BoardGeometry, RawFrame, to_grayscale
from .motion import MotionConfig, MotionDetector, MotionSample

VARIANT_COMBINED = "combined"
VARIANT_MOTION_ONLY = "motion_only"
VARIANT_FILTERING_ONLY = "filtering_only"
VARIANTS = (VARIANT_COMBINED, VARIANT_MOTION_ONLY, VARIANT_FILTERING_ONLY)


@dataclass
class CameraPipelineConfig:
    motion: MotionConfig = field(default_factory=MotionConfig)
    collab: CollabConfig = field(default_factory=CollabConfig)
    capture: CaptureConfig = field(default_factory=CaptureConfig)


class CameraPipeline:
    """Detector ensemble for one camera over one frame stream."""

    def __init__(
        self,
        camera_id: str,
        geometry: BoardGeometry,
        cfg: CameraPipelineConfig | None = None,
        variant: str = VARIANT_COMBINED,
        on_capture: Callable[[CaptureEvent], None] | None = None,
        on_interval: Callable[[CollaborationInterval], None] | None = None,
        on_motion: Callable[[MotionSample], None] | None = None,
    ):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        self.camera_id = camera_id
        self.cfg = cfg or CameraPipelineConfig()
        self.variant = variant
        self.motion = MotionDetector(camera_id, self.cfg.motion)
        self.collab = CollabDetector(camera_id, self.cfg.collab)
        self.capture = CaptureDetector(camera_id, geometry, self.cfg.capture)
        self.on_capture = on_capture
        self.on_interval = on_interval
        self.on_motion = on_motion
        self._motion_latch = False
        self._next_collab_tick: int | None = None
        self._next_poll_tick: int | None = None

    @property
    def uses_motion_stream(self) -> bool:
        return self.variant != VARIANT_FILTERING_ONLY

    def prime(self, frame: RawFrame) -> None:
        self.capture.prime(frame)

    def on_frame(self, frame: RawFrame, timestamp_ms: int) -> None:
        """Feed one stream frame through motion analysis and collaboration history."""
        if not self.uses_motion_stream:
            return
        sample = self.motion.analyze(to_grayscale(frame), timestamp_ms)
        if sample.changed_fraction > self.cfg.motion.motion_gate:
            self._motion_latch = True
        self.collab.observe(sample)
        if self.on_motion is not None:
            self.on_motion(sample)

    def tick(self, now_ms: int, source: FrameSource) -> None:
        """Run any due cadence work: collaboration evaluation and capture polls."""
        collab_step = int(self.cfg.collab.evaluation_cadence_s * 1000)
        poll_step = int(self.cfg.capture.poll_interval_s * 1000)
        if self._next_collab_tick is None:
            self._next_collab_tick = collab_step
        if self._next_poll_tick is None:
            self._next_poll_tick = poll_step
        while self.uses_motion_stream and self._next_collab_tick <= now_ms:
            interval = self.collab.step(self._next_collab_tick)
            if interval is not None and self.on_interval is not None:
                self.on_interval(interval)
            self._next_collab_tick += collab_step
        while self._next_poll_tick <= now_ms:
            self._attempt(self._next_poll_tick, source)
            self._next_poll_tick += poll_step

    def _attempt(self, now_ms: int, source: FrameSource) -> None:
        gate_open = self._motion_latch or self.variant == VARIANT_FILTERING_ONLY
        self._motion_latch = False
        try:
            event = self.capture.attempt_capture(
                source,
                motion_since_last=gate_open,
                timestamp_ms=now_ms,
                apply_change_threshold=self.variant != VARIANT_MOTION_ONLY,
            )
        except SourceUnavailable:
            return  # state preserved, retried on the next cadence
        if event is not None and self.on_capture is not None:
            self.on_capture(event)

    def finish(self, now_ms: int) -> None:
        if not self.uses_motion_stream:
            return
        interval = self.collab.flush(now_ms)
        if interval is not None and self.on_interval is not None:
            self.on_interval(interval)
