"""Two-phase windowed-mean segmentation of person-count streams.

Every cadence tick the detector evaluates a mean over a sliding window:
idle state uses the short start window against the start threshold, active
state uses the full history span against the lower end threshold, which gives
the hysteresis that keeps mid-band person counts from ending an interval.

Window convention: a window ending at `now` covers samples with
``now - window < ts <= now``. Missing samples contribute nothing (the mean is
taken over the samples actually present; an empty window means 0).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .motion import MotionSample


@dataclass(frozen=True)
class CollabConfig:
    history_span_s: float = 300.0
    evaluation_cadence_s: float = 15.0
    start_window_s: float = 150.0
    start_threshold: float = 1.8
    end_threshold: float = 1.3

    def __post_init__(self):
        if self.start_window_s > self.history_span_s:
            raise ValueError("start window cannot exceed the history span")
        if not self.end_threshold < self.start_threshold:
            raise ValueError("end threshold must sit below the start threshold")


@dataclass(frozen=True)
class CollaborationInterval:
    camera_id: str
    start_ms: int
    end_ms: int

    def __post_init__(self):
        if not self.start_ms < self.end_ms:
            raise ValueError("interval start must precede its end")


class CollabDetector:
    """Per-camera person-count segmenter; single-threaded, state never shared."""

    def __init__(self, camera_id: str, cfg: CollabConfig | None = None):
        self.camera_id = camera_id
        self.cfg = cfg or CollabConfig()
        self._samples: deque[tuple[int, int]] = deque()
        self._active_since: int | None = None

    @property
    def active(self) -> bool:
        return self._active_since is not None

    def observe(self, sample: MotionSample) -> None:
        self._samples.append((sample.timestamp_ms, sample.person_count))

    def observe_count(self, timestamp_ms: int, person_count: int) -> None:
        self._samples.append((timestamp_ms, person_count))

    def _trim(self, now_ms: int) -> None:
        horizon = now_ms - int(self.cfg.history_span_s * 1000)
        while self._samples and self._samples[0][0] <= horizon:
            self._samples.popleft()

    def _mean_over(self, window_start_ms: int, now_ms: int) -> float:
        total = 0
        n = 0
        for ts, count in self._samples:
            if window_start_ms < ts <= now_ms:
                total += count
                n += 1
        if n == 0:
            return 0.0
        return total / n

    def step(self, now_ms: int) -> CollaborationInterval | None:
        """Evaluate one cadence tick; returns a finished interval when activity ends."""
        self._trim(now_ms)
        if self._active_since is None:
            window = int(self.cfg.start_window_s * 1000)
            if self._mean_over(now_ms - window, now_ms) > self.cfg.start_threshold:
                self._active_since = now_ms
            return None
        window = int(self.cfg.history_span_s * 1000)
        if self._mean_over(now_ms - window, now_ms) < self.cfg.end_threshold:
            interval = CollaborationInterval(self.camera_id, self._active_since, now_ms)
            self._active_since = None
            return interval
        return None

    def flush(self, now_ms: int) -> CollaborationInterval | None:
        """End-of-stream: close any open activity at `now_ms`.

        Activity that began at the very last instant has no extent and is
        dropped rather than emitted as an empty interval.
        """
        if self._active_since is None:
            return None
        start = self._active_since
        self._active_since = None
        if start >= now_ms:
            return None
        return CollaborationInterval(self.camera_id, start, now_ms)
