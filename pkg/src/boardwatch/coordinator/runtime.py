"""Single-process deployment: per-camera detector workers plus the HTTP API.

Each worker drives one camera pipeline over its configured feed, polls the
coordinator for assignment updates (capture enable/disable, manual-capture
commands), and posts capture and collaboration events back in. The transport
here is in-process calls; a detector on another machine would speak the same
operations over the HTTP endpoints.
"""

from __future__ import annotations

import argparse
import threading
import time

from ..capture import CaptureEvent
from ..collab import CollaborationInterval
from ..errors import CaptureDisabled, Obstructed
from ..feedsim import ScenarioFeed, SceneRenderer, SimClock, load_manifest, load_scenario, replay
from ..pipeline import CameraPipeline
from .config import CameraSpec, ServerConfig, camera_config_dict, load_config
from .images import ImageStore
from .service import Coordinator


class CameraWorker:
    """Runs one camera's detectors over a feed, wired to the coordinator."""

    def __init__(self, coord: Coordinator, spec: CameraSpec, detector_id: str | None = None):
        self.coord = coord
        self.spec = spec
        self.detector_id = detector_id or f"det-{spec.id}"
        self.capture_enabled = True
        self.known_revision = 0
        self.pipeline = CameraPipeline(
            spec.id,
            spec.geometry,
            spec.pipeline,
            on_capture=self._post_capture,
            on_interval=self._post_interval,
        )
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    # -- coordinator wiring --------------------------------------------------

    def _post_capture(self, event: CaptureEvent) -> None:
        self.coord.ingest_capture(
            event.camera_id,
            event.timestamp_ms,
            event.image,
            event.grids,
            event.trigger,
            event.changed_cell_count,
        )

    def _post_interval(self, interval: CollaborationInterval) -> None:
        self.coord.ingest_collaboration(interval.camera_id, interval.start_ms, interval.end_ms)

    def poll(self, feed) -> None:
        """Apply assignment updates and execute pending manual-capture commands."""
        delta = self.coord.poll_assignments(self.detector_id, self.known_revision)
        self.known_revision = delta["revision"]
        for change in delta["changes"]:
            if change["camera_id"] != self.spec.id:
                continue
            if change["action"] == "remove":
                self.capture_enabled = False
            else:
                self.capture_enabled = change["camera"]["capture_enabled"]
        self.pipeline.capture.enabled = self.capture_enabled
        for command in delta["commands"]:
            if command["kind"] == "manual_capture" and command["camera_id"] == self.spec.id:
                try:
                    event = self.pipeline.capture.manual_capture(feed, self._now_ms(feed))
                except (CaptureDisabled, Obstructed):
                    continue
                self._post_capture(event)

    @staticmethod
    def _now_ms(feed) -> int:
        clock = getattr(feed, "clock", None)
        return clock.now_ms if clock is not None else int(time.time() * 1000)

    # -- feed loops ------------------------------------------------------------

    def run_scenario(self, accelerate: bool = True) -> None:
        scenario = load_scenario(self.spec.feed.path)
        renderer = SceneRenderer(scenario)
        clock = SimClock(0)
        feed = ScenarioFeed(renderer, clock, self.spec.pipeline.capture.burst_spacing_ms)
        self.pipeline.prime(renderer.frame(0))
        step_ms = int(round(1000 / scenario.fps))
        for t in renderer.frame_times():
            if self._stop.is_set():
                break
            clock.now_ms = t
            self.poll(feed)
            if self.pipeline.uses_motion_stream and self.capture_enabled:
                self.pipeline.on_frame(renderer.frame(t), t)
            if self.capture_enabled:
                self.pipeline.tick(t, feed)
            if not accelerate:
                time.sleep(step_ms / 1000)
        self.pipeline.finish(scenario.duration_ms)

    def run_manifest(self, accelerate: bool = True) -> None:
        import os

        from ..evalharness import ManifestFeed

        manifest = load_manifest(self.spec.feed.path)
        base = os.path.dirname(os.path.abspath(self.spec.feed.path))
        clock = SimClock(manifest.entries[0].timestamp_ms if manifest.entries else 0)
        feed = ManifestFeed(manifest, base, clock, self.spec.pipeline.capture.burst_spacing_ms)
        first = True
        prev_ts = None
        for frame in replay(manifest, base):
            if self._stop.is_set():
                break
            clock.now_ms = frame.timestamp_ms
            if first:
                self.pipeline.prime(frame)
                first = False
            self.poll(feed)
            if self.pipeline.uses_motion_stream and self.capture_enabled:
                self.pipeline.on_frame(frame, frame.timestamp_ms)
            if self.capture_enabled:
                self.pipeline.tick(frame.timestamp_ms, feed)
            if not accelerate and prev_ts is not None:
                time.sleep(max(frame.timestamp_ms - prev_ts, 0) / 1000)
            prev_ts = frame.timestamp_ms
        if manifest.entries:
            self.pipeline.finish(manifest.entries[-1].timestamp_ms)

    def start(self) -> None:
        if self.spec.feed is None:
            return
        runner = self.run_scenario if self.spec.feed.kind == "scenario" else self.run_manifest

        def loop():
            runner(accelerate=self.spec.feed.accelerate)

        self._thread = threading.Thread(target=loop, daemon=True, name=f"worker-{self.spec.id}")
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)


def bootstrap(coord: Coordinator, config: ServerConfig) -> dict[str, str]:
    """Create configured users and cameras; returns user id -> api key."""
    keys: dict[str, str] = {}
    for uid, name in config.users:
        user = coord.create_user(name, uid)
        keys[user.id] = user.api_key
    for spec in config.cameras:
        coord.create_camera(
            spec.id, spec.owner, spec.geometry, spec.location, camera_config_dict(spec)
        )
    return keys


def build_workers(coord: Coordinator, config: ServerConfig) -> list[CameraWorker]:
    workers = []
    for spec in config.cameras:
        worker = CameraWorker(coord, spec)
        coord.register_detector(worker.detector_id, "capture")
        coord.assign_camera(worker.detector_id, spec.id)
        workers.append(worker)
    return workers


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="boardwatch-server")
    parser.add_argument("--config", required=True, help="YAML server configuration")
    parser.add_argument("--no-feeds", action="store_true", help="serve the API without detector workers")
    args = parser.parse_args(argv)

    config = load_config(args.config)
    import os

    os.makedirs(os.path.dirname(os.path.abspath(config.database)), exist_ok=True)
    coord = Coordinator(config.database, ImageStore(config.images))
    keys = bootstrap(coord, config)
    for uid, key in keys.items():
        print(f"user {uid}: api key {key}", flush=True)
    workers = [] if args.no_feeds else build_workers(coord, config)
    for w in workers:
        w.start()

    from .api import create_app

    app = create_app(coord)
    import uvicorn

    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    finally:
        for w in workers:
            w.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
