"""Server configuration file: YAML key-value document.

Top-level keys:

    server:   host, port
    storage:  database (sqlite path), images (content-addressed file area)
    users:    list of {id, display_name}
    cameras:  list of per-camera calibration bundles:
                id, owner, location, corners (four [x, y]), aspect_ratio,
                motion: MotionConfig fields, collab: CollabConfig fields,
                capture: CaptureConfig fields,
                feed: {kind: scenario|manifest, path, accelerate: bool}

Unknown keys inside motion/collab/capture sections are rejected so typos in
calibration files fail loudly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import yaml

from ..capture import CaptureConfig
from ..collab import CollabConfig
from ..errors import MalformedFilter
from ..imaging import BoardGeometry
from ..motion import MotionConfig
from ..pipeline import CameraPipelineConfig


@dataclass(frozen=True)
class FeedSpec:
    kind: str  # scenario | manifest
    path: str
    accelerate: bool = True


@dataclass(frozen=True)
class CameraSpec:
    id: str
    owner: str
    location: str
    geometry: BoardGeometry
    pipeline: CameraPipelineConfig
    feed: FeedSpec | None = None


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8350
    database: str = "./data/boardwatch.db"
    images: str = "./data/images"
    users: tuple[tuple[str, str], ...] = ()
    cameras: tuple[CameraSpec, ...] = ()


def _build(cls, section: dict | None, label: str):
    section = section or {}
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(section) - names
    if unknown:
        raise MalformedFilter(f"unknown {label} keys: {sorted(unknown)}")
    return cls(**section)


def parse_config(doc: dict) -> ServerConfig:
    server = doc.get("server", {})
    storage = doc.get("storage", {})
    users = tuple(
        (u["id"], u.get("display_name", u["id"])) for u in doc.get("users", [])
    )
    cameras = []
    for cam in doc.get("cameras", []):
        geometry = BoardGeometry(
            tuple(tuple(float(v) for v in c) for c in cam["corners"]),
            float(cam["aspect_ratio"]),
        )
        pipeline = CameraPipelineConfig(
            motion=_build(MotionConfig, cam.get("motion"), "motion"),
            collab=_build(CollabConfig, cam.get("collab"), "collab"),
            capture=_build(CaptureConfig, cam.get("capture"), "capture"),
        )
        feed = None
        if "feed" in cam:
            feed = FeedSpec(
                kind=cam["feed"]["kind"],
                path=cam["feed"]["path"],
                accelerate=bool(cam["feed"].get("accelerate", True)),
            )
        cameras.append(
            CameraSpec(
                id=cam["id"],
                owner=cam["owner"],
                location=cam.get("location", ""),
                geometry=geometry,
                pipeline=pipeline,
                feed=feed,
            )
        )
    return ServerConfig(
        host=server.get("host", "127.0.0.1"),
        port=int(server.get("port", 8350)),
        database=storage.get("database", "./data/boardwatch.db"),
        images=storage.get("images", "./data/images"),
        users=users,
        cameras=tuple(cameras),
    )


def load_config(path: str) -> ServerConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(yaml.safe_load(fh) or {})


def camera_config_dict(spec: CameraSpec) -> dict:
    """The per-camera config bundle stored with the camera registry row."""
    return {
        "motion": dataclasses.asdict(spec.pipeline.motion),
        "collab": dataclasses.asdict(spec.pipeline.collab),
        "capture": dataclasses.asdict(spec.pipeline.capture),
    }
