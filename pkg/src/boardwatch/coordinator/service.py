"""The coordinator service: users, cameras, detector assignment, event ingestion,
mixed-initiative collaborative labelling, metadata, sharing, and queries.

Persistence is a relational SQLite store whose tables mirror the domain
types; image payloads live in a content-addressed file area and records hold
references. All access is serialized behind one re-entrant lock, which is
coarser than per-camera exclusion but gives the same guarantee: the final
labelling of every record depends only on the order of ingestion calls, and
every query sees a consistent snapshot.
"""

from __future__ import annotations

import json
import sqlite3
import threading
import uuid
from dataclasses import dataclass

import numpy as np

from ..errors import (
    EmptyChange,
    MalformedFilter,
    NotAuthorized,
    NotOwner,
    StorageFailure,
    UnknownCamera,
    UnknownDetector,
    UnknownRecord,
    UnknownUser,
)
from ..imaging import (
    BoardGeometry,
    GrayImage,
    RegionGridSet,
    cell_pixel_range,
    decode_gray_png,
    encode_gray_png,
)
from .images import ImageStore

_SCHEMA = """
CREATE TABLE IF NOT EXISTS users(
  id TEXT PRIMARY KEY,
  display_name TEXT NOT NULL,
  api_key TEXT UNIQUE NOT NULL);
CREATE TABLE IF NOT EXISTS cameras(
  id TEXT PRIMARY KEY,
  owner_id TEXT NOT NULL REFERENCES users(id),
  location TEXT NOT NULL DEFAULT '',
  capture_enabled INTEGER NOT NULL DEFAULT 1,
  geometry_json TEXT NOT NULL,
  config_json TEXT NOT NULL DEFAULT '{}');
CREATE TABLE IF NOT EXISTS detectors(
  id TEXT PRIMARY KEY,
  role TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS assignment_log(
  revision INTEGER PRIMARY KEY AUTOINCREMENT,
  detector_id TEXT NOT NULL,
  camera_id TEXT NOT NULL,
  action TEXT NOT NULL,
  snapshot_json TEXT);
CREATE TABLE IF NOT EXISTS commands(
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  camera_id TEXT NOT NULL,
  kind TEXT NOT NULL,
  created_ms INTEGER NOT NULL,
  consumed INTEGER NOT NULL DEFAULT 0);
CREATE TABLE IF NOT EXISTS captures(
  id TEXT PRIMARY KEY,
  camera_id TEXT NOT NULL REFERENCES cameras(id),
  timestamp_ms INTEGER NOT NULL,
  trigger TEXT NOT NULL,
  content_type TEXT NOT NULL DEFAULT 'personal',
  changed_cell_count INTEGER NOT NULL,
  image_hash TEXT NOT NULL,
  image_w INTEGER NOT NULL,
  image_h INTEGER NOT NULL,
  grid_cols INTEGER NOT NULL,
  coarse_blob BLOB NOT NULL,
  fine_blob BLOB NOT NULL,
  label TEXT NOT NULL DEFAULT '',
  description TEXT NOT NULL DEFAULT '',
  bookmarked INTEGER NOT NULL DEFAULT 0);
CREATE INDEX IF NOT EXISTS captures_cam_ts ON captures(camera_id, timestamp_ms);
CREATE TABLE IF NOT EXISTS capture_contributors(
  capture_id TEXT NOT NULL,
  user_id TEXT NOT NULL,
  PRIMARY KEY(capture_id, user_id));
CREATE TABLE IF NOT EXISTS capture_tags(
  capture_id TEXT NOT NULL,
  tag TEXT NOT NULL,
  PRIMARY KEY(capture_id, tag));
CREATE TABLE IF NOT EXISTS shares(
  capture_id TEXT NOT NULL,
  user_id TEXT NOT NULL,
  x INTEGER NOT NULL, y INTEGER NOT NULL, w INTEGER NOT NULL, h INTEGER NOT NULL,
  PRIMARY KEY(capture_id, user_id));
CREATE TABLE IF NOT EXISTS intervals(
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  camera_id TEXT NOT NULL,
  start_ms INTEGER NOT NULL,
  end_ms INTEGER NOT NULL);
"""

CONTENT_PERSONAL = "personal"
CONTENT_COLLABORATIVE = "collaborative"
VIEW_SHARED = "shared"  # derived view-category: a record with >= 1 share
CONTENT_FILTERS = (CONTENT_PERSONAL, CONTENT_COLLABORATIVE, VIEW_SHARED)

DEFAULT_CELL_CHANGE_TOLERANCE = 0.05

ROLE_CAPTURE = "capture"
ROLE_MOTION = "motion"


@dataclass(frozen=True)
class User:
    id: str
    display_name: str
    api_key: str


def _grid_to_blob(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype=np.float64).tobytes()


def _blob_to_grid(blob: bytes, rows: int, cols: int) -> np.ndarray:
    return np.frombuffer(blob, dtype=np.float64).reshape(rows, cols)


class Coordinator:
    def __init__(self, db_path: str = ":memory:", image_store: ImageStore | None = None):
        self._lock = threading.RLock()
        self._db = sqlite3.connect(db_path, check_same_thread=False)
        self._db.row_factory = sqlite3.Row
        with self._lock:
            self._db.executescript(_SCHEMA)
            self._db.commit()
        self.images = image_store

    def close(self) -> None:
        self._db.close()

    # ------------------------------------------------------------------
    # users

    def create_user(self, display_name: str, user_id: str | None = None) -> User:
        uid = user_id or f"u-{uuid.uuid4().hex[:10]}"
        key = uuid.uuid4().hex
        with self._lock:
            try:
                self._db.execute(
                    "INSERT INTO users(id, display_name, api_key) VALUES (?,?,?)",
                    (uid, display_name, key),
                )
                self._db.commit()
            except sqlite3.IntegrityError as exc:
                raise StorageFailure(f"user {uid} already exists") from exc
        return User(uid, display_name, key)

    def get_user(self, user_id: str) -> User:
        with self._lock:
            row = self._db.execute("SELECT * FROM users WHERE id=?", (user_id,)).fetchone()
        if row is None:
            raise UnknownUser(user_id)
        return User(row["id"], row["display_name"], row["api_key"])

    def user_by_key(self, api_key: str) -> User | None:
        with self._lock:
            row = self._db.execute("SELECT * FROM users WHERE api_key=?", (api_key,)).fetchone()
        return None if row is None else User(row["id"], row["display_name"], row["api_key"])

    def list_users(self) -> list[dict]:
        with self._lock:
            rows = self._db.execute("SELECT id, display_name FROM users ORDER BY id").fetchall()
        return [dict(r) for r in rows]

    # ------------------------------------------------------------------
    # cameras & detectors

    def create_camera(
        self,
        camera_id: str,
        owner_id: str,
        geometry: BoardGeometry,
        location: str = "",
        config: dict | None = None,
    ) -> dict:
        self.get_user(owner_id)
        geo = {"corners": [list(c) for c in geometry.corners], "aspect_ratio": geometry.aspect_ratio}
        with self._lock:
            try:
                self._db.execute(
                    "INSERT INTO cameras(id, owner_id, location, geometry_json, config_json)"
                    " VALUES (?,?,?,?,?)",
                    (camera_id, owner_id, location, json.dumps(geo), json.dumps(config or {})),
                )
                self._db.commit()
            except sqlite3.IntegrityError as exc:
                raise StorageFailure(f"camera {camera_id} already exists") from exc
        return self.get_camera(camera_id)

    def get_camera(self, camera_id: str) -> dict:
        with self._lock:
            row = self._db.execute("SELECT * FROM cameras WHERE id=?", (camera_id,)).fetchone()
        if row is None:
            raise UnknownCamera(camera_id)
        return {
            "id": row["id"],
            "owner_id": row["owner_id"],
            "location": row["location"],
            "capture_enabled": bool(row["capture_enabled"]),
            "geometry": json.loads(row["geometry_json"]),
            "config": json.loads(row["config_json"]),
        }

    def camera_geometry(self, camera_id: str) -> BoardGeometry:
        cam = self.get_camera(camera_id)
        return BoardGeometry(
            tuple(tuple(c) for c in cam["geometry"]["corners"]), cam["geometry"]["aspect_ratio"]
        )

    def list_cameras(self) -> list[dict]:
        with self._lock:
            ids = [r["id"] for r in self._db.execute("SELECT id FROM cameras ORDER BY id")]
        return [self.get_camera(cid) for cid in ids]

    def _cell_tolerance(self, camera: dict) -> float:
        return float(
            camera["config"].get("capture", {}).get(
                "cell_change_tolerance", DEFAULT_CELL_CHANGE_TOLERANCE
            )
        )

    def register_detector(self, detector_id: str, role: str = ROLE_CAPTURE) -> None:
        with self._lock:
            self._db.execute(
                "INSERT OR REPLACE INTO detectors(id, role) VALUES (?,?)", (detector_id, role)
            )
            self._db.commit()

    def _camera_snapshot(self, camera_id: str) -> str:
        return json.dumps(self.get_camera(camera_id))

    def assign_camera(self, detector_id: str, camera_id: str) -> int:
        """Give a detector a camera, displacing any same-role holder. Returns the revision."""
        with self._lock:
            det = self._db.execute("SELECT * FROM detectors WHERE id=?", (detector_id,)).fetchone()
            if det is None:
                raise UnknownDetector(detector_id)
            self.get_camera(camera_id)
            current = self._current_holder(camera_id, det["role"])
            if current is not None and current != detector_id:
                self._db.execute(
                    "INSERT INTO assignment_log(detector_id, camera_id, action, snapshot_json)"
                    " VALUES (?,?,?,NULL)",
                    (current, camera_id, "remove"),
                )
            cur = self._db.execute(
                "INSERT INTO assignment_log(detector_id, camera_id, action, snapshot_json)"
                " VALUES (?,?,?,?)",
                (detector_id, camera_id, "assign", self._camera_snapshot(camera_id)),
            )
            self._db.commit()
            return int(cur.lastrowid)

    def _current_holder(self, camera_id: str, role: str) -> str | None:
        rows = self._db.execute(
            "SELECT l.detector_id, l.action FROM assignment_log l"
            " JOIN detectors d ON d.id = l.detector_id"
            " WHERE l.camera_id=? AND d.role=? ORDER BY l.revision",
            (camera_id, role),
        ).fetchall()
        holder = None
        for r in rows:
            if r["action"] == "assign":
                holder = r["detector_id"]
            elif r["action"] == "remove" and r["detector_id"] == holder:
                holder = None
        return holder

    def _assigned_detectors(self, camera_id: str) -> list[str]:
        rows = self._db.execute(
            "SELECT DISTINCT detector_id FROM assignment_log WHERE camera_id=?", (camera_id,)
        ).fetchall()
        out = []
        for r in rows:
            role = self._db.execute(
                "SELECT role FROM detectors WHERE id=?", (r["detector_id"],)
            ).fetchone()
            if role is not None and self._current_holder(camera_id, role["role"]) == r["detector_id"]:
                out.append(r["detector_id"])
        return out

    def _bump_camera(self, camera_id: str) -> None:
        """Publish an updated snapshot to every detector currently holding the camera."""
        snapshot = self._camera_snapshot(camera_id)
        for det in self._assigned_detectors(camera_id):
            self._db.execute(
                "INSERT INTO assignment_log(detector_id, camera_id, action, snapshot_json)"
                " VALUES (?,?,?,?)",
                (det, camera_id, "update", snapshot),
            )

    def poll_assignments(self, detector_id: str, known_revision: int = 0) -> dict:
        """Assignment changes newer than known_revision, plus pending commands."""
        with self._lock:
            det = self._db.execute("SELECT * FROM detectors WHERE id=?", (detector_id,)).fetchone()
            if det is None:
                raise UnknownDetector(detector_id)
            rows = self._db.execute(
                "SELECT * FROM assignment_log WHERE detector_id=? AND revision>? ORDER BY revision",
                (detector_id, known_revision),
            ).fetchall()
            latest: dict[str, sqlite3.Row] = {}
            for r in rows:
                latest[r["camera_id"]] = r
            changes = []
            for camera_id, r in sorted(latest.items()):
                entry = {"camera_id": camera_id, "action": r["action"]}
                if r["snapshot_json"]:
                    entry["camera"] = json.loads(r["snapshot_json"])
                changes.append(entry)
            head = self._db.execute("SELECT MAX(revision) AS m FROM assignment_log").fetchone()
            revision = int(head["m"] or 0)
            # manual-capture commands ride along with assignment polls
            commands = []
            assigned_now = {
                c["camera_id"] for c in changes if c["action"] != "remove"
            } | set(self._held_cameras(detector_id))
            if det["role"] == ROLE_CAPTURE and assigned_now:
                marks = ",".join("?" for _ in assigned_now)
                cmd_rows = self._db.execute(
                    f"SELECT * FROM commands WHERE consumed=0 AND camera_id IN ({marks}) ORDER BY id",
                    tuple(assigned_now),
                ).fetchall()
                for c in cmd_rows:
                    commands.append({"id": c["id"], "camera_id": c["camera_id"], "kind": c["kind"]})
                    self._db.execute("UPDATE commands SET consumed=1 WHERE id=?", (c["id"],))
            self._db.commit()
            return {"revision": revision, "changes": changes, "commands": commands}

    def _held_cameras(self, detector_id: str) -> list[str]:
        det = self._db.execute("SELECT role FROM detectors WHERE id=?", (detector_id,)).fetchone()
        if det is None:
            return []
        cams = self._db.execute(
            "SELECT DISTINCT camera_id FROM assignment_log WHERE detector_id=?", (detector_id,)
        ).fetchall()
        return [
            r["camera_id"]
            for r in cams
            if self._current_holder(r["camera_id"], det["role"]) == detector_id
        ]

    # ------------------------------------------------------------------
    # ingestion

    def ingest_capture(
        self,
        camera_id: str,
        timestamp_ms: int,
        image: GrayImage | bytes,
        grids: RegionGridSet,
        trigger: str = "automatic",
        changed_cell_count: int | None = None,
    ) -> dict:
        """Persist a capture; collaborative iff it falls inside a stored interval."""
        camera = self.get_camera(camera_id)
        png = image if isinstance(image, bytes) else encode_gray_png(image)
        decoded = decode_gray_png(png)
        if self.images is None:
            raise StorageFailure("no image store configured")
        digest = self.images.put(png)
        if changed_cell_count is None:
            tol = self._cell_tolerance(camera)
            changed_cell_count = int(np.count_nonzero(grids.coarse > tol))
        record_id = f"cap-{uuid.uuid4().hex[:12]}"
        with self._lock:
            inside = self._db.execute(
                "SELECT 1 FROM intervals WHERE camera_id=? AND start_ms<=? AND end_ms>=? LIMIT 1",
                (camera_id, timestamp_ms, timestamp_ms),
            ).fetchone()
            content_type = CONTENT_COLLABORATIVE if inside else CONTENT_PERSONAL
            self._db.execute(
                "INSERT INTO captures(id, camera_id, timestamp_ms, trigger, content_type,"
                " changed_cell_count, image_hash, image_w, image_h, grid_cols, coarse_blob, fine_blob)"
                " VALUES (?,?,?,?,?,?,?,?,?,?,?,?)",
                (
                    record_id,
                    camera_id,
                    timestamp_ms,
                    trigger,
                    content_type,
                    changed_cell_count,
                    digest,
                    decoded.width,
                    decoded.height,
                    grids.columns,
                    _grid_to_blob(grids.coarse),
                    _grid_to_blob(grids.fine),
                ),
            )
            self._db.commit()
        return self.get_record(record_id)

    def ingest_collaboration(self, camera_id: str, start_ms: int, end_ms: int) -> int:
        """Store an interval; upgrade contained captures. Returns the upgrade count."""
        self.get_camera(camera_id)
        if not start_ms < end_ms:
            raise MalformedFilter("interval start must precede end")
        with self._lock:
            self._db.execute(
                "INSERT INTO intervals(camera_id, start_ms, end_ms) VALUES (?,?,?)",
                (camera_id, start_ms, end_ms),
            )
            cur = self._db.execute(
                "UPDATE captures SET content_type=? WHERE camera_id=? AND content_type=?"
                " AND timestamp_ms BETWEEN ? AND ?",
                (CONTENT_COLLABORATIVE, camera_id, CONTENT_PERSONAL, start_ms, end_ms),
            )
            self._db.commit()
            return int(cur.rowcount)

    def list_intervals(self, camera_id: str) -> list[tuple[int, int]]:
        with self._lock:
            rows = self._db.execute(
                "SELECT start_ms, end_ms FROM intervals WHERE camera_id=? ORDER BY start_ms",
                (camera_id,),
            ).fetchall()
        return [(r["start_ms"], r["end_ms"]) for r in rows]

    # ------------------------------------------------------------------
    # records

    def _record_row(self, record_id: str) -> sqlite3.Row:
        row = self._db.execute("SELECT * FROM captures WHERE id=?", (record_id,)).fetchone()
        if row is None:
            raise UnknownRecord(record_id)
        return row

    def record_grids(self, record_id: str) -> RegionGridSet:
        with self._lock:
            row = self._record_row(record_id)
        cols = row["grid_cols"]
        return RegionGridSet(
            _blob_to_grid(row["coarse_blob"], 10, cols),
            _blob_to_grid(row["fine_blob"], 100, cols * 10),
        )

    def get_record(self, record_id: str, for_user: str | None = None) -> dict:
        with self._lock:
            row = self._record_row(record_id)
            contributors = [
                r["user_id"]
                for r in self._db.execute(
                    "SELECT user_id FROM capture_contributors WHERE capture_id=? ORDER BY user_id",
                    (record_id,),
                )
            ]
            tags = [
                r["tag"]
                for r in self._db.execute(
                    "SELECT tag FROM capture_tags WHERE capture_id=? ORDER BY tag", (record_id,)
                )
            ]
            shares = {
                r["user_id"]: (r["x"], r["y"], r["w"], r["h"])
                for r in self._db.execute("SELECT * FROM shares WHERE capture_id=?", (record_id,))
            }
            camera = self.get_camera(row["camera_id"])
        record = {
            "id": row["id"],
            "camera_id": row["camera_id"],
            "location": camera["location"],
            "owner_id": camera["owner_id"],
            "timestamp_ms": row["timestamp_ms"],
            "trigger": row["trigger"],
            "content_type": row["content_type"],
            "changed_cell_count": row["changed_cell_count"],
            "label": row["label"],
            "description": row["description"],
            "bookmarked": bool(row["bookmarked"]),
            "contributors": contributors,
            "tags": tags,
            "shared_with": sorted(shares),
            "image_w": row["image_w"],
            "image_h": row["image_h"],
            "grid_cols": row["grid_cols"],
        }
        if for_user is not None and for_user in shares:
            record["share_crop"] = list(shares[for_user])
        return record

    def _assert_visible(self, row: sqlite3.Row, user_id: str) -> None:
        camera = self.get_camera(row["camera_id"])
        if camera["owner_id"] == user_id:
            return
        hit = self._db.execute(
            "SELECT 1 FROM capture_contributors WHERE capture_id=? AND user_id=?",
            (row["id"], user_id),
        ).fetchone()
        if hit:
            return
        hit = self._db.execute(
            "SELECT 1 FROM shares WHERE capture_id=? AND user_id=?", (row["id"], user_id)
        ).fetchone()
        if hit:
            return
        raise NotAuthorized(f"{user_id} may not see record {row['id']}")

    def image_bytes(self, record_id: str, user_id: str, thumbnail: bool = False) -> bytes:
        """The archived PNG; share-only viewers get their cropped region."""
        with self._lock:
            row = self._record_row(record_id)
            self._assert_visible(row, user_id)
            camera = self.get_camera(row["camera_id"])
            is_contrib = (
                self._db.execute(
                    "SELECT 1 FROM capture_contributors WHERE capture_id=? AND user_id=?",
                    (record_id, user_id),
                ).fetchone()
                is not None
            )
            share = self._db.execute(
                "SELECT * FROM shares WHERE capture_id=? AND user_id=?", (record_id, user_id)
            ).fetchone()
        if self.images is None:
            raise StorageFailure("no image store configured")
        data = (
            self.images.thumbnail(row["image_hash"]) if thumbnail else self.images.get(row["image_hash"])
        )
        if camera["owner_id"] == user_id or is_contrib or share is None:
            return data
        # crop to the shared region
        import io

        from PIL import Image

        with Image.open(io.BytesIO(self.images.get(row["image_hash"]))) as im:
            x, y, w, h = share["x"], share["y"], share["w"], share["h"]
            cropped = im.crop((x, y, x + w, y + h))
            if thumbnail:
                cropped.thumbnail((256, 256))
            buf = io.BytesIO()
            cropped.save(buf, format="PNG")
            return buf.getvalue()

    # ------------------------------------------------------------------
    # sharing & metadata

    def default_share_region(self, record_id: str) -> tuple[int, int, int, int]:
        """Bounding rectangle of the largest connected changed coarse-cell cluster,
        scaled to image pixels. 4-connected cells; ties break toward the
        top-left cluster."""
        with self._lock:
            row = self._record_row(record_id)
            camera = self.get_camera(row["camera_id"])
        grids = self.record_grids(record_id)
        tol = self._cell_tolerance(camera)
        mask = grids.coarse > tol
        if not mask.any():
            raise EmptyChange(record_id)
        clusters = _cell_clusters(mask)
        best = max(clusters, key=lambda c: (len(c), -min(c)[0], -min(c)[1]))
        rows = [r for r, _ in best]
        cols = [c for _, c in best]
        w, h = row["image_w"], row["image_h"]
        x0, _ = cell_pixel_range(w, grids.columns, min(cols))
        _, x1 = cell_pixel_range(w, grids.columns, max(cols))
        y0, _ = cell_pixel_range(h, 10, min(rows))
        _, y1 = cell_pixel_range(h, 10, max(rows))
        return (x0, y0, x1 - x0, y1 - y0)

    def share(
        self,
        record_id: str,
        acting_user: str,
        targets: list[str],
        region: tuple[int, int, int, int] | None = None,
    ) -> dict:
        with self._lock:
            row = self._record_row(record_id)
            camera = self.get_camera(row["camera_id"])
            if camera["owner_id"] != acting_user:
                raise NotOwner(f"only {camera['owner_id']} may share record {record_id}")
            for t in targets:
                self.get_user(t)
            if region is None:
                region = self.default_share_region(record_id)
            x, y, w, h = (int(v) for v in region)
            if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > row["image_w"] or y + h > row["image_h"]:
                raise MalformedFilter(f"share region {region} outside image bounds")
            for t in targets:
                self._db.execute(
                    "INSERT OR REPLACE INTO shares(capture_id, user_id, x, y, w, h)"
                    " VALUES (?,?,?,?,?,?)",
                    (record_id, t, x, y, w, h),
                )
            self._db.commit()
        return self.get_record(record_id)

    def set_metadata(
        self,
        record_id: str,
        acting_user: str,
        contributors: list[str] | None = None,
        tags: list[str] | None = None,
        label: str | None = None,
        description: str | None = None,
        bookmarked: bool | None = None,
    ) -> dict:
        with self._lock:
            row = self._record_row(record_id)
            camera = self.get_camera(row["camera_id"])
            is_contrib = (
                self._db.execute(
                    "SELECT 1 FROM capture_contributors WHERE capture_id=? AND user_id=?",
                    (record_id, acting_user),
                ).fetchone()
                is not None
            )
            if camera["owner_id"] != acting_user and not is_contrib:
                raise NotAuthorized(f"{acting_user} may not edit record {record_id}")
            if contributors is not None:
                for c in contributors:
                    self.get_user(c)
                self._db.execute("DELETE FROM capture_contributors WHERE capture_id=?", (record_id,))
                for c in contributors:
                    self._db.execute(
                        "INSERT INTO capture_contributors(capture_id, user_id) VALUES (?,?)",
                        (record_id, c),
                    )
            if tags is not None:
                self._db.execute("DELETE FROM capture_tags WHERE capture_id=?", (record_id,))
                for t in tags:
                    self._db.execute(
                        "INSERT OR IGNORE INTO capture_tags(capture_id, tag) VALUES (?,?)",
                        (record_id, t),
                    )
            sets, vals = [], []
            if label is not None:
                sets.append("label=?")
                vals.append(label)
            if description is not None:
                sets.append("description=?")
                vals.append(description)
            if bookmarked is not None:
                sets.append("bookmarked=?")
                vals.append(1 if bookmarked else 0)
            if sets:
                vals.append(record_id)
                self._db.execute(f"UPDATE captures SET {', '.join(sets)} WHERE id=?", vals)
            self._db.commit()
        return self.get_record(record_id)

    # ------------------------------------------------------------------
    # capture control

    def set_capture_enabled(self, camera_id: str, acting_user: str, enabled: bool) -> dict:
        with self._lock:
            camera = self.get_camera(camera_id)
            if camera["owner_id"] != acting_user:
                raise NotOwner(f"only {camera['owner_id']} controls camera {camera_id}")
            self._db.execute(
                "UPDATE cameras SET capture_enabled=? WHERE id=?", (1 if enabled else 0, camera_id)
            )
            self._bump_camera(camera_id)
            self._db.commit()
        return self.get_camera(camera_id)

    def request_manual_capture(self, camera_id: str, acting_user: str, now_ms: int = 0) -> int:
        """Queue a manual-capture command; delivered on the next assignment poll."""
        with self._lock:
            camera = self.get_camera(camera_id)
            if camera["owner_id"] != acting_user:
                raise NotOwner(f"only {camera['owner_id']} controls camera {camera_id}")
            cur = self._db.execute(
                "INSERT INTO commands(camera_id, kind, created_ms) VALUES (?,?,?)",
                (camera_id, "manual_capture", now_ms),
            )
            self._db.commit()
            return int(cur.lastrowid)

    # ------------------------------------------------------------------
    # queries

    def visible_camera_ids(self, user_id: str) -> list[str]:
        with self._lock:
            rows = self._db.execute("SELECT id FROM cameras WHERE owner_id=?", (user_id,)).fetchall()
        return [r["id"] for r in rows]

    def query_captures(
        self,
        user_id: str,
        cameras: list[str] | None = None,
        start_ms: int | None = None,
        end_ms: int | None = None,
        content_types: list[str] | None = None,
        keyword: str | None = None,
        region: tuple[float, float, float, float] | None = None,
    ) -> list[dict]:
        """Records the user may see, matching all supplied filters, by timestamp.

        content_types filters against {personal, collaborative, shared}; shared
        is the derived has-shares category. The region filter selects records
        with any changed fine-grid cell whose centre falls inside the
        normalized rectangle.
        """
        if content_types is not None:
            for ct in content_types:
                if ct not in CONTENT_FILTERS:
                    raise MalformedFilter(f"unknown content type {ct!r}")
        if region is not None:
            x0, y0, x1, y1 = region
            if not (0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1):
                raise MalformedFilter(f"bad region {region}")
        self.get_user(user_id)
        with self._lock:
            rows = self._db.execute(
                """
                SELECT DISTINCT c.* FROM captures c
                JOIN cameras cam ON cam.id = c.camera_id
                LEFT JOIN capture_contributors cc ON cc.capture_id = c.id AND cc.user_id = :uid
                LEFT JOIN shares s ON s.capture_id = c.id AND s.user_id = :uid
                WHERE (cam.owner_id = :uid OR cc.user_id IS NOT NULL OR s.user_id IS NOT NULL)
                ORDER BY c.timestamp_ms, c.id
                """,
                {"uid": user_id},
            ).fetchall()
            out = []
            for row in rows:
                if cameras and row["camera_id"] not in cameras:
                    continue
                if start_ms is not None and row["timestamp_ms"] < start_ms:
                    continue
                if end_ms is not None and row["timestamp_ms"] > end_ms:
                    continue
                if content_types is not None and not self._matches_type(row, content_types):
                    continue
                if keyword is not None and keyword != "":
                    needle = keyword.lower()
                    if needle not in row["label"].lower() and needle not in row["description"].lower():
                        continue
                if region is not None and not self._matches_region(row, region):
                    continue
                out.append(self.get_record(row["id"], for_user=user_id))
            return out

    def _matches_type(self, row: sqlite3.Row, content_types: list[str]) -> bool:
        for ct in content_types:
            if ct == VIEW_SHARED:
                hit = self._db.execute(
                    "SELECT 1 FROM shares WHERE capture_id=? LIMIT 1", (row["id"],)
                ).fetchone()
                if hit:
                    return True
            elif row["content_type"] == ct:
                return True
        return False

    def _matches_region(self, row: sqlite3.Row, region) -> bool:
        camera = self.get_camera(row["camera_id"])
        tol = self._cell_tolerance(camera)
        cols = row["grid_cols"] * 10
        fine = _blob_to_grid(row["fine_blob"], 100, cols)
        x0, y0, x1, y1 = region
        rr, cc = np.nonzero(fine > tol)
        if rr.size == 0:
            return False
        cx = (cc + 0.5) / cols
        cy = (rr + 0.5) / 100
        return bool(np.any((cx >= x0) & (cx <= x1) & (cy >= y0) & (cy <= y1)))


def _cell_clusters(mask: np.ndarray) -> list[list[tuple[int, int]]]:
    """4-connected clusters of changed coarse cells."""
    rows, cols = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    clusters = []
    for r in range(rows):
        for c in range(cols):
            if not mask[r, c] or seen[r, c]:
                continue
            cluster = []
            stack = [(r, c)]
            seen[r, c] = True
            while stack:
                cr, cc = stack.pop()
                cluster.append((cr, cc))
                for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    nr, nc = cr + dr, cc + dc
                    if 0 <= nr < rows and 0 <= nc < cols and mask[nr, nc] and not seen[nr, nc]:
                        seen[nr, nc] = True
                        stack.append((nr, nc))
            clusters.append(cluster)
    return clusters
