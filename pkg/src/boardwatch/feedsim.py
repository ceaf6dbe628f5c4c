"""Deterministic frame sources: manifest replay and a synthetic scene generator.

The generator renders an office camera view (backdrop, skewed board
quadrilateral, strokes, textured walkers, static occluders, lighting ramps,
per-pixel jitter) from a declarative script and emits exact ground truth
alongside. Identical (scenario, seed) pairs produce byte-identical frames:
per-frame noise is keyed on (seed, timestamp).

Manifest file format, one frame per line after the header:

    fps=1
    <relative path><TAB><timestamp_ms>

Scenario script format (``#`` comments allowed): ``key=value`` lines for
scenario-wide settings, then one ``event:`` line per scripted event; see
`parse_scenario` for the full key list.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .errors import InvalidManifest, InvalidScript, MissingFile
from .imaging import BoardGeometry, RawFrame, apply_homography, board_homography, load_frame


# ---------------------------------------------------------------------------
# Manifest replay

@dataclass(frozen=True)
class ManifestEntry:
    path: str
    timestamp_ms: int


@dataclass(frozen=True)
class FrameManifest:
    entries: tuple[ManifestEntry, ...]
    fps: float

    def __post_init__(self):
        prev = None
        for e in self.entries:
            if prev is not None and e.timestamp_ms <= prev:
                raise InvalidManifest(
                    f"timestamps must strictly increase (saw {e.timestamp_ms} after {prev})"
                )
            prev = e.timestamp_ms


def parse_manifest(text: str) -> FrameManifest:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or not lines[0].startswith("fps="):
        raise InvalidManifest("manifest must start with an fps=<n> header")
    fps = float(lines[0].split("=", 1)[1])
    entries = []
    for ln in lines[1:]:
        if "\t" not in ln:
            raise InvalidManifest(f"bad manifest line (no tab): {ln!r}")
        path, ts = ln.rsplit("\t", 1)
        entries.append(ManifestEntry(path, int(ts)))
    return FrameManifest(tuple(entries), fps)


def load_manifest(path) -> FrameManifest:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_manifest(fh.read())
    except FileNotFoundError as exc:
        raise MissingFile(str(path)) from exc


def save_manifest(manifest: FrameManifest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"fps={manifest.fps:g}\n")
        for e in manifest.entries:
            fh.write(f"{e.path}\t{e.timestamp_ms}\n")


def replay(manifest: FrameManifest, base_dir=".") -> Iterator[RawFrame]:
    """Frames in manifest order carrying manifest timestamps (accelerated)."""
    for entry in manifest.entries:
        yield load_frame(os.path.join(base_dir, entry.path), entry.timestamp_ms)


# ---------------------------------------------------------------------------
# Scenario script

@dataclass(frozen=True)
class StrokeAdd:
    t_ms: int
    region: tuple[float, float, float, float]  # normalized board x0,y0,x1,y1
    contrast: float


@dataclass(frozen=True)
class Erase:
    t_ms: int
    region: tuple[float, float, float, float]


@dataclass(frozen=True)
class Walker:
    # (t_ms, cx, cy) waypoints in frame coordinates; linear interpolation
    waypoints: tuple[tuple[int, float, float], ...]
    width: int = 46
    height: int = 85
    value: int = 45

    @property
    def start_ms(self) -> int:
        return self.waypoints[0][0]

    @property
    def end_ms(self) -> int:
        return self.waypoints[-1][0]

    def position(self, t_ms: int) -> tuple[float, float]:
        wps = self.waypoints
        if t_ms <= wps[0][0]:
            return wps[0][1], wps[0][2]
        if t_ms >= wps[-1][0]:
            return wps[-1][1], wps[-1][2]
        for (t0, x0, y0), (t1, x1, y1) in zip(wps, wps[1:]):
            if t0 <= t_ms <= t1:
                if t1 == t0:
                    return x1, y1
                f = (t_ms - t0) / (t1 - t0)
                return x0 + f * (x1 - x0), y0 + f * (y1 - y0)
        return wps[-1][1], wps[-1][2]


@dataclass(frozen=True)
class LightingShift:
    start_ms: int
    end_ms: int
    delta: float  # luminance offset ramped in across the span, persistent after

    def offset(self, t_ms: int) -> float:
        if t_ms <= self.start_ms:
            return 0.0
        if t_ms >= self.end_ms:
            return self.delta
        return self.delta * (t_ms - self.start_ms) / (self.end_ms - self.start_ms)


@dataclass(frozen=True)
class OccluderSpan:
    start_ms: int
    end_ms: int
    rect: tuple[int, int, int, int]  # frame-coordinate x,y,w,h
    value: int = 55


@dataclass(frozen=True)
class Scenario:
    camera_id: str
    width: int
    height: int
    geometry: BoardGeometry
    duration_ms: int
    fps: float = 1.0
    seed: int = 0
    board_value: int = 110
    backdrop_value: int = 140
    noise_amplitude: int = 2
    content_height: int = 240  # board-space rendering resolution
    strokes: tuple[StrokeAdd, ...] = ()
    erases: tuple[Erase, ...] = ()
    walkers: tuple[Walker, ...] = ()
    lighting: tuple[LightingShift, ...] = ()
    occluders: tuple[OccluderSpan, ...] = ()

    def __post_init__(self):
        if self.duration_ms <= 0 or self.fps <= 0:
            raise InvalidScript("duration and fps must be positive")
        for ev in list(self.strokes) + list(self.erases):
            if not 0 <= ev.t_ms <= self.duration_ms:
                raise InvalidScript(f"event at {ev.t_ms} ms outside scenario duration")
            x0, y0, x1, y1 = ev.region
            if not (0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1):
                raise InvalidScript(f"bad normalized region {ev.region}")
        for w in self.walkers:
            if not w.waypoints:
                raise InvalidScript("walker needs at least one waypoint")
            if w.end_ms > self.duration_ms:
                raise InvalidScript("walker outlives the scenario")
        for ev in list(self.lighting) + list(self.occluders):
            if ev.end_ms <= ev.start_ms or ev.end_ms > self.duration_ms:
                raise InvalidScript("bad event span")
        # an erase must actually remove something, otherwise it is undetectable
        for er in self.erases:
            active = [
                s for s in self.strokes
                if s.t_ms < er.t_ms and _regions_overlap(s.region, er.region)
            ]
            if not active:
                raise InvalidScript(f"erase at {er.t_ms} ms does not hit any stroke")


def _regions_overlap(a, b) -> bool:
    return a[0] < b[2] and b[0] < a[2] and a[1] < b[3] and b[1] < a[3]


def _parse_kv(parts: list[str]) -> dict[str, str]:
    out = {}
    for p in parts:
        if "=" not in p:
            raise InvalidScript(f"expected key=value, got {p!r}")
        k, v = p.split("=", 1)
        out[k] = v
    return out


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x != ""]


def parse_scenario(text: str) -> Scenario:
    """Parse the key-value scenario script format.

    Scenario-wide keys: camera, width, height, fps, duration_s, seed,
    board_corners (four "x,y" pairs, space separated), aspect_ratio,
    board_value, backdrop_value, noise, content_height.

    Event lines:
      event: stroke_add t=<s> region=x0,y0,x1,y1 contrast=<lum>
      event: erase t=<s> region=x0,y0,x1,y1
      event: walker size=w,h value=<lum> path=t,cx,cy;t,cx,cy;...
      event: lighting start=<s> end=<s> delta=<lum>
      event: occluder start=<s> end=<s> rect=x,y,w,h value=<lum>
    Times in the file are seconds; they are milliseconds internally.
    """
    settings: dict[str, str] = {}
    strokes, erases, walkers, lighting, occluders = [], [], [], [], []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("event:"):
            parts = line[len("event:"):].split()
            if not parts:
                raise InvalidScript("empty event line")
            kind, kv = parts[0], _parse_kv(parts[1:])
            if kind == "stroke_add":
                strokes.append(
                    StrokeAdd(round(float(kv["t"]) * 1000), tuple(_floats(kv["region"])), float(kv["contrast"]))
                )
            elif kind == "erase":
                erases.append(Erase(round(float(kv["t"]) * 1000), tuple(_floats(kv["region"]))))
            elif kind == "walker":
                wps = []
                for triple in kv["path"].split(";"):
                    t, cx, cy = _floats(triple)
                    wps.append((round(t * 1000), cx, cy))
                w, h = (int(v) for v in _floats(kv.get("size", "46,85")))
                walkers.append(Walker(tuple(wps), w, h, int(kv.get("value", 45))))
            elif kind == "lighting":
                lighting.append(
                    LightingShift(round(float(kv["start"]) * 1000), round(float(kv["end"]) * 1000), float(kv["delta"]))
                )
            elif kind == "occluder":
                x, y, w, h = (int(v) for v in _floats(kv["rect"]))
                occluders.append(
                    OccluderSpan(
                        int(float(kv["start"]) * 1000),
                        int(float(kv["end"]) * 1000),
                        (x, y, w, h),
                        int(kv.get("value", 55)),
                    )
                )
            else:
                raise InvalidScript(f"unknown event kind {kind!r}")
        elif "=" in line:
            k, v = line.split("=", 1)
            settings[k.strip()] = v.strip()
        else:
            raise InvalidScript(f"unparseable line: {line!r}")

    try:
        corner_pairs = settings["board_corners"].split()
        corners = tuple(tuple(_floats(p)) for p in corner_pairs)
        geometry = BoardGeometry(corners, float(settings["aspect_ratio"]))
        return Scenario(
            camera_id=settings.get("camera", "cam"),
            width=int(settings["width"]),
            height=int(settings["height"]),
            geometry=geometry,
            duration_ms=round(float(settings["duration_s"]) * 1000),
            fps=float(settings.get("fps", "1")),
            seed=int(settings.get("seed", "0")),
            board_value=int(settings.get("board_value", "110")),
            backdrop_value=int(settings.get("backdrop_value", "140")),
            noise_amplitude=int(settings.get("noise", "2")),
            content_height=int(settings.get("content_height", "240")),
            strokes=tuple(strokes),
            erases=tuple(erases),
            walkers=tuple(walkers),
            lighting=tuple(lighting),
            occluders=tuple(occluders),
        )
    except KeyError as exc:
        raise InvalidScript(f"missing scenario setting: {exc}") from exc


def _fmt(v: float) -> str:
    # repr round-trips floats exactly; integral values stay compact
    f = float(v)
    return str(int(f)) if f.is_integer() else repr(f)


def format_scenario(sc: Scenario) -> str:
    corners = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in sc.geometry.corners)
    lines = [
        f"camera={sc.camera_id}",
        f"width={sc.width}",
        f"height={sc.height}",
        f"fps={_fmt(sc.fps)}",
        f"duration_s={_fmt(sc.duration_ms / 1000)}",
        f"seed={sc.seed}",
        f"board_corners={corners}",
        f"aspect_ratio={_fmt(sc.geometry.aspect_ratio)}",
        f"board_value={sc.board_value}",
        f"backdrop_value={sc.backdrop_value}",
        f"noise={sc.noise_amplitude}",
        f"content_height={sc.content_height}",
    ]
    for s in sc.strokes:
        r = ",".join(_fmt(v) for v in s.region)
        lines.append(f"event: stroke_add t={_fmt(s.t_ms / 1000)} region={r} contrast={_fmt(s.contrast)}")
    for e in sc.erases:
        r = ",".join(_fmt(v) for v in e.region)
        lines.append(f"event: erase t={_fmt(e.t_ms / 1000)} region={r}")
    for w in sc.walkers:
        path = ";".join(f"{_fmt(t / 1000)},{_fmt(x)},{_fmt(y)}" for t, x, y in w.waypoints)
        lines.append(f"event: walker size={w.width},{w.height} value={w.value} path={path}")
    for l in sc.lighting:
        lines.append(
            f"event: lighting start={_fmt(l.start_ms / 1000)} end={_fmt(l.end_ms / 1000)} delta={_fmt(l.delta)}"
        )
    for o in sc.occluders:
        r = ",".join(str(v) for v in o.rect)
        lines.append(
            f"event: occluder start={_fmt(o.start_ms / 1000)} end={_fmt(o.end_ms / 1000)} rect={r} value={o.value}"
        )
    return "\n".join(lines) + "\n"


def load_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_scenario(fh.read())
    except FileNotFoundError as exc:
        raise MissingFile(str(path)) from exc


def save_scenario(sc: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_scenario(sc))


# ---------------------------------------------------------------------------
# Ground truth

@dataclass(frozen=True)
class BoardUpdate:
    timestamp_ms: int
    region: tuple[float, float, float, float]
    kind: str  # add | erase
    contrast: float
    collaborative: bool


@dataclass(frozen=True)
class GroundTruth:
    camera_id: str
    duration_ms: int
    updates: tuple[BoardUpdate, ...]
    presence: tuple[tuple[int, int], ...]  # (timestamp_ms, walker count) at 1 s cadence

    def to_dict(self) -> dict:
        return {
            "camera_id": self.camera_id,
            "duration_ms": self.duration_ms,
            "updates": [
                {
                    "timestamp_ms": u.timestamp_ms,
                    "region": list(u.region),
                    "kind": u.kind,
                    "contrast": u.contrast,
                    "collaborative": u.collaborative,
                }
                for u in self.updates
            ],
            "presence": [list(p) for p in self.presence],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        return cls(
            camera_id=d["camera_id"],
            duration_ms=d["duration_ms"],
            updates=tuple(
                BoardUpdate(
                    u["timestamp_ms"], tuple(u["region"]), u["kind"], u["contrast"], u["collaborative"]
                )
                for u in d["updates"]
            ),
            presence=tuple((int(t), int(c)) for t, c in d["presence"]),
        )


def walker_count_at(scenario: Scenario, t_ms: int) -> int:
    return sum(1 for w in scenario.walkers if w.start_ms <= t_ms <= w.end_ms)


def ground_truth(scenario: Scenario) -> GroundTruth:
    """Exact labels derived from the script: one update per stroke-add/erase."""
    updates = []
    for s in scenario.strokes:
        updates.append(
            BoardUpdate(s.t_ms, s.region, "add", s.contrast, walker_count_at(scenario, s.t_ms) >= 2)
        )
    for e in scenario.erases:
        # erased content had the contrast of whatever stroke it removes
        contrast = max(
            (s.contrast for s in scenario.strokes if s.t_ms < e.t_ms and _regions_overlap(s.region, e.region)),
            default=0.0,
        )
        updates.append(
            BoardUpdate(e.t_ms, e.region, "erase", contrast, walker_count_at(scenario, e.t_ms) >= 2)
        )
    updates.sort(key=lambda u: u.timestamp_ms)
    presence = tuple(
        (t, walker_count_at(scenario, t)) for t in range(0, scenario.duration_ms + 1, 1000)
    )
    return GroundTruth(scenario.camera_id, scenario.duration_ms, tuple(updates), presence)


# ---------------------------------------------------------------------------
# Rendering

def _draw_stroke(img: np.ndarray, x0: int, y0: int, x1: int, y1: int, value: float) -> None:
    """Line-work drawing inside a region: rectangle outline plus both diagonals.

    Keeps scripted marks sparse (unlike a solid block) so they read as
    drawings, not occluders.
    """
    t = max(2, (y1 - y0) // 12)
    img[y0 : y0 + t, x0:x1] = value
    img[y1 - t : y1, x0:x1] = value
    img[y0:y1, x0 : x0 + t] = value
    img[y0:y1, x1 - t : x1] = value
    n = 2 * max(x1 - x0, y1 - y0)
    ts = np.linspace(0.0, 1.0, n)
    for sx, sy, ex, ey in ((x0, y0, x1 - 1, y1 - 1), (x0, y1 - 1, x1 - 1, y0)):
        xs = np.rint(sx + ts * (ex - sx)).astype(int)
        ys = np.rint(sy + ts * (ey - sy)).astype(int)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                img[np.clip(ys + dy, y0, y1 - 1), np.clip(xs + dx, x0, x1 - 1)] = value


class SceneRenderer:
    """Renders any timestamp of a scenario deterministically.

    Board content lives in a board-space image re-rendered only when a stroke
    or erase event passes; the projective mapping of board space into the
    frame quadrilateral is precomputed once.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        aspect = scenario.geometry.aspect_ratio
        self.content_h = scenario.content_height
        self.content_w = int(round(aspect * self.content_h))
        forward = board_homography(scenario.geometry, self.content_w, self.content_h)
        ys, xs = np.meshgrid(
            np.arange(scenario.height, dtype=np.float64),
            np.arange(scenario.width, dtype=np.float64),
            indexing="ij",
        )
        pts = np.stack([xs.ravel(), ys.ravel()], axis=1)
        board_pts = apply_homography(forward, pts)
        bx = board_pts[:, 0]
        by = board_pts[:, 1]
        inside = (bx >= -0.5) & (bx <= self.content_w - 0.5) & (by >= -0.5) & (by <= self.content_h - 0.5)
        self._inside_flat = np.nonzero(inside)[0]
        cx = np.clip(bx[inside], 0, self.content_w - 1)
        cy = np.clip(by[inside], 0, self.content_h - 1)
        self._x0 = np.floor(cx).astype(np.intp)
        self._y0 = np.floor(cy).astype(np.intp)
        self._x1 = np.minimum(self._x0 + 1, self.content_w - 1)
        self._y1 = np.minimum(self._y0 + 1, self.content_h - 1)
        self._fx = cx - self._x0
        self._fy = cy - self._y0
        self._content_cache_key: tuple | None = None
        self._content: np.ndarray | None = None
        self._layer_cache_key: tuple | None = None
        self._layer: np.ndarray | None = None

    # -- board content ------------------------------------------------------

    def _active_marks(self, t_ms: int):
        """Stroke/erase events applied so far, in script order."""
        events: list[tuple[int, str, tuple, float]] = []
        for s in self.scenario.strokes:
            events.append((s.t_ms, "add", s.region, s.contrast))
        for e in self.scenario.erases:
            events.append((e.t_ms, "erase", e.region, 0.0))
        events.sort(key=lambda ev: (ev[0], ev[1]))
        return tuple(ev for ev in events if ev[0] <= t_ms)

    def _content_at(self, t_ms: int) -> np.ndarray:
        applied = self._active_marks(t_ms)
        if self._content_cache_key == applied and self._content is not None:
            return self._content
        img = np.full((self.content_h, self.content_w), float(self.scenario.board_value))
        for _, kind, region, contrast in applied:
            x0 = int(round(region[0] * self.content_w))
            x1 = max(int(round(region[2] * self.content_w)), x0 + 2)
            y0 = int(round(region[1] * self.content_h))
            y1 = max(int(round(region[3] * self.content_h)), y0 + 2)
            if kind == "add":
                _draw_stroke(img, x0, y0, x1, y1, self.scenario.board_value - contrast)
            else:
                img[y0:y1, x0:x1] = self.scenario.board_value
        self._content_cache_key = applied
        self._content = img
        return img

    # -- frame assembly ------------------------------------------------------

    def lighting_offset(self, t_ms: int) -> float:
        return sum(l.offset(t_ms) for l in self.scenario.lighting)

    def _stamp_rect(self, canvas: np.ndarray, x0: float, y0: float, w: int, h: int, values) -> None:
        H, W = canvas.shape
        ix0, iy0 = int(round(x0)), int(round(y0))
        sx0, sy0 = max(ix0, 0), max(iy0, 0)
        sx1, sy1 = min(ix0 + w, W), min(iy0 + h, H)
        if sx0 >= sx1 or sy0 >= sy1:
            return
        if np.isscalar(values):
            canvas[sy0:sy1, sx0:sx1] = values
        else:
            canvas[sy0:sy1, sx0:sx1] = values[sy0 - iy0 : sy1 - iy0, sx0 - ix0 : sx1 - ix0]

    def _walker_patch(self, walker: Walker) -> np.ndarray:
        # striped texture pinned to the walker's own frame so any movement
        # changes every covered pixel, not just the leading/trailing edges
        xs = np.arange(walker.width)
        stripe = (xs // 4) % 2
        row = walker.value + stripe * 40
        return np.repeat(row[None, :], walker.height, axis=0).astype(np.float64)

    def _static_layer(self, t_ms: int) -> np.ndarray:
        """Backdrop plus projected board content; recomputed only at mark events."""
        content = self._content_at(t_ms)
        if self._layer_cache_key == self._content_cache_key and self._layer is not None:
            return self._layer
        sc = self.scenario
        canvas = np.full((sc.height, sc.width), float(sc.backdrop_value))
        flat = canvas.ravel()
        p = content
        top = p[self._y0, self._x0] * (1 - self._fx) + p[self._y0, self._x1] * self._fx
        bot = p[self._y1, self._x0] * (1 - self._fx) + p[self._y1, self._x1] * self._fx
        flat[self._inside_flat] = top * (1 - self._fy) + bot * self._fy
        self._layer = flat.reshape(sc.height, sc.width)
        self._layer_cache_key = self._content_cache_key
        return self._layer

    def frame(self, t_ms: int) -> RawFrame:
        sc = self.scenario
        canvas = self._static_layer(t_ms).copy()
        # static occluders sit between walkers and the board
        for occ in sc.occluders:
            if occ.start_ms <= t_ms < occ.end_ms:
                x, y, w, h = occ.rect
                self._stamp_rect(canvas, x, y, w, h, float(occ.value))
        for walker in sc.walkers:
            if walker.start_ms <= t_ms <= walker.end_ms:
                cx, cy = walker.position(t_ms)
                patch = self._walker_patch(walker)
                self._stamp_rect(
                    canvas, cx - walker.width / 2, cy - walker.height / 2, walker.width, walker.height, patch
                )
        offset = self.lighting_offset(t_ms)
        if offset:
            canvas += offset
        if sc.noise_amplitude > 0:
            rng = np.random.Generator(
                np.random.Philox(key=np.array([sc.seed, t_ms], dtype=np.uint64))
            )
            canvas += rng.integers(
                -sc.noise_amplitude, sc.noise_amplitude + 1, size=canvas.shape, dtype=np.int16
            )
        gray = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)
        rgb = np.empty((sc.height, sc.width, 3), dtype=np.uint8)
        rgb[...] = gray[:, :, None]
        return RawFrame(rgb, t_ms)

    def frame_times(self) -> list[int]:
        step = int(round(1000 / self.scenario.fps))
        return list(range(0, self.scenario.duration_ms + 1, step))


def generate(scenario: Scenario) -> tuple[Iterator[RawFrame], GroundTruth]:
    """Scenario -> (frame stream at the scripted fps, exact ground truth)."""
    renderer = SceneRenderer(scenario)

    def stream():
        for t in renderer.frame_times():
            yield renderer.frame(t)

    return stream(), ground_truth(scenario)


class SimClock:
    """Virtual milliseconds for accelerated replay."""

    def __init__(self, now_ms: int = 0):
        self.now_ms = now_ms

    def advance(self, delta_ms: int) -> None:
        self.now_ms += delta_ms


class ScenarioFeed:
    """FrameSource over a renderer: grabbing consumes simulated burst time."""

    def __init__(self, renderer: SceneRenderer, clock: SimClock, grab_advance_ms: int = 0):
        self.renderer = renderer
        self.clock = clock
        self.grab_advance_ms = grab_advance_ms

    def grab(self) -> RawFrame:
        frame = self.renderer.frame(self.clock.now_ms)
        self.clock.advance(self.grab_advance_ms)
        return frame
