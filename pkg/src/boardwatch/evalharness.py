"""Evaluation harness: replay feeds through capture variants and score them.

Detections are matched one-to-one to ground-truth board updates within a
+/- 15 minute window (greedy, earliest detection first). Unmatched detections
are false positives, reported per observation day per camera. Eventual-capture
recall additionally credits a ground-truth change when any later accepted
capture shows it, however late.

CLI:
    evalharness --scenario s1.scn [--scenario s2.scn ...] \
                --variants combined,motion_only,filtering_only --out results.json
    evalharness --manifest feed.manifest --truth truth.json --variants combined
    evalharness --standard-suite --out results.json

Exit status is nonzero when the suite fails the variant-ordering property
(filtering-only must log strictly more false positives than either gated
variant).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from .capture import CaptureEvent
from .errors import MismatchedSources
from .feedsim import (
    FrameManifest,
    GroundTruth,
    ScenarioFeed,
    SceneRenderer,
    SimClock,
    Scenario,
    ground_truth,
    load_manifest,
    load_scenario,
    replay,
)
from .imaging import BoardGeometry, RawFrame
from .pipeline import (
    VARIANT_COMBINED,
    VARIANT_FILTERING_ONLY,
    VARIANT_MOTION_ONLY,
    VARIANTS,
    CameraPipeline,
    CameraPipelineConfig,
)

MATCH_WINDOW_MS = 15 * 60 * 1000

# Field-deployment reference figures (recall, false positives per day per
# camera) used purely as a qualitative side column in reports.
FIELD_REFERENCE = {
    VARIANT_COMBINED: (0.69, 1.05),
    VARIANT_MOTION_ONLY: (0.64, 1.17),
    VARIANT_FILTERING_ONLY: (0.60, 6.97),
}

VARIANT_ORDER = (VARIANT_COMBINED, VARIANT_MOTION_ONLY, VARIANT_FILTERING_ONLY)


@dataclass(frozen=True)
class VariantResult:
    variant: str
    matched: int
    total_events: int
    recall: float
    false_positives: int
    observation_days: float
    fp_per_day_per_camera: float
    eventual_matched: int
    eventual_recall: float
    cameras: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "VariantResult":
        return cls(**d)


def merge_results(variant: str, parts: list[VariantResult]) -> VariantResult:
    """Aggregate per-scenario results into one suite-level row."""
    matched = sum(p.matched for p in parts)
    total = sum(p.total_events for p in parts)
    fp = sum(p.false_positives for p in parts)
    days = sum(p.observation_days for p in parts)
    eventual = sum(p.eventual_matched for p in parts)
    cameras = max(p.cameras for p in parts) if parts else 1
    return VariantResult(
        variant=variant,
        matched=matched,
        total_events=total,
        recall=matched / total if total else 0.0,
        false_positives=fp,
        observation_days=days,
        fp_per_day_per_camera=fp / (days * cameras) if days else 0.0,
        eventual_matched=eventual,
        eventual_recall=eventual / total if total else 0.0,
        cameras=cameras,
    )


# ---------------------------------------------------------------------------
# matching

def match_detections(
    detection_ts: list[int], event_ts: list[int], window_ms: int = MATCH_WINDOW_MS
) -> tuple[list[tuple[int, int]], list[int]]:
    """Greedy earliest-first one-to-one matching.

    Detections are taken in chronological order; each grabs the earliest
    still-unmatched ground-truth event within the window. Returns
    (matches as (detection, event) pairs, unmatched detections).
    """
    events = sorted(event_ts)
    taken = [False] * len(events)
    matches: list[tuple[int, int]] = []
    false_positives: list[int] = []
    for det in sorted(detection_ts):
        hit = None
        for i, ev in enumerate(events):
            if taken[i]:
                continue
            if abs(det - ev) <= window_ms:
                hit = i
                break
            if ev - det > window_ms:
                break
        if hit is None:
            false_positives.append(det)
        else:
            taken[hit] = True
            matches.append((det, events[hit]))
    return matches, false_positives


# ---------------------------------------------------------------------------
# eventual-capture content checks

def _region_pixel_rect(region, width: int, height: int) -> tuple[int, int, int, int]:
    x0 = int(round(region[0] * width))
    x1 = max(int(round(region[2] * width)), x0 + 1)
    y0 = int(round(region[1] * height))
    y1 = max(int(round(region[3] * height)), y0 + 1)
    return x0, y0, x1, y1


def update_visible_in(capture: CaptureEvent, update) -> bool:
    """Does this capture's image show the update's outcome?

    An added stroke shows as a meaningful fraction of dark pixels inside its
    region; an erase shows as that fraction dropping back to near zero. The
    board level is estimated from the image median, which rides along with
    any global lighting offset.
    """
    img = capture.image.pixels
    x0, y0, x1, y1 = _region_pixel_rect(update.region, img.shape[1], img.shape[0])
    patch = img[y0:y1, x0:x1].astype(np.float64)
    if patch.size == 0:
        return False
    board_level = float(np.median(img))
    dark = float(np.mean(patch < board_level - update.contrast / 2.0))
    if update.kind == "add":
        return dark > 0.08
    return dark < 0.04


def eventual_matched_count(captures: list[CaptureEvent], truth: GroundTruth) -> int:
    count = 0
    for update in truth.updates:
        for cap in captures:
            if cap.timestamp_ms >= update.timestamp_ms and update_visible_in(cap, update):
                count += 1
                break
    return count


# ---------------------------------------------------------------------------
# redactions

def _redact_times(times, redactions):
    return [t for t in times if not any(a <= t <= b for a, b in redactions)]


def _redacted_days(duration_ms: int, redactions) -> float:
    redacted = 0
    for a, b in redactions:
        redacted += max(0, min(b, duration_ms) - max(a, 0))
    return max(duration_ms - redacted, 0) / 86_400_000.0


# ---------------------------------------------------------------------------
# drivers

def run_scenario_variant(
    scenario: Scenario,
    variant: str,
    cfg: CameraPipelineConfig | None = None,
) -> tuple[list[CaptureEvent], GroundTruth]:
    """Drive one capture variant over a rendered scenario; accelerated time."""
    renderer = SceneRenderer(scenario)
    clock = SimClock(0)
    feed = ScenarioFeed(renderer, clock, grab_advance_ms=(cfg or CameraPipelineConfig()).capture.burst_spacing_ms)
    captures: list[CaptureEvent] = []
    pipeline = CameraPipeline(
        scenario.camera_id,
        scenario.geometry,
        cfg,
        variant=variant,
        on_capture=captures.append,
    )
    pipeline.prime(renderer.frame(0))
    for t in renderer.frame_times():
        clock.now_ms = t
        if pipeline.uses_motion_stream:
            pipeline.on_frame(renderer.frame(t), t)
        pipeline.tick(t, feed)
    pipeline.finish(scenario.duration_ms)
    return captures, ground_truth(scenario)


def score(
    variant: str,
    captures: list[CaptureEvent],
    truth: GroundTruth,
    duration_ms: int,
    redactions=(),
    cameras: int = 1,
) -> VariantResult:
    detection_ts = _redact_times([c.timestamp_ms for c in captures], redactions)
    event_ts = _redact_times([u.timestamp_ms for u in truth.updates], redactions)
    matches, fps = match_detections(detection_ts, event_ts)
    kept_updates = [u for u in truth.updates if u.timestamp_ms in set(event_ts)]
    kept_captures = [c for c in captures if c.timestamp_ms in set(detection_ts)]
    eventual = eventual_matched_count(
        kept_captures, GroundTruth(truth.camera_id, truth.duration_ms, tuple(kept_updates), ())
    )
    days = _redacted_days(duration_ms, redactions)
    total = len(event_ts)
    return VariantResult(
        variant=variant,
        matched=len(matches),
        total_events=total,
        recall=len(matches) / total if total else 0.0,
        false_positives=len(fps),
        observation_days=days,
        fp_per_day_per_camera=len(fps) / (days * cameras) if days else 0.0,
        eventual_matched=eventual,
        eventual_recall=eventual / total if total else 0.0,
        cameras=cameras,
    )


def evaluate_scenarios(
    scenarios: list[Scenario],
    variants=VARIANT_ORDER,
    cfg: CameraPipelineConfig | None = None,
    redactions=(),
) -> list[VariantResult]:
    """Run every variant over every scenario and aggregate per variant."""
    results = []
    for variant in variants:
        parts = []
        for sc in scenarios:
            captures, truth = run_scenario_variant(sc, variant, cfg)
            parts.append(score(variant, captures, truth, sc.duration_ms, redactions))
        results.append(merge_results(variant, parts))
    return results


class ManifestFeed:
    """FrameSource over a recorded feed: grab() returns the frame at the clock."""

    def __init__(self, manifest: FrameManifest, base_dir, clock: SimClock, grab_advance_ms: int = 0):
        self.entries = list(manifest.entries)
        self.base_dir = base_dir
        self.clock = clock
        self.grab_advance_ms = grab_advance_ms
        self._cache: tuple[int, RawFrame] | None = None

    def grab(self) -> RawFrame:
        from .imaging import load_frame
        import os

        now = self.clock.now_ms
        idx = 0
        for i, e in enumerate(self.entries):
            if e.timestamp_ms <= now:
                idx = i
            else:
                break
        entry = self.entries[idx]
        if self._cache is None or self._cache[0] != idx:
            self._cache = (idx, load_frame(os.path.join(self.base_dir, entry.path), entry.timestamp_ms))
        self.clock.advance(self.grab_advance_ms)
        return self._cache[1]


def run_manifest_variant(
    manifest: FrameManifest,
    base_dir,
    truth: GroundTruth,
    geometry: BoardGeometry,
    variant: str,
    cfg: CameraPipelineConfig | None = None,
) -> list[CaptureEvent]:
    """Drive one variant over a recorded frame directory."""
    if not manifest.entries:
        raise MismatchedSources("empty manifest")
    span = manifest.entries[-1].timestamp_ms
    for u in truth.updates:
        if u.timestamp_ms > span:
            raise MismatchedSources(
                f"ground truth event at {u.timestamp_ms} ms beyond feed end {span} ms"
            )
    cfg = cfg or CameraPipelineConfig()
    clock = SimClock(manifest.entries[0].timestamp_ms)
    # a recorded feed can't be sampled finer than it was logged: spread the
    # burst across real frames so inter-frame agreement still means something
    spacings = [
        b.timestamp_ms - a.timestamp_ms
        for a, b in zip(manifest.entries, manifest.entries[1:])
    ]
    period = int(np.median(spacings)) if spacings else cfg.capture.burst_spacing_ms
    feed = ManifestFeed(manifest, base_dir, clock, max(cfg.capture.burst_spacing_ms, period))
    captures: list[CaptureEvent] = []
    pipeline = CameraPipeline(
        truth.camera_id, geometry, cfg, variant=variant, on_capture=captures.append
    )
    first = True
    for frame in replay(manifest, base_dir):
        clock.now_ms = frame.timestamp_ms
        if first:
            pipeline.prime(frame)
            first = False
        if pipeline.uses_motion_stream:
            pipeline.on_frame(frame, frame.timestamp_ms)
        pipeline.tick(frame.timestamp_ms, feed)
    pipeline.finish(span)
    return captures


# ---------------------------------------------------------------------------
# reporting

def ordering_property_holds(results: list[VariantResult]) -> bool:
    """filtering-only must log strictly more false positives than either gated variant."""
    by = {r.variant: r for r in results}
    needed = set(VARIANT_ORDER)
    if not needed <= set(by):
        return True  # property only evaluated on full three-variant runs
    filt = by[VARIANT_FILTERING_ONLY].false_positives
    return (
        filt > by[VARIANT_COMBINED].false_positives
        and filt > by[VARIANT_MOTION_ONLY].false_positives
    )


def report(results: list[VariantResult]) -> str:
    """Aligned comparison table with the field-reference side column."""
    if not results:
        raise ValueError("nothing to report")
    order = {v: i for i, v in enumerate(VARIANT_ORDER)}
    rows = sorted(results, key=lambda r: order.get(r.variant, 99))
    header = (
        f"{'variant':<16} {'recall':>7} {'eventual':>9} {'FP':>4} "
        f"{'FP/day/cam':>11} {'days':>6}   {'field ref (recall, FP/day)':>27}"
    )
    lines = [header, "-" * len(header)]
    for r in rows:
        ref = FIELD_REFERENCE.get(r.variant)
        ref_s = f"{ref[0]:.2f}, {ref[1]:.2f}" if ref else "-"
        lines.append(
            f"{r.variant:<16} {r.recall:>7.3f} {r.eventual_recall:>9.3f} "
            f"{r.false_positives:>4d} {r.fp_per_day_per_camera:>11.2f} "
            f"{r.observation_days:>6.3f}   {ref_s:>27}"
        )
    return "\n".join(lines)


def results_to_json(results: list[VariantResult]) -> str:
    return json.dumps({"results": [r.to_dict() for r in results]}, indent=2)


def results_from_json(text: str) -> list[VariantResult]:
    return [VariantResult.from_dict(d) for d in json.loads(text)["results"]]


# ---------------------------------------------------------------------------
# CLI

def _parse_redactions(spec: str):
    out = []
    for part in spec.split(","):
        if not part:
            continue
        a, b = part.split(":")
        out.append((int(float(a) * 1000), int(float(b) * 1000)))
    return tuple(out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="evalharness", description="Score capture variants against ground truth."
    )
    parser.add_argument("--scenario", action="append", default=[], help="scenario script file (repeatable)")
    parser.add_argument("--standard-suite", action="store_true", help="run the built-in five-scenario suite")
    parser.add_argument("--manifest", help="recorded frame manifest")
    parser.add_argument("--truth", help="ground truth JSON (required with --manifest)")
    parser.add_argument("--corners", help="board corners for manifest mode: x,y x,y x,y x,y")
    parser.add_argument("--aspect", type=float, default=1.6, help="board aspect ratio for manifest mode")
    parser.add_argument(
        "--variants",
        default=",".join(VARIANT_ORDER),
        help="comma-separated subset of: " + ",".join(VARIANTS),
    )
    parser.add_argument("--redact", default="", help="redacted spans, seconds: start:end[,start:end...]")
    parser.add_argument("--out", help="write machine-readable results JSON here")
    args = parser.parse_args(argv)

    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    for v in variants:
        if v not in VARIANTS:
            parser.error(f"unknown variant {v!r}")
    redactions = _parse_redactions(args.redact)

    scenarios: list[Scenario] = []
    if args.standard_suite:
        from .scenarios import standard_suite

        scenarios.extend(standard_suite())
    for path in args.scenario:
        scenarios.append(load_scenario(path))

    results: list[VariantResult]
    if scenarios:
        from .scenarios import suite_pipeline_config

        cfg = suite_pipeline_config() if args.standard_suite else None
        results = evaluate_scenarios(scenarios, variants, cfg, redactions)
    elif args.manifest:
        if not args.truth:
            parser.error("--manifest requires --truth")
        import os

        manifest = load_manifest(args.manifest)
        with open(args.truth, encoding="utf-8") as fh:
            truth = GroundTruth.from_dict(json.load(fh))
        if not args.corners:
            parser.error("--manifest requires --corners")
        corners = tuple(tuple(float(v) for v in p.split(",")) for p in args.corners.split())
        geometry = BoardGeometry(corners, args.aspect)
        base = os.path.dirname(os.path.abspath(args.manifest))
        results = []
        duration = manifest.entries[-1].timestamp_ms if manifest.entries else 0
        for variant in variants:
            captures = run_manifest_variant(manifest, base, truth, geometry, variant)
            results.append(score(variant, captures, truth, duration, redactions))
    else:
        parser.error("provide --scenario, --standard-suite, or --manifest/--truth")
        return 2

    print(report(results))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(results_to_json(results))
    if args.standard_suite and not ordering_property_holds(results):
        print(
            "variant-ordering property FAILED: filtering-only should out-false-positive the gated variants",
            file=sys.stderr,
        )
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
