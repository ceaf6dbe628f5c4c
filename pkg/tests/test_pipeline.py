from __future__ import annotations

import numpy as np

from boardwatch.capture import CaptureConfig
from boardwatch.collab import CollabConfig
from boardwatch.evalharness import run_scenario_variant
from boardwatch.feedsim import SceneRenderer, SimClock, ScenarioFeed, StrokeAdd, Walker, ground_truth
from boardwatch.motion import MotionConfig
from boardwatch.pipeline import (
    VARIANT_COMBINED,
    VARIANT_FILTERING_ONLY,
    VARIANT_MOTION_ONLY,
    CameraPipeline,
    CameraPipelineConfig,
)

from scenario_fixtures import TEST_GEOMETRY, basic_scenario

SHORT_CFG = CameraPipelineConfig(
    capture=CaptureConfig(out_height=120, board_luminance=110.0, change_threshold=0.005)
)


def drive(scenario, variant, cfg=SHORT_CFG):
    return run_scenario_variant(scenario, variant, cfg)


def drawing_visit(t_event_s: float) -> Walker:
    # continuous motion over the board around the stroke time, then leaves
    wps = []
    t = t_event_s - 30
    wps.append((int(t * 1000), 340.0, 120.0))
    wps.append((int((t + 6) * 1000), 150.0, 110.0))
    tt = t + 6
    side = 1
    while tt + 2 <= t_event_s + 15:
        tt += 2
        wps.append((int(tt * 1000), 150.0 + side * 30, 110.0 + side * 8))
        side = -side
    wps.append((int((t_event_s + 20) * 1000), 340.0, 120.0))
    return Walker(tuple(wps))


def test_gate_invariant_unattended_change_never_auto_captured():
    # content changes with nobody around: the gated variant stays silent,
    # the ungated filtering variant records it
    sc = basic_scenario(
        duration_ms=300_000,
        strokes=(StrokeAdd(60_000, (0.1, 0.1, 0.4, 0.3), 85.0),),
        walkers=(),
    )
    combined, _ = drive(sc, VARIANT_COMBINED)
    assert combined == []
    filtering, _ = drive(sc, VARIANT_FILTERING_ONLY)
    assert len(filtering) == 1


def test_combined_captures_attended_change_once():
    sc = basic_scenario(
        duration_ms=300_000,
        strokes=(StrokeAdd(120_000, (0.1, 0.1, 0.4, 0.3), 85.0),),
        walkers=(drawing_visit(120.0),),
    )
    captures, gt = drive(sc, VARIANT_COMBINED)
    assert len(captures) == 1
    evt = captures[0]
    assert abs(evt.timestamp_ms - 120_000) < 60_000
    assert evt.changed_cell_count >= 1
    assert gt.updates[0].kind == "add"


def test_motion_only_fires_on_fruitless_visit_combined_does_not():
    sc = basic_scenario(duration_ms=240_000, strokes=(), walkers=(drawing_visit(100.0),))
    combined, _ = drive(sc, VARIANT_COMBINED)
    assert combined == []
    motion_only, _ = drive(sc, VARIANT_MOTION_ONLY)
    assert len(motion_only) >= 1
    assert all(c.changed_cell_count == 0 for c in motion_only)


def test_collab_interval_emitted_for_sustained_pair():
    # two people working for ~7 minutes trip the windowed-mean machine
    wiggles1 = []
    wiggles2 = []
    t = 30
    side = 1
    while t < 480:
        wiggles1.append((t * 1000, 120.0 + side * 30, 100.0 + side * 6))
        wiggles2.append((t * 1000, 230.0 - side * 30, 140.0 - side * 6))
        side = -side
        t += 2
    walkers = (Walker(tuple(wiggles1)), Walker(tuple(wiggles2)))
    sc = basic_scenario(duration_ms=900_000, strokes=(), walkers=walkers)
    intervals = []
    renderer = SceneRenderer(sc)
    clock = SimClock(0)
    feed = ScenarioFeed(renderer, clock, grab_advance_ms=200)
    pipe = CameraPipeline(
        sc.camera_id,
        sc.geometry,
        SHORT_CFG,
        variant=VARIANT_COMBINED,
        on_interval=intervals.append,
    )
    pipe.prime(renderer.frame(0))
    for t_ms in renderer.frame_times():
        clock.now_ms = t_ms
        pipe.on_frame(renderer.frame(t_ms), t_ms)
        pipe.tick(t_ms, feed)
    pipe.finish(sc.duration_ms)
    assert len(intervals) == 1
    iv = intervals[0]
    # starts once the 150 s mean clears 1.8, i.e. within the pair's stay
    assert 30_000 <= iv.start_ms <= 480_000
    assert iv.end_ms > iv.start_ms
    # presence ground truth agrees that two people were there
    gt = ground_truth(sc)
    by_t = dict(gt.presence)
    assert by_t[240_000] == 2
