"""Standard synthetic scenario suite for the evaluation harness.

Five two-hour office scenarios exercising strokes, erases, walkers, gradual
lighting ramps, and chair-style occluders, plus one long-occlusion scenario
where a change stays blocked well past the matching window.

Design constraints baked into the timings:
  - lighting ramps sit >= 17 min from every scripted board update, so their
    spurious captures can never be matched within the +/- 15 min window;
  - ramp deltas alternate sign and stay within the per-pixel tolerance
    unfiltered, so only the filtered pipeline reacts to them;
  - walkers keep moving whenever they overlap the board, entering and leaving
    through a corridor to the right of the board quadrilateral;
  - every ramp is flushed by a later stroke capture before any walker-only
    visit or occluder removal, so the gated pipeline never sees stale shifts.
"""

from __future__ import annotations

from .capture import CaptureConfig, calibrate_threshold
from .feedsim import (
    Erase,
    LightingShift,
    OccluderSpan,
    Scenario,
    StrokeAdd,
    Walker,
)
from .imaging import BoardGeometry, rectified_size
from .motion import MotionConfig
from .pipeline import CameraPipelineConfig

FRAME_W, FRAME_H = 320, 240
BOARD_VALUE = 110
BACKDROP_VALUE = 140
STROKE_CONTRAST = 85.0
OUT_HEIGHT = 120
TWO_HOURS_MS = 7_200_000

# board quadrilateral leaving a walker corridor at x > ~255
SUITE_GEOMETRY = BoardGeometry(
    ((70.0, 50.0), (250.0, 56.0), (246.0, 170.0), (66.0, 162.0)), 1.6
)

# corridor x-position: the walker rectangle never overlaps the board there
CORRIDOR_X = 300.0


def suite_capture_config() -> CaptureConfig:
    """Capture settings for the suite cameras, with t from the calibration rule."""
    cfg = CaptureConfig(out_height=OUT_HEIGHT, board_luminance=float(BOARD_VALUE))
    out_w, out_h = rectified_size(SUITE_GEOMETRY.aspect_ratio, OUT_HEIGHT)
    t = calibrate_threshold(out_w * out_h, STROKE_CONTRAST, cfg)
    return CaptureConfig(
        out_height=OUT_HEIGHT, board_luminance=float(BOARD_VALUE), change_threshold=t
    )


def suite_pipeline_config() -> CameraPipelineConfig:
    return CameraPipelineConfig(motion=MotionConfig(), capture=suite_capture_config())


def _board_to_frame(u: float, v: float) -> tuple[float, float]:
    """Rough frame position of a normalized board point (waypoint planning only)."""
    return 70.0 + u * 176.0, 50.0 + v * 112.0


def visit_walker(t_event_s: float, region, entry_offset_s: float = 0.0) -> Walker:
    """A person who walks in, keeps moving over the stroke area, and leaves.

    Movement never drops below ~25 px/s while the walker overlaps the board,
    so capture bursts always disagree during the visit.
    """
    cx, cy = _board_to_frame((region[0] + region[2]) / 2, (region[1] + region[3]) / 2)
    cy = min(max(cy, 95.0), 150.0)  # keep the 85 px tall body inside the frame
    t0 = t_event_s - 50 + entry_offset_s
    wps: list[tuple[int, float, float]] = [
        (int(t0 * 1000), CORRIDOR_X, 260.0),  # below the frame
        (int((t0 + 4) * 1000), CORRIDOR_X, 150.0),  # up the corridor
        (int((t0 + 9) * 1000), cx, cy),  # dart to the board
    ]
    # continuous drawing wiggle at ~30 px/s until shortly after the event
    t = t0 + 9
    side = 1
    end_draw = t_event_s + 28
    while t + 2 <= end_draw:
        t += 2
        wps.append((int(t * 1000), cx + side * 30.0, cy + side * 8.0))
        side = -side
    wps.append((int((end_draw + 5) * 1000), CORRIDOR_X, 150.0))  # dart out
    wps.append((int((end_draw + 11) * 1000), CORRIDOR_X, 330.0))  # slide out of frame
    return Walker(tuple(wps))


def chair_visits(t_place_s: float, t_remove_s: float) -> tuple[Walker, Walker]:
    """Short visits that place and later remove an occluder."""
    spot_x, spot_y = 160.0, 110.0

    def quick_visit(center_s: float) -> Walker:
        t0 = center_s - 22
        wps = [
            (int(t0 * 1000), CORRIDOR_X, 260.0),
            (int((t0 + 4) * 1000), CORRIDOR_X, 150.0),
            (int((t0 + 8) * 1000), spot_x, spot_y),
            (int((t0 + 12) * 1000), spot_x + 50, spot_y + 10),
            (int((t0 + 16) * 1000), spot_x, spot_y - 10),
            (int((t0 + 20) * 1000), spot_x + 50, spot_y + 5),
            (int((t0 + 25) * 1000), CORRIDOR_X, 150.0),
            (int((t0 + 31) * 1000), CORRIDOR_X, 330.0),
        ]
        return Walker(tuple(wps))

    return quick_visit(t_place_s), quick_visit(t_remove_s)


def wander_visit(t_center_s: float) -> Walker:
    """A visitor who crosses the board area without changing anything."""
    t0 = t_center_s - 25
    wps = [
        (int(t0 * 1000), CORRIDOR_X, 260.0),
        (int((t0 + 4) * 1000), CORRIDOR_X, 150.0),
        (int((t0 + 9) * 1000), 140.0, 110.0),
        (int((t0 + 13) * 1000), 200.0, 120.0),
        (int((t0 + 17) * 1000), 130.0, 100.0),
        (int((t0 + 21) * 1000), 190.0, 125.0),
        (int((t0 + 26) * 1000), CORRIDOR_X, 150.0),
        (int((t0 + 32) * 1000), CORRIDOR_X, 330.0),
    ]
    return Walker(tuple(wps))


CHAIR_RECT = (120, 80, 70, 50)

# distinct stroke regions, reused across scenarios
REGION_A = (0.06, 0.10, 0.28, 0.24)
REGION_B = (0.36, 0.12, 0.58, 0.26)
REGION_C = (0.64, 0.10, 0.86, 0.24)
REGION_D = (0.10, 0.55, 0.32, 0.70)
REGION_E = (0.40, 0.56, 0.62, 0.70)


def _base(camera_id: str, seed: int, **overrides) -> dict:
    d = dict(
        camera_id=camera_id,
        width=FRAME_W,
        height=FRAME_H,
        geometry=SUITE_GEOMETRY,
        duration_ms=TWO_HOURS_MS,
        fps=1.0,
        seed=seed,
        board_value=BOARD_VALUE,
        backdrop_value=BACKDROP_VALUE,
        noise_amplitude=2,
        content_height=240,
    )
    d.update(overrides)
    return d


def scenario_solo_sketching() -> Scenario:
    strokes = (
        StrokeAdd(600_000, REGION_A, STROKE_CONTRAST),
        StrokeAdd(2_640_000, REGION_B, STROKE_CONTRAST),
        StrokeAdd(4_680_000, REGION_C, STROKE_CONTRAST),
        StrokeAdd(6_720_000, REGION_D, STROKE_CONTRAST),
    )
    walkers = (
        visit_walker(600, REGION_A),
        visit_walker(2640, REGION_B),
        visit_walker(2640, REGION_E, entry_offset_s=-6.0),  # second person: collaborative
        visit_walker(4680, REGION_C),
        visit_walker(6720, REGION_D),
    )
    lighting = (
        LightingShift(1_600_000, 1_660_000, 9.0),
        LightingShift(3_640_000, 3_700_000, -9.0),
        LightingShift(5_680_000, 5_740_000, 10.0),
    )
    return Scenario(strokes=strokes, walkers=walkers, lighting=lighting, **_base("cam-1", 101))


def scenario_early_visitor() -> Scenario:
    strokes = (
        StrokeAdd(600_000, REGION_B, STROKE_CONTRAST),
        StrokeAdd(2_640_000, REGION_A, STROKE_CONTRAST),
        StrokeAdd(4_680_000, REGION_D, STROKE_CONTRAST),
        StrokeAdd(6_720_000, REGION_C, STROKE_CONTRAST),
    )
    walkers = (
        wander_visit(180),  # looks at the board, changes nothing
        visit_walker(600, REGION_B),
        visit_walker(2640, REGION_A),
        visit_walker(4680, REGION_D),
        visit_walker(6720, REGION_C),
    )
    lighting = (
        LightingShift(1_600_000, 1_660_000, 8.0),
        LightingShift(3_640_000, 3_700_000, -8.0),
        LightingShift(5_680_000, 5_740_000, 9.0),
    )
    return Scenario(strokes=strokes, walkers=walkers, lighting=lighting, **_base("cam-2", 202))


def scenario_chair_after_stroke() -> Scenario:
    place_s, remove_s = 4710.0, 5190.0
    strokes = (
        StrokeAdd(600_000, REGION_A, STROKE_CONTRAST),
        StrokeAdd(2_640_000, REGION_C, STROKE_CONTRAST),
        StrokeAdd(4_680_000, REGION_B, STROKE_CONTRAST),
        StrokeAdd(6_720_000, REGION_E, STROKE_CONTRAST),
    )
    placer, remover = chair_visits(place_s, remove_s)
    walkers = (
        visit_walker(600, REGION_A),
        visit_walker(2640, REGION_C),
        visit_walker(4680, REGION_B),
        placer,
        remover,
        visit_walker(6720, REGION_E),
    )
    occluders = (OccluderSpan(int(place_s * 1000), int(remove_s * 1000), CHAIR_RECT),)
    lighting = (
        LightingShift(1_600_000, 1_660_000, 9.0),
        LightingShift(3_640_000, 3_700_000, -9.0),
        LightingShift(5_700_000, 5_760_000, 9.0),
    )
    return Scenario(
        strokes=strokes, walkers=walkers, occluders=occluders, lighting=lighting,
        **_base("cam-3", 303),
    )


def scenario_chair_and_erase() -> Scenario:
    place_s, remove_s = 3000.0, 3580.0
    strokes = (
        StrokeAdd(600_000, REGION_A, STROKE_CONTRAST),
        StrokeAdd(2_640_000, REGION_B, STROKE_CONTRAST),
        StrokeAdd(4_680_000, REGION_C, STROKE_CONTRAST),
    )
    erases = (Erase(6_720_000, REGION_A),)
    placer, remover = chair_visits(place_s, remove_s)
    walkers = (
        visit_walker(600, REGION_A),
        visit_walker(2640, REGION_B),
        placer,
        remover,
        visit_walker(4680, REGION_C),
        visit_walker(6720, REGION_A),  # the eraser
    )
    occluders = (OccluderSpan(int(place_s * 1000), int(remove_s * 1000), CHAIR_RECT),)
    lighting = (
        LightingShift(1_600_000, 1_660_000, 9.0),
        LightingShift(3_660_000, 3_720_000, -9.0),
        LightingShift(5_680_000, 5_740_000, 9.0),
    )
    return Scenario(
        strokes=strokes, erases=erases, walkers=walkers, occluders=occluders,
        lighting=lighting, **_base("cam-4", 404),
    )


def scenario_busy_afternoon() -> Scenario:
    strokes = (
        StrokeAdd(600_000, REGION_A, STROKE_CONTRAST),
        StrokeAdd(2_640_000, REGION_B, STROKE_CONTRAST),
        StrokeAdd(4_680_000, REGION_C, STROKE_CONTRAST),
        StrokeAdd(4_980_000, REGION_D, STROKE_CONTRAST),  # back-to-back updates
        StrokeAdd(6_720_000, REGION_E, STROKE_CONTRAST),
    )
    walkers = (
        wander_visit(300),
        visit_walker(600, REGION_A),
        visit_walker(2640, REGION_B),
        visit_walker(2640, REGION_E, entry_offset_s=-6.0),
        visit_walker(4680, REGION_C),
        visit_walker(4980, REGION_D),
        visit_walker(6720, REGION_E),
    )
    lighting = (
        LightingShift(1_600_000, 1_660_000, 8.0),
        LightingShift(3_640_000, 3_700_000, -8.0),
    )
    return Scenario(strokes=strokes, walkers=walkers, lighting=lighting, **_base("cam-5", 505))


def scenario_long_occlusion() -> Scenario:
    """A stroke blocked far past the matching window: eventually captured only."""
    place_s, remove_s = 1830.0, 4200.0
    strokes = (
        StrokeAdd(600_000, REGION_C, STROKE_CONTRAST),
        StrokeAdd(1_800_000, REGION_A, STROKE_CONTRAST),
        StrokeAdd(6_000_000, REGION_B, STROKE_CONTRAST),
    )
    placer, remover = chair_visits(place_s, remove_s)
    walkers = (
        visit_walker(600, REGION_C),
        visit_walker(1800, REGION_A),
        placer,
        remover,
        visit_walker(6000, REGION_B),
    )
    occluders = (OccluderSpan(int(place_s * 1000), int(remove_s * 1000), CHAIR_RECT),)
    return Scenario(
        strokes=strokes, walkers=walkers, occluders=occluders, **_base("cam-6", 606)
    )


def standard_suite() -> list[Scenario]:
    return [
        scenario_solo_sketching(),
        scenario_early_visitor(),
        scenario_chair_after_stroke(),
        scenario_chair_and_erase(),
        scenario_busy_afternoon(),
    ]


def eventual_capture_suite() -> list[Scenario]:
    return [scenario_chair_after_stroke(), scenario_long_occlusion()]
