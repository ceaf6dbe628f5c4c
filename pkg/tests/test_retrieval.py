from __future__ import annotations

import numpy as np
import pytest

from boardwatch.coordinator import Coordinator, ImageStore
from boardwatch.errors import EmptySelection, MalformedRange, NoCameraSelected
from boardwatch.retrieval import (
    FilterContext,
    HEAT_COLORS,
    calendar,
    heat_color,
    heatmap,
    region_select,
    timeline,
    visible_records,
)

from test_coordinator import GEOM, grids_with_cells, gray_image, ingest

DAY_MS = 86_400_000


@pytest.fixture
def coord(tmp_path):
    c = Coordinator(":memory:", ImageStore(str(tmp_path / "store")))
    c.create_user("Alice", "alice")
    c.create_user("Ben", "ben")
    c.create_camera("cam-1", "alice", GEOM, "Alice's office")
    c.create_camera("cam-2", "ben", GEOM, "Ben's office")
    yield c
    c.close()


def ctx(**kw) -> FilterContext:
    return FilterContext(user_id="alice", **kw)


# ---------------------------------------------------------------------------
# FilterContext serialization

def test_filter_context_query_round_trip():
    c = FilterContext(
        user_id="alice",
        cameras=("cam-1", "cam-2"),
        start_ms=1000,
        end_ms=2000,
        content_types=("personal", "shared"),
        keyword="uml",
        region=(0.1, 0.2, 0.6, 0.8),
    )
    assert FilterContext.from_query(c.to_query()) == c
    bare = FilterContext(user_id="alice")
    assert FilterContext.from_query(bare.to_query()) == bare


# ---------------------------------------------------------------------------
# calendar

def test_calendar_empty_month(coord):
    assert calendar(coord, ctx(), 2026, 3) == []


def test_calendar_day_flags_and_striping(coord):
    # 2026-03-10 UTC
    day = 1_773_100_800_000
    personal = ingest(coord, "cam-1", day + 3_600_000)
    shared = ingest(coord, "cam-1", day + 7_200_000, seed=1)
    coord.share(shared["id"], "alice", ["ben"])
    days = calendar(coord, ctx(), 2026, 3)
    assert len(days) == 1
    d = days[0]
    assert d.date == "2026-03-10"
    assert d.has_personal and d.has_shared
    assert not d.has_collaborative


def test_calendar_respects_content_type_filter(coord):
    day = 1_773_100_800_000
    ingest(coord, "cam-1", day + 1000)
    coord.ingest_collaboration("cam-1", day + DAY_MS, day + DAY_MS + 10_000)
    ingest(coord, "cam-1", day + DAY_MS + 5000, seed=1)
    days = calendar(coord, ctx(content_types=("collaborative",)), 2026, 3)
    assert [d.date for d in days] == ["2026-03-11"]
    assert days[0].has_collaborative and not days[0].has_personal


def test_calendar_multi_month_span(coord):
    mar = 1_773_100_800_000  # 2026-03-10
    apr = mar + 25 * DAY_MS  # early April
    ingest(coord, "cam-1", mar)
    ingest(coord, "cam-1", apr, seed=1)
    days = calendar(coord, ctx(), 2026, 3, months=2)
    assert [d.date for d in days] == ["2026-03-10", "2026-04-04"]
    with pytest.raises(MalformedRange):
        calendar(coord, ctx(), 2026, 3, months=0)
    with pytest.raises(MalformedRange):
        calendar(coord, ctx(), 2026, 13)


# ---------------------------------------------------------------------------
# timeline

def test_timeline_heights_are_stored_counts(coord):
    a = ingest(coord, "cam-1", 1000, cells=[(1, 1)])
    b = ingest(coord, "cam-1", 2000, cells=[(1, 1), (1, 2), (5, 5), (5, 6), (9, 9)], seed=1)
    bars = timeline(coord, ctx())
    assert [(bar.record_id, bar.height) for bar in bars] == [(a["id"], 1), (b["id"], 5)]
    assert bars[0].timestamp_ms < bars[1].timestamp_ms


def test_timeline_range_narrowing_drops_bars(coord):
    for t in (1000, 2000, 3000):
        ingest(coord, "cam-1", t, seed=t)
    bars = timeline(coord, ctx(start_ms=1500, end_ms=2500))
    assert [b.timestamp_ms for b in bars] == [2000]


# ---------------------------------------------------------------------------
# heatmap

def test_heatmap_requires_single_camera(coord):
    with pytest.raises(NoCameraSelected):
        heatmap(coord, ctx())
    with pytest.raises(NoCameraSelected):
        heatmap(coord, ctx(cameras=("cam-1", "cam-2")))


def test_heatmap_empty_range_all_white(coord):
    grid = heatmap(coord, ctx(cameras=("cam-1",)))
    assert grid.columns == 16 and grid.rows == 10
    assert all(c == "white" for row in grid.colors for c in row)
    assert all(v == 0 for row in grid.counts for v in row)


def test_heatmap_single_change_is_cold(coord):
    ingest(coord, "cam-1", 1000, cells=[(3, 4)])
    grid = heatmap(coord, ctx(cameras=("cam-1",)))
    assert grid.counts[3][4] == 1
    assert grid.colors[3][4] == "cold"
    assert grid.counts[0][0] == 0 and grid.colors[0][0] == "white"
    assert grid.thumbnails  # shine-through references ride along


def test_heatmap_hot_cell_after_repeated_changes(coord):
    for i in range(7):
        ingest(coord, "cam-1", 1000 * (i + 1), cells=[(3, 4)] + ([(8, 8)] if i == 0 else []), seed=i)
    grid = heatmap(coord, ctx(cameras=("cam-1",)))
    assert grid.counts[3][4] == 7
    assert grid.colors[3][4] == "hot"
    assert grid.colors[8][8] == "cold"


def test_heatmap_counts_match_brute_force_recount(coord):
    rng = np.random.default_rng(23)
    for i in range(12):
        mask = rng.random((10, 16)) < 0.2
        cells = [tuple(rc) for rc in np.argwhere(mask)]
        ingest(coord, "cam-1", 10_000 + i, cells=cells, seed=100 + i)
    grid = heatmap(coord, ctx(cameras=("cam-1",)))
    # recount from the stored grids independently
    recs = coord.query_captures("alice", cameras=["cam-1"])
    expected = np.zeros((10, 16), dtype=int)
    for rec in recs:
        g = coord.record_grids(rec["id"])
        expected += (g.coarse > 0.05).astype(int)
    assert np.array_equal(np.array(grid.counts), expected)
    # color law: 0 <-> white, monotone buckets
    mx = expected.max()
    for r in range(10):
        for c in range(16):
            assert (grid.counts[r][c] == 0) == (grid.colors[r][c] == "white")


def test_heat_color_law():
    assert heat_color(0, 10) == "white"
    assert heat_color(1, 1) == "cold"
    assert heat_color(7, 7) == "hot"
    for mx in (1, 2, 3, 5, 9, 40):
        prev_idx = 0
        for count in range(0, mx + 1):
            idx = HEAT_COLORS.index(heat_color(count, mx))
            assert idx >= prev_idx
            prev_idx = idx


# ---------------------------------------------------------------------------
# region selection and cross-view consistency

def test_region_select_full_grid_is_identity(coord):
    base = ctx(cameras=("cam-1",))
    sel = region_select(base, (0, 0, 15, 9), columns=16)
    assert sel.region is None
    assert sel == base


def test_region_select_maps_cells_to_normalized_rect():
    base = FilterContext(user_id="alice", cameras=("cam-1",))
    sel = region_select(base, (4, 2, 7, 3), columns=16)
    assert sel.region == (4 / 16, 2 / 10, 8 / 16, 4 / 10)
    with pytest.raises(EmptySelection):
        region_select(base, (5, 5, 4, 4), columns=16)
    with pytest.raises(EmptySelection):
        region_select(base, (0, 0, 16, 3), columns=16)


def test_region_select_then_views_filter_consistently(coord):
    in_region = ingest(coord, "cam-1", 1000, cells=[(2, 5)])
    out_region = ingest(coord, "cam-1", 2000, cells=[(8, 14)], seed=1)
    base = ctx(cameras=("cam-1",))
    sel = region_select(base, (4, 1, 6, 3), columns=16)
    bars = timeline(coord, sel)
    assert [b.record_id for b in bars] == [in_region["id"]]
    # a never-changed selection produces nothing
    empty_sel = region_select(base, (0, 9, 0, 9), columns=16)
    assert timeline(coord, empty_sel) == []


def test_cross_view_consistency_identical_record_sets(coord):
    rng = np.random.default_rng(9)
    day = 1_773_100_800_000
    for i in range(10):
        cells = [tuple(rc) for rc in np.argwhere(rng.random((10, 16)) < 0.1)]
        rec = ingest(coord, "cam-1", day + i * 3_600_000, cells=cells, seed=i)
        if i % 3 == 0:
            coord.share(rec["id"], "alice", ["ben"], region=(0, 0, 160, 100))
    context = ctx(cameras=("cam-1",), keyword="", content_types=())
    ids_query = {r["id"] for r in visible_records(coord, context)}
    ids_timeline = {b.record_id for b in timeline(coord, context)}
    ids_heatmap = set(heatmap(coord, context).thumbnails)
    assert ids_query == ids_timeline == ids_heatmap
    # calendar covers the same records' days
    days = calendar(coord, context, 2026, 3)
    from datetime import datetime, timezone

    expected_days = {
        datetime.fromtimestamp((day + i * 3_600_000) / 1000, tz=timezone.utc).strftime("%Y-%m-%d")
        for i in range(10)
    }
    assert {d.date for d in days} == expected_days


def test_filter_context_survives_view_calls_unchanged(coord):
    context = ctx(cameras=("cam-1",), keyword="x", region=(0.1, 0.1, 0.9, 0.9))
    serialized = context.to_query()
    timeline(coord, context)
    heatmap(coord, context)
    calendar(coord, context, 2026, 3)
    assert context.to_query() == serialized
