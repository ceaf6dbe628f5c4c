"""Server-side aggregation behind the calendar, timeline, and heatmap views.

A single FilterContext feeds every view; switching views never resets it.
All three aggregations draw from the same visible-record query, so the record
set underlying the calendar, the timeline, and the summary pane is identical
by construction.
"""

from __future__ import annotations

import calendar as _calendar
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from .coordinator.service import Coordinator
from .errors import EmptySelection, MalformedRange, NoCameraSelected

HEAT_COLORS = ("white", "cold", "cool", "mild", "warm", "hot")


@dataclass(frozen=True)
class FilterContext:
    """Retrieval parameters shared across every view for one user session."""

    user_id: str
    cameras: tuple[str, ...] = ()
    start_ms: int | None = None
    end_ms: int | None = None
    content_types: tuple[str, ...] = ()
    keyword: str = ""
    region: tuple[float, float, float, float] | None = None

    def to_query(self) -> dict[str, str]:
        """Stable serialization used as HTTP query parameters."""
        q: dict[str, str] = {"user_id": self.user_id}
        if self.cameras:
            q["cameras"] = ",".join(self.cameras)
        if self.start_ms is not None:
            q["start_ms"] = str(self.start_ms)
        if self.end_ms is not None:
            q["end_ms"] = str(self.end_ms)
        if self.content_types:
            q["types"] = ",".join(self.content_types)
        if self.keyword:
            q["keyword"] = self.keyword
        if self.region is not None:
            q["region"] = ",".join(f"{v:.6f}" for v in self.region)
        return q

    @classmethod
    def from_query(cls, q: dict) -> "FilterContext":
        region = None
        if q.get("region"):
            parts = [float(v) for v in q["region"].split(",")]
            if len(parts) != 4:
                raise MalformedRange(f"bad region {q['region']!r}")
            region = tuple(parts)
        return cls(
            user_id=q["user_id"],
            cameras=tuple(v for v in q.get("cameras", "").split(",") if v),
            start_ms=int(q["start_ms"]) if q.get("start_ms") else None,
            end_ms=int(q["end_ms"]) if q.get("end_ms") else None,
            content_types=tuple(v for v in q.get("types", "").split(",") if v),
            keyword=q.get("keyword", ""),
            region=region,
        )


@dataclass(frozen=True)
class DaySummary:
    date: str  # ISO yyyy-mm-dd, UTC
    has_personal: bool
    has_collaborative: bool
    has_shared: bool


@dataclass(frozen=True)
class TimelineBar:
    record_id: str
    timestamp_ms: int
    height: int  # changed coarse cells, as stored at ingestion


@dataclass(frozen=True)
class HeatmapGrid:
    columns: int
    rows: int
    counts: tuple[tuple[int, ...], ...]  # rows x cols
    colors: tuple[tuple[str, ...], ...]
    thumbnails: tuple[str, ...]  # record ids of in-range captures, for shine-through


def visible_records(coord: Coordinator, ctx: FilterContext) -> list[dict]:
    """The one record query every view shares."""
    return coord.query_captures(
        ctx.user_id,
        cameras=list(ctx.cameras) or None,
        start_ms=ctx.start_ms,
        end_ms=ctx.end_ms,
        content_types=list(ctx.content_types) or None,
        keyword=ctx.keyword or None,
        region=ctx.region,
    )


def _day_of(ts_ms: int) -> str:
    return datetime.fromtimestamp(ts_ms / 1000, tz=timezone.utc).strftime("%Y-%m-%d")


def calendar(coord: Coordinator, ctx: FilterContext, year: int, month: int, months: int = 1) -> list[DaySummary]:
    """One DaySummary per day with at least one visible record in the span."""
    if months <= 0 or not 1 <= month <= 12:
        raise MalformedRange(f"bad month span {year}-{month} x{months}")
    first = datetime(year, month, 1, tzinfo=timezone.utc)
    end_year = year + (month - 1 + months) // 12
    end_month = (month - 1 + months) % 12 + 1
    last = datetime(end_year, end_month, 1, tzinfo=timezone.utc)
    span_start = int(first.timestamp() * 1000)
    span_end = int(last.timestamp() * 1000) - 1
    narrowed = replace(
        ctx,
        start_ms=max(ctx.start_ms, span_start) if ctx.start_ms is not None else span_start,
        end_ms=min(ctx.end_ms, span_end) if ctx.end_ms is not None else span_end,
    )
    days: dict[str, dict[str, bool]] = {}
    for rec in visible_records(coord, narrowed):
        d = days.setdefault(
            _day_of(rec["timestamp_ms"]),
            {"personal": False, "collaborative": False, "shared": False},
        )
        d[rec["content_type"]] = True
        if rec["shared_with"]:
            d["shared"] = True
    return [
        DaySummary(date, flags["personal"], flags["collaborative"], flags["shared"])
        for date, flags in sorted(days.items())
    ]


def timeline(coord: Coordinator, ctx: FilterContext) -> list[TimelineBar]:
    """Chronological histogram bars; heights come from ingestion-time counts."""
    return [
        TimelineBar(rec["id"], rec["timestamp_ms"], rec["changed_cell_count"])
        for rec in visible_records(coord, ctx)
    ]


def heat_color(count: int, max_count: int) -> str:
    """Monotone white/cold..hot bucketing; zero maps to white and only white."""
    if count <= 0:
        return HEAT_COLORS[0]
    if max_count <= 1:
        return HEAT_COLORS[1]
    bucket = 1 + int(round((count - 1) / (max_count - 1) * 4))
    return HEAT_COLORS[min(bucket, 5)]


def heatmap(coord: Coordinator, ctx: FilterContext) -> HeatmapGrid:
    """Per-cell count of visible captures whose coarse cell changed, colored."""
    if len(ctx.cameras) != 1:
        raise NoCameraSelected("heatmap needs exactly one camera selected")
    camera = coord.get_camera(ctx.cameras[0])
    tol = coord._cell_tolerance(camera)
    records = visible_records(coord, ctx)
    counts: np.ndarray | None = None
    thumbs: list[str] = []
    for rec in records:
        grids = coord.record_grids(rec["id"])
        cell_hits = (grids.coarse > tol).astype(np.int64)
        if counts is None:
            counts = np.zeros_like(cell_hits)
        counts += cell_hits
        thumbs.append(rec["id"])
    if counts is None:
        cols = int(round(camera["geometry"]["aspect_ratio"] * 10))
        counts = np.zeros((10, cols), dtype=np.int64)
    max_count = int(counts.max()) if counts.size else 0
    colors = tuple(
        tuple(heat_color(int(c), max_count) for c in row_vals) for row_vals in counts
    )
    return HeatmapGrid(
        columns=counts.shape[1],
        rows=counts.shape[0],
        counts=tuple(tuple(int(v) for v in row_vals) for row_vals in counts),
        colors=colors,
        thumbnails=tuple(thumbs),
    )


def region_select(
    ctx: FilterContext,
    cell_rect: tuple[int, int, int, int],
    columns: int,
    rows: int = 10,
) -> FilterContext:
    """Turn a heatmap cell selection (col0,row0,col1,row1 inclusive) into a region filter.

    Selecting the full grid is the identity: it clears the region filter.
    """
    c0, r0, c1, r1 = cell_rect
    if c1 < c0 or r1 < r0:
        raise EmptySelection(f"empty cell rectangle {cell_rect}")
    if c0 < 0 or r0 < 0 or c1 >= columns or r1 >= rows:
        raise EmptySelection(f"cell rectangle {cell_rect} outside the {columns}x{rows} grid")
    if c0 == 0 and r0 == 0 and c1 == columns - 1 and r1 == rows - 1:
        return replace(ctx, region=None)
    region = (c0 / columns, r0 / rows, (c1 + 1) / columns, (r1 + 1) / rows)
    return replace(ctx, region=region)
