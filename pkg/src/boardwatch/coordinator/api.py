"""HTTP surface over the coordinator: JSON payloads, PNG image endpoints.

Authentication is an API key in the X-Api-Key header, resolved to a user.
Detector endpoints (event ingestion, assignment polling) are keyed by
detector id; at desk scale the id is the credential.
"""

from __future__ import annotations

import base64

import numpy as np
from fastapi import Depends, FastAPI, Header, HTTPException, Response
from pydantic import BaseModel, Field

from ..errors import (
    BoardwatchError,
    EmptyChange,
    EmptySelection,
    MalformedFilter,
    MalformedRange,
    NoCameraSelected,
    NotAuthorized,
    NotOwner,
    StorageFailure,
    UnknownCamera,
    UnknownDetector,
    UnknownRecord,
    UnknownUser,
)
from ..imaging import BoardGeometry, RegionGridSet
from ..retrieval import FilterContext, calendar, heatmap, region_select, timeline, visible_records
from .service import Coordinator

_STATUS = {
    UnknownCamera: 404,
    UnknownDetector: 404,
    UnknownRecord: 404,
    UnknownUser: 404,
    NotOwner: 403,
    NotAuthorized: 403,
    MalformedFilter: 422,
    MalformedRange: 422,
    EmptyChange: 409,
    EmptySelection: 422,
    NoCameraSelected: 422,
    StorageFailure: 500,
}


def _http_error(exc: BoardwatchError) -> HTTPException:
    return HTTPException(status_code=_STATUS.get(type(exc), 400), detail=str(exc))


class UserIn(BaseModel):
    display_name: str
    id: str | None = None


class CameraIn(BaseModel):
    id: str
    location: str = ""
    corners: list[list[float]]
    aspect_ratio: float
    config: dict = Field(default_factory=dict)


class DetectorIn(BaseModel):
    id: str
    role: str = "capture"


class AssignIn(BaseModel):
    camera_id: str


class CaptureEventIn(BaseModel):
    camera_id: str
    timestamp_ms: int
    trigger: str = "automatic"
    changed_cell_count: int | None = None
    grid_cols: int
    coarse: list[list[float]]
    fine: list[list[float]]
    image_png_base64: str


class CollaborationEventIn(BaseModel):
    camera_id: str
    start_ms: int
    end_ms: int


class ShareIn(BaseModel):
    targets: list[str]
    region: list[int] | None = None  # x, y, w, h in image pixels


class MetadataIn(BaseModel):
    contributors: list[str] | None = None
    tags: list[str] | None = None
    label: str | None = None
    description: str | None = None
    bookmarked: bool | None = None


class CaptureEnabledIn(BaseModel):
    enabled: bool


class RegionSelectIn(BaseModel):
    cell_rect: list[int]  # col0, row0, col1, row1 inclusive
    columns: int
    rows: int = 10


def create_app(coord: Coordinator) -> FastAPI:
    app = FastAPI(title="boardwatch coordinator")

    def current_user(x_api_key: str = Header(default="")):
        user = coord.user_by_key(x_api_key) if x_api_key else None
        if user is None:
            raise HTTPException(status_code=401, detail="missing or invalid X-Api-Key")
        return user

    @app.exception_handler(BoardwatchError)
    async def _domain_error(_, exc: BoardwatchError):
        from fastapi.responses import JSONResponse

        http = _http_error(exc)
        return JSONResponse(status_code=http.status_code, content={"detail": http.detail})

    # -- registry ----------------------------------------------------------

    @app.post("/users")
    def create_user(body: UserIn):
        user = coord.create_user(body.display_name, body.id)
        return {"id": user.id, "display_name": user.display_name, "api_key": user.api_key}

    @app.get("/users")
    def list_users():
        return {"users": coord.list_users()}

    @app.get("/me")
    def me(user=Depends(current_user)):
        return {"id": user.id, "display_name": user.display_name}

    @app.post("/cameras")
    def create_camera(body: CameraIn, user=Depends(current_user)):
        geometry = BoardGeometry(tuple(tuple(c) for c in body.corners), body.aspect_ratio)
        return coord.create_camera(body.id, user.id, geometry, body.location, body.config)

    @app.get("/cameras")
    def list_cameras(user=Depends(current_user)):
        return {"cameras": coord.list_cameras()}

    @app.post("/detectors")
    def register_detector(body: DetectorIn):
        coord.register_detector(body.id, body.role)
        return {"id": body.id, "role": body.role}

    @app.post("/detectors/{detector_id}/assign")
    def assign(detector_id: str, body: AssignIn):
        revision = coord.assign_camera(detector_id, body.camera_id)
        return {"revision": revision}

    @app.get("/assignments/{detector_id}")
    def assignments(detector_id: str, since: int = 0):
        return coord.poll_assignments(detector_id, since)

    # -- detector events ----------------------------------------------------

    @app.post("/events/capture")
    def capture_event(body: CaptureEventIn):
        grids = RegionGridSet(
            np.asarray(body.coarse, dtype=np.float64),
            np.asarray(body.fine, dtype=np.float64),
        )
        png = base64.b64decode(body.image_png_base64)
        record = coord.ingest_capture(
            body.camera_id, body.timestamp_ms, png, grids, body.trigger, body.changed_cell_count
        )
        return record

    @app.post("/events/collaboration")
    def collaboration_event(body: CollaborationEventIn):
        upgraded = coord.ingest_collaboration(body.camera_id, body.start_ms, body.end_ms)
        return {"upgraded": upgraded}

    # -- records ------------------------------------------------------------

    def _ctx_from(user, cameras: str = "", start_ms: int | None = None, end_ms: int | None = None,
                  types: str = "", keyword: str = "", region: str = "") -> FilterContext:
        return FilterContext.from_query(
            {
                "user_id": user.id,
                "cameras": cameras,
                "start_ms": str(start_ms) if start_ms is not None else "",
                "end_ms": str(end_ms) if end_ms is not None else "",
                "types": types,
                "keyword": keyword,
                "region": region,
            }
        )

    @app.get("/captures")
    def captures(
        cameras: str = "",
        start_ms: int | None = None,
        end_ms: int | None = None,
        types: str = "",
        keyword: str = "",
        region: str = "",
        user=Depends(current_user),
    ):
        ctx = _ctx_from(user, cameras, start_ms, end_ms, types, keyword, region)
        return {"records": visible_records(coord, ctx)}

    @app.get("/captures/{record_id}")
    def capture_detail(record_id: str, user=Depends(current_user)):
        record = coord.get_record(record_id, for_user=user.id)
        coord.image_bytes(record_id, user.id, thumbnail=True)  # visibility check
        return record

    @app.get("/captures/{record_id}/image.png")
    def capture_image(record_id: str, user=Depends(current_user)):
        data = coord.image_bytes(record_id, user.id)
        return Response(content=data, media_type="image/png")

    @app.get("/captures/{record_id}/thumb.png")
    def capture_thumb(record_id: str, user=Depends(current_user)):
        data = coord.image_bytes(record_id, user.id, thumbnail=True)
        return Response(content=data, media_type="image/png")

    @app.get("/captures/{record_id}/grids")
    def capture_grids(record_id: str, user=Depends(current_user)):
        record = coord.get_record(record_id, for_user=user.id)
        grids = coord.record_grids(record_id)
        return {
            "grid_cols": grids.columns,
            "coarse": grids.coarse.tolist(),
            "fine": grids.fine.tolist(),
            "image_w": record["image_w"],
            "image_h": record["image_h"],
        }

    @app.post("/captures/{record_id}/share")
    def share(record_id: str, body: ShareIn, user=Depends(current_user)):
        region = tuple(body.region) if body.region is not None else None
        return coord.share(record_id, user.id, body.targets, region)

    @app.get("/captures/{record_id}/default-share-region")
    def default_share_region(record_id: str, user=Depends(current_user)):
        record = coord.get_record(record_id)
        if record["owner_id"] != user.id:
            raise NotOwner(record_id)
        x, y, w, h = coord.default_share_region(record_id)
        return {"region": [x, y, w, h]}

    @app.patch("/captures/{record_id}/metadata")
    def metadata(record_id: str, body: MetadataIn, user=Depends(current_user)):
        return coord.set_metadata(
            record_id,
            user.id,
            contributors=body.contributors,
            tags=body.tags,
            label=body.label,
            description=body.description,
            bookmarked=body.bookmarked,
        )

    # -- capture control -----------------------------------------------------

    @app.put("/cameras/{camera_id}/capture-enabled")
    def capture_enabled(camera_id: str, body: CaptureEnabledIn, user=Depends(current_user)):
        return coord.set_capture_enabled(camera_id, user.id, body.enabled)

    @app.post("/cameras/{camera_id}/manual-capture", status_code=202)
    def manual_capture(camera_id: str, user=Depends(current_user)):
        command_id = coord.request_manual_capture(camera_id, user.id)
        return {"queued": True, "command_id": command_id}

    # -- views ---------------------------------------------------------------

    @app.get("/views/calendar")
    def view_calendar(
        year: int,
        month: int,
        months: int = 1,
        cameras: str = "",
        start_ms: int | None = None,
        end_ms: int | None = None,
        types: str = "",
        keyword: str = "",
        region: str = "",
        user=Depends(current_user),
    ):
        ctx = _ctx_from(user, cameras, start_ms, end_ms, types, keyword, region)
        days = calendar(coord, ctx, year, month, months)
        return {
            "days": [
                {
                    "date": d.date,
                    "has_personal": d.has_personal,
                    "has_collaborative": d.has_collaborative,
                    "has_shared": d.has_shared,
                }
                for d in days
            ]
        }

    @app.get("/views/timeline")
    def view_timeline(
        cameras: str = "",
        start_ms: int | None = None,
        end_ms: int | None = None,
        types: str = "",
        keyword: str = "",
        region: str = "",
        user=Depends(current_user),
    ):
        ctx = _ctx_from(user, cameras, start_ms, end_ms, types, keyword, region)
        return {
            "bars": [
                {"record_id": b.record_id, "timestamp_ms": b.timestamp_ms, "height": b.height}
                for b in timeline(coord, ctx)
            ]
        }

    @app.get("/views/heatmap")
    def view_heatmap(
        cameras: str = "",
        start_ms: int | None = None,
        end_ms: int | None = None,
        types: str = "",
        keyword: str = "",
        region: str = "",
        user=Depends(current_user),
    ):
        ctx = _ctx_from(user, cameras, start_ms, end_ms, types, keyword, region)
        grid = heatmap(coord, ctx)
        return {
            "columns": grid.columns,
            "rows": grid.rows,
            "counts": [list(r) for r in grid.counts],
            "colors": [list(r) for r in grid.colors],
            "thumbnails": list(grid.thumbnails),
        }

    @app.post("/views/region-select")
    def view_region_select(body: RegionSelectIn, user=Depends(current_user)):
        base = FilterContext(user_id=user.id)
        updated = region_select(base, tuple(body.cell_rect), body.columns, body.rows)
        return {"region": list(updated.region) if updated.region else None}

    return app
