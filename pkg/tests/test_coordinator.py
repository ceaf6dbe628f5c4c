from __future__ import annotations

import itertools

import numpy as np
import pytest

from boardwatch.coordinator import Coordinator, ImageStore
from boardwatch.errors import (
    EmptyChange,
    MalformedFilter,
    NotAuthorized,
    NotOwner,
    UnknownCamera,
    UnknownDetector,
    UnknownRecord,
)
from boardwatch.imaging import BoardGeometry, GrayImage, RegionGridSet, cell_pixel_range

from oracles import flood_fill_clusters

GEOM = BoardGeometry(((20.0, 10.0), (99.0, 10.0), (99.0, 59.0), (20.0, 59.0)), 1.6)
IMG_W, IMG_H = 160, 100


@pytest.fixture
def coord(tmp_path):
    c = Coordinator(":memory:", ImageStore(str(tmp_path / "store")))
    yield c
    c.close()


@pytest.fixture
def world(coord):
    alice = coord.create_user("Alice", "alice")
    ben = coord.create_user("Ben", "ben")
    charlie = coord.create_user("Charlie", "charlie")
    coord.create_camera("cam-1", "alice", GEOM, "Alice's office")
    coord.create_camera("cam-2", "ben", GEOM, "Ben's office")
    return coord, alice, ben, charlie


def gray_image(seed=0) -> GrayImage:
    rng = np.random.default_rng(seed)
    return GrayImage(rng.integers(0, 256, size=(IMG_H, IMG_W), dtype=np.uint8))


def grids_with_cells(cells, value=1.0) -> RegionGridSet:
    coarse = np.zeros((10, 16))
    fine = np.zeros((100, 160))
    for r, c in cells:
        coarse[r, c] = value
        fine[r * 10 : (r + 1) * 10, c * 10 : (c + 1) * 10] = value
    return RegionGridSet(coarse, fine)


def ingest(coord, camera_id, ts, cells=((2, 3),), seed=0, trigger="automatic"):
    return coord.ingest_capture(camera_id, ts, gray_image(seed), grids_with_cells(cells), trigger)


# ---------------------------------------------------------------------------
# ingestion and labelling

def test_capture_defaults_to_personal(world):
    coord, *_ = world
    rec = ingest(coord, "cam-1", 1000)
    assert rec["content_type"] == "personal"
    assert rec["changed_cell_count"] == 1


def test_capture_inside_stored_interval_is_collaborative(world):
    coord, *_ = world
    coord.ingest_collaboration("cam-1", 1000, 5000)
    rec = ingest(coord, "cam-1", 3000)
    assert rec["content_type"] == "collaborative"


def test_interval_boundaries_are_inclusive(world):
    coord, *_ = world
    coord.ingest_collaboration("cam-1", 1000, 5000)
    assert ingest(coord, "cam-1", 1000)["content_type"] == "collaborative"
    assert ingest(coord, "cam-1", 5000)["content_type"] == "collaborative"
    assert ingest(coord, "cam-1", 5001)["content_type"] == "personal"


def test_interval_upgrades_prior_captures_and_counts(world):
    coord, *_ = world
    a = ingest(coord, "cam-1", 1000)
    b = ingest(coord, "cam-1", 2000)
    ingest(coord, "cam-1", 9000)  # outside
    upgraded = coord.ingest_collaboration("cam-1", 500, 2500)
    assert upgraded == 2
    assert coord.get_record(a["id"])["content_type"] == "collaborative"
    assert coord.get_record(b["id"])["content_type"] == "collaborative"


def test_overlapping_interval_is_idempotent(world):
    coord, *_ = world
    ingest(coord, "cam-1", 1000)
    assert coord.ingest_collaboration("cam-1", 500, 1500) == 1
    assert coord.ingest_collaboration("cam-1", 400, 1600) == 0  # already collaborative


def test_intervals_only_affect_their_camera(world):
    coord, *_ = world
    rec = ingest(coord, "cam-2", 1000)
    coord.ingest_collaboration("cam-1", 500, 1500)
    assert coord.get_record(rec["id"])["content_type"] == "personal"


def test_ingest_unknown_camera(world):
    coord, *_ = world
    with pytest.raises(UnknownCamera):
        ingest(coord, "cam-404", 1000)
    with pytest.raises(UnknownCamera):
        coord.ingest_collaboration("cam-404", 0, 10)


def test_order_independence_small_exhaustive(world):
    """Every interleaving of the same events yields identical final labels."""
    coord0, *_ = world
    events = [
        ("capture", 1000),
        ("capture", 3000),
        ("capture", 9000),
        ("interval", (500, 3500)),
        ("interval", (8000, 8500)),
    ]
    outcomes = []
    for perm in itertools.permutations(events):
        c = Coordinator(":memory:", coord0.images)
        c.create_user("Alice", "alice")
        c.create_camera("cam-1", "alice", GEOM)
        ids_by_ts = {}
        for kind, payload in perm:
            if kind == "capture":
                rec = ingest(c, "cam-1", payload)
                ids_by_ts[payload] = rec["id"]
            else:
                c.ingest_collaboration("cam-1", *payload)
        final = {
            ts: c.get_record(rid)["content_type"] for ts, rid in ids_by_ts.items()
        }
        outcomes.append(tuple(sorted(final.items())))
        c.close()
    assert len(set(outcomes)) == 1
    assert dict(outcomes[0]) == {1000: "collaborative", 3000: "collaborative", 9000: "personal"}


# ---------------------------------------------------------------------------
# sharing

def test_default_share_region_is_largest_cluster_bbox(world):
    coord, *_ = world
    # two clusters: a 2x2 block and a single far cell
    cells = [(2, 3), (2, 4), (3, 3), (3, 4), (7, 12)]
    rec = ingest(coord, "cam-1", 1000, cells=cells)
    region = coord.default_share_region(rec["id"])
    # oracle: flood fill on the same mask
    mask = np.zeros((10, 16), dtype=bool)
    for r, c in cells:
        mask[r, c] = True
    clusters = flood_fill_clusters(mask)
    largest = max(clusters, key=len)
    rows = [r for r, _ in largest]
    cols = [c for _, c in largest]
    x0, _ = cell_pixel_range(IMG_W, 16, min(cols))
    _, x1 = cell_pixel_range(IMG_W, 16, max(cols))
    y0, _ = cell_pixel_range(IMG_H, 10, min(rows))
    _, y1 = cell_pixel_range(IMG_H, 10, max(rows))
    assert region == (x0, y0, x1 - x0, y1 - y0)


def test_share_applies_default_crop_and_grants_visibility(world):
    coord, alice, ben, charlie = world
    rec = ingest(coord, "cam-1", 1000, cells=[(2, 3), (2, 4)])
    updated = coord.share(rec["id"], "alice", ["charlie"])
    assert "charlie" in updated["shared_with"]
    got = coord.get_record(rec["id"], for_user="charlie")
    x, y, w, h = got["share_crop"]
    assert w > 0 and h > 0
    # charlie can now query it
    visible = coord.query_captures("charlie")
    assert [r["id"] for r in visible] == [rec["id"]]


def test_share_explicit_full_image_region(world):
    coord, *_ = world
    rec = ingest(coord, "cam-1", 1000)
    updated = coord.share(rec["id"], "alice", ["ben"], region=(0, 0, IMG_W, IMG_H))
    got = coord.get_record(rec["id"], for_user="ben")
    assert got["share_crop"] == [0, 0, IMG_W, IMG_H]


def test_share_requires_ownership(world):
    coord, *_ = world
    rec = ingest(coord, "cam-1", 1000)
    with pytest.raises(NotOwner):
        coord.share(rec["id"], "ben", ["charlie"])


def test_share_empty_change_needs_explicit_region(world):
    coord, *_ = world
    rec = ingest(coord, "cam-1", 1000, cells=[])
    with pytest.raises(EmptyChange):
        coord.share(rec["id"], "alice", ["ben"])
    coord.share(rec["id"], "alice", ["ben"], region=(10, 10, 50, 40))


def test_share_unknown_record(world):
    coord, *_ = world
    with pytest.raises(UnknownRecord):
        coord.share("cap-nope", "alice", ["ben"])


def test_share_region_clipped_to_image(world):
    coord, *_ = world
    rec = ingest(coord, "cam-1", 1000)
    with pytest.raises(MalformedFilter):
        coord.share(rec["id"], "alice", ["ben"], region=(100, 80, 100, 40))


def test_share_crop_containment_random_patterns(world):
    coord, *_ = world
    rng = np.random.default_rng(17)
    for trial in range(10):
        mask = rng.random((10, 16)) < 0.18
        cells = [tuple(rc) for rc in np.argwhere(mask)]
        if not cells:
            continue
        rec = ingest(coord, "cam-1", 10_000 + trial, cells=cells, seed=trial)
        region = coord.default_share_region(rec["id"])
        clusters = flood_fill_clusters(mask)
        sizes = sorted(len(c) for c in clusters)
        largest = max(clusters, key=lambda c: (len(c), -min(c)[0], -min(c)[1]))
        x, y, w, h = region
        for r, c in largest:
            cx0, cx1 = cell_pixel_range(IMG_W, 16, c)
            cy0, cy1 = cell_pixel_range(IMG_H, 10, r)
            assert x <= cx0 and cx1 <= x + w
            assert y <= cy0 and cy1 <= y + h


# ---------------------------------------------------------------------------
# metadata

def test_owner_adds_contributor_who_can_then_retrieve_and_edit(world):
    coord, alice, ben, charlie = world
    rec = ingest(coord, "cam-1", 1000)
    assert coord.query_captures("ben") == []
    coord.set_metadata(rec["id"], "alice", contributors=["ben"])
    assert [r["id"] for r in coord.query_captures("ben")] == [rec["id"]]
    # contributor may edit metadata
    updated = coord.set_metadata(rec["id"], "ben", description="pump schematic")
    assert updated["description"] == "pump schematic"


def test_empty_label_clears(world):
    coord, *_ = world
    rec = ingest(coord, "cam-1", 1000)
    coord.set_metadata(rec["id"], "alice", label="UML sketch")
    assert coord.get_record(rec["id"])["label"] == "UML sketch"
    coord.set_metadata(rec["id"], "alice", label="")
    assert coord.get_record(rec["id"])["label"] == ""


def test_non_contributor_cannot_edit(world):
    coord, *_ = world
    rec = ingest(coord, "cam-1", 1000)
    with pytest.raises(NotAuthorized):
        coord.set_metadata(rec["id"], "charlie", label="nope")


def test_tags_and_bookmark(world):
    coord, *_ = world
    rec = ingest(coord, "cam-1", 1000)
    coord.set_metadata(rec["id"], "alice", tags=["design", "api"], bookmarked=True)
    got = coord.get_record(rec["id"])
    assert got["tags"] == ["api", "design"]
    assert got["bookmarked"] is True


# ---------------------------------------------------------------------------
# queries

def test_owner_sees_all_own_records(world):
    coord, *_ = world
    ids = [ingest(coord, "cam-1", t, seed=t)["id"] for t in (3000, 1000, 2000)]
    got = coord.query_captures("alice")
    assert [r["timestamp_ms"] for r in got] == [1000, 2000, 3000]
    assert {r["id"] for r in got} == set(ids)


def test_keyword_matches_label_or_description_case_insensitive(world):
    coord, *_ = world
    a = ingest(coord, "cam-1", 1000)
    b = ingest(coord, "cam-1", 2000, seed=1)
    coord.set_metadata(a["id"], "alice", label="UML diagram")
    coord.set_metadata(b["id"], "alice", description="kanban wall")
    assert [r["id"] for r in coord.query_captures("alice", keyword="uml")] == [a["id"]]
    assert [r["id"] for r in coord.query_captures("alice", keyword="KANBAN")] == [b["id"]]
    assert coord.query_captures("alice", keyword="retro") == []


def test_content_type_filter_with_derived_shared(world):
    coord, *_ = world
    personal = ingest(coord, "cam-1", 1000)
    coord.ingest_collaboration("cam-1", 1500, 2500)
    collab = ingest(coord, "cam-1", 2000, seed=1)
    shared = ingest(coord, "cam-1", 3000, seed=2)
    coord.share(shared["id"], "alice", ["ben"])
    got = coord.query_captures("alice", content_types=["collaborative"])
    assert [r["id"] for r in got] == [collab["id"]]
    got = coord.query_captures("alice", content_types=["shared"])
    assert [r["id"] for r in got] == [shared["id"]]
    got = coord.query_captures("alice", content_types=["personal"])
    assert {r["id"] for r in got} == {personal["id"], shared["id"]}
    with pytest.raises(MalformedFilter):
        coord.query_captures("alice", content_types=["secret"])


def test_region_filter_selects_fine_cells(world):
    coord, *_ = world
    left = ingest(coord, "cam-1", 1000, cells=[(2, 2)])
    right = ingest(coord, "cam-1", 2000, cells=[(7, 13)], seed=1)
    got = coord.query_captures("alice", region=(0.0, 0.0, 0.5, 0.5))
    assert [r["id"] for r in got] == [left["id"]]
    got = coord.query_captures("alice", region=(0.75, 0.6, 1.0, 0.9))
    assert [r["id"] for r in got] == [right["id"]]
    # a never-changed area returns nothing
    assert coord.query_captures("alice", region=(0.0, 0.9, 0.05, 1.0)) == []


def test_access_soundness_random(world):
    coord, alice, ben, charlie = world
    rng = np.random.default_rng(5)
    records = []
    for i in range(12):
        cam = "cam-1" if i % 2 == 0 else "cam-2"
        rec = ingest(coord, cam, 1000 * (i + 1), seed=i)
        records.append(rec)
        if rng.random() < 0.4:
            owner = "alice" if cam == "cam-1" else "ben"
            coord.share(rec["id"], owner, ["charlie"])
        if rng.random() < 0.3:
            owner = "alice" if cam == "cam-1" else "ben"
            coord.set_metadata(rec["id"], owner, contributors=["charlie"])
    for rec in coord.query_captures("charlie"):
        full = coord.get_record(rec["id"])
        assert (
            "charlie" in full["shared_with"]
            or "charlie" in full["contributors"]
            or full["owner_id"] == "charlie"
        )


def test_cropped_image_for_share_viewer(world):
    coord, *_ = world
    rec = ingest(coord, "cam-1", 1000, cells=[(2, 3)])
    coord.share(rec["id"], "alice", ["ben"])
    from boardwatch.imaging import decode_gray_png

    full = decode_gray_png(coord.image_bytes(rec["id"], "alice"))
    assert (full.width, full.height) == (IMG_W, IMG_H)
    cropped = decode_gray_png(coord.image_bytes(rec["id"], "ben"))
    x, y, w, h = coord.get_record(rec["id"], for_user="ben")["share_crop"]
    assert (cropped.width, cropped.height) == (w, h)
    with pytest.raises(NotAuthorized):
        coord.image_bytes(rec["id"], "charlie")


# ---------------------------------------------------------------------------
# detector assignment

def test_poll_assignments_lifecycle(world):
    coord, *_ = world
    coord.register_detector("det-A", "capture")
    coord.register_detector("det-B", "capture")
    with pytest.raises(UnknownDetector):
        coord.poll_assignments("det-nope")

    rev0 = coord.poll_assignments("det-A")["revision"]
    assert coord.poll_assignments("det-A", rev0)["changes"] == []

    coord.assign_camera("det-A", "cam-1")
    delta = coord.poll_assignments("det-A", rev0)
    assert [c["action"] for c in delta["changes"]] == ["assign"]
    assert delta["changes"][0]["camera"]["id"] == "cam-1"
    rev1 = delta["revision"]

    # moving the camera to det-B removes it from det-A
    coord.assign_camera("det-B", "cam-1")
    delta_a = coord.poll_assignments("det-A", rev1)
    assert [c["action"] for c in delta_a["changes"]] == ["remove"]
    delta_b = coord.poll_assignments("det-B", rev1)
    assert [c["action"] for c in delta_b["changes"]] == ["assign"]


def test_assignment_replay_from_any_revision(world):
    coord, *_ = world
    coord.register_detector("det-A", "capture")
    coord.assign_camera("det-A", "cam-1")
    coord.assign_camera("det-A", "cam-2")
    coord.set_capture_enabled("cam-1", "alice", False)
    full = coord.poll_assignments("det-A", 0)
    held = {c["camera_id"]: c for c in full["changes"] if c["action"] != "remove"}
    assert set(held) == {"cam-1", "cam-2"}
    assert held["cam-1"]["camera"]["capture_enabled"] is False
    # revisions strictly increase
    revs = [coord.assign_camera("det-A", "cam-1") for _ in range(2)]
    assert revs[1] > revs[0]


def test_capture_enabled_propagates_via_poll(world):
    coord, *_ = world
    coord.register_detector("det-A", "capture")
    coord.assign_camera("det-A", "cam-1")
    rev = coord.poll_assignments("det-A")["revision"]
    coord.set_capture_enabled("cam-1", "alice", False)
    delta = coord.poll_assignments("det-A", rev)
    updates = [c for c in delta["changes"] if c["camera_id"] == "cam-1"]
    assert updates and updates[-1]["camera"]["capture_enabled"] is False
    with pytest.raises(NotOwner):
        coord.set_capture_enabled("cam-1", "ben", True)


def test_manual_capture_command_delivered_once(world):
    coord, *_ = world
    coord.register_detector("det-A", "capture")
    coord.assign_camera("det-A", "cam-1")
    rev = coord.poll_assignments("det-A")["revision"]
    coord.request_manual_capture("cam-1", "alice", 123)
    delta = coord.poll_assignments("det-A", rev)
    assert [c["kind"] for c in delta["commands"]] == ["manual_capture"]
    again = coord.poll_assignments("det-A", delta["revision"])
    assert again["commands"] == []
    with pytest.raises(NotOwner):
        coord.request_manual_capture("cam-1", "ben", 124)
