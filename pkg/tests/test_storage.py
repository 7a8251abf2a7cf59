from __future__ import annotations

import os
from datetime import datetime, timezone
from decimal import Decimal

import pytest

from hubstar.errors import StorageError
from hubstar.storage import ColumnSpec, ForeignKeySpec, TableManifest, Warehouse


def manifest(**overrides) -> TableManifest:
    base = dict(
        schema="lab",
        table="samples",
        columns=(
            ColumnSpec("sample_id", "string", nullable=False),
            ColumnSpec("count", "integer"),
            ColumnSpec("price", "decimal"),
            ColumnSpec("fresh", "boolean"),
            ColumnSpec("taken_at", "timestamp"),
        ),
        primary_key=("sample_id",),
    )
    base.update(overrides)
    return TableManifest(**base)


@pytest.fixture
def wh(tmp_path) -> Warehouse:
    warehouse = Warehouse(tmp_path)
    warehouse.create_table(manifest())
    return warehouse


ROW = {
    "sample_id": "s-1",
    "count": 3,
    "price": Decimal("1.50"),
    "fresh": True,
    "taken_at": datetime(2024, 5, 1, 12, 30, tzinfo=timezone.utc),
}


def test_round_trip_preserves_types(wh):
    wh.append_rows("lab", "samples", [ROW, {"sample_id": "s-2", "count": None}])
    rows = wh.read_rows("lab", "samples")
    assert rows[0] == ROW
    assert isinstance(rows[0]["price"], Decimal)
    assert str(rows[0]["price"]) == "1.50"  # trailing zero survives
    assert rows[0]["taken_at"].tzinfo is not None
    second = rows[1]
    assert second["count"] is None
    assert second["price"] is None


def test_unicode_strings_round_trip(wh):
    wh.append_rows("lab", "samples", [{"sample_id": "søk/№5", "count": 1}])
    assert wh.read_rows("lab", "samples")[0]["sample_id"] == "søk/№5"


def test_collection_columns_round_trip(tmp_path):
    warehouse = Warehouse(tmp_path)
    warehouse.create_table(TableManifest(
        schema="raw", table="orders",
        columns=(
            ColumnSpec("order_id", "string"),
            ColumnSpec("lines", "collection",
                       fields=(("sku", "string"), ("qty", "integer"))),
        ),
    ))
    items = [{"sku": "A", "qty": 2}, {"sku": None, "qty": 1}]
    warehouse.append_rows("raw", "orders", [
        {"order_id": "o1", "lines": items},
        {"order_id": "o2", "lines": []},
        {"order_id": "o3", "lines": None},
    ])
    rows = warehouse.read_rows("raw", "orders")
    assert rows[0]["lines"] == items
    assert rows[1]["lines"] == []
    assert rows[2]["lines"] is None


def test_create_table_refuses_to_clobber(wh):
    with pytest.raises(StorageError, match="already exists"):
        wh.create_table(manifest())
    wh.append_rows("lab", "samples", [ROW])
    wh.create_table(manifest(), replace=True)
    assert wh.read_rows("lab", "samples") == []


def test_missing_table_raises(wh):
    with pytest.raises(StorageError, match="no such table"):
        wh.read_rows("lab", "nothing")
    with pytest.raises(StorageError, match="no such table"):
        wh.drop_table("lab", "nothing")


def test_list_tables_and_drop(wh):
    assert wh.list_tables("lab") == ["samples"]
    assert wh.list_tables("void") == []
    wh.drop_table("lab", "samples")
    assert wh.list_tables("lab") == []


def test_upsert_replaces_in_place_and_appends(wh):
    wh.append_rows("lab", "samples", [
        {"sample_id": "a", "count": 1},
        {"sample_id": "b", "count": 1},
    ])
    wh.upsert_rows("lab", "samples", [
        {"sample_id": "a", "count": 99},
        {"sample_id": "c", "count": 1},
    ])
    rows = wh.read_rows("lab", "samples")
    assert [r["sample_id"] for r in rows] == ["a", "b", "c"]  # order kept
    assert rows[0]["count"] == 99


def test_upsert_rejects_batch_duplicates_and_keyless_tables(wh, tmp_path):
    with pytest.raises(StorageError, match="duplicate primary key"):
        wh.upsert_rows("lab", "samples", [
            {"sample_id": "x"}, {"sample_id": "x"},
        ])
    keyless = Warehouse(tmp_path / "k")
    keyless.create_table(manifest(primary_key=()))
    with pytest.raises(StorageError, match="no primary key"):
        keyless.upsert_rows("lab", "samples", [{"sample_id": "x"}])


def test_replace_table_skips_identical_content(wh):
    wh.append_rows("lab", "samples", [ROW])
    data = wh.table_dir("lab", "samples") / "data"
    before = os.stat(data).st_ino
    wh.replace_table(manifest(), [ROW])
    assert os.stat(data).st_ino == before  # untouched, not rewritten
    wh.replace_table(manifest(), [ROW, {"sample_id": "s-2"}])
    assert os.stat(data).st_ino != before
    assert len(wh.read_rows("lab", "samples")) == 2


def test_scan_filters_with_value_semantics(wh):
    wh.append_rows("lab", "samples", [
        {"sample_id": "a", "price": Decimal("2.0")},
        {"sample_id": "b", "price": Decimal("3.5")},
    ])
    assert [r["sample_id"] for r in wh.scan("lab", "samples", {"price": 2})] == ["a"]
    assert wh.scan("lab", "samples", {"price": None}) == []


def test_max_capture_timestamp(tmp_path):
    warehouse = Warehouse(tmp_path)
    warehouse.create_table(TableManifest(
        schema="hs", table="t",
        columns=(ColumnSpec("k", "string"), ColumnSpec("capture_timestamp", "timestamp")),
    ))
    with pytest.raises(StorageError, match="high-water mark"):
        warehouse.max_capture_timestamp("hs", "t")
    warehouse.append_rows("hs", "t", [
        {"k": "a", "capture_timestamp": datetime(2024, 1, 1, tzinfo=timezone.utc)},
        {"k": "b", "capture_timestamp": datetime(2024, 3, 1, tzinfo=timezone.utc)},
        {"k": "c", "capture_timestamp": None},
    ])
    assert warehouse.max_capture_timestamp("hs", "t") == \
        datetime(2024, 3, 1, tzinfo=timezone.utc)


def test_check_constraints_reports_each_kind(tmp_path):
    warehouse = Warehouse(tmp_path)
    warehouse.create_table(TableManifest(
        schema="hs", table="parents",
        columns=(ColumnSpec("pk", "string", nullable=False),),
        primary_key=("pk",),
    ))
    warehouse.create_table(TableManifest(
        schema="hs", table="children",
        columns=(
            ColumnSpec("ck", "string", nullable=False),
            ColumnSpec("parent", "string"),
            ColumnSpec("code", "integer"),
        ),
        primary_key=("ck",),
        unique=(("code",),),
        foreign_keys=(ForeignKeySpec(("parent",), "hs", "parents", ("pk",)),),
    ))
    warehouse.append_rows("hs", "parents", [{"pk": "p1"}])
    warehouse.append_rows("hs", "children", [
        {"ck": "c1", "parent": "p1", "code": 7},
        {"ck": "c1", "parent": "ghost", "code": 7},
        {"ck": None, "parent": None, "code": 8},
    ])
    problems = warehouse.check_constraints("hs", "children")
    text = "\n".join(problems)
    assert "not nullable" in text
    assert "duplicate primary key" in text
    assert "unique (code)" in text
    assert "not found in hs.parents" in text
    # null foreign keys are not violations; the audit of the clean table is empty
    assert warehouse.check_constraints("hs", "parents") == []
    assert warehouse.check_all("hs") == problems
