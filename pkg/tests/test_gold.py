"""Gold builds: SCD1/SCD2 dimensions, fact tables, and the temporal join."""

from __future__ import annotations

from datetime import datetime, timezone
from decimal import Decimal

import pytest

from hubstar import (
    Warehouse,
    build_all,
    build_view,
    ingest_file,
    init_warehouse,
    load_all,
    parse_model,
)
from hubstar.errors import GoldBuildError
from hubstar.gold import GoldBuildResult, current_rows, top_per_partition
from hubstar.keygen import sha256_hex
from hubstar.model import validate_model

MODEL = parse_model('''product goldtest

source tiers {
  load_source 1
  format csv
  column tier_id integer
  column tier_name string
  column updated_at timestamp
  capture last_modified updated_at
}

source people {
  load_source 2
  format csv
  column person_id integer
  column full_name string
  column tier_id integer
  column seen_at timestamp
  column gone integer
  capture cdc_column seen_at
  delete_flag_column gone
}

source addresses {
  load_source 3
  format ndjson
  column person_id integer
  column valid_from timestamp
  column valid_to timestamp
  column address string
  column gone integer
  column captured_at timestamp
  capture cdc_column captured_at
  delete_flag_column gone
}

source orders {
  load_source 4
  format ndjson
  column order_id string
  column person_id integer
  column placed_at timestamp
  column amount decimal
  capture cdc_column placed_at
}

hub tier {
  key computed cast(tier_id as string)
  business_key global (tier_id integer)
  descriptive tier_name string
  source_mapping tiers {
    map tier_id = tier_id
    map tier_name = tier_name
  }
}

hub person {
  key computed sha256(cast(person_id as string))
  business_key global (person_id integer)
  descriptive full_name string
  descriptive tier_key references tier
  delete_flag
  source_mapping people {
    map person_id = person_id
    map full_name = full_name
    fk tier_key = tier(tier_id)
  }
}

star person_address {
  participant person
  participant time valid_from
  key (person_key, valid_from, capture_timestamp)
  descriptive address string
  descriptive valid_to timestamp
  delete_flag
  source_mapping addresses {
    key person_key = person(person_id)
    map valid_from = valid_from
    map address = address
    map valid_to = valid_to
  }
}

star person_order {
  participant person
  participant time placed_at
  key (person_key, placed_at)
  descriptive order_id string
  descriptive amount decimal
  source_mapping orders {
    key person_key = person(person_id)
    map placed_at = placed_at
    map order_id = order_id
    map amount = amount
  }
}

gold dim_person {
  kind scd1_dim
  base hub person
  join hub tier on tier_key inner
  join_current star person_address on person_key partition_by (person_key) order_by (valid_from desc, capture_timestamp desc)
  output person_key
  output person_id
  output full_name
  output tier_name
  output address = person_address.address
}

gold dim_person2 {
  kind scd2_dim
  base hub person
  versions star person_address on person_key partition_by (person_key, valid_from) order_by (capture_timestamp desc)
  scd2_key (person_key, person_address.valid_from)
  output person_version_key = scd2_key
  output person_key
  output full_name
  output address = person_address.address
  output valid_from = person_address.valid_from
  output valid_to = person_address.valid_to
}

gold fact_orders {
  kind fact
  base star person_order
  temporal_join dim_person2 key person_key time placed_at
  output order_id
  output person_key
  output placed_at
  output amount
  output person_version_key = dim_person2.person_version_key
  output address = dim_person2.address
}

gold fact_orders_strict {
  kind fact
  base star person_order
  join hub person on person_key inner
  output order_id
  output full_name = person.full_name
}

gold fact_orders_loose {
  kind fact
  base star person_order
  join hub person on person_key left
  output order_id
  output full_name = person.full_name
}
''').spec

SILVER = MODEL.schema_names["silver"]
GOLD = MODEL.schema_names["gold"]
NOW = datetime(2025, 3, 1, tzinfo=timezone.utc)

PK1, PK2, PK3 = (sha256_hex(str(n)) for n in (1, 2, 3))


def utc(*args):
    return datetime(*args, tzinfo=timezone.utc)


def feed(wh, directory, source: str, name: str, text: str):
    path = directory / name
    path.write_text(text, encoding="utf-8")
    ingest_file(wh, MODEL, source, path, now=NOW)


ADDRESS_LINES = """\
{"person_id": 1, "valid_from": "2024-01-01T00:00:00Z", "valid_to": "2024-05-31T23:59:59Z", "address": "1 Elm", "gone": 0, "captured_at": "2024-01-03T00:00:00Z"}
{"person_id": 1, "valid_from": "2024-01-01T00:00:00Z", "valid_to": "2024-05-31T23:59:59Z", "address": "1 Elm Street", "gone": 0, "captured_at": "2024-01-04T00:00:00Z"}
{"person_id": 1, "valid_from": "2024-06-01T00:00:00Z", "valid_to": null, "address": "9 Oak", "gone": 0, "captured_at": "2024-01-05T00:00:00Z"}
{"person_id": 2, "valid_from": "2024-02-01T00:00:00Z", "valid_to": null, "address": "5 Pine", "gone": 0, "captured_at": "2024-01-06T00:00:00Z"}
{"person_id": 2, "valid_from": "2024-02-01T00:00:00Z", "valid_to": null, "address": "5 Pine", "gone": 1, "captured_at": "2024-01-07T00:00:00Z"}
"""

ORDER_LINES = """\
{"order_id": "o1", "person_id": 1, "placed_at": "2024-02-15T00:00:00Z", "amount": 12.50}
{"order_id": "o2", "person_id": 1, "placed_at": "2024-07-01T00:00:00Z", "amount": 20.00}
{"order_id": "o3", "person_id": 1, "placed_at": "2023-12-01T00:00:00Z", "amount": 7.25}
{"order_id": "o4", "person_id": 2, "placed_at": "2024-03-01T00:00:00Z", "amount": 9.00}
{"order_id": "o5", "person_id": null, "placed_at": "2024-02-15T00:00:00Z", "amount": 1.00}
"""


@pytest.fixture(scope="module")
def gw(tmp_path_factory):
    """A loaded and fully built warehouse, shared read-only by this module."""
    root = tmp_path_factory.mktemp("gold_wh")
    wh = Warehouse(root / "wh")
    init_warehouse(wh, MODEL)
    feed(wh, root, "tiers", "tiers.csv",
         "tier_id,tier_name,updated_at\n"
         "1,Gold,2024-01-01T00:00:00Z\n"
         "2,Silver,2024-01-01T01:00:00Z\n")
    feed(wh, root, "people", "people.csv",
         "person_id,full_name,tier_id,seen_at,gone\n"
         "1,Ana,1,2024-01-02T00:00:00Z,0\n"
         "2,Bo,2,2024-01-02T01:00:00Z,0\n"
         "3,Cy,,2024-01-02T02:00:00Z,0\n")
    feed(wh, root, "addresses", "addresses.ndjson", ADDRESS_LINES)
    feed(wh, root, "orders", "orders.ndjson", ORDER_LINES)
    load_all(wh, MODEL, now=NOW)
    build_all(wh, MODEL, now=NOW)
    return wh


def rows_by(wh, table: str, column: str):
    return {r[column]: r for r in wh.read_rows(GOLD, table)}


def test_model_is_valid():
    assert validate_model(MODEL).ok


# -- ranking helpers ------------------------------------------------------------


def test_top_per_partition_orders_and_keeps_one_row_each():
    rows = [
        {"k": "a", "rank": 1, "v": "low"},
        {"k": "a", "rank": 3, "v": "high"},
        {"k": "b", "rank": 2, "v": "only"},
    ]
    top = top_per_partition(rows, ("k",), (("rank", "desc"),))
    assert {(r["k"], r["v"]) for r in top} == {("a", "high"), ("b", "only")}
    bottom = top_per_partition(rows, ("k",), (("rank", "asc"),))
    assert {(r["k"], r["v"]) for r in bottom} == {("a", "low"), ("b", "only")}


def test_top_per_partition_sorts_nulls_low():
    rows = [
        {"k": "a", "rank": None, "v": "null"},
        {"k": "a", "rank": 1, "v": "one"},
    ]
    top = top_per_partition(rows, ("k",), (("rank", "desc"),))
    assert top[0]["v"] == "one"


def test_current_rows_drops_a_partition_whose_latest_version_is_deleted():
    rows = [
        {"k": "a", "rank": 1, "delete_flag": 0},
        {"k": "a", "rank": 2, "delete_flag": 1},
        {"k": "b", "rank": 1, "delete_flag": 0},
    ]
    current = current_rows(rows, ("k",), (("rank", "desc"),))
    assert [r["k"] for r in current] == ["b"]


# -- scd1 dimension -------------------------------------------------------------


def test_scd1_dim_has_one_row_per_hub_member_including_the_default(gw):
    dim = rows_by(gw, "dim_person", "person_key")
    assert set(dim) == {"-1", PK1, PK2, PK3}
    assert dim["-1"]["person_id"] == -1


def test_scd1_dim_picks_the_current_address_per_person(gw):
    dim = rows_by(gw, "dim_person", "person_key")
    assert dim[PK1]["address"] == "9 Oak"  # latest interval, latest capture
    assert dim[PK2]["address"] is None  # tombstoned interval drops out
    assert dim[PK3]["address"] is None  # never had one


def test_scd1_dim_inner_join_lands_on_the_tier_default_row_for_null_fks(gw):
    dim = rows_by(gw, "dim_person", "person_key")
    assert dim[PK1]["tier_name"] == "Gold"
    assert dim[PK2]["tier_name"] == "Silver"
    assert dim[PK3]["tier_name"] is None  # tier_key "-1" -> default tier row


# -- scd2 dimension -------------------------------------------------------------


def test_scd2_dim_emits_one_row_per_current_interval(gw):
    dim = gw.read_rows(GOLD, "dim_person2")
    keys = sorted(r["person_version_key"] for r in dim)
    assert keys == sorted([
        "-1",
        f"{PK1}#2024-01-01T00:00:00Z",
        f"{PK1}#2024-06-01T00:00:00Z",
        PK2,
        PK3,
    ])


def test_scd2_dim_versions_pick_the_latest_capture_per_interval(gw):
    dim = rows_by(gw, "dim_person2", "person_version_key")
    first = dim[f"{PK1}#2024-01-01T00:00:00Z"]
    assert first["address"] == "1 Elm Street"  # the corrected redelivery
    assert first["valid_from"] == utc(2024, 1, 1)
    assert first["valid_to"] == utc(2024, 5, 31, 23, 59, 59)
    second = dim[f"{PK1}#2024-06-01T00:00:00Z"]
    assert second["address"] == "9 Oak"
    assert second["valid_to"] is None


def test_scd2_key_concatenation_skips_null_components(gw):
    dim = rows_by(gw, "dim_person2", "person_version_key")
    # No surviving interval: the version key degenerates to the hub key alone.
    assert dim[PK2]["valid_from"] is None
    assert dim[PK2]["address"] is None
    assert dim["-1"]["person_key"] == "-1"


# -- facts and the temporal join ------------------------------------------------


def test_fact_keeps_every_base_row(gw):
    facts = rows_by(gw, "fact_orders", "order_id")
    assert set(facts) == {"o1", "o2", "o3", "o4", "o5"}
    assert facts["o1"]["amount"] == Decimal("12.50")
    assert facts["o5"]["person_key"] == "-1"


def test_temporal_join_matches_the_interval_containing_the_event(gw):
    facts = rows_by(gw, "fact_orders", "order_id")
    assert facts["o1"]["person_version_key"] == f"{PK1}#2024-01-01T00:00:00Z"
    assert facts["o1"]["address"] == "1 Elm Street"
    assert facts["o2"]["person_version_key"] == f"{PK1}#2024-06-01T00:00:00Z"
    assert facts["o2"]["address"] == "9 Oak"


def test_temporal_join_misses_produce_null_version_columns(gw):
    facts = rows_by(gw, "fact_orders", "order_id")
    assert facts["o3"]["person_version_key"] is None  # before any interval
    assert facts["o4"]["person_version_key"] is None  # intervals all tombstoned
    assert facts["o5"]["person_version_key"] is None  # default member, no history


def test_open_ended_intervals_match_arbitrarily_late_events(gw):
    facts = rows_by(gw, "fact_orders", "order_id")
    assert facts["o2"]["placed_at"] == utc(2024, 7, 1)
    assert facts["o2"]["person_version_key"] == f"{PK1}#2024-06-01T00:00:00Z"


# -- build orchestration --------------------------------------------------------


def test_build_all_runs_dimensions_before_facts_and_is_idempotent(gw):
    def gold_bytes():
        return {v.name: (gw.table_dir(GOLD, v.table_name) / "data").read_bytes()
                for v in MODEL.gold_views}

    before = gold_bytes()
    results = build_all(gw, MODEL, now=NOW)
    assert [r.view_name for r in results] == [
        "dim_person", "dim_person2",
        "fact_orders", "fact_orders_strict", "fact_orders_loose"]
    assert gold_bytes() == before


def test_build_results_carry_row_counts(gw):
    results = {r.view_name: r for r in build_all(gw, MODEL, now=NOW)}
    assert results["dim_person"] == GoldBuildResult("dim_person", 4, NOW)
    assert results["dim_person2"].rows == 5
    assert results["fact_orders"].rows == 5


def test_build_all_only_filter(gw):
    results = build_all(gw, MODEL, now=NOW, only="dim_person")
    assert [r.view_name for r in results] == ["dim_person"]


def test_inner_join_drops_orphans_and_left_join_keeps_them(tmp_path):
    wh = Warehouse(tmp_path / "wh")
    init_warehouse(wh, MODEL)
    # An orphaned star row, written behind the loader's back.
    wh.append_rows(SILVER, "star_person_order", [{
        "load_source": 4,
        "capture_timestamp": utc(2024, 1, 1),
        "load_timestamp": NOW,
        "person_key": "ghost",
        "placed_at": utc(2024, 1, 1),
        "order_id": "gx",
        "amount": Decimal("1.00"),
    }])
    build_all(wh, MODEL, now=NOW, only="fact_orders_strict")
    build_all(wh, MODEL, now=NOW, only="fact_orders_loose")
    assert wh.read_rows(GOLD, "fact_orders_strict") == []
    assert wh.read_rows(GOLD, "fact_orders_loose") == [
        {"order_id": "gx", "full_name": None}]


def test_building_over_a_missing_silver_table_is_an_error(tmp_path):
    wh = Warehouse(tmp_path / "wh")  # never initialized
    with pytest.raises(GoldBuildError, match="run init and load-silver first"):
        build_all(wh, MODEL, now=NOW)


def test_fact_refuses_to_build_before_its_dimension(tmp_path):
    wh = Warehouse(tmp_path / "wh")
    init_warehouse(wh, MODEL)
    with pytest.raises(GoldBuildError, match="dim_person2 is not built yet"):
        build_view(wh, MODEL, MODEL.view("fact_orders"), now=NOW)
