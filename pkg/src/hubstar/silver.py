"""Silver loads: default rows, incremental hub merges, and star loading.

The merge semantics: select bronze rows above the table's capture high-water
mark, rank candidate versions per business key, then insert new keys and
update changed descriptives under null-safe comparison — unchanged
re-deliveries touch nothing, which keeps repeated loads byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from decimal import Decimal

from . import expr as ex
from .errors import LoadError
from .keygen import compute_hub_key, next_system_key, sha256_hex
from .model import (
    FkResolution,
    HubDef,
    HubMapping,
    HubParticipant,
    ItemKeyRule,
    ItemParticipant,
    ModelSpec,
    StarDef,
    StarMapping,
    TimeParticipant,
    resolve_load_order,
)
from .storage import Record, Warehouse
from .tables import bronze_manifest, hub_manifest, item_key_type, star_manifest
from .values import EPOCH, coerce_scalar, value_to_string, values_equal

DEFAULT_KEY = "-1"


@dataclass(frozen=True)
class LoadResult:
    table: str
    source: str
    scanned: int
    inserted: int
    updated: int
    unchanged_skipped: int
    new_hwm: datetime


def null_safe_distinct(a, b) -> bool:
    """IS DISTINCT FROM: false iff both null or both equal."""
    return not values_equal(a, b)


def type_neutral(ctype: str):
    """Definition-2 stand-in for a value that must not be null."""
    if ctype == "string":
        return "null"
    if ctype == "integer":
        return -1
    if ctype == "decimal":
        return Decimal(-1)
    if ctype == "boolean":
        return False
    return EPOCH  # timestamp


def default_row(spec: ModelSpec, hub: HubDef) -> Record:
    row: Record = {
        "load_source": 0,
        "capture_timestamp": EPOCH,
        "load_timestamp": EPOCH,
        "initial_capture_timestamp": EPOCH,
    }
    if hub.has_delete_flag:
        row["delete_flag"] = 0
    row[hub.key_column] = DEFAULT_KEY
    for bk in hub.business_keys:
        row[bk.name] = type_neutral(bk.type)
    for desc in hub.descriptives:
        if desc.fk_hub is not None:
            row[desc.name] = DEFAULT_KEY
        elif desc.nullable:
            row[desc.name] = None
        else:
            row[desc.name] = type_neutral(desc.type)
    return row


def init_hub(warehouse: Warehouse, spec: ModelSpec, hub: HubDef):
    """Seed the hub with its default row; refuses to run twice."""
    silver = spec.schema_names["silver"]
    for row in warehouse.read_rows(silver, hub.table_name):
        if row.get(hub.key_column) == DEFAULT_KEY:
            raise LoadError(f"{hub.table_name}: default row already present")
    warehouse.append_rows(silver, hub.table_name, [default_row(spec, hub)])


def init_warehouse(warehouse: Warehouse, spec: ModelSpec) -> list[str]:
    """Create every bronze and silver table and seed hub default rows.

    Returns the qualified names of the tables created.
    """
    created = []
    for source in spec.sources:
        manifest = bronze_manifest(spec, source)
        if not warehouse.table_exists(manifest.schema, manifest.table):
            warehouse.create_table(manifest)
            created.append(f"{manifest.schema}.{manifest.table}")
    for hub in spec.hubs:
        manifest = hub_manifest(spec, hub)
        warehouse.create_table(manifest)
        init_hub(warehouse, spec, hub)
        created.append(f"{manifest.schema}.{manifest.table}")
    for star in spec.stars:
        manifest = star_manifest(spec, star)
        warehouse.create_table(manifest)
        created.append(f"{manifest.schema}.{manifest.table}")
    return created


# -- mapping evaluation (shared with the conformance oracle) -------------------


def resolve_fk(warehouse: Warehouse | None, spec: ModelSpec, res: FkResolution,
               record: Record, load_source: int,
               item: dict | None = None, item_key=None) -> str:
    """Foreign-key column value: the referenced hub's key computed from
    source-side business-key expressions, or "-1" when any of them is null."""
    target = spec.hub(res.hub)
    ctx = ex.EvalContext(record=record, load_source=load_source,
                         item=item, item_key=item_key)
    values = [ex.evaluate(arg, ctx) for arg in res.args]
    if any(v is None for v in values):
        return DEFAULT_KEY
    bk_record = {}
    for bk, value in zip(target.business_keys, values):
        try:
            bk_record[bk.name] = coerce_scalar(value, bk.type)
        except ValueError as exc:
            raise LoadError(f"fk to {res.hub}: {exc}") from exc
    effective_source = res.source_override if res.source_override is not None else load_source
    if target.key_type == "computed":
        return compute_hub_key(target.key_formula, bk_record, effective_source)
    # System-generated keys cannot be recomputed; find the row by business key.
    if warehouse is None:
        raise LoadError(f"fk to {res.hub}: system-generated keys need warehouse access")
    silver = spec.schema_names["silver"]
    for row in warehouse.read_rows(silver, target.table_name):
        if all(values_equal(row.get(bk.name), bk_record[bk.name])
               for bk in target.business_keys):
            if target.bk_scope == "local" and row.get("load_source") != effective_source:
                continue
            return row[target.key_column]
    return DEFAULT_KEY


def evaluate_hub_mapping(warehouse: Warehouse | None, spec: ModelSpec, hub: HubDef,
                         mapping: HubMapping, bronze_row: Record) -> Record:
    """Business keys plus descriptives (FKs resolved) for one bronze row."""
    source = spec.source(mapping.source)
    load_source = source.load_source_id
    ctx = ex.EvalContext(record=bronze_row, load_source=load_source)
    payload: Record = {}
    for bk in hub.business_keys:
        value = ex.evaluate(mapping.column_exprs[bk.name], ctx)
        payload[bk.name] = _coerce_mapped(value, bk.type, bk.name)
    for desc in hub.descriptives:
        if desc.fk_hub is not None:
            payload[desc.name] = resolve_fk(warehouse, spec, mapping.fk_resolutions[desc.name],
                                            bronze_row, load_source)
        elif desc.name in mapping.column_exprs:
            value = ex.evaluate(mapping.column_exprs[desc.name], ctx)
            payload[desc.name] = _coerce_mapped(value, desc.type, desc.name)
        else:
            payload[desc.name] = None
    if hub.has_delete_flag:
        payload["delete_flag"] = bronze_row.get("delete_flag") or 0
    return payload


def _coerce_mapped(value, ctype: str, column: str):
    if value is None:
        return None
    try:
        return coerce_scalar(value, ctype)
    except ValueError as exc:
        raise LoadError(f"column {column}: {exc}") from exc


def rank_survivors(staged: list[tuple[int, Record, Record]],
                   dedup_order: tuple[tuple[str, str], ...],
                   partition_of) -> list[tuple[int, Record, Record]]:
    """rn = 1 per partition: order by dedup_order, then capture_timestamp
    descending, then bronze position; returned in bronze order."""

    def null_low(value):
        return (value is not None, value)

    rows = sorted(staged, key=lambda t: t[0])
    rows.sort(key=lambda t: t[1]["capture_timestamp"], reverse=True)
    for column, direction in reversed(dedup_order):
        rows.sort(key=lambda t: null_low(t[1].get(column)), reverse=direction == "desc")
    seen: set = set()
    survivors = []
    for entry in rows:
        key = partition_of(entry)
        if key not in seen:
            seen.add(key)
            survivors.append(entry)
    survivors.sort(key=lambda t: t[0])
    return survivors


def _partition_value(value):
    if isinstance(value, Decimal):
        return str(value.normalize())
    if isinstance(value, int) and not isinstance(value, bool):
        return str(Decimal(value).normalize())
    return value


def load_hub(warehouse: Warehouse, spec: ModelSpec, hub: HubDef,
             mapping: HubMapping, now: datetime) -> LoadResult:
    silver = spec.schema_names["silver"]
    bronze = spec.schema_names["bronze"]
    source = spec.source(mapping.source)
    hwm = warehouse.max_capture_timestamp(silver, hub.table_name)

    bronze_rows: list[Record] = []
    if warehouse.table_exists(bronze, mapping.source):
        bronze_rows = [r for r in warehouse.read_rows(bronze, mapping.source)
                       if r["capture_timestamp"] > hwm]
    staged = [(i, row, evaluate_hub_mapping(warehouse, spec, hub, mapping, row))
              for i, row in enumerate(bronze_rows)]

    def partition(entry):
        _i, _row, payload = entry
        return tuple(_partition_value(payload[name]) for name in hub.business_key_names)

    survivors = rank_survivors(staged, mapping.dedup_order, partition)

    existing = warehouse.read_rows(silver, hub.table_name)
    compare_columns = [d.name for d in hub.descriptives]
    if hub.has_delete_flag:
        compare_columns.append("delete_flag")

    if hub.key_type == "computed":
        index = {row[hub.key_column]: row for row in existing}
    else:
        index = {tuple(_partition_value(row[name]) for name in hub.business_key_names): row
                 for row in existing}

    inserted = updated = unchanged = 0
    writes: list[Record] = []
    for _i, bronze_row, payload in survivors:
        for name in hub.business_key_names:
            if payload[name] is None:
                raise LoadError(f"{hub.table_name}: business key {name} is null "
                                f"in {mapping.source} row")
        if hub.key_type == "computed":
            key = compute_hub_key(hub.key_formula, payload, source.load_source_id)
            target = index.get(key)
        else:
            bk = tuple(_partition_value(payload[name]) for name in hub.business_key_names)
            target = index.get(bk)
            key = target[hub.key_column] if target is not None else None
        if target is None:
            if key is None:
                key = next_system_key(warehouse.counter_path(silver, hub.table_name))
            row: Record = {
                "load_source": source.load_source_id,
                "capture_timestamp": bronze_row["capture_timestamp"],
                "load_timestamp": now,
                "initial_capture_timestamp": bronze_row["capture_timestamp"],
            }
            if hub.has_delete_flag:
                row["delete_flag"] = payload["delete_flag"]
            row[hub.key_column] = key
            for name in hub.business_key_names:
                row[name] = payload[name]
            for desc in hub.descriptives:
                row[desc.name] = payload[desc.name]
            writes.append(row)
            inserted += 1
        elif any(null_safe_distinct(target.get(c), payload[c]) for c in compare_columns):
            row = dict(target)
            for c in compare_columns:
                row[c] = payload[c]
            row["capture_timestamp"] = bronze_row["capture_timestamp"]
            row["load_timestamp"] = now
            writes.append(row)
            updated += 1
        else:
            unchanged += 1

    warehouse.upsert_rows(silver, hub.table_name, writes)
    new_hwm = warehouse.max_capture_timestamp(silver, hub.table_name)
    return LoadResult(table=f"{silver}.{hub.table_name}", source=mapping.source,
                      scanned=len(bronze_rows), inserted=inserted, updated=updated,
                      unchanged_skipped=unchanged, new_hwm=new_hwm)


# -- stars ---------------------------------------------------------------------


def mapping_collection(star: StarDef, mapping: StarMapping) -> ItemKeyRule | None:
    """The item rule with the mapping's collection column filled in."""
    item = star.item_participant
    if item is None or mapping.explode_column is None:
        return None
    rule = item.rule
    return ItemKeyRule(rule.mode, mapping.explode_column, rule.sequence_field,
                       rule.attributes, rule.hashed)


def explode_collection(parent: Record, rule: ItemKeyRule) -> list[tuple[dict, object]]:
    """(item, item key) pairs for one parent row; empty array yields nothing."""
    items = parent.get(rule.collection_column) or []
    out: list[tuple[dict, object]] = []
    if rule.mode == "positional":
        for i, item in enumerate(items):
            out.append((item, i + 1))
        return out
    if rule.mode == "explicit_sequence":
        seen = set()
        for item in items:
            seq = item.get(rule.sequence_field)
            if seq is None:
                raise LoadError(f"item sequence field {rule.sequence_field} is null")
            if seq in seen:
                raise LoadError(f"duplicate item sequence {seq!r} within one parent")
            seen.add(seq)
            out.append((item, seq))
        return out
    for item in items:  # concat_of_attributes
        parts = [value_to_string(item[a]) for a in rule.attributes if item.get(a) is not None]
        key = "#".join(parts)
        if rule.hashed:
            key = sha256_hex(key)
        out.append((item, key))
    return out


def evaluate_star_mapping(warehouse: Warehouse | None, spec: ModelSpec, star: StarDef,
                          mapping: StarMapping, bronze_row: Record) -> list[Record]:
    """All star-row payloads one bronze row produces (several when exploding)."""
    source = spec.source(mapping.source)
    load_source = source.load_source_id
    rule = mapping_collection(star, mapping)
    if rule is not None:
        pairs = explode_collection(bronze_row, rule)
    else:
        pairs = [(None, None)]

    out: list[Record] = []
    for item, item_key in pairs:
        ctx = ex.EvalContext(record=bronze_row, load_source=load_source,
                             item=item, item_key=item_key)
        payload: Record = {}
        for p in star.participants:
            if isinstance(p, HubParticipant):
                payload[p.column] = resolve_fk(warehouse, spec, mapping.fk_resolutions[p.column],
                                               bronze_row, load_source, item, item_key)
            elif isinstance(p, TimeParticipant):
                value = ex.evaluate(mapping.column_exprs[p.column], ctx)
                payload[p.column] = _coerce_mapped(value, "timestamp", p.column)
            elif isinstance(p, ItemParticipant):
                payload[p.column] = _coerce_mapped(item_key, item_key_type(p.rule), p.column)
        for desc in star.descriptives:
            if desc.fk_hub is not None:
                payload[desc.name] = resolve_fk(warehouse, spec, mapping.fk_resolutions[desc.name],
                                                bronze_row, load_source, item, item_key)
            elif desc.name in mapping.column_exprs:
                value = ex.evaluate(mapping.column_exprs[desc.name], ctx)
                payload[desc.name] = _coerce_mapped(value, desc.type, desc.name)
            else:
                payload[desc.name] = None
        if star.has_delete_flag:
            payload["delete_flag"] = bronze_row.get("delete_flag") or 0
        out.append(payload)
    return out


def star_hwm(warehouse: Warehouse, spec: ModelSpec, star: StarDef) -> datetime:
    """Stars have no default rows: an empty star means load everything."""
    rows = warehouse.read_rows(spec.schema_names["silver"], star.table_name)
    return max((r["capture_timestamp"] for r in rows), default=EPOCH)


def load_star(warehouse: Warehouse, spec: ModelSpec, star: StarDef,
              mapping: StarMapping, now: datetime) -> LoadResult:
    silver = spec.schema_names["silver"]
    bronze = spec.schema_names["bronze"]
    source = spec.source(mapping.source)
    hwm = star_hwm(warehouse, spec, star)

    bronze_rows: list[Record] = []
    if warehouse.table_exists(bronze, mapping.source):
        bronze_rows = [r for r in warehouse.read_rows(bronze, mapping.source)
                       if r["capture_timestamp"] > hwm]

    staged: list[tuple[Record, Record]] = []  # (bronze row, payload)
    for bronze_row in bronze_rows:
        for payload in evaluate_star_mapping(warehouse, spec, star, mapping, bronze_row):
            staged.append((bronze_row, payload))

    def composite_key(bronze_row: Record, payload: Record) -> tuple:
        parts = []
        for name in star.key_columns:
            value = bronze_row["capture_timestamp"] if name == "capture_timestamp" \
                else payload.get(name)
            if value is None:
                raise LoadError(f"{star.table_name}: composite key column {name} is null")
            parts.append(_partition_value(value))
        return tuple(parts)

    # In-batch duplicates of a full composite key: last by bronze order wins.
    latest: dict[tuple, tuple[Record, Record]] = {}
    for bronze_row, payload in staged:
        latest[composite_key(bronze_row, payload)] = (bronze_row, payload)

    existing = warehouse.read_rows(silver, star.table_name)
    index = {tuple(_partition_value(row[name]) for name in star.key_columns): row
             for row in existing}
    payload_columns = [c for c in (p.column for p in star.participants)
                       if c not in star.key_columns]
    payload_columns += [d.name for d in star.descriptives]
    if star.has_delete_flag:
        payload_columns.append("delete_flag")

    inserted = updated = unchanged = 0
    writes: list[Record] = []
    for key, (bronze_row, payload) in latest.items():
        target = index.get(key)
        if target is None:
            row: Record = {
                "load_source": source.load_source_id,
                "capture_timestamp": bronze_row["capture_timestamp"],
                "load_timestamp": now,
            }
            if star.has_delete_flag:
                row["delete_flag"] = payload["delete_flag"]
            for p in star.participants:
                row[p.column] = payload[p.column]
            for desc in star.descriptives:
                row[desc.name] = payload[desc.name]
            writes.append(row)
            inserted += 1
        elif any(null_safe_distinct(target.get(c), payload[c]) for c in payload_columns):
            row = dict(target)
            for c in payload_columns:
                row[c] = payload[c]
            row["capture_timestamp"] = bronze_row["capture_timestamp"]
            row["load_timestamp"] = now
            writes.append(row)
            updated += 1
        else:
            unchanged += 1

    warehouse.upsert_rows(silver, star.table_name, writes)
    new_hwm = star_hwm(warehouse, spec, star)
    return LoadResult(table=f"{silver}.{star.table_name}", source=mapping.source,
                      scanned=len(staged), inserted=inserted, updated=updated,
                      unchanged_skipped=unchanged, new_hwm=new_hwm)


def load_all(warehouse: Warehouse, spec: ModelSpec, now: datetime,
             only: str | None = None) -> list[LoadResult]:
    """Load every hub and star in dependency order (or one, by model or
    table name)."""
    results = []
    for name in resolve_load_order(spec):
        hub = spec.hub(name)
        star = spec.star(name)
        element = hub if hub is not None else star
        if only is not None and only not in (name, element.table_name):
            continue
        if hub is not None:
            for mapping in hub.source_mappings:
                results.append(load_hub(warehouse, spec, hub, mapping, now))
        else:
            for mapping in star.source_mappings:
                results.append(load_star(warehouse, spec, star, mapping, now))
    return results
