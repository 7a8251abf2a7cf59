"""Gold materialization: SCD Type 1 and Type 2 dimensions and fact tables.

Every build overwrites its target table from current silver content, so
`build-gold` doubles as refresh; building twice over unchanged silver
leaves the files byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

from .errors import GoldBuildError
from .model import (
    CurrentStarJoin,
    GoldViewDef,
    HubJoin,
    ModelSpec,
)
from .storage import Record, Warehouse
from .tables import gold_manifest, hub_manifest, star_manifest
from .values import value_to_string, values_equal

SCD2_DELIMITER = "#"


@dataclass(frozen=True)
class GoldBuildResult:
    view_name: str
    rows: int
    built_at: datetime


def top_per_partition(rows: list[Record], partition: tuple[str, ...],
                      order: tuple[tuple[str, str], ...]) -> list[Record]:
    def null_low(value):
        return (value is not None, value)

    ranked = list(rows)
    for column, direction in reversed(order):
        ranked.sort(key=lambda r: null_low(r.get(column)), reverse=direction == "desc")
    seen: set = set()
    out = []
    for row in ranked:
        key = tuple(value_to_string(row[c]) if row.get(c) is not None else None
                    for c in partition)
        if key not in seen:
            seen.add(key)
            out.append(row)
    return out


def current_rows(rows: list[Record], partition: tuple[str, ...],
                 order: tuple[tuple[str, str], ...]) -> list[Record]:
    """Rank, then filter: the top row per partition, dropped entirely when
    that top row is flagged deleted — a deleted latest version removes the
    partition rather than exposing an older one."""
    return [row for row in top_per_partition(rows, partition, order)
            if not row.get("delete_flag")]


class _ViewContext:
    """Resolves column references across the tables a view reads."""

    def __init__(self, warehouse: Warehouse, spec: ModelSpec, view: GoldViewDef):
        self.warehouse = warehouse
        self.spec = spec
        self.view = view
        self.columns: dict[str, tuple[str, ...]] = {}
        if view.base_kind == "hub":
            self.columns[view.base] = hub_manifest(spec, spec.hub(view.base)).column_names
        else:
            self.columns[view.base] = star_manifest(spec, spec.star(view.base)).column_names
        for join in view.joins:
            if isinstance(join, HubJoin):
                self.columns[join.hub] = hub_manifest(spec, spec.hub(join.hub)).column_names
            else:
                self.columns[join.star] = star_manifest(spec, spec.star(join.star)).column_names
        if view.versions is not None:
            star = spec.star(view.versions.star)
            self.columns[view.versions.star] = star_manifest(spec, star).column_names
        if view.temporal is not None:
            dim = spec.view(view.temporal.dim)
            self.columns[dim.name] = gold_manifest(spec, dim).column_names

    def resolve(self, ctx: dict[str, Record | None], ref) -> object:
        if ref.table is not None:
            row = ctx.get(ref.table)
            return None if row is None else row.get(ref.column)
        for name, cols in self.columns.items():
            if ref.column in cols:
                row = ctx.get(name)
                return None if row is None else row.get(ref.column)
        raise GoldBuildError(f"{self.view.name}: no table exposes column {ref.column!r}")


def _silver_rows(warehouse: Warehouse, spec: ModelSpec, table: str) -> list[Record]:
    silver = spec.schema_names["silver"]
    if not warehouse.table_exists(silver, table):
        raise GoldBuildError(f"silver table {silver}.{table} is missing; "
                             "run init and load-silver first")
    return warehouse.read_rows(silver, table)


def _apply_joins(warehouse: Warehouse, spec: ModelSpec, view: GoldViewDef,
                 contexts: list[dict[str, Record | None]]) -> list[dict[str, Record | None]]:
    vc_base_hub = spec.hub(view.base) if view.base_kind == "hub" else None
    for join in view.joins:
        if isinstance(join, HubJoin):
            hub = spec.hub(join.hub)
            rows = _silver_rows(warehouse, spec, hub.table_name)
            index = {row[hub.key_column]: row for row in rows}
            joined = []
            for ctx in contexts:
                value = _first_value(ctx, join.on_column)
                match = index.get(value) if value is not None else None
                if match is None and join.how == "inner":
                    continue
                ctx = dict(ctx)
                ctx[join.hub] = match
                joined.append(ctx)
            contexts = joined
        elif isinstance(join, CurrentStarJoin):
            if vc_base_hub is None:
                raise GoldBuildError(f"{view.name}: join_current requires a hub base")
            star = spec.star(join.star)
            rows = current_rows(_silver_rows(warehouse, spec, star.table_name),
                                join.partition_by, join.order_by)
            contexts = _left_join_star(contexts, rows, join.on_column, join.star,
                                       vc_base_hub.key_column)
    return contexts


def _first_value(ctx: dict[str, Record | None], column: str):
    for row in ctx.values():
        if row is not None and column in row:
            return row[column]
    return None


def _left_join_star(contexts, star_rows, on_column, star_name, base_key_column):
    index: dict[object, list[Record]] = {}
    for row in star_rows:
        index.setdefault(row.get(on_column), []).append(row)
    joined = []
    for ctx in contexts:
        value = _first_value(ctx, base_key_column)
        matches = index.get(value, []) if value is not None else []
        if not matches:
            ctx = dict(ctx)
            ctx[star_name] = None
            joined.append(ctx)
        else:
            for match in matches:
                fanned = dict(ctx)
                fanned[star_name] = match
                joined.append(fanned)
    return joined


def _project(vc: _ViewContext, view: GoldViewDef,
             contexts: list[dict[str, Record | None]]) -> list[Record]:
    out = []
    for ctx in contexts:
        row: Record = {}
        for output in view.outputs:
            if output.ref is None:
                parts = []
                for component in view.scd2_key:
                    value = vc.resolve(ctx, component)
                    if value is not None:
                        parts.append(value_to_string(value))
                row[output.name] = SCD2_DELIMITER.join(parts)
            else:
                row[output.name] = vc.resolve(ctx, output.ref)
        out.append(row)
    return out


def build_scd1_dim(warehouse: Warehouse, spec: ModelSpec, view: GoldViewDef,
                   now: datetime) -> GoldBuildResult:
    vc = _ViewContext(warehouse, spec, view)
    base_hub = spec.hub(view.base)
    contexts: list[dict[str, Record | None]] = [
        {view.base: row} for row in _silver_rows(warehouse, spec, base_hub.table_name)]
    contexts = _apply_joins(warehouse, spec, view, contexts)
    rows = _project(vc, view, contexts)
    warehouse.replace_table(gold_manifest(spec, view), rows)
    return GoldBuildResult(view.name, len(rows), now)


def build_scd2_dim(warehouse: Warehouse, spec: ModelSpec, view: GoldViewDef,
                   now: datetime) -> GoldBuildResult:
    vc = _ViewContext(warehouse, spec, view)
    base_hub = spec.hub(view.base)
    contexts: list[dict[str, Record | None]] = [
        {view.base: row} for row in _silver_rows(warehouse, spec, base_hub.table_name)]
    contexts = _apply_joins(warehouse, spec, view, contexts)
    versions = view.versions
    star = spec.star(versions.star)
    retained = current_rows(_silver_rows(warehouse, spec, star.table_name),
                            versions.partition_by, versions.order_by)
    contexts = _left_join_star(contexts, retained, versions.on_column, versions.star,
                               base_hub.key_column)
    rows = _project(vc, view, contexts)
    warehouse.replace_table(gold_manifest(spec, view), rows)
    return GoldBuildResult(view.name, len(rows), now)


def build_fact(warehouse: Warehouse, spec: ModelSpec, view: GoldViewDef,
               now: datetime) -> GoldBuildResult:
    vc = _ViewContext(warehouse, spec, view)
    base_star = spec.star(view.base)
    contexts: list[dict[str, Record | None]] = [
        {view.base: row} for row in _silver_rows(warehouse, spec, base_star.table_name)]
    contexts = _apply_joins(warehouse, spec, view, contexts)
    if view.temporal is not None:
        contexts = _temporal_join(warehouse, spec, view, vc, contexts)
    rows = _project(vc, view, contexts)
    warehouse.replace_table(gold_manifest(spec, view), rows)
    return GoldBuildResult(view.name, len(rows), now)


def _temporal_join(warehouse: Warehouse, spec: ModelSpec, view: GoldViewDef,
                   vc: _ViewContext, contexts):
    temporal = view.temporal
    dim = spec.view(temporal.dim)
    gold_schema = spec.schema_names["gold"]
    if not warehouse.table_exists(gold_schema, dim.table_name):
        raise GoldBuildError(f"{view.name}: referenced dimension {dim.name} "
                             "is not built yet")
    dim_rows = warehouse.read_rows(gold_schema, dim.table_name)
    dim_key_column = spec.hub(dim.base).key_column

    joined = []
    for ctx in contexts:
        key = vc.resolve(ctx, temporal.key_ref)
        at = vc.resolve(ctx, temporal.time_ref)
        matches = []
        if key is not None and at is not None:
            for row in dim_rows:
                if not values_equal(row.get(dim_key_column), key):
                    continue
                valid_from = row.get("valid_from")
                if valid_from is None or at < valid_from:
                    continue
                valid_to = row.get("valid_to")
                if valid_to is not None and at > valid_to:
                    continue  # null valid_to is the open-ended current version
                matches.append(row)
        if not matches:
            ctx = dict(ctx)
            ctx[dim.name] = None
            joined.append(ctx)
        else:
            for match in matches:
                fanned = dict(ctx)
                fanned[dim.name] = match
                joined.append(fanned)
    return joined


def build_view(warehouse: Warehouse, spec: ModelSpec, view: GoldViewDef,
               now: datetime) -> GoldBuildResult:
    if view.kind == "scd1_dim":
        return build_scd1_dim(warehouse, spec, view, now)
    if view.kind == "scd2_dim":
        return build_scd2_dim(warehouse, spec, view, now)
    return build_fact(warehouse, spec, view, now)


def build_all(warehouse: Warehouse, spec: ModelSpec, now: datetime,
              only: str | None = None) -> list[GoldBuildResult]:
    """Build every view, dimensions before the facts that reference them."""
    ordered = [v for v in spec.gold_views if v.kind != "fact"]
    ordered += [v for v in spec.gold_views if v.kind == "fact"]
    results = []
    for view in ordered:
        if only is not None and view.name != only:
            continue
        results.append(build_view(warehouse, spec, view, now))
    return results
