"""Physical table layouts derived from model definitions.

Column order is part of the contract: metadata first, then keys, then
descriptive payload, matching what the loaders emit and what a rebuilt
warehouse must reproduce byte for byte.
"""

from __future__ import annotations

from .errors import HubStarError
from .model import (
    CollectionColumn,
    CurrentStarJoin,
    GoldViewDef,
    HubDef,
    HubJoin,
    ItemKeyRule,
    ModelSpec,
    SourceDef,
    StarDef,
)
from .storage import ColumnSpec, ForeignKeySpec, TableManifest


def bronze_manifest(spec: ModelSpec, source: SourceDef) -> TableManifest:
    columns = [
        ColumnSpec("capture_timestamp", "timestamp", nullable=False),
        ColumnSpec("load_timestamp", "timestamp", nullable=False),
        ColumnSpec("extract_path", "string", nullable=False),
    ]
    if source.delete_flag_column is not None:
        columns.append(ColumnSpec("delete_flag", "integer", nullable=False))
    for col in source.columns:
        if isinstance(col, CollectionColumn):
            columns.append(ColumnSpec(col.name, "collection",
                                      fields=tuple((f.name, f.type) for f in col.fields)))
        else:
            columns.append(ColumnSpec(col.name, col.type))
    return TableManifest(schema=spec.schema_names["bronze"], table=source.name,
                         columns=tuple(columns))


def hub_manifest(spec: ModelSpec, hub: HubDef) -> TableManifest:
    silver = spec.schema_names["silver"]
    columns = [
        ColumnSpec("load_source", "integer", nullable=False),
        ColumnSpec("capture_timestamp", "timestamp", nullable=False),
        ColumnSpec("load_timestamp", "timestamp", nullable=False),
        ColumnSpec("initial_capture_timestamp", "timestamp", nullable=False),
    ]
    if hub.has_delete_flag:
        columns.append(ColumnSpec("delete_flag", "integer", nullable=False))
    columns.append(ColumnSpec(hub.key_column, "string", nullable=False))
    for bk in hub.business_keys:
        columns.append(ColumnSpec(bk.name, bk.type, nullable=False))
    foreign_keys = []
    for desc in hub.descriptives:
        if desc.fk_hub is not None:
            columns.append(ColumnSpec(desc.name, "string", nullable=False))
            target = spec.hub(desc.fk_hub)
            foreign_keys.append(ForeignKeySpec(
                (desc.name,), silver, target.table_name, (target.key_column,)))
        else:
            columns.append(ColumnSpec(desc.name, desc.type, nullable=desc.nullable))
    bk_unique = hub.business_key_names
    if hub.bk_scope == "local":
        bk_unique = ("load_source",) + bk_unique
    return TableManifest(
        schema=silver,
        table=hub.table_name,
        columns=tuple(columns),
        primary_key=(hub.key_column,),
        unique=(bk_unique,),
        foreign_keys=tuple(foreign_keys),
    )


def item_key_type(rule: ItemKeyRule) -> str:
    return "string" if rule.mode == "concat_of_attributes" else "integer"


def star_manifest(spec: ModelSpec, star: StarDef) -> TableManifest:
    from .model import HubParticipant, ItemParticipant, TimeParticipant

    silver = spec.schema_names["silver"]
    columns = [
        ColumnSpec("load_source", "integer", nullable=False),
        ColumnSpec("capture_timestamp", "timestamp", nullable=False),
        ColumnSpec("load_timestamp", "timestamp", nullable=False),
    ]
    if star.has_delete_flag:
        columns.append(ColumnSpec("delete_flag", "integer", nullable=False))
    foreign_keys = []
    keyed = set(star.key_columns)
    for p in star.participants:
        if isinstance(p, HubParticipant):
            columns.append(ColumnSpec(p.column, "string", nullable=False))
            target = spec.hub(p.hub)
            foreign_keys.append(ForeignKeySpec(
                (p.column,), silver, target.table_name, (target.key_column,)))
        elif isinstance(p, TimeParticipant):
            columns.append(ColumnSpec(p.column, "timestamp", nullable=p.column not in keyed))
        elif isinstance(p, ItemParticipant):
            columns.append(ColumnSpec(p.column, item_key_type(p.rule), nullable=False))
    for desc in star.descriptives:
        if desc.fk_hub is not None:
            columns.append(ColumnSpec(desc.name, "string", nullable=False))
            target = spec.hub(desc.fk_hub)
            foreign_keys.append(ForeignKeySpec(
                (desc.name,), silver, target.table_name, (target.key_column,)))
        else:
            columns.append(ColumnSpec(desc.name, desc.type, nullable=desc.nullable))
    return TableManifest(
        schema=silver,
        table=star.table_name,
        columns=tuple(columns),
        primary_key=tuple(star.key_columns),
        foreign_keys=tuple(foreign_keys),
    )


def _hub_types(spec: ModelSpec, hub: HubDef) -> dict[str, tuple[str, bool]]:
    types: dict[str, tuple[str, bool]] = {
        "load_source": ("integer", False),
        "capture_timestamp": ("timestamp", False),
        "load_timestamp": ("timestamp", False),
        "initial_capture_timestamp": ("timestamp", False),
    }
    if hub.has_delete_flag:
        types["delete_flag"] = ("integer", False)
    types[hub.key_column] = ("string", False)
    for bk in hub.business_keys:
        types[bk.name] = (bk.type, False)
    for desc in hub.descriptives:
        if desc.fk_hub is not None:
            types[desc.name] = ("string", False)
        else:
            types[desc.name] = (desc.type, desc.nullable)
    return types


def _star_types(spec: ModelSpec, star: StarDef) -> dict[str, tuple[str, bool]]:
    manifest = star_manifest(spec, star)
    return {c.name: (c.type, c.nullable) for c in manifest.columns}


def _view_tables(spec: ModelSpec, view: GoldViewDef) -> dict[str, dict[str, tuple[str, bool]]]:
    """Column types per model element the view reads, base first. Joined
    tables get every column marked nullable (left-join semantics); inner
    hub joins keep their declared nullability."""
    tables: dict[str, dict[str, tuple[str, bool]]] = {}

    def add(name: str, types: dict[str, tuple[str, bool]], force_nullable: bool):
        if force_nullable:
            types = {c: (t, True) for c, (t, _n) in types.items()}
        tables[name] = types

    if view.base_kind == "hub":
        add(view.base, _hub_types(spec, spec.hub(view.base)), False)
    else:
        add(view.base, _star_types(spec, spec.star(view.base)), False)
    for join in view.joins:
        if isinstance(join, HubJoin):
            add(join.hub, _hub_types(spec, spec.hub(join.hub)), join.how == "left")
        elif isinstance(join, CurrentStarJoin):
            add(join.star, _star_types(spec, spec.star(join.star)), True)
    if view.versions is not None:
        add(view.versions.star, _star_types(spec, spec.star(view.versions.star)), True)
    if view.temporal is not None:
        dim = spec.view(view.temporal.dim)
        dim_manifest = gold_manifest(spec, dim)
        add(dim.name, {c.name: (c.type, True) for c in dim_manifest.columns}, True)
    return tables


def resolve_output_type(spec: ModelSpec, view: GoldViewDef, name: str) -> tuple[str, bool]:
    tables = _view_tables(spec, view)
    out = next((o for o in view.outputs if o.name == name), None)
    if out is None:
        raise HubStarError(f"view {view.name} has no output {name!r}")
    if out.ref is None:
        return ("string", False)  # the concatenated scd2 key
    if out.ref.table is not None:
        types = tables.get(out.ref.table, {})
        if out.ref.column in types:
            return types[out.ref.column]
    else:
        for types in tables.values():
            if out.ref.column in types:
                return types[out.ref.column]
    raise HubStarError(f"view {view.name}: cannot resolve output {name!r}")


def gold_manifest(spec: ModelSpec, view: GoldViewDef) -> TableManifest:
    columns = []
    for out in view.outputs:
        ctype, nullable = resolve_output_type(spec, view, out.name)
        if view.kind == "scd2_dim" and out.name == "valid_to":
            nullable = True  # the open current version
        columns.append(ColumnSpec(out.name, ctype, nullable=nullable))
    return TableManifest(schema=spec.schema_names["gold"], table=view.table_name,
                         columns=tuple(columns))
