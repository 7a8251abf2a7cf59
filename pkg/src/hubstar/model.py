"""In-memory model of sources, hubs, stars, and gold views, plus the
structural validator and the dependency-ordered load plan.

All definition objects are immutable after construction and safe to share
across concurrent readers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import expr as ex
from .errors import HubStarError

HUB_METADATA = ("load_source", "capture_timestamp", "load_timestamp", "initial_capture_timestamp")
STAR_METADATA = ("load_source", "capture_timestamp", "load_timestamp")
BRONZE_METADATA = ("capture_timestamp", "load_timestamp", "extract_path")
RESERVED_COLUMNS = frozenset(HUB_METADATA) | {"delete_flag", "extract_path"}

DEFAULT_HUB_KEY = "-1"
SYSTEM_LOAD_SOURCE = 0

LAYERS = ("bronze", "silver", "gold")


class ModelError(HubStarError):
    """Unsatisfiable model-level request (e.g. cyclic load order)."""


@dataclass(frozen=True)
class ColumnDef:
    name: str
    type: str


@dataclass(frozen=True)
class CollectionColumn:
    """Array-of-structs source column; bronze stores it nested."""

    name: str
    fields: tuple[ColumnDef, ...]


@dataclass(frozen=True)
class CaptureSource:
    kind: str  # cdc_column | last_modified_column | file_modification_time | pipeline_now
    column: str | None = None


@dataclass(frozen=True)
class SourceDef:
    name: str
    load_source_id: int
    input_format: str  # csv | ndjson
    columns: tuple[ColumnDef | CollectionColumn, ...]
    capture_rule: tuple[CaptureSource, ...]
    delete_flag_column: str | None = None

    def column(self, name: str):
        for col in self.columns:
            if col.name == name:
                return col
        return None

    @property
    def scalar_columns(self) -> tuple[ColumnDef, ...]:
        return tuple(c for c in self.columns if isinstance(c, ColumnDef))


@dataclass(frozen=True)
class KeyFormula:
    """Recipe for a computed hub key; delimiter comes from its concat, if any."""

    expression: ex.Expr
    delimiter: str = "#"

    @staticmethod
    def from_expression(expression: ex.Expr) -> "KeyFormula":
        delim = ex.first_concat_delimiter(expression)
        return KeyFormula(expression, delim if delim is not None else "#")


@dataclass(frozen=True)
class FkResolution:
    """How a referencing column obtains a hub key: the target hub's formula
    applied to source-side business-key expressions.

    source_override pins load_source() during formula evaluation for
    local-scope targets fed by a different source than the referencing one.
    """

    hub: str
    args: tuple[ex.Expr, ...]
    source_override: int | None = None


@dataclass(frozen=True)
class DescriptiveDef:
    name: str
    type: str = "string"
    nullable: bool = True
    fk_hub: str | None = None


@dataclass(frozen=True)
class HubMapping:
    source: str
    column_exprs: dict[str, ex.Expr] = field(default_factory=dict)
    fk_resolutions: dict[str, FkResolution] = field(default_factory=dict)
    dedup_order: tuple[tuple[str, str], ...] = ()  # (bronze column, asc|desc)


@dataclass(frozen=True)
class StarMapping:
    source: str
    explode_column: str | None = None
    column_exprs: dict[str, ex.Expr] = field(default_factory=dict)
    fk_resolutions: dict[str, FkResolution] = field(default_factory=dict)


@dataclass(frozen=True)
class HubDef:
    name: str
    business_keys: tuple[ColumnDef, ...]
    bk_scope: str  # global | local
    key_type: str  # computed | system_generated
    key_formula: KeyFormula | None = None
    descriptives: tuple[DescriptiveDef, ...] = ()
    has_delete_flag: bool = False
    source_mappings: tuple[HubMapping, ...] = ()

    @property
    def key_column(self) -> str:
        return f"{self.name}_key"

    @property
    def table_name(self) -> str:
        return f"hub_{self.name}"

    @property
    def business_key_names(self) -> tuple[str, ...]:
        return tuple(bk.name for bk in self.business_keys)


@dataclass(frozen=True)
class ItemKeyRule:
    mode: str  # positional | explicit_sequence | concat_of_attributes
    collection_column: str | None = None
    sequence_field: str | None = None
    attributes: tuple[str, ...] = ()
    hashed: bool = False


@dataclass(frozen=True)
class HubParticipant:
    hub: str
    column: str  # key column inside the star (role name)


@dataclass(frozen=True)
class TimeParticipant:
    column: str


@dataclass(frozen=True)
class ItemParticipant:
    column: str
    rule: ItemKeyRule


Participant = HubParticipant | TimeParticipant | ItemParticipant


@dataclass(frozen=True)
class StarDef:
    name: str
    participants: tuple[Participant, ...]
    key_columns: tuple[str, ...]
    descriptives: tuple[DescriptiveDef, ...] = ()
    has_delete_flag: bool = False
    source_mappings: tuple[StarMapping, ...] = ()

    @property
    def table_name(self) -> str:
        return f"star_{self.name}"

    @property
    def participant_columns(self) -> tuple[str, ...]:
        return tuple(p.column for p in self.participants)

    @property
    def hub_participants(self) -> tuple[HubParticipant, ...]:
        return tuple(p for p in self.participants if isinstance(p, HubParticipant))

    @property
    def item_participant(self) -> ItemParticipant | None:
        for p in self.participants:
            if isinstance(p, ItemParticipant):
                return p
        return None


@dataclass(frozen=True)
class ColumnRef:
    table: str | None  # model element name, or None for "resolve in order"
    column: str


@dataclass(frozen=True)
class OutputColumn:
    name: str
    ref: ColumnRef | None = None  # None means the concatenated scd2 key


@dataclass(frozen=True)
class HubJoin:
    hub: str
    on_column: str  # base-side FK column equated to the hub's key column
    how: str = "inner"  # inner | left


@dataclass(frozen=True)
class CurrentStarJoin:
    """Left join to the rn=1, delete_flag=0 rows of a star (SCD1 source)."""

    star: str
    on_column: str
    partition_by: tuple[str, ...]
    order_by: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class VersionsJoin:
    """Left join to deduplicated star versions (SCD2 source)."""

    star: str
    on_column: str
    partition_by: tuple[str, ...]
    order_by: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class TemporalJoin:
    """Left join a fact to an SCD2 dim: equal key and timestamp inside the
    version's validity interval (null valid_to open-ended)."""

    dim: str
    key_ref: ColumnRef
    time_ref: ColumnRef


@dataclass(frozen=True)
class GoldViewDef:
    name: str
    kind: str  # scd1_dim | scd2_dim | fact
    base_kind: str  # hub | star
    base: str
    joins: tuple[HubJoin | CurrentStarJoin, ...] = ()
    versions: VersionsJoin | None = None
    temporal: TemporalJoin | None = None
    scd2_key: tuple[ColumnRef, ...] = ()
    outputs: tuple[OutputColumn, ...] = ()

    @property
    def table_name(self) -> str:
        return self.name


@dataclass(frozen=True)
class ModelSpec:
    product_name: str
    schema_names: dict[str, str]
    sources: tuple[SourceDef, ...] = ()
    hubs: tuple[HubDef, ...] = ()
    stars: tuple[StarDef, ...] = ()
    gold_views: tuple[GoldViewDef, ...] = ()

    def source(self, name: str) -> SourceDef | None:
        return next((s for s in self.sources if s.name == name), None)

    def hub(self, name: str) -> HubDef | None:
        return next((h for h in self.hubs if h.name == name), None)

    def star(self, name: str) -> StarDef | None:
        return next((s for s in self.stars if s.name == name), None)

    def view(self, name: str) -> GoldViewDef | None:
        return next((v for v in self.gold_views if v.name == name), None)


def default_schema_names(product_name: str) -> dict[str, str]:
    return {
        "bronze": f"raw_{product_name}",
        "silver": f"hs_{product_name}",
        "gold": f"ss_{product_name}",
    }


@dataclass(frozen=True)
class Violation:
    rule: str
    location: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


class _Checker:
    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.violations: list[Violation] = []

    def add(self, rule: str, location: str, message: str):
        self.violations.append(Violation(rule, location, message))


def validate_model(spec: ModelSpec) -> ValidationReport:
    """Audit a model against the structural rules. Violations are data,
    not exceptions; an empty report means the model is well-formed."""
    ck = _Checker(spec)
    _check_names(ck)
    _check_schemas(ck)
    for source in spec.sources:
        _check_source(ck, source)
    for hub in spec.hubs:
        _check_hub(ck, hub)
    _check_fk_cycles(ck)
    for star in spec.stars:
        _check_star(ck, star)
    for view in spec.gold_views:
        _check_gold(ck, view)
    return ValidationReport(tuple(ck.violations))


def _check_names(ck: _Checker):
    seen: dict[str, str] = {}
    groups = (
        ("source", ck.spec.sources),
        ("hub", ck.spec.hubs),
        ("star", ck.spec.stars),
        ("gold", ck.spec.gold_views),
    )
    for kind, defs in groups:
        for d in defs:
            if d.name in seen:
                ck.add("dup_name", f"{kind} {d.name}",
                       f"name {d.name!r} already used by {seen[d.name]}")
            else:
                seen[d.name] = f"{kind} {d.name}"


def _check_schemas(ck: _Checker):
    if set(ck.spec.schema_names) != set(LAYERS):
        ck.add("schema_layers", "schemas",
               f"schema_names must cover exactly {LAYERS}, got {sorted(ck.spec.schema_names)}")


def _check_source(ck: _Checker, source: SourceDef):
    loc = f"source {source.name}"
    if source.load_source_id < 1:
        ck.add("source_load_source_id", loc,
               "load_source must be >= 1 (0 is reserved for the system)")
    names = [c.name for c in source.columns]
    for name in sorted({n for n in names if names.count(n) > 1}):
        ck.add("source_dup_column", loc, f"duplicate column {name!r}")
    reserved = set(BRONZE_METADATA) | {"delete_flag"}
    for name in names:
        if name in reserved:
            ck.add("reserved_column", loc, f"column name {name!r} is reserved for metadata")
    if not source.capture_rule:
        ck.add("capture_rule_empty", loc, "at least one capture_timestamp rule required")
    for entry in source.capture_rule:
        if entry.kind in ("cdc_column", "last_modified_column"):
            col = source.column(entry.column or "")
            if col is None:
                ck.add("capture_rule_column", loc,
                       f"capture rule names unknown column {entry.column!r}")
            elif not isinstance(col, ColumnDef) or col.type != "timestamp":
                ck.add("capture_rule_column", loc,
                       f"capture column {entry.column!r} must be a timestamp")
    if source.delete_flag_column and source.column(source.delete_flag_column) is None:
        ck.add("delete_flag_column_unknown", loc,
               f"delete_flag_column {source.delete_flag_column!r} is not a declared column")
    if source.input_format == "csv":
        for col in source.columns:
            if isinstance(col, CollectionColumn):
                ck.add("csv_collection", loc,
                       f"collection column {col.name!r} requires the ndjson format")


def _check_hub(ck: _Checker, hub: HubDef):
    loc = f"hub {hub.name}"
    if not hub.business_keys:
        ck.add("hub_missing_business_key", loc, "hub requires business key")
    own = [hub.key_column] + list(hub.business_key_names) + [d.name for d in hub.descriptives]
    for name in sorted({n for n in own if own.count(n) > 1}):
        ck.add("hub_dup_column", loc, f"duplicate column {name!r}")
    for name in own:
        if name in RESERVED_COLUMNS:
            ck.add("reserved_column", loc, f"column name {name!r} is reserved for metadata")
    if hub.key_type == "computed":
        if hub.key_formula is None:
            ck.add("hub_key_formula_missing", loc, "computed key requires a formula")
        else:
            _check_key_formula(ck, hub, loc)
    elif hub.key_formula is not None:
        ck.add("hub_key_formula_unexpected", loc,
               "system_generated hubs do not take a key formula")
    for desc in hub.descriptives:
        if desc.fk_hub is not None:
            _check_fk_target(ck, loc, desc.name, desc.fk_hub)
    for mapping in hub.source_mappings:
        _check_hub_mapping(ck, hub, mapping)


def _check_key_formula(ck: _Checker, hub: HubDef, loc: str):
    formula = hub.key_formula
    unknown = ex.column_refs(formula.expression) - set(hub.business_key_names)
    for name in sorted(unknown):
        ck.add("key_formula_unknown_column", loc,
               f"key formula references {name!r}, not a business key")
    if hub.bk_scope == "local" and not ex.uses_function(formula.expression, "load_source"):
        ck.add("key_formula_local_needs_source", loc,
               "local business keys require load_source() in the key formula")
    if ex.uses_function(formula.expression, "concat") and not formula.delimiter:
        ck.add("key_formula_delimiter", loc, "concat key formulas must declare a delimiter")


def _check_fk_target(ck: _Checker, loc: str, column: str, hub_name: str):
    target = ck.spec.hub(hub_name)
    if target is None:
        ck.add("fk_unknown_hub", loc, f"{column!r} references unknown hub {hub_name!r}")
        return
    if target.key_type == "system_generated" and target.bk_scope == "local":
        ck.add("fk_unresolvable_target", loc,
               f"{column!r} references {hub_name!r}: system-generated keys with local "
               "business keys cannot be resolved from source values")


def _check_expr_columns(ck: _Checker, loc: str, source: SourceDef | None,
                        expression: ex.Expr, exploding: bool, collection: CollectionColumn | None):
    if source is None:
        return
    declared = {c.name for c in source.columns}
    for name in sorted(ex.column_refs(expression) - declared):
        ck.add("mapping_unknown_column", loc, f"expression references unknown column {name!r}")
    item_fields = ex.item_field_refs(expression)
    if item_fields and not exploding:
        ck.add("item_ref_outside_collection", loc,
               "item.<field> references require an exploded collection")
    elif collection is not None:
        fields = {f.name for f in collection.fields}
        for name in sorted(item_fields - fields):
            ck.add("mapping_unknown_column", loc, f"unknown item field {name!r}")


def _check_hub_mapping(ck: _Checker, hub: HubDef, mapping: HubMapping):
    loc = f"hub {hub.name} mapping {mapping.source}"
    source = ck.spec.source(mapping.source)
    if source is None:
        ck.add("mapping_unknown_source", loc, f"unknown source {mapping.source!r}")
    targets = set(hub.business_key_names) | {d.name for d in hub.descriptives}
    fk_names = {d.name for d in hub.descriptives if d.fk_hub is not None}
    for column in mapping.column_exprs:
        if column not in targets:
            ck.add("mapping_unknown_target", loc, f"mapped column {column!r} is not a hub column")
        if column in fk_names:
            ck.add("mapping_unknown_target", loc,
                   f"{column!r} is a foreign key; map it with an fk resolution")
        _check_expr_columns(ck, loc, source, mapping.column_exprs[column], False, None)
    missing = set(hub.business_key_names) - set(mapping.column_exprs)
    for name in sorted(missing):
        ck.add("mapping_bk_coverage", loc, f"business key {name!r} is not mapped")
    for column, res in mapping.fk_resolutions.items():
        desc = next((d for d in hub.descriptives if d.name == column), None)
        if desc is None or desc.fk_hub is None:
            ck.add("mapping_fk_target", loc, f"{column!r} is not a foreign-key descriptive")
        elif desc.fk_hub != res.hub:
            ck.add("mapping_fk_target", loc,
                   f"{column!r} is declared against hub {desc.fk_hub!r}, mapping says {res.hub!r}")
        _check_fk_resolution(ck, loc, source, res, False, None)
    if source is not None:
        declared = {c.name for c in source.columns}
        for column, _direction in mapping.dedup_order:
            if column not in declared:
                ck.add("dedup_unknown_column", loc, f"dedup column {column!r} not in source")


def _check_fk_resolution(ck: _Checker, loc: str, source: SourceDef | None,
                         res: FkResolution, exploding: bool, collection: CollectionColumn | None):
    target = ck.spec.hub(res.hub)
    if target is not None and len(res.args) != len(target.business_keys):
        ck.add("mapping_fk_target", loc,
               f"hub {res.hub!r} takes {len(target.business_keys)} business key(s), "
               f"got {len(res.args)}")
    for arg in res.args:
        _check_expr_columns(ck, loc, source, arg, exploding, collection)


def _check_fk_cycles(ck: _Checker):
    graph = {
        hub.name: sorted({d.fk_hub for d in hub.descriptives
                          if d.fk_hub is not None and ck.spec.hub(d.fk_hub) is not None})
        for hub in ck.spec.hubs
    }
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(node: str) -> list[str] | None:
        state[node] = 1
        stack.append(node)
        for dep in graph[node]:
            if state.get(dep) == 1:
                return stack[stack.index(dep):] + [dep]
            if state.get(dep, 0) == 0:
                cycle = visit(dep)
                if cycle:
                    return cycle
        stack.pop()
        state[node] = 2
        return None

    for name in graph:
        if state.get(name, 0) == 0:
            cycle = visit(name)
            if cycle:
                ck.add("hub_fk_cycle", f"hub {cycle[0]}",
                       "cyclic foreign-key chain: " + " -> ".join(cycle))
                return


def _check_star(ck: _Checker, star: StarDef):
    loc = f"star {star.name}"
    if not star.participants:
        ck.add("star_no_participants", loc, "star requires at least one participant")
    cols = list(star.participant_columns)
    for name in sorted({c for c in cols if cols.count(c) > 1}):
        ck.add("star_dup_participant_column", loc, f"duplicate participant column {name!r}")
    item_count = sum(1 for p in star.participants if isinstance(p, ItemParticipant))
    if item_count > 1:
        ck.add("star_multiple_items", loc, "at most one item participant per star")
    for p in star.hub_participants:
        if ck.spec.hub(p.hub) is None:
            ck.add("star_unknown_hub", loc, f"participant references unknown hub {p.hub!r}")
        else:
            _check_fk_target(ck, loc, p.column, p.hub)
    if not star.key_columns:
        ck.add("star_key_empty", loc, "composite key must not be empty")
    allowed = set(star.participant_columns) | {"capture_timestamp"}
    for name in star.key_columns:
        if name not in allowed:
            ck.add("star_key_not_participant", loc,
                   f"key column {name!r} is not a participant key column")
    own = cols + [d.name for d in star.descriptives]
    for name in sorted({n for n in own if own.count(n) > 1}):
        ck.add("star_dup_column", loc, f"duplicate column {name!r}")
    for name in own:
        if name in RESERVED_COLUMNS:
            ck.add("reserved_column", loc, f"column name {name!r} is reserved for metadata")
    for desc in star.descriptives:
        if desc.fk_hub is not None:
            _check_fk_target(ck, loc, desc.name, desc.fk_hub)
    for mapping in star.source_mappings:
        _check_star_mapping(ck, star, mapping)


def _check_star_mapping(ck: _Checker, star: StarDef, mapping: StarMapping):
    loc = f"star {star.name} mapping {mapping.source}"
    source = ck.spec.source(mapping.source)
    if source is None:
        ck.add("mapping_unknown_source", loc, f"unknown source {mapping.source!r}")
    item = star.item_participant
    collection = None
    if mapping.explode_column is not None:
        if item is None:
            ck.add("star_mapping_explode", loc, "explode requires an item participant")
        if source is not None:
            col = source.column(mapping.explode_column)
            if col is None or not isinstance(col, CollectionColumn):
                ck.add("star_mapping_explode", loc,
                       f"explode column {mapping.explode_column!r} is not a collection column")
            else:
                collection = col
    elif item is not None:
        ck.add("star_mapping_explode", loc,
               "star has an item participant; the mapping must explode a collection")
    exploding = mapping.explode_column is not None
    if item is not None and collection is not None:
        _check_item_rule(ck, loc, item.rule, collection)

    hub_cols = {p.column: p for p in star.hub_participants}
    targets = set(star.participant_columns) | {d.name for d in star.descriptives}
    for column, expression in mapping.column_exprs.items():
        if column not in targets:
            ck.add("mapping_unknown_target", loc, f"mapped column {column!r} is not a star column")
        if column in hub_cols:
            ck.add("mapping_unknown_target", loc,
                   f"{column!r} is a hub key column; map it with a key resolution")
        _check_expr_columns(ck, loc, source, expression, exploding, collection)
    for column, res in mapping.fk_resolutions.items():
        p = hub_cols.get(column)
        if p is None:
            ck.add("mapping_fk_target", loc, f"{column!r} is not a hub participant column")
        elif p.hub != res.hub:
            ck.add("mapping_fk_target", loc,
                   f"{column!r} belongs to hub {p.hub!r}, mapping says {res.hub!r}")
        _check_fk_resolution(ck, loc, source, res, exploding, collection)
    mapped = set(mapping.column_exprs) | set(mapping.fk_resolutions)
    if item is not None:
        mapped.add(item.column)  # filled by the explosion
    for name in star.key_columns:
        if name == "capture_timestamp":
            continue  # metadata, stamped by the loader
        if name not in mapped:
            ck.add("star_mapping_key_coverage", loc, f"key column {name!r} is not mapped")


def _check_item_rule(ck: _Checker, loc: str, rule: ItemKeyRule, collection: CollectionColumn):
    fields = {f.name for f in collection.fields}
    if rule.mode == "explicit_sequence":
        if rule.sequence_field not in fields:
            ck.add("item_rule_field", loc,
                   f"sequence field {rule.sequence_field!r} not in collection {collection.name!r}")
    elif rule.mode == "concat_of_attributes":
        for name in rule.attributes:
            if name not in fields:
                ck.add("item_rule_field", loc,
                       f"item attribute {name!r} not in collection {collection.name!r}")


def _gold_tables(ck: _Checker, view: GoldViewDef) -> dict[str, list[str]]:
    """Model-level column listing for every table the view touches,
    keyed by model element name, in resolution order (base first)."""
    spec = ck.spec
    tables: dict[str, list[str]] = {}

    def hub_columns(hub: HubDef) -> list[str]:
        meta = list(HUB_METADATA) + (["delete_flag"] if hub.has_delete_flag else [])
        return meta + [hub.key_column] + list(hub.business_key_names) + [d.name for d in hub.descriptives]

    def star_columns(star: StarDef) -> list[str]:
        meta = list(STAR_METADATA) + (["delete_flag"] if star.has_delete_flag else [])
        return meta + list(star.participant_columns) + [d.name for d in star.descriptives]

    if view.base_kind == "hub":
        hub = spec.hub(view.base)
        if hub is not None:
            tables[view.base] = hub_columns(hub)
    else:
        star = spec.star(view.base)
        if star is not None:
            tables[view.base] = star_columns(star)
    for join in view.joins:
        if isinstance(join, HubJoin):
            hub = spec.hub(join.hub)
            if hub is not None:
                tables[join.hub] = hub_columns(hub)
        else:
            star = spec.star(join.star)
            if star is not None:
                tables[join.star] = star_columns(star)
    if view.versions is not None:
        star = spec.star(view.versions.star)
        if star is not None:
            tables[view.versions.star] = star_columns(star)
    if view.temporal is not None:
        dim = spec.view(view.temporal.dim)
        if dim is not None:
            tables[dim.name] = [o.name for o in dim.outputs]
    return tables


def _check_gold(ck: _Checker, view: GoldViewDef):
    loc = f"gold {view.name}"
    spec = ck.spec
    if view.kind in ("scd1_dim", "scd2_dim") and view.base_kind != "hub":
        ck.add("gold_base_kind", loc, f"{view.kind} views are based on a hub")
    if view.kind == "fact" and view.base_kind != "star":
        ck.add("gold_base_kind", loc, "fact views are based on a star")
    base_exists = (spec.hub(view.base) if view.base_kind == "hub" else spec.star(view.base))
    if base_exists is None:
        ck.add("gold_unknown_base", loc, f"unknown base {view.base_kind} {view.base!r}")
    for join in view.joins:
        if isinstance(join, HubJoin):
            if spec.hub(join.hub) is None:
                ck.add("gold_join_unknown", loc, f"join references unknown hub {join.hub!r}")
        else:
            if spec.star(join.star) is None:
                ck.add("gold_join_unknown", loc, f"join references unknown star {join.star!r}")
            if view.base_kind != "hub":
                ck.add("gold_current_join_base", loc,
                       "join_current requires a hub base (it keys off the base hub key)")
    if view.kind == "scd2_dim":
        if view.versions is None:
            ck.add("gold_scd2_requires_versions", loc, "scd2_dim requires a versions join")
        elif spec.star(view.versions.star) is None:
            ck.add("gold_join_unknown", loc,
                   f"versions references unknown star {view.versions.star!r}")
        if not view.scd2_key:
            ck.add("gold_scd2_requires_key", loc, "scd2_dim requires scd2_key components")
        names = {o.name for o in view.outputs}
        if not {"valid_from", "valid_to"} <= names:
            ck.add("gold_scd2_validity", loc,
                   "scd2_dim output must include the valid_from/valid_to pair")
    else:
        if view.versions is not None:
            ck.add("gold_versions_kind", loc, "versions joins are only for scd2_dim views")
        if view.scd2_key:
            ck.add("gold_scd2_key_kind", loc, "scd2_key is only for scd2_dim views")
    if view.temporal is not None:
        if view.kind != "fact":
            ck.add("gold_temporal_kind", loc, "temporal joins are only for fact views")
        else:
            dim = spec.view(view.temporal.dim)
            if dim is None or dim.kind != "scd2_dim":
                ck.add("gold_fact_temporal_target", loc,
                       f"temporal join target {view.temporal.dim!r} is not an scd2_dim in this model")
            else:
                base_hub = spec.hub(dim.base)
                needed = {"valid_from", "valid_to"}
                if base_hub is not None:
                    needed.add(base_hub.key_column)
                outputs = {o.name for o in dim.outputs}
                for name in sorted(needed - outputs):
                    ck.add("gold_temporal_requires", loc,
                           f"temporal join needs column {name!r} in {dim.name}'s output")
    tables = _gold_tables(ck, view)
    refs: list[tuple[str, ColumnRef]] = []
    for out in view.outputs:
        if out.ref is not None:
            refs.append((f"output {out.name}", out.ref))
    refs.extend((f"scd2_key component {r.column}", r) for r in view.scd2_key)
    if view.temporal is not None:
        refs.append(("temporal key", view.temporal.key_ref))
        refs.append(("temporal time", view.temporal.time_ref))
    for what, ref in refs:
        if ref.table is not None:
            if ref.table not in tables:
                ck.add("gold_output_unknown_ref", loc,
                       f"{what}: {ref.table!r} is not a table of this view")
            elif ref.column not in tables[ref.table]:
                ck.add("gold_output_unknown_ref", loc,
                       f"{what}: no column {ref.column!r} in {ref.table!r}")
        elif not any(ref.column in cols for cols in tables.values()):
            ck.add("gold_output_unknown_ref", loc, f"{what}: no table exposes {ref.column!r}")
    names = [o.name for o in view.outputs]
    for name in sorted({n for n in names if names.count(n) > 1}):
        ck.add("gold_dup_output", loc, f"duplicate output column {name!r}")
    if not view.outputs:
        ck.add("gold_no_outputs", loc, "view must project at least one column")


def resolve_load_order(spec: ModelSpec) -> list[str]:
    """Topological load plan over hubs and stars (model element names).

    Hubs precede the hubs that FK-reference them and the stars they
    participate in; ties fall back to declaration order.
    """
    order_index: dict[str, int] = {}
    deps: dict[str, set[str]] = {}
    for i, hub in enumerate(spec.hubs):
        order_index[hub.name] = i
        deps[hub.name] = {d.fk_hub for d in hub.descriptives
                          if d.fk_hub is not None and spec.hub(d.fk_hub) is not None
                          and d.fk_hub != hub.name}
    for j, star in enumerate(spec.stars):
        order_index[star.name] = len(spec.hubs) + j
        deps[star.name] = {p.hub for p in star.hub_participants if spec.hub(p.hub) is not None}

    result: list[str] = []
    done: set[str] = set()
    remaining = set(deps)
    while remaining:
        ready = sorted((n for n in remaining if deps[n] <= done),
                       key=lambda n: order_index[n])
        if not ready:
            cycle = _find_cycle({n: deps[n] & remaining for n in remaining})
            raise ModelError("cyclic hub dependencies: " + " -> ".join(cycle))
        node = ready[0]
        result.append(node)
        done.add(node)
        remaining.remove(node)
    return result


def _find_cycle(graph: dict[str, set[str]]) -> list[str]:
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(node: str) -> list[str] | None:
        state[node] = 1
        stack.append(node)
        for dep in sorted(graph.get(node, ())):
            if state.get(dep) == 1:
                return stack[stack.index(dep):] + [dep]
            if state.get(dep, 0) == 0:
                found = visit(dep)
                if found:
                    return found
        stack.pop()
        state[node] = 2
        return None

    for name in sorted(graph):
        if state.get(name, 0) == 0:
            found = visit(name)
            if found:
                return found
    return ["<none>"]
