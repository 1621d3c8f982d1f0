"""Semantic analysis: resolve a syntax tree against the catalog.

Produces a QueryObject with the target schema, the query box, a merged value
predicate, and validated shape parameters. All coordinate checks happen here
so later stages can assume a well-formed query.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from ..grouping import (
    GridParams,
    RingParams,
    ShapeParams,
    SlidingParams,
    geometry_for,
)
from ..predicate import ValuePredicate
from ..storage import ArraySchema, BoundingBox, Catalog
from .nodes import (
    CircularClause,
    GridClause,
    HierarchicalClause,
    QueryAst,
    WindowClause,
)

if TYPE_CHECKING:
    from ..aggregates import AggregatorRegistry


class SemanticError(Exception):
    pass


@dataclass(frozen=True)
class QueryObject:
    aggregator: str
    kind: str  # grid | sliding | hierarchical | circular
    array: ArraySchema
    box: BoundingBox
    predicate: ValuePredicate | None
    geometry: ShapeParams
    data_path: object = None  # pathlib.Path when the catalog knows the file


def _resolve_box(ast: QueryAst, schema: ArraySchema) -> BoundingBox:
    if ast.source.between is None:
        return schema.whole_box()
    coords = ast.source.between
    if len(coords) != 2 * schema.ndim:
        raise SemanticError(
            f"between on {schema.name!r} needs {2 * schema.ndim} coordinates, "
            f"got {len(coords)}"
        )
    lo = coords[: schema.ndim]
    hi = coords[schema.ndim :]
    for d, l, h in zip(schema.dims, lo, hi):
        if l > h:
            raise SemanticError(f"dimension {d.name!r}: low corner {l} > high corner {h}")
        if l < d.start or h > d.end:
            raise SemanticError(
                f"dimension {d.name!r}: box [{l}, {h}] is index outside physical "
                f"layout [{d.start}, {d.end}]"
            )
    return BoundingBox(lo, hi)


def _check_attribute(name: str, role: str, schema: ArraySchema) -> None:
    if name != schema.attribute:
        raise SemanticError(
            f"{role} references {name!r} but array {schema.name!r} "
            f"stores attribute {schema.attribute!r}"
        )


def _grid_params(shape: GridClause, schema: ArraySchema) -> GridParams:
    sizes: dict[str, int] = {}
    for dim_name, size in shape.partitions:
        if dim_name in sizes:
            raise SemanticError(f"dimension {dim_name!r} partitioned twice")
        if not any(d.name == dim_name for d in schema.dims):
            raise SemanticError(
                f"unknown dimension {dim_name!r} in partition (array has "
                f"{', '.join(d.name for d in schema.dims)})"
            )
        if size < 1:
            raise SemanticError(f"dimension {dim_name!r}: partition size must be >= 1")
        sizes[dim_name] = size
    missing = [d.name for d in schema.dims if d.name not in sizes]
    if missing:
        raise SemanticError(f"partition missing dimensions: {', '.join(missing)}")
    return GridParams(tuple(sizes[d.name] for d in schema.dims))


def _sliding_params(shape: WindowClause, schema: ArraySchema) -> SlidingParams:
    spans: dict[str, tuple[int, int]] = {}
    for dim_name, preceding, following in shape.windows:
        if dim_name in spans:
            raise SemanticError(f"dimension {dim_name!r} partitioned twice")
        if not any(d.name == dim_name for d in schema.dims):
            raise SemanticError(
                f"unknown dimension {dim_name!r} in partition (array has "
                f"{', '.join(d.name for d in schema.dims)})"
            )
        if preceding < 0 or following < 0:
            raise SemanticError(
                f"dimension {dim_name!r}: preceding and following must be >= 0"
            )
        spans[dim_name] = (preceding, following)
    missing = [d.name for d in schema.dims if d.name not in spans]
    if missing:
        raise SemanticError(f"partition missing dimensions: {', '.join(missing)}")
    stride = 1 if shape.stride is None else shape.stride
    if stride < 1:
        raise SemanticError("stride must be >= 1")
    return SlidingParams(
        preceding=tuple(spans[d.name][0] for d in schema.dims),
        following=tuple(spans[d.name][1] for d in schema.dims),
        stride=stride,
    )


def _ring_params(shape: HierarchicalClause | CircularClause) -> RingParams:
    if shape.radius < 0:
        raise SemanticError("radius must be >= 0")
    if shape.step < 1:
        raise SemanticError("step must be >= 1")
    mode = "nested" if isinstance(shape, HierarchicalClause) else "disjoint"
    return RingParams(shape.radius, shape.step, mode)


def analyze(
    ast: QueryAst, catalog: Catalog, registry: "AggregatorRegistry | None" = None
) -> QueryObject:
    if registry is None:
        from ..aggregates import default_registry

        registry = default_registry()
    if not registry.has(ast.aggregate_name):
        raise SemanticError(f"unknown aggregate {ast.aggregate_name!r}")
    entry = catalog.get(ast.source.name)
    if entry is None:
        raise SemanticError(f"unknown array {ast.source.name!r}")
    schema = entry.schema
    _check_attribute(ast.aggregate_arg, "aggregate argument", schema)
    box = _resolve_box(ast, schema)
    predicate = None
    if ast.where:
        for cmp in ast.where:
            _check_attribute(cmp.attribute, "where clause", schema)
        predicate = ValuePredicate(ast.where)
    shape = ast.shape
    if isinstance(shape, GridClause):
        kind, params = "grid", _grid_params(shape, schema)
    elif isinstance(shape, WindowClause):
        kind, params = "sliding", _sliding_params(shape, schema)
    elif isinstance(shape, HierarchicalClause):
        kind, params = "hierarchical", _ring_params(shape)
    else:
        kind, params = "circular", _ring_params(shape)
    return QueryObject(
        aggregator=registry.canonical_name(ast.aggregate_name),
        kind=kind,
        array=schema,
        box=box,
        predicate=predicate,
        geometry=params,
        data_path=entry.data_path,
    )


def explain(query: QueryObject) -> str:
    """Deterministic multi-line description of the resolved query."""
    geom = geometry_for(query)
    lines = [
        f"aggregate: {query.aggregator}",
        f"array: {query.array.name} ({query.array.element_type}, "
        + "x".join(str(e) for e in query.array.extents)
        + ")",
        f"box: {query.box}",
        f"kind: {query.kind}",
    ]
    params = query.geometry
    dim_names = [d.name for d in query.array.dims]
    if isinstance(params, GridParams):
        for name, size in zip(dim_names, params.partitions):
            lines.append(f"partition {name}: {size}")
    elif isinstance(params, SlidingParams):
        for name, p, f in zip(dim_names, params.preceding, params.following):
            lines.append(f"window {name}: {p} preceding, {f} following")
        lines.append(f"stride: {params.stride}")
    else:
        lines.append(f"radius: {params.radius0}")
        lines.append(f"step: {params.step}")
        lines.append(f"mode: {params.mode}")
        lines.append(f"centroid: ({','.join(str(c) for c in geom.centroid)})")
    if query.predicate is not None:
        lines.append(f"where: {query.predicate.render()}")
    lines.append(f"groups: {geom.group_count}")
    return "\n".join(lines)
