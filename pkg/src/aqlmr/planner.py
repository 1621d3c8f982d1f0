"""Job planning: pick a map/reduce template for a query and parameterize it.

A plan pairs one of six fixed templates (grid, sliding, or ring geometry,
each in naive or optimized flavor) with everything the engine needs at run
time: the resolved query, the group geometry, and where the splits come from.
Optimized templates combine summaries inside the mapper and shuffle one
summary per group per split; naive templates shuffle every (group, value)
pair. Holistic aggregators cannot be combined early, so asking for optimized
mode with one downgrades to naive with a warning.

Plans serialize to a parameter file of sorted ``key=value`` lines ("#" starts
a comment) and load back identically, so a translated query can be shipped to
and run by a separate process.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

from .aggregates import AggregatorRegistry, default_registry
from .frontend.semantic import QueryObject
from .grouping import (
    GridParams,
    GroupGeometry,
    RingParams,
    SlidingParams,
    make_geometry,
)
from .predicate import COMPARATORS, Comparison, ValuePredicate
from .storage import ArraySchema, BoundingBox, Catalog, DimSpec

TEMPLATES = {
    "grid_naive": "scan splits, emit (block id, value) per cell, reduce by fold",
    "grid_opt": "scan splits, fold per-block summaries in the mapper, reduce by merge",
    "sliding_naive": "scan splits, emit (window id, value) per covering window, reduce by fold",
    "sliding_opt": "scan splits, fold per-window summaries in the mapper, reduce by merge",
    "ring_naive": "scan splits, emit (ring id, value) per covering ring, reduce by fold",
    "ring_opt": "scan splits, fold per-ring summaries in the mapper, reduce by merge",
}

_FAMILY = {
    "grid": "grid",
    "sliding": "sliding",
    "hierarchical": "ring",
    "circular": "ring",
}


class PlanError(Exception):
    pass


class ConfigError(Exception):
    pass


class PlanDowngradeWarning(UserWarning):
    """Raised when an optimized plan request falls back to naive."""


@dataclass(frozen=True)
class SplitSpec:
    """Where map inputs come from: the data file, the scan box, the chunking."""

    data_path: Path | None
    box: BoundingBox
    chunk_shape: tuple[int, ...]


@dataclass(frozen=True)
class JobPlan:
    template_id: str
    mode: str  # "naive" | "optimized"
    query: QueryObject
    geometry: GroupGeometry
    splits: SplitSpec
    workers: int = 1


def plan(
    query: QueryObject,
    mode_request: str = "auto",
    *,
    data_path: Path | str | None = None,
    registry: AggregatorRegistry | None = None,
    workers: int = 1,
) -> JobPlan:
    """Choose a template and mode for the query.

    mode_request "auto" picks optimized for algebraic aggregators and naive
    for holistic ones; "optimized" on a holistic aggregator warns and
    downgrades.
    """
    registry = registry or default_registry()
    agg = registry.get(query.aggregator)
    if mode_request == "auto":
        mode = "optimized" if agg.algebraic else "naive"
    elif mode_request == "naive":
        mode = "naive"
    elif mode_request == "optimized":
        if agg.algebraic:
            mode = "optimized"
        else:
            warnings.warn(
                f"{agg.name} is holistic; a holistic aggregator cannot run "
                "optimized, planning naive instead",
                PlanDowngradeWarning,
                stacklevel=2,
            )
            mode = "naive"
    else:
        raise PlanError(f"unknown mode {mode_request!r} (expected auto, naive, or optimized)")
    path = Path(data_path) if data_path is not None else query.data_path
    if path is not None and query.data_path != path:
        query = replace(query, data_path=path)
    template_id = f"{_FAMILY[query.kind]}_{'opt' if mode == 'optimized' else 'naive'}"
    return JobPlan(
        template_id=template_id,
        mode=mode,
        query=query,
        geometry=make_geometry(query.kind, query.box, query.geometry),
        splits=SplitSpec(path, query.box, query.array.chunk_shape),
        workers=workers,
    )


def render_plan(plan: JobPlan) -> str:
    """One-paragraph description of what the planned job will do."""
    lines = [
        f"template: {plan.template_id} ({TEMPLATES[plan.template_id]})",
        f"mode: {plan.mode}",
        f"groups: {plan.geometry.group_count}",
        f"splits over: {plan.splits.box} in chunks of "
        + "x".join(str(c) for c in plan.splits.chunk_shape),
    ]
    return "\n".join(lines)


# -- parameter file ---------------------------------------------------------

_CSV = ","


def _csv(values) -> str:
    return _CSV.join(str(v) for v in values)


def config_pairs(plan: JobPlan) -> dict[str, str]:
    """The plan as flat key=value pairs (pre-serialization form)."""
    query = plan.query
    schema = query.array
    pairs = {
        "template": plan.template_id,
        "mode": plan.mode,
        "workers": str(plan.workers),
        "aggregator": query.aggregator,
        "array": schema.name,
        "array.attribute": schema.attribute,
        "array.element_type": schema.element_type,
        "array.dims": _csv(
            f"{d.name}:{d.start}:{d.end}:{d.chunk}" for d in schema.dims
        ),
        "box.lo": _csv(query.box.lo),
        "box.hi": _csv(query.box.hi),
        "geometry.kind": query.kind,
    }
    if plan.splits.data_path is not None:
        pairs["array.path"] = str(plan.splits.data_path)
    params = query.geometry
    if isinstance(params, GridParams):
        for d, size in zip(schema.dims, params.partitions):
            pairs[f"geometry.partition.{d.name}"] = str(size)
    elif isinstance(params, SlidingParams):
        for d, p, f in zip(schema.dims, params.preceding, params.following):
            pairs[f"geometry.window.{d.name}"] = f"{p}:{f}"
        pairs["geometry.stride"] = str(params.stride)
    else:
        pairs["geometry.radius"] = str(params.radius0)
        pairs["geometry.step"] = str(params.step)
        pairs["geometry.mode"] = params.mode
    if query.predicate is not None:
        for i, cmp in enumerate(query.predicate.conjuncts):
            pairs[f"where.{i}"] = cmp.render()
    return pairs


def emit_param_config(plan: JobPlan, out_path: Path | str, *, workers: int | None = None) -> Path:
    """Write the plan as sorted key=value lines; byte-identical for equal plans."""
    if workers is not None:
        plan = replace(plan, workers=workers)
    pairs = config_pairs(plan)
    lines = ["# map/reduce job parameters"]
    lines.extend(f"{k}={pairs[k]}" for k in sorted(pairs))
    out_path = Path(out_path)
    out_path.write_text("\n".join(lines) + "\n")
    return out_path


_EXACT_KEYS = {
    "template",
    "mode",
    "workers",
    "aggregator",
    "array",
    "array.attribute",
    "array.element_type",
    "array.dims",
    "array.path",
    "box.lo",
    "box.hi",
    "geometry.kind",
    "geometry.stride",
    "geometry.radius",
    "geometry.step",
    "geometry.mode",
}
_PREFIX_KEYS = ("geometry.partition.", "geometry.window.", "where.")


def _parse_pairs(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key = key.strip()
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key not in _EXACT_KEYS and not key.startswith(_PREFIX_KEYS):
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        pairs[key] = value.strip()
    return pairs


def _require(pairs: dict[str, str], key: str) -> str:
    try:
        return pairs[key]
    except KeyError:
        raise ConfigError(f"missing config key {key!r}") from None


def _int(pairs: dict[str, str], key: str) -> int:
    text = _require(pairs, key)
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"config key {key!r}: expected integer, got {text!r}") from None


def _parse_dims(text: str) -> tuple[DimSpec, ...]:
    dims = []
    for item in text.split(_CSV):
        parts = item.split(":")
        if len(parts) != 4:
            raise ConfigError(f"bad dimension spec {item!r} (want name:start:end:chunk)")
        try:
            dims.append(DimSpec(parts[0], int(parts[1]), int(parts[2]), int(parts[3])))
        except ValueError:
            raise ConfigError(f"bad dimension spec {item!r}") from None
    return tuple(dims)


def _parse_coords(pairs: dict[str, str], key: str, ndim: int) -> tuple[int, ...]:
    text = _require(pairs, key)
    try:
        coords = tuple(int(v) for v in text.split(_CSV))
    except ValueError:
        raise ConfigError(f"config key {key!r}: bad coordinates {text!r}") from None
    if len(coords) != ndim:
        raise ConfigError(f"config key {key!r}: expected {ndim} coordinates")
    return coords


_INT_RE = re.compile(r"-?\d+$")


def _parse_comparison(text: str) -> Comparison:
    parts = text.split()
    if len(parts) != 3 or parts[1] not in COMPARATORS:
        raise ConfigError(f"bad where condition {text!r}")
    const_text = parts[2]
    constant = int(const_text) if _INT_RE.match(const_text) else float(const_text)
    return Comparison(parts[0], parts[1], constant)


def load_param_config(
    path: Path | str,
    catalog: Catalog | None = None,
    registry: AggregatorRegistry | None = None,
) -> JobPlan:
    """Read a parameter file back into a plan, validating as it goes.

    The file is self-contained; a catalog, when given, supplies the data path
    and cross-checks the schema.
    """
    registry = registry or default_registry()
    text = Path(path).read_text()
    pairs = _parse_pairs(text)

    agg_name = _require(pairs, "aggregator")
    if not registry.has(agg_name):
        raise ConfigError(f"unknown aggregate {agg_name!r}")
    agg = registry.get(agg_name)

    try:
        schema = ArraySchema(
            name=_require(pairs, "array"),
            element_type=_require(pairs, "array.element_type"),
            attribute=_require(pairs, "array.attribute"),
            dims=_parse_dims(_require(pairs, "array.dims")),
        )
    except Exception as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad array schema in config: {exc}") from exc

    data_path = Path(pairs["array.path"]) if "array.path" in pairs else None
    if catalog is not None:
        entry = catalog.get(schema.name)
        if entry is None:
            raise ConfigError(f"unknown array {schema.name!r} (not in catalog)")
        if entry.schema != schema:
            raise ConfigError(
                f"config schema for {schema.name!r} does not match the catalog"
            )
        if data_path is None:
            data_path = entry.data_path

    lo = _parse_coords(pairs, "box.lo", schema.ndim)
    hi = _parse_coords(pairs, "box.hi", schema.ndim)
    try:
        box = BoundingBox(lo, hi)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if box.intersect(schema.whole_box()) != box:
        raise ConfigError(f"box {box} out of bounds for array {schema.name!r}")

    kind = _require(pairs, "geometry.kind")
    if kind == "grid":
        sizes = []
        for d in schema.dims:
            size = _int(pairs, f"geometry.partition.{d.name}")
            if size < 1:
                raise ConfigError(f"partition size for {d.name!r} must be >= 1")
            sizes.append(size)
        params: GridParams | SlidingParams | RingParams = GridParams(tuple(sizes))
    elif kind == "sliding":
        prec, foll = [], []
        for d in schema.dims:
            text_pf = _require(pairs, f"geometry.window.{d.name}")
            parts = text_pf.split(":")
            if len(parts) != 2:
                raise ConfigError(f"bad window spec {text_pf!r} (want preceding:following)")
            try:
                p, f = int(parts[0]), int(parts[1])
            except ValueError:
                raise ConfigError(f"bad window spec {text_pf!r}") from None
            if p < 0 or f < 0:
                raise ConfigError("window spans must be >= 0")
            prec.append(p)
            foll.append(f)
        stride = _int(pairs, "geometry.stride")
        if stride < 1:
            raise ConfigError("stride must be >= 1")
        params = SlidingParams(tuple(prec), tuple(foll), stride)
    elif kind in ("hierarchical", "circular"):
        radius = _int(pairs, "geometry.radius")
        step = _int(pairs, "geometry.step")
        ring_mode = _require(pairs, "geometry.mode")
        if radius < 0 or step < 1:
            raise ConfigError("radius must be >= 0 and step >= 1")
        if ring_mode not in ("nested", "disjoint"):
            raise ConfigError(f"unknown ring mode {ring_mode!r}")
        params = RingParams(radius, step, ring_mode)
    else:
        raise ConfigError(f"unknown geometry kind {kind!r}")

    mode = _require(pairs, "mode")
    if mode not in ("naive", "optimized"):
        raise ConfigError(f"unknown mode {mode!r}")
    if mode == "optimized" and not agg.algebraic:
        raise ConfigError(
            f"{agg.name} is holistic; a holistic aggregator cannot run optimized"
        )
    template_id = _require(pairs, "template")
    if template_id not in TEMPLATES:
        raise ConfigError(f"unknown template {template_id!r}")
    expected = f"{_FAMILY[kind]}_{'opt' if mode == 'optimized' else 'naive'}"
    if template_id != expected:
        raise ConfigError(
            f"template {template_id!r} does not match geometry {kind!r} "
            f"and mode {mode!r} (expected {expected!r})"
        )

    workers = _int(pairs, "workers") if "workers" in pairs else 1
    if workers < 1:
        raise ConfigError("workers must be >= 1")

    where_keys = sorted(
        (k for k in pairs if k.startswith("where.")),
        key=lambda k: int(k.split(".", 1)[1]),
    )
    predicate = None
    if where_keys:
        predicate = ValuePredicate(
            tuple(_parse_comparison(pairs[k]) for k in where_keys)
        )
        for cmp in predicate.conjuncts:
            if cmp.attribute != schema.attribute:
                raise ConfigError(
                    f"where clause references {cmp.attribute!r} but array "
                    f"{schema.name!r} stores attribute {schema.attribute!r}"
                )

    query = QueryObject(
        aggregator=agg.name,
        kind=kind,
        array=schema,
        box=box,
        predicate=predicate,
        geometry=params,
        data_path=data_path,
    )
    return JobPlan(
        template_id=template_id,
        mode=mode,
        query=query,
        geometry=make_geometry(kind, box, params),
        splits=SplitSpec(data_path, box, schema.chunk_shape),
        workers=workers,
    )
