"""Syntax tree for parsed queries, plus a canonical pretty-printer."""

from __future__ import annotations

from dataclasses import dataclass

from ..predicate import Comparison


@dataclass(frozen=True)
class Source:
    """FROM clause target: an array name, optionally boxed by between(...).

    between holds (lo..., hi...): the first half of its integers are the low
    corner, the second half the high corner, in dimension order.
    """

    name: str
    between: tuple[int, ...] | None = None


@dataclass(frozen=True)
class GridClause:
    partitions: tuple[tuple[str, int], ...]  # (dim name, block size)


@dataclass(frozen=True)
class WindowClause:
    windows: tuple[tuple[str, int, int], ...]  # (dim name, preceding, following)
    stride: int | None = None


@dataclass(frozen=True)
class HierarchicalClause:
    radius: int
    step: int


@dataclass(frozen=True)
class CircularClause:
    radius: int
    step: int


ShapeClause = GridClause | WindowClause | HierarchicalClause | CircularClause


@dataclass(frozen=True)
class QueryAst:
    aggregate_name: str
    aggregate_arg: str
    source: Source
    where: tuple[Comparison, ...] | None
    shape: ShapeClause


def render(ast: QueryAst) -> str:
    """Canonical single-line text for the query; parse(render(q)) == q."""
    parts = [f"select {ast.aggregate_name}({ast.aggregate_arg}) from"]
    if ast.source.between is None:
        parts.append(ast.source.name)
    else:
        coords = ", ".join(str(c) for c in ast.source.between)
        parts.append(f"between ({ast.source.name}, {coords})")
    if ast.where:
        parts.append("where " + " and ".join(c.render() for c in ast.where))
    shape = ast.shape
    if isinstance(shape, GridClause):
        inner = ", ".join(f"{name} {size}" for name, size in shape.partitions)
        parts.append(f"grid as (partition by {inner})")
    elif isinstance(shape, WindowClause):
        inner = ", ".join(
            f"{name} {p} preceding and {f} following" for name, p, f in shape.windows
        )
        stride = f" stride {shape.stride}" if shape.stride is not None else ""
        parts.append(f"fixed window as (partition by {inner}{stride})")
    elif isinstance(shape, HierarchicalClause):
        parts.append(f"hierarchical as (radius {shape.radius} step {shape.step})")
    else:
        parts.append(f"circular as (radius {shape.radius} step {shape.step})")
    return " ".join(parts)
