import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

SESSION_T0 = time.monotonic()


def pytest_collection_modifyitems(items):
    # acceptance runs last so its suite-time check sees the whole session
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")

from aqlmr import (
    ArraySchema,
    Catalog,
    DimSpec,
    generate_array,
    meta_path_for,
    save_schema,
    write_array,
)


@dataclass
class BuiltArray:
    schema: ArraySchema
    data_path: Path
    catalog: Catalog
    values: np.ndarray  # shaped to the schema's extents


def build_array(
    directory: Path,
    name: str = "A",
    extents: tuple[int, ...] = (8, 8),
    chunks: tuple[int, ...] = (4, 4),
    element_type: str = "float64",
    attribute: str = "val",
    dim_names: tuple[str, ...] | None = None,
    fill: str = "ramp",
    seed: int = 0,
    values: np.ndarray | None = None,
) -> BuiltArray:
    if dim_names is None:
        dim_names = tuple("xyzw"[i] for i in range(len(extents)))
    dims = tuple(
        DimSpec(n, 0, e - 1, c) for n, e, c in zip(dim_names, extents, chunks)
    )
    schema = ArraySchema(name, element_type, attribute, dims)
    data_path = directory / f"{name}.bin"
    if values is not None:
        write_array(schema, values, data_path)
    else:
        generate_array(schema, fill, data_path, seed=seed)
    save_schema(schema, meta_path_for(directory, name))
    stored = np.fromfile(data_path, dtype=schema.dtype).reshape(schema.extents)
    return BuiltArray(schema, data_path, Catalog.load_dir(directory), stored)


@pytest.fixture
def array_factory(tmp_path):
    def factory(**kwargs) -> BuiltArray:
        return build_array(tmp_path, **kwargs)

    return factory
