# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
This module provides filesystem and serialization utilities for the perisolve package.
It includes helpers for creating directories, locating model fixtures, and writing reports as JSON
or CSV files in a deterministic way.
"""

import dataclasses
import enum
import json
import os
from pathlib import Path
from typing import Any, List, Sequence

import numpy as np

PathType = str | Path

FIXTURES_ENV_VAR = "PERISOLVE_FIXTURES"


def mkdir(path: PathType) -> None:
    """
    Creates a directory at the specified path if it does not already exist.

    Parameters:
        path (PathType): The path where the directory should be created.
    """
    if not os.path.exists(path):
        os.makedirs(path)


def mkdir_for_path(path: PathType) -> None:
    """
    Ensures that the parent directory for a given path exists, creating it if necessary.

    Parameters:
        path (PathType): The path for which the parent directory needs verification or creation.

    Raises:
        ValueError: If the parent path exists and is not a directory.
    """
    path = Path(path)
    if path.is_dir():
        return

    parent_path = path.parent
    if parent_path.is_dir():
        return
    if parent_path.is_file():
        raise ValueError(f'Error, parent path is not a directory: "{parent_path}"')

    mkdir(path=parent_path)


def fixtures_dir() -> Path:
    """
    Returns the directory holding the model fixtures.
    The environment variable PERISOLVE_FIXTURES takes precedence over the repository default.

    Returns:
        Path: The fixtures directory.
    """
    override = os.environ.get(FIXTURES_ENV_VAR)
    if override:
        return Path(override)
    return Path(__file__).resolve().parents[2] / "fixtures"


def resolve_model_path(name: PathType) -> Path:
    """
    Resolves a model argument to an existing file.
    Existing paths are returned unchanged; otherwise the name is looked up in the fixtures
    directory, with and without the ".json" suffix.

    Parameters:
        name (PathType): A path or a fixture name such as "example_3_1".

    Returns:
        Path: The resolved model file.

    Raises:
        FileNotFoundError: If neither the path nor a fixture with that name exists.
    """
    path = Path(name)
    if path.is_file():
        return path
    base = fixtures_dir()
    for candidate in (base / path, base / f"{path}.json"):
        if candidate.is_file():
            return candidate
    raise FileNotFoundError(f'Model not found: "{name}" (fixtures directory: "{base}")')


def to_jsonable(obj: Any) -> Any:
    """
    Converts reports (dataclasses, enums, numpy values) into plain JSON-compatible objects.

    Parameters:
        obj (Any): The object to convert.

    Returns:
        Any: Nested dicts, lists, strings, numbers, booleans or None.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            field.name: to_jsonable(getattr(obj, field.name))
            for field in dataclasses.fields(obj)
            if field.repr
        }
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        # JSON has no representation for infinities or NaN
        return value if np.isfinite(value) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps_json(obj: Any) -> str:
    """
    Serializes an object as deterministic JSON (sorted keys, two-space indentation).

    Parameters:
        obj (Any): The object to serialize; converted with to_jsonable first.

    Returns:
        str: The JSON text, terminated by a newline.
    """
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path: PathType, obj: Any) -> None:
    """
    Writes an object as deterministic JSON to a file, creating the parent directory if needed.

    Parameters:
        path (PathType): Destination file.
        obj (Any): The object to serialize.
    """
    mkdir_for_path(path=path)
    Path(path).write_text(dumps_json(obj=obj), encoding="utf-8")


def write_csv(path: PathType, header: Sequence[str], rows: np.ndarray) -> None:
    """
    Writes a numeric table as comma separated values.

    Parameters:
        path (PathType): Destination file.
        header (Sequence[str]): Column names.
        rows (np.ndarray): A two-dimensional array with one column per header entry.
    """
    mkdir_for_path(path=path)
    np.savetxt(path, np.atleast_2d(rows), delimiter=",", header=",".join(header), comments="")


def format_csv(header: Sequence[str], rows: List[Sequence[Any]]) -> str:
    """
    Formats heterogeneous rows (numbers, booleans, strings) as CSV text.

    Parameters:
        header (Sequence[str]): Column names.
        rows (List[Sequence[Any]]): Table rows.

    Returns:
        str: The CSV text.
    """
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_cell(value) for value in row))
    return "\n".join(lines) + "\n"


def _format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)
