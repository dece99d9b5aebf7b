"""Sidecar embedding files: externally precomputed vectors keyed by post id.

Format: a header line ``dim=<n>`` followed by one row per post,
``post_id<TAB>f1,f2,...,fn`` with decimal floats.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping

import numpy as np


class MissingEmbedding(KeyError):
    def __init__(self, post_id: str):
        super().__init__(post_id)
        self.post_id = post_id

    def __str__(self) -> str:
        return f"no embedding stored for post {self.post_id!r}"


class DimensionError(ValueError):
    def __init__(self, found_len: int, expected: int | None = None):
        msg = f"embedding has {found_len} values"
        if expected is not None:
            msg += f", expected {expected}"
        super().__init__(msg)
        self.found_len = found_len
        self.expected = expected


def write_sidecar(path: Path | str, dim: int, rows: Mapping[str, np.ndarray] | Iterable[tuple[str, np.ndarray]]) -> None:
    items = rows.items() if isinstance(rows, Mapping) else rows
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim={dim}\n")
        for post_id, vec in items:
            vec = np.asarray(vec, dtype=np.float64)
            if vec.shape != (dim,):
                raise DimensionError(int(vec.size), dim)
            fh.write(post_id + "\t" + ",".join(repr(float(v)) for v in vec) + "\n")


def read_sidecar(path: Path | str, expected_dim: int) -> dict[str, np.ndarray]:
    """Load every row, checking the declared and actual dimensions."""
    table: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("dim="):
            raise ValueError(f"{path}: missing dim= header")
        declared = int(header[4:])
        if declared != expected_dim:
            raise DimensionError(declared, expected_dim)
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            post_id, _, payload = line.partition("\t")
            values = np.array([float(v) for v in payload.split(",")], dtype=np.float64)
            if values.shape != (expected_dim,):
                raise DimensionError(int(values.size), expected_dim)
            table[post_id] = values
    return table


def load_vector(path: Path | str, post_id: str, expected_dim: int) -> np.ndarray:
    """One stored vector; raises MissingEmbedding / DimensionError."""
    table = read_sidecar(path, expected_dim)
    if post_id not in table:
        raise MissingEmbedding(post_id)
    return table[post_id]
