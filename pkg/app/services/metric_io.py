"""
Text and CSV serialization of finite metric spaces.

Text format (whitespace separated, '#' comments ignored):

    points <n> weights <0|1> coords <dim>
    <n weights>                     # present when weights == 1
    <n rows of dim coordinates>     # present when dim > 0
    <n rows of n distances>

CSV format: header `weight,d0,...,d{n-1}`, one row per point.
"""
import logging
from pathlib import Path
from typing import Union

import numpy as np

from app.services.metric_core import FiniteMetricSpace

logger = logging.getLogger(__name__)

HEADER_COMMENT = "# reifenberg-lab finite metric space v1"


class MetricFormatError(ValueError):
    """File does not follow the documented layout."""
    pass


def save_text(space: FiniteMetricSpace, path: Union[str, Path]) -> Path:
    path = Path(path)
    dim = 0 if space.coords is None else space.coords.shape[1]
    lines = [HEADER_COMMENT, f"points {space.size} weights 1 coords {dim}"]
    lines.append(" ".join(repr(float(w)) for w in space.weight))
    if dim:
        lines.extend(" ".join(repr(float(c)) for c in row) for row in space.coords)
    lines.extend(" ".join(repr(float(d)) for d in row) for row in space.dist)
    path.write_text("\n".join(lines) + "\n")
    logger.info("wrote %s (%d points) to %s", space.name, space.size, path)
    return path


def load_text(path: Union[str, Path], name: str = "") -> FiniteMetricSpace:
    path = Path(path)
    rows = []
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    if not rows or len(rows[0]) != 6 or rows[0][0] != "points":
        raise MetricFormatError(f"{path}: missing 'points <n> weights <0|1> coords <dim>' header")
    try:
        n = int(rows[0][1])
        has_weights = int(rows[0][3]) == 1
        dim = int(rows[0][5])
    except ValueError as exc:
        raise MetricFormatError(f"{path}: malformed header") from exc

    body = rows[1:]
    expected = n + (1 if has_weights else 0) + (n if dim else 0)
    if len(body) != expected:
        raise MetricFormatError(f"{path}: expected {expected} data rows, found {len(body)}")
    cursor = 0
    weight = np.ones(n)
    if has_weights:
        weight = np.array(body[0], dtype=float)
        cursor = 1
    coords = None
    if dim:
        coords = np.array(body[cursor:cursor + n], dtype=float).reshape(n, dim)
        cursor += n
    dist = np.array(body[cursor:cursor + n], dtype=float)
    if dist.shape != (n, n):
        raise MetricFormatError(f"{path}: distance block has shape {dist.shape}, expected {(n, n)}")
    return FiniteMetricSpace(dist=dist, weight=weight, coords=coords, name=name or path.stem)


def save_csv(space: FiniteMetricSpace, path: Union[str, Path]) -> Path:
    path = Path(path)
    header = ",".join(["weight"] + [f"d{j}" for j in range(space.size)])
    table = np.column_stack([space.weight, space.dist])
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")
    return path


def load_csv(path: Union[str, Path], name: str = "") -> FiniteMetricSpace:
    path = Path(path)
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if table.shape[1] != table.shape[0] + 1:
        raise MetricFormatError(f"{path}: expected n rows of 1 + n columns, got {table.shape}")
    return FiniteMetricSpace(dist=table[:, 1:], weight=table[:, 0], name=name or path.stem)
