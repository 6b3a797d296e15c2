"""Observation sets for the curve-fit model.

CSV layout: header ``label,x,y``, one observation per row, rows in any
order, blank lines ignored.  Rows sharing a label form one dataset, and
datasets are numbered by first appearance.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, DomainError

__all__ = ["DataSet", "load_datasets", "save_datasets", "noise_scale"]

log = logging.getLogger(__name__)

HEADER = ["label", "x", "y"]


@dataclass(frozen=True)
class DataSet:
    """One labelled series of ``(x, y)`` points and the index of its noise factor."""

    label: str
    x: tuple
    y: tuple
    sigma_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if len(self.x) != len(self.y):
            raise DataFormatError(f"dataset {self.label!r}: x and y lengths differ")
        if len(self.x) == 0:
            raise DataFormatError(f"dataset {self.label!r} has no points")
        if not all(math.isfinite(v) for v in self.x + self.y):
            raise DataFormatError(f"dataset {self.label!r} contains non-finite values")

    @property
    def points(self) -> list:
        return list(zip(self.x, self.y))

    def __len__(self):
        return len(self.x)

    def arrays(self):
        return np.array(self.x), np.array(self.y)


def load_datasets(path) -> list:
    """Read a ``label,x,y`` CSV into datasets, points kept in file order.

    Raises
    ------
    DataFormatError
        Bad header, malformed row (with its line number), or no data.
    """
    path = Path(path)
    groups: dict = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = None
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if header is None:
                header = [cell.strip() for cell in row]
                if header != HEADER:
                    raise DataFormatError(f"expected header {','.join(HEADER)}, got {','.join(row)}", line)
                continue
            if len(row) != 3:
                raise DataFormatError(f"expected 3 fields, got {len(row)}", line)
            label = row[0].strip()
            if not label:
                raise DataFormatError("empty label", line)
            try:
                x, y = float(row[1]), float(row[2])
            except ValueError:
                raise DataFormatError(f"non-numeric value in {row[1:]!r}", line) from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise DataFormatError("non-finite value", line)
            groups.setdefault(label, []).append((x, y))
    if not groups:
        raise DataFormatError(f"{path} contains no data rows")
    datasets = [DataSet(label, [p[0] for p in pts], [p[1] for p in pts], sigma_index=k)
                for k, (label, pts) in enumerate(groups.items())]
    log.info("loaded %d datasets from %s, sizes %s",
             len(datasets), path, [len(ds) for ds in datasets])
    return datasets


def save_datasets(datasets, path) -> None:
    """Write datasets back in the CSV layout; floats use round-trip repr."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        for ds in sorted(datasets, key=lambda d: d.sigma_index):
            for x, y in ds.points:
                writer.writerow([ds.label, repr(x), repr(y)])


def noise_scale(y: float, sigma_j: float) -> float:
    """Gaussian scale ``sqrt(2) |y| sigma_j`` for an observation ``y``."""
    if y == 0:
        raise DomainError("noise scale is zero for y=0")
    if not sigma_j > 0:
        raise DomainError(f"sigma_j must be positive, got {sigma_j}")
    return math.sqrt(2.0) * abs(y) * sigma_j
