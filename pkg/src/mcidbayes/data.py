"""Dataset container and CSV interchange.

A record is (x, y, z): a scalar diagnostic measure, a patient-reported
outcome y in {-1, +1}, and a covariate vector z.  By convention z carries an
explicit leading intercept entry, so the population (no-covariate) case has
q = 1 with z = (1,).  CSV files use the header ``x,y,z1,...,zq``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["Dataset"]


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray  # (n,) float
    y: np.ndarray  # (n,) int in {-1, +1}
    z: np.ndarray  # (n, q) float

    def __post_init__(self) -> None:
        x = np.ascontiguousarray(self.x, dtype=float)
        y = np.ascontiguousarray(self.y, dtype=np.int64)
        z = np.ascontiguousarray(self.z, dtype=float)
        if z.ndim != 2 or x.ndim != 1 or y.ndim != 1:
            raise ValueError("expected x (n,), y (n,), z (n, q)")
        if not (len(x) == len(y) == z.shape[0]):
            raise ValueError("x, y, z must have matching first dimension")
        if not np.isfinite(x).all() or not np.isfinite(z).all():
            raise ValueError("x and z must be finite")
        if y.size and not np.isin(y, (-1, 1)).all():
            raise ValueError("y must take values in {-1, +1}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def q(self) -> int:
        return self.z.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.x[idx], self.y[idx], self.z[idx])

    def with_y(self, y: np.ndarray) -> "Dataset":
        return Dataset(self.x, y, self.z)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y"] + [f"z{j + 1}" for j in range(self.q)])
            for i in range(self.n):
                writer.writerow([repr(float(self.x[i])), int(self.y[i])]
                                + [repr(float(v)) for v in self.z[i]])

    @classmethod
    def from_csv(cls, path: str | Path) -> "Dataset":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if len(header) < 3 or header[0] != "x" or header[1] != "y":
                raise ValueError(f"expected header x,y,z1,...  got {header}")
            rows = [row for row in reader if row]
        x = np.array([float(r[0]) for r in rows])
        y = np.array([int(float(r[1])) for r in rows])
        z = np.array([[float(v) for v in r[2:]] for r in rows])
        return cls(x, y, z)
