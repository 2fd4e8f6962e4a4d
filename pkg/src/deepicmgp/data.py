"""Training data with the scaling used internally for fitting.

Inputs are mapped to the unit hypercube using per-dimension bounds, and
each output is standardized to zero mean and unit variance.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ShapeError

BOUNDS_TOL = 1e-12


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray
    x_bounds: np.ndarray  # (d, 2): lower, upper
    y_center: np.ndarray
    y_scale: np.ndarray

    @classmethod
    def from_arrays(cls, x, y, bounds=None):
        """Build a dataset; bounds default to the column-wise data range."""
        x = _as_2d(x, "x")
        y = _as_2d(y, "y")
        if x.shape[0] != y.shape[0]:
            raise ShapeError(f"x has {x.shape[0]} rows but y has {y.shape[0]}")
        if x.shape[0] == 0:
            raise DataError("dataset is empty")
        if bounds is None:
            lo, hi = x.min(axis=0), x.max(axis=0)
            hi = np.where(hi > lo, hi, lo + 1.0)
            bounds = np.column_stack([lo, hi])
        bounds = np.array(bounds, dtype=float).reshape(-1, 2)
        if bounds.shape[0] != x.shape[1]:
            raise ShapeError(f"bounds describe {bounds.shape[0]} dimensions, x has {x.shape[1]}")
        if np.any(bounds[:, 1] <= bounds[:, 0]):
            raise DataError("every lower bound must be below its upper bound")
        tol = BOUNDS_TOL * np.maximum(1.0, np.abs(bounds).max(axis=1))
        if np.any(x < bounds[:, 0] - tol) or np.any(x > bounds[:, 1] + tol):
            raise DataError("x lies outside the declared bounds")
        center = y.mean(axis=0)
        scale = y.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        for a in (x, y, bounds, center, scale):
            a.setflags(write=False)
        return cls(x=x, y=y, x_bounds=bounds, y_center=center, y_scale=scale)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def d(self):
        return self.x.shape[1]

    @property
    def q(self):
        return self.y.shape[1]

    def scale_x(self, x):
        x = _as_2d(x, "x", allow_empty=True)
        if x.shape[1] != self.d:
            raise ShapeError(f"expected {self.d} input columns, got {x.shape[1]}")
        lo, hi = self.x_bounds[:, 0], self.x_bounds[:, 1]
        return np.ascontiguousarray((x - lo) / (hi - lo))

    def unscale_x(self, u):
        lo, hi = self.x_bounds[:, 0], self.x_bounds[:, 1]
        return lo + np.asarray(u, dtype=float) * (hi - lo)

    def scale_y(self, y):
        return np.ascontiguousarray((np.asarray(y, dtype=float) - self.y_center) / self.y_scale)

    def unscale_y(self, y):
        return np.asarray(y, dtype=float) * self.y_scale + self.y_center

    def unscale_cov(self, cov):
        """Map (m, Q, Q) covariances from standardized to natural units."""
        return cov * np.outer(self.y_scale, self.y_scale)

    @property
    def x_scaled(self):
        return self.scale_x(self.x)

    @property
    def y_scaled(self):
        return self.scale_y(self.y)

    def append(self, x_new, y_new):
        """New dataset with extra rows; bounds are kept, output scaling is refit."""
        x_new = _as_2d(x_new, "x")
        y_new = _as_2d(y_new, "y")
        return Dataset.from_arrays(
            np.vstack([self.x, x_new]), np.vstack([self.y, y_new]), bounds=self.x_bounds
        )


def _as_2d(a, name, allow_empty=False):
    a = np.array(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-d, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DataError(f"{name} contains NaN or infinite values")
    if a.shape[0] == 0 and not allow_empty:
        raise DataError(f"{name} is empty")
    return np.ascontiguousarray(a)


# CSV: comma separated, one header row, UTF-8.

FLOAT_FMT = "%.16e"


def read_csv(path, allow_nan=False):
    """Read a numeric CSV with a header row. Returns (header, array)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty (a header row is required)") from None
        header = [h.strip() for h in header]
        if not header or any(h == "" for h in header):
            raise DataError(f"{path}: line 1: malformed header")
        rows = []
        for row in reader:
            lineno = reader.line_num
            if not row or all(c.strip() == "" for c in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                values = [float(c) for c in row]
            except ValueError:
                raise DataError(f"{path}: line {lineno}: non-numeric field") from None
            if not allow_nan and not all(np.isfinite(values)):
                raise DataError(f"{path}: line {lineno}: NaN or infinite value")
            rows.append(values)
    arr = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return header, arr


def write_csv(path, header, rows, fmt=FLOAT_FMT):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in np.atleast_2d(rows) if len(rows) else []:
            fh.write(",".join(fmt % v for v in row) + "\n")


def columns(prefix, count):
    return [f"{prefix}_{i + 1}" for i in range(count)]
