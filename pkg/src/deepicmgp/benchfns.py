"""Synthetic multi-output test functions.

Every function takes an (m, d) array in its natural domain and returns an
(m, Q) array. Sizes in :data:`SPECS` are the default train/test sizes used
by the benchmark harness.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError, UnknownFunctionError

_DOMAIN_TOL = 1e-12


@dataclass(frozen=True)
class BenchSpec:
    name: str
    d: int
    q: int
    domain: tuple  # ((lo, hi), ...) per input dimension
    default_n_train: int
    default_n_test: int

    @property
    def lower(self):
        return np.array([lo for lo, _ in self.domain])

    @property
    def upper(self):
        return np.array([hi for _, hi in self.domain])

    @property
    def bounds(self):
        return np.array(self.domain, dtype=float)


def forrester(X):
    x = X[:, 0]
    f1 = (6 * x - 2) ** 2 * np.sin(12 * x - 4)
    f2 = 0.5 * f1 + 10 * (x - 0.5) + 5
    return np.column_stack([f1, f2])


def convolved(X):
    x = X[:, 0]
    return np.column_stack([5 * np.sin(1.5 * x), 5 * np.sin(x) - 3, x**2 / 10 - 5])


def damped_wave(X):
    x = X[:, 0]
    a = 10 * np.pi * x - 1
    f1 = 5 * np.exp(-10 * x) * (np.cos(a) + np.sin(a)) - 0.2
    f2 = 6 * np.exp(-5 * x) * (np.cos(a) + np.sin(5 * np.pi * x - 1)) - 0.1
    f3 = 4 * np.exp(-15 * x) * (np.cos(5 * np.pi * x - 1) + np.sin(15 * np.pi * x - 1)) - 0.3
    return np.column_stack([f1, f2, f3])


def perdikaris(X):
    x = X[:, 0]
    f1 = np.sin(8 * np.pi * x)
    f2 = (x - np.sqrt(2)) * f1**2
    return np.column_stack([f1, f2])


def _branin_f3(x1, x2):
    return (
        (-1.275 * x1**2 / np.pi**2 + 5 * x1 / np.pi + x2 - 6) ** 2
        + (10 - 5 / (4 * np.pi)) * np.cos(x1)
        + 10
    )


def _branin_f2(x1, x2):
    return 10 * np.sqrt(_branin_f3(x1, x2)) + 2 * (x1 - 0.5) - 3 * (3 * x2 - 1) - 1


def branin(X):
    x1, x2 = X[:, 0], X[:, 1]
    f3 = _branin_f3(x1, x2)
    f2 = _branin_f2(x1, x2)
    f1 = _branin_f2(1.2 * (x1 + 2), 1.2 * (x2 + 2)) - 3 * x2 + 1
    return np.column_stack([f1, f2, f3])


def mop2(X):
    c = 1 / np.sqrt(2)
    f1 = 1 - np.exp(-np.sum((X - c) ** 2, axis=1))
    f2 = 1 - np.exp(-np.sum((X + c) ** 2, axis=1))
    return np.column_stack([f1, f2])


def _currin_f1(x1, x2):
    x2 = np.asarray(x2, dtype=float)
    safe = np.where(x2 > 0, x2, 1.0)
    factor = np.where(x2 > 0, 1 - np.exp(-1 / (2 * safe)), 1.0)
    num = 2300 * x1**3 + 1900 * x1**2 + 2092 * x1 + 60
    den = 100 * x1**3 + 500 * x1**2 + 4 * x1 + 20
    return factor * num / den


def currin(X):
    x1, x2 = X[:, 0], X[:, 1]
    h = 1 / 20
    lo2 = np.maximum(0.0, x2 - h)
    f2 = 0.25 * (_currin_f1(x1 + h, x2 + h) + _currin_f1(x1 + h, lo2)) + 0.25 * (
        _currin_f1(x1 - h, x2 + h) + _currin_f1(x1 - h, lo2)
    )
    return np.column_stack([_currin_f1(x1, x2), f2])


PARK_X1_FLOOR = 1e-6


def _park_f1(x1, x2, x3, x4):
    x1 = np.maximum(x1, PARK_X1_FLOOR)
    return (x1 / 2) * (np.sqrt((1 + (x2 + x3**2) * x4) / x1**2) - 1) + (x1 + 3 * x4) * np.exp(
        1 + np.sin(x3)
    )


def park(X):
    x1, x2, x3, x4 = X.T
    f1 = _park_f1(x1, x2, x3, x4)
    f2 = (1 + np.sin(x1)) / 10 * f1 - 2 * x1 + x2**2 + x3**2 + 0.5
    return np.column_stack([f1, f2])


SPECS = {
    "forrester": BenchSpec("forrester", 1, 2, ((0.0, 1.0),), 9, 100),
    "convolved": BenchSpec("convolved", 1, 3, ((0.0, 10.0),), 10, 100),
    "dampedwave": BenchSpec("dampedwave", 1, 3, ((0.0, 1.0),), 15, 100),
    "perdikaris": BenchSpec("perdikaris", 1, 2, ((0.0, 1.0),), 12, 100),
    "branin": BenchSpec("branin", 2, 3, ((-5.0, 10.0), (0.0, 15.0)), 30, 500),
    "mop2": BenchSpec("mop2", 2, 2, ((-2.0, 2.0), (-2.0, 2.0)), 30, 500),
    "currin": BenchSpec("currin", 2, 2, ((0.0, 1.0), (0.0, 1.0)), 30, 500),
    "park": BenchSpec("park", 4, 2, ((0.0, 1.0),) * 4, 60, 1000),
}

_FUNCTIONS = {
    "forrester": forrester,
    "convolved": convolved,
    "dampedwave": damped_wave,
    "perdikaris": perdikaris,
    "branin": branin,
    "mop2": mop2,
    "currin": currin,
    "park": park,
}

NAMES = tuple(SPECS)


def spec(name):
    try:
        return SPECS[name]
    except KeyError:
        raise UnknownFunctionError(f"unknown benchmark {name!r}; choose from {', '.join(NAMES)}") from None


def evaluate(name, X):
    """Evaluate benchmark ``name`` at the rows of X (natural units)."""
    s = spec(name)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, s.d) if s.d > 1 else X[:, None]
    if X.ndim != 2 or X.shape[1] != s.d:
        raise ShapeError(f"{name} takes {s.d} input columns, got shape {X.shape}")
    lo, hi = s.lower, s.upper
    tol = _DOMAIN_TOL * np.maximum(1.0, np.abs(s.bounds).max(axis=1))
    if np.any(X < lo - tol) or np.any(X > hi + tol):
        raise DomainError(f"input outside the {name} domain {s.domain}")
    return _FUNCTIONS[name](X)
