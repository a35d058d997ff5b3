"""Dense vector arithmetic, the reproducible RNG contract, and finite differences.

Everything downstream works on plain 1-D float64 numpy arrays. The helpers
here add the contract checks (finiteness, dimensions, domains) that the rest
of the package relies on at its API boundaries; hot loops use numpy directly.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from numpy.typing import NDArray

Vector = NDArray[np.float64]

DEFAULT_MASTER_SEED = 42
FD_STEP_DEFAULT = 1e-5


class DomainError(ValueError):
    """An evaluation or draw left the mathematical domain of an operation."""


class ConfigError(ValueError):
    """Invalid configuration (bad name, bad parameter range, malformed file)."""


def as_vector(values, dim: int | None = None) -> Vector:
    """Validate and return a finite 1-D float64 array."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if v.size < 1:
        raise ValueError("vectors must have dim >= 1")
    if dim is not None and v.size != dim:
        raise ValueError(f"expected dim {dim}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def elementwise(op_kind: str, a: Vector, b=None) -> Vector:
    """Coordinate-wise ops with contract checks: mul, div, sqrt, abs, add, sub.

    Unary ops (sqrt, abs) ignore ``b``. Binary ops accept a vector of matching
    dimension or a scalar. Division requires a strictly positive divisor and
    sqrt a nonnegative operand; violations raise DomainError.
    """
    a = np.asarray(a, dtype=np.float64)
    if op_kind == "sqrt":
        if np.any(a < 0):
            raise DomainError("sqrt of a vector with negative entries")
        return np.sqrt(a)
    if op_kind == "abs":
        return np.abs(a)
    if b is None:
        raise ValueError(f"binary op {op_kind!r} needs a second operand")
    b = np.asarray(b, dtype=np.float64)
    if b.ndim == 1 and b.size != a.size:
        raise ValueError(f"dim mismatch: {a.size} vs {b.size}")
    if op_kind == "mul":
        return a * b
    if op_kind == "div":
        if np.any(b <= 0):
            raise DomainError("division requires a strictly positive divisor")
        return a / b
    if op_kind == "add":
        return a + b
    if op_kind == "sub":
        return a - b
    raise ValueError(f"unknown op_kind {op_kind!r}")


def norm2(a: Vector) -> float:
    """Euclidean norm."""
    a = np.asarray(a, dtype=np.float64)
    return math.sqrt(float(a @ a))


def norm_inf(a: Vector) -> float:
    return float(np.max(np.abs(a)))


def fd_gradient(f: Callable[[Vector], float], x: Vector, h: float = FD_STEP_DEFAULT) -> Vector:
    """Central-difference gradient, component i = (f(x + h e_i) - f(x - h e_i)) / 2h."""
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp = float(f(xp))
        fm = float(f(xm))
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise DomainError(f"non-finite evaluation near coordinate {i}")
        g[i] = (fp - fm) / (2.0 * h)
    return g


class RngStream:
    """Counter-based random stream keyed by (master_seed, stream_id).

    The key fully determines the draw sequence, so independent trajectories
    (one stream per run index) reproduce bitwise no matter how runs are
    scheduled across workers.
    """

    def __init__(self, master_seed: int = DEFAULT_MASTER_SEED, stream_id: int = 0):
        if stream_id < 0:
            raise ValueError("stream_id must be nonnegative")
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        self.counter = 0
        key = (self.master_seed & 0xFFFFFFFFFFFFFFFF) | (self.stream_id << 64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def standard_normal(self, n: int) -> Vector:
        self.counter += 1
        return self._gen.standard_normal(n)

    def uniform(self, low: float = 0.0, high: float = 1.0, n: int | None = None):
        self.counter += 1
        return self._gen.uniform(low, high, size=n)

    def integers(self, low: int, high: int, n: int | None = None):
        self.counter += 1
        return self._gen.integers(low, high, size=n)

    def choice_sign(self, n: int) -> Vector:
        """Vector of independent +/-1 signs."""
        self.counter += 1
        return self._gen.integers(0, 2, size=n).astype(np.float64) * 2.0 - 1.0

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id}, counter={self.counter})"
