"""Grid-based functional data and the L2 Hilbert-space primitives.

Curves are plain 1-D numpy arrays aligned to a :class:`Grid`; a sample of
curves is an ``(n, G)`` matrix wrapped by :class:`FunctionalSample`.  Inner
products are trapezoidal quadratures on the grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "DimensionError",
    "Grid",
    "FunctionalSample",
    "trapezoid_weights",
    "inner_product",
    "l2_semimetric",
    "curve_norm",
    "gram_matrix",
    "center_sample",
]


class DimensionError(ValueError):
    """Raised when curves, grids or matrices are not aligned."""


def _frozen(a: ArrayLike) -> NDArray[np.float64]:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


def trapezoid_weights(points: NDArray[np.float64]) -> NDArray[np.float64]:
    """Trapezoidal quadrature weights for a (possibly nonuniform) grid."""
    points = np.asarray(points, dtype=float)
    if points.size == 1:
        return np.ones(1)
    dt = np.diff(points)
    w = np.zeros_like(points)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


@dataclass(frozen=True, eq=False)
class Grid:
    """Ordered abscissae ``t_1 < ... < t_G`` with positive quadrature weights."""

    points: NDArray[np.float64]
    quad_weights: NDArray[np.float64]

    def __post_init__(self):
        points = _frozen(self.points)
        weights = _frozen(self.quad_weights)
        if points.ndim != 1 or weights.shape != points.shape:
            raise DimensionError("grid points and weights must be 1-D of equal length")
        if points.size == 0:
            raise ValueError("grid must contain at least one point")
        if not np.all(np.isfinite(points)):
            raise ValueError("grid points must be finite")
        if np.any(np.diff(points) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "quad_weights", weights)

    @classmethod
    def from_points(cls, points: ArrayLike) -> "Grid":
        points = np.asarray(points, dtype=float)
        return cls(points, trapezoid_weights(points))

    @classmethod
    def uniform(cls, size: int = 200, start: float = 0.0, stop: float = 1.0) -> "Grid":
        """Equally spaced grid, 200 points on [0, 1] by default."""
        return cls.from_points(np.linspace(start, stop, size))

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.points[0]), float(self.points[-1])

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return np.array_equal(self.points, other.points) and np.array_equal(
            self.quad_weights, other.quad_weights
        )

    def __hash__(self):
        return hash((self.points.tobytes(), self.quad_weights.tobytes()))


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """``n`` curves discretized on a shared grid; row ``i`` is curve ``X_i``."""

    grid: Grid
    data: NDArray[np.float64]

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim == 1:
            data = _frozen(data[None, :])
        if data.ndim != 2 or data.shape[1] != self.grid.size:
            raise DimensionError(
                f"data of shape {data.shape} does not match grid of size {self.grid.size}"
            )
        if data.shape[0] < 1:
            raise ValueError("a functional sample needs at least one curve")
        if not np.all(np.isfinite(data)):
            raise ValueError("functional sample contains non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i):
        return self.data[i]


def _check_curve(f, grid: Grid) -> NDArray[np.float64]:
    f = np.asarray(f, dtype=float)
    if f.shape[-1:] != (grid.size,):
        raise DimensionError(f"curve of length {f.shape[-1:]} does not match grid of size {grid.size}")
    return f


def inner_product(f: ArrayLike, g: ArrayLike, grid: Grid) -> float:
    """Quadrature approximation of the integral of ``f * g`` over the grid."""
    f = _check_curve(f, grid)
    g = _check_curve(g, grid)
    return float(np.sum(grid.quad_weights * f * g))


def l2_semimetric(f: ArrayLike, g: ArrayLike, grid: Grid) -> float:
    """L2 distance between two curves."""
    diff = _check_curve(f, grid) - _check_curve(g, grid)
    return float(np.sqrt(max(inner_product(diff, diff, grid), 0.0)))


def curve_norm(f: ArrayLike, grid: Grid) -> float:
    return l2_semimetric(f, np.zeros(grid.size), grid)


def gram_matrix(a: NDArray[np.float64], grid: Grid, b: NDArray[np.float64] | None = None):
    """Matrix of pairwise inner products between the rows of ``a`` and ``b``."""
    a = np.atleast_2d(_check_curve(a, grid))
    b = a if b is None else np.atleast_2d(_check_curve(b, grid))
    return (a * grid.quad_weights) @ b.T


def center_sample(sample: FunctionalSample) -> tuple[FunctionalSample, NDArray[np.float64]]:
    """Subtract the pointwise mean curve; returns the centered sample and the mean."""
    mean = sample.data.mean(axis=0)
    return FunctionalSample(sample.grid, sample.data - mean), _frozen(mean)
