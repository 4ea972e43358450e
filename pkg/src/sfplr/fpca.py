"""Empirical eigenanalysis of the covariance operator of a functional sample."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .fda import DimensionError, FunctionalSample, Grid, gram_matrix

__all__ = ["EigenSystem", "empirical_eigen", "fpc_scores", "variance_ratio_index"]

# Eigenvalues below this fraction of the leading one are treated as zero.
RELATIVE_RANK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenpairs of ``Gamma_n = n^-1 sum X_i (x) X_i`` under the grid inner product.

    ``eigenvalues`` holds the full nonincreasing spectrum, ``min(n, G)`` values
    with numerically-zero ones set to exactly 0.  Eigenfunctions and scores are
    kept only for the ``rank`` strictly positive eigenvalues.
    """

    eigenvalues: NDArray[np.float64]
    eigenfunctions: NDArray[np.float64]
    scores: NDArray[np.float64]
    grid: Grid
    mean: NDArray[np.float64]
    centered: bool

    @property
    def rank(self) -> int:
        return self.eigenfunctions.shape[0]

    @property
    def positive_eigenvalues(self) -> NDArray[np.float64]:
        return self.eigenvalues[: self.rank]


def _freeze(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def _fix_signs(vectors: NDArray[np.float64]) -> NDArray[np.float64]:
    # rows: flip so the entry of largest magnitude is positive
    idx = np.argmax(np.abs(vectors), axis=1)
    signs = np.sign(vectors[np.arange(vectors.shape[0]), idx])
    signs[signs == 0] = 1.0
    return vectors * signs[:, None]


def empirical_eigen(sample: FunctionalSample, center: bool = True) -> EigenSystem:
    """Functional principal components of ``sample``.

    The decomposition is computed from the ``n x n`` weighted Gram matrix when
    ``n <= G`` and from the symmetrized ``G x G`` covariance otherwise; both
    share the same nonzero spectrum.

    Args:
        sample: Curves on a common grid.
        center: Subtract the sample mean curve before forming ``Gamma_n``.

    Returns:
        The eigensystem.  A degenerate sample (all curves equal after
        centering) yields an all-zero spectrum and ``rank == 0``.
    """
    grid = sample.grid
    X = sample.data
    n, G = X.shape
    if center and n < 2:
        raise ValueError("centered FPCA needs at least two curves")
    mean = X.mean(axis=0) if center else np.zeros(G)
    Xc = X - mean if center else X
    w = grid.quad_weights

    if n <= G:
        K = gram_matrix(Xc, grid) / n
        K = (K + K.T) / 2
        vals, vecs = np.linalg.eigh(K)
        vals, vecs = vals[::-1], vecs[:, ::-1]
    else:
        sw = np.sqrt(w)
        A = Xc * sw
        C = A.T @ A / n
        C = (C + C.T) / 2
        vals, vecs = np.linalg.eigh(C)
        vals, vecs = vals[::-1], vecs[:, ::-1]

    vals = np.maximum(vals, 0.0)
    # absolute floor guards against roundoff left over by centering
    scale = float(np.mean(np.sum(X * X * w, axis=1)))
    floor = max(RELATIVE_RANK_TOL * (vals[0] if vals.size else 0.0), 1e-20 * scale)
    keep = vals > floor
    if vals.size == 0 or vals[0] <= 0:
        keep[:] = False
    rank = int(np.sum(keep))
    vals = np.where(keep, vals, 0.0)

    if rank == 0:
        funcs = np.zeros((0, G))
    elif n <= G:
        U = vecs[:, :rank]
        funcs = (U.T @ Xc) / np.sqrt(n * vals[:rank])[:, None]
    else:
        funcs = vecs[:, :rank].T / np.sqrt(w)
    funcs = _fix_signs(funcs) if rank else funcs
    scores = gram_matrix(Xc, grid, funcs) if rank else np.zeros((n, 0))

    return EigenSystem(
        eigenvalues=_freeze(vals),
        eigenfunctions=_freeze(funcs),
        scores=_freeze(scores),
        grid=grid,
        mean=_freeze(mean),
        centered=center,
    )


def fpc_scores(sample: FunctionalSample, es: EigenSystem) -> NDArray[np.float64]:
    """Scores ``<X_i - mean, e_j>`` of (possibly new) curves on the fitted eigenbasis."""
    if sample.grid != es.grid:
        raise DimensionError("sample grid differs from the eigensystem grid")
    if es.rank == 0:
        return np.zeros((sample.n, 0))
    return gram_matrix(sample.data - es.mean, es.grid, es.eigenfunctions)


def variance_ratio_index(eigenvalues: ArrayLike, threshold: float) -> int:
    """Smallest ``k`` whose share of the summed squared eigenvalues reaches ``threshold``."""
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("eigenvalues must be a non-empty vector")
    if np.any(lam < 0):
        raise ValueError("eigenvalues must be nonnegative")
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    sq = lam**2
    total = sq.sum()
    if total <= 0:
        raise ValueError("all eigenvalues are zero")
    hit = np.cumsum(sq) / total >= threshold
    return int(np.argmax(hit)) + 1 if hit.any() else lam.size
