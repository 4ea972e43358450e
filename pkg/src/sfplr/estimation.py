"""Two-step estimation of the semi-functional partially linear model.

``Y = Z'beta + m(X) + eps`` is fitted by first partialling out the functional
covariate with Nadaraya-Watson weights to estimate ``beta``, then regressing
``D = Y - Z'beta`` on a truncated set of functional principal component
scores, which gives the slope curve ``rho`` of the linear null model.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import solve_triangular

from .fda import DimensionError, FunctionalSample, gram_matrix
from .fpca import EigenSystem, empirical_eigen

__all__ = [
    "ConfigError",
    "SingularDesignError",
    "InvalidTruncationError",
    "MixedDataset",
    "FitConfig",
    "SFPLRFit",
    "quartic_kernel",
    "pairwise_distances",
    "nw_weights",
    "partial_residualize",
    "estimate_beta",
    "estimate_rho",
    "sic_values",
    "sic_penalty",
    "sic_select_k",
    "fit",
]

MAX_CONDITION = 1e12


class ConfigError(ValueError):
    pass


class SingularDesignError(ValueError):
    """The partialled-out scalar design is (numerically) rank deficient."""

    def __init__(self, message: str, columns: list[int]):
        super().__init__(message)
        self.columns = columns


class InvalidTruncationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MixedDataset:
    """Functional covariate ``X``, scalar covariates ``Z`` (n x p) and response ``Y``."""

    X: FunctionalSample
    Z: NDArray[np.float64]
    Y: NDArray[np.float64]
    z_names: tuple[str, ...] | None = None

    def __post_init__(self):
        n = self.X.n
        Z = np.asarray(self.Z, dtype=float)
        if Z.ndim == 1:
            Z = Z.reshape(n, -1) if Z.size else np.zeros((n, 0))
        Y = np.asarray(self.Y, dtype=float).ravel()
        if Z.shape[0] != n or Y.shape[0] != n:
            raise DimensionError(
                f"inconsistent sample sizes: X has {n}, Z has {Z.shape[0]}, Y has {Y.shape[0]}"
            )
        if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(Y))):
            raise ValueError("Z and Y must be finite")
        Z.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "Y", Y)
        if self.z_names is not None:
            if len(self.z_names) != Z.shape[1]:
                raise DimensionError("z_names must name every column of Z")
            object.__setattr__(self, "z_names", tuple(self.z_names))

    @property
    def n(self) -> int:
        return self.X.n

    @property
    def p(self) -> int:
        return self.Z.shape[1]


@dataclass(frozen=True)
class FitConfig:
    """Tuning of the two-step fit.

    ``k_max`` defaults to ``min(20, n - 4)`` when left as ``None``.
    """

    bandwidth_constant: float = 3.0
    k_max: int | None = None
    center: bool = True

    def __post_init__(self):
        if not self.bandwidth_constant > 0:
            raise ConfigError("bandwidth constant must be positive")
        if self.k_max is not None and self.k_max < 1:
            raise ConfigError("k_max must be at least 1")

    def resolve_k_max(self, n: int) -> int:
        k_max = min(20, n - 4) if self.k_max is None else self.k_max
        if k_max < 1 or k_max > n - 3:
            raise ConfigError(f"k_max={k_max} is outside [1, n - 3] for n={n}")
        return k_max


@dataclass(frozen=True, eq=False)
class SFPLRFit:
    beta: NDArray[np.float64]
    rho: NDArray[np.float64]
    intercept: float
    k_selected: int
    bandwidth: float
    residuals: NDArray[np.float64]
    fitted: NDArray[np.float64]
    eigensystem: EigenSystem
    weights: NDArray[np.float64]
    beta_operator: NDArray[np.float64]
    k_max: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.residuals.size

    def summary(self) -> dict:
        return {
            "beta": [float(b) for b in self.beta],
            "k_selected": int(self.k_selected),
            "bandwidth": float(self.bandwidth),
        }


def quartic_kernel(u: ArrayLike):
    """Quartic (biweight) kernel ``15/16 (1 - u^2)^2`` on ``|u| <= 1``."""
    u = np.asarray(u, dtype=float)
    out = np.where(np.abs(u) <= 1.0, 15.0 / 16.0 * (1.0 - u**2) ** 2, 0.0)
    return out if out.ndim else float(out)


def pairwise_distances(X: FunctionalSample) -> NDArray[np.float64]:
    """L2 distances between all pairs of curves."""
    G = gram_matrix(X.data, X.grid)
    sq = np.diag(G)
    d2 = sq[:, None] + sq[None, :] - 2.0 * G
    d2 = np.maximum((d2 + d2.T) / 2, 0.0)
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(d2)


def nw_weights(X: FunctionalSample, b: float) -> NDArray[np.float64]:
    """Row-normalized quartic-kernel weights ``K(d(X_i, X_j) / b)``.

    The self term is kept, so every denominator is at least ``K(0) > 0``.
    """
    if not b > 0:
        raise ValueError("bandwidth must be positive")
    K = quartic_kernel(pairwise_distances(X) / b)
    return K / K.sum(axis=1, keepdims=True)


def partial_residualize(W, Z, Y):
    """Return ``(Z - W Z, Y - W Y)``."""
    W = np.asarray(W, dtype=float)
    Z = np.asarray(Z, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = W.shape[0]
    if W.shape != (n, n) or Z.shape[0] != n or Y.shape[0] != n:
        raise DimensionError("W, Z and Y are not conformable")
    return Z - W @ Z, Y - W @ Y


def _check_design(Ztilde: NDArray[np.float64]) -> float:
    p = Ztilde.shape[1]
    sv = np.linalg.svd(Ztilde, compute_uv=False)
    smax = sv[0] if sv.size else 0.0
    cond = np.inf if sv.size == 0 or sv[-1] <= 0 else smax / sv[-1]
    if cond > MAX_CONDITION or smax == 0:
        _, s, Vt = np.linalg.svd(Ztilde, full_matrices=False)
        null = Vt[s <= (smax / MAX_CONDITION if smax > 0 else np.inf)]
        cols = sorted({int(j) for v in null for j in np.flatnonzero(np.abs(v) > 1e-3)})
        if not cols:
            cols = list(range(p))
        raise SingularDesignError(
            f"partialled-out design is singular (condition number {cond:.3g}); "
            f"offending columns: {cols}",
            cols,
        )
    return float(cond)


def estimate_beta(Ztilde: ArrayLike, Ytilde: ArrayLike) -> NDArray[np.float64]:
    """Least-squares ``beta`` from the partialled-out design via a QR solve."""
    Ztilde = np.asarray(Ztilde, dtype=float)
    Ytilde = np.asarray(Ytilde, dtype=float)
    if Ztilde.ndim != 2 or Ztilde.shape[0] != Ytilde.shape[0]:
        raise DimensionError("Ztilde and Ytilde are not conformable")
    if Ztilde.shape[1] == 0:
        return np.zeros(0)
    _check_design(Ztilde)
    Q, R = np.linalg.qr(Ztilde)
    return solve_triangular(R, Q.T @ Ytilde)


def _beta_operator(W, Z) -> NDArray[np.float64]:
    # p x n matrix A with beta = A @ Y, reused for bootstrap responses
    n, p = Z.shape
    if p == 0:
        return np.zeros((0, n))
    Ztilde = Z - W @ Z
    Q, R = np.linalg.qr(Ztilde)
    return solve_triangular(R, Q.T @ (np.eye(n) - W))


def _check_rank(es: EigenSystem, k: int):
    if not 1 <= k <= es.rank:
        raise InvalidTruncationError(
            f"truncation k={k} outside [1, {es.rank}] (numerical rank of the covariance)"
        )


def estimate_rho(X: FunctionalSample, dtilde: ArrayLike, es: EigenSystem, k: int):
    """Truncated score regression of ``dtilde`` mapped back to a slope curve."""
    dtilde = np.asarray(dtilde, dtype=float)
    if dtilde.shape != (X.n,) or es.scores.shape[0] != X.n:
        raise DimensionError("dtilde, X and the eigensystem disagree on n")
    _check_rank(es, k)
    n = X.n
    coef = es.scores[:, :k].T @ dtilde / (n * es.eigenvalues[:k])
    return coef @ es.eigenfunctions[:k]


def sic_penalty(n: int, k):
    return np.log(n) * np.asarray(k) / (n - np.asarray(k) - 2)


def sic_values(dtilde: ArrayLike, es: EigenSystem, k_max: int) -> NDArray[np.float64]:
    """``SIC(k) = log(RSS_k / n) + log(n) k / (n - k - 2)`` for ``k = 1..k_max``.

    ``dtilde`` may be a matrix whose columns are separate responses; the
    result then has shape ``(k_max, columns)``.  ``k`` beyond the numerical
    rank of the eigensystem gets ``+inf``.
    """
    D = np.asarray(dtilde, dtype=float)
    vector = D.ndim == 1
    D = D[:, None] if vector else D
    n = D.shape[0]
    if n - k_max - 2 <= 0:
        raise ConfigError(f"k_max={k_max} leaves no degrees of freedom for n={n}")
    kk = min(k_max, es.rank)
    if es.centered:
        D = D - D.mean(axis=0)
    tss = np.sum(D * D, axis=0)
    out = np.full((k_max, D.shape[1]), np.inf)
    if kk > 0:
        proj = es.scores[:, :kk].T @ D
        explained = np.cumsum(proj**2 / (n * es.eigenvalues[:kk, None]), axis=0)
        rss = np.maximum(tss - explained, np.maximum(1e-13 * tss, np.finfo(float).tiny))
        out[:kk] = np.log(rss / n) + sic_penalty(n, np.arange(1, kk + 1))[:, None]
    return out[:, 0] if vector else out


def sic_select_k(X: FunctionalSample, dtilde: ArrayLike, es: EigenSystem, k_max: int) -> int:
    """Minimizer of the SIC over ``1..k_max``; ties go to the smaller ``k``."""
    if k_max < 1:
        raise ConfigError("k_max must be at least 1")
    if es.rank == 0:
        raise InvalidTruncationError("eigensystem has no positive eigenvalues")
    values = sic_values(dtilde, es, k_max)
    return int(np.argmin(values)) + 1


def fit(ds: MixedDataset, cfg: FitConfig | None = None) -> SFPLRFit:
    """Fit the model: NW partialling, beta, FPCA, SIC truncation, rho, residuals."""
    cfg = cfg or FitConfig()
    n = ds.n
    if n < 8:
        raise ConfigError("at least 8 observations are required")
    k_max = cfg.resolve_k_max(n)
    X, Z, Y = ds.X, ds.Z, ds.Y

    b = cfg.bandwidth_constant * n ** (-0.2)
    W = nw_weights(X, b)
    diagnostics: dict = {
        "weight_diag_min": float(np.min(np.diag(W))),
        "weight_diag_mean": float(np.mean(np.diag(W))),
    }
    if ds.p > 0:
        Ztilde, Ytilde = partial_residualize(W, Z, Y)
        diagnostics["design_condition"] = _check_design(Ztilde)
        beta = estimate_beta(Ztilde, Ytilde)
        dtilde = Y - Z @ beta
    else:
        beta = np.zeros(0)
        dtilde = Y.copy()
    A = _beta_operator(W, Z)

    es = empirical_eigen(X, center=cfg.center)
    if es.rank == 0:
        k = 0
        rho = np.zeros(X.grid.size)
        diagnostics["sic"] = []
    else:
        sic = sic_values(dtilde, es, k_max)
        k = int(np.argmin(sic)) + 1
        rho = estimate_rho(X, dtilde, es, k)
        diagnostics["sic"] = [float(v) for v in sic]

    linear = gram_matrix(X.data, X.grid, rho[None, :])[:, 0]
    intercept = float(dtilde.mean() - np.sum(X.grid.quad_weights * es.mean * rho)) if cfg.center else 0.0
    fitted = Z @ beta + intercept + linear
    residuals = Y - fitted

    for a in (beta, rho, residuals, fitted, W, A):
        a.setflags(write=False)
    return SFPLRFit(
        beta=beta,
        rho=rho,
        intercept=intercept,
        k_selected=k,
        bandwidth=float(b),
        residuals=residuals,
        fitted=fitted,
        eigensystem=es,
        weights=W,
        beta_operator=A,
        k_max=k_max,
        diagnostics=diagnostics,
    )
