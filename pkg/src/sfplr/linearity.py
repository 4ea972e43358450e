"""Linearity test of the functional component via projected marked residual processes.

For a direction ``h`` the residuals of the linear null fit are cumulated along
the ordering of the projections ``<X_i, h>``.  The Kolmogorov-Smirnov and
Cramer-von Mises norms of that step process are calibrated with a wild
bootstrap, and p-values from several random directions are merged with a
Benjamini-Yekutieli style step-up rule.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ._parallel import parallel_map
from ._random import BOOTSTRAP, DIRECTIONS, as_generator, derive_seed, stream
from .estimation import FitConfig, MixedDataset, SFPLRFit, fit, sic_values
from .fda import DimensionError, FunctionalSample, gram_matrix
from .fpca import EigenSystem, variance_ratio_index

__all__ = [
    "CannotProjectError",
    "Projection",
    "TestConfig",
    "DirectionResult",
    "TestReport",
    "draw_directions",
    "project",
    "ks_cvm_statistics",
    "wild_multipliers",
    "bootstrap_pvalues",
    "fdr_merge",
    "run_test",
    "KAPPA",
]

KAPPA = (np.sqrt(5.0) + 1.0) / 2.0
# P(V = 1 - kappa); the complementary atom is kappa
P_LOW = KAPPA / np.sqrt(5.0)

VARIANCE_SHARE = 0.95
MAX_DIRECTION_ATTEMPTS = 10
BOOTSTRAP_CHUNK = 500
STATISTICS = ("ks", "cvm")


class CannotProjectError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Projection:
    direction: NDArray[np.float64]
    projected: NDArray[np.float64]


@dataclass(frozen=True)
class TestConfig:
    """Settings of the testing procedure.

    ``refit_k`` re-runs the SIC truncation choice inside every bootstrap
    replicate; by default the truncation of the original fit is reused.
    """

    __test__ = False

    num_directions: int = 7
    bootstrap_reps: int = 10000
    alpha: float = 0.05
    seed: int = 0
    statistics: tuple[str, ...] = STATISTICS
    fit: FitConfig = field(default_factory=FitConfig)
    threads: int | None = None
    refit_k: bool = False

    def __post_init__(self):
        if self.num_directions < 1:
            raise ValueError("num_directions must be at least 1")
        if self.bootstrap_reps < 1:
            raise ValueError("bootstrap_reps must be at least 1")
        if not 0 <= self.alpha < 1:
            raise ValueError("alpha must lie in [0, 1)")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        stats = tuple(s.lower() for s in self.statistics)
        if not stats or any(s not in STATISTICS for s in stats):
            raise ValueError(f"statistics must be a non-empty subset of {STATISTICS}")
        object.__setattr__(self, "statistics", stats)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["statistics"] = list(self.statistics)
        d.pop("threads")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TestConfig":
        d = dict(d)
        d["fit"] = FitConfig(**d["fit"])
        d["statistics"] = tuple(d["statistics"])
        return cls(**d)


@dataclass(frozen=True)
class DirectionResult:
    index: int
    ks: float
    cvm: float
    p_ks: float
    p_cvm: float
    degenerate: bool = False
    attempts: int = 1


@dataclass(frozen=True)
class TestReport:
    __test__ = False

    per_direction: tuple[DirectionResult, ...]
    merged_p_ks: float | None
    merged_p_cvm: float | None
    fit_summary: dict
    config: TestConfig
    seed: int

    def rejects(self, statistic: str = "cvm", alpha: float | None = None) -> bool:
        alpha = self.config.alpha if alpha is None else alpha
        p = self.merged_p_cvm if statistic == "cvm" else self.merged_p_ks
        return p is not None and p <= alpha

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "per_direction": [dataclasses.asdict(r) for r in self.per_direction],
            "merged_p_ks": self.merged_p_ks,
            "merged_p_cvm": self.merged_p_cvm,
            "fit_summary": dict(self.fit_summary),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestReport":
        return cls(
            per_direction=tuple(DirectionResult(**r) for r in d["per_direction"]),
            merged_p_ks=d["merged_p_ks"],
            merged_p_cvm=d["merged_p_cvm"],
            fit_summary=dict(d["fit_summary"]),
            config=TestConfig.from_dict(d["config"]),
            seed=int(d["seed"]),
        )


# -- directions -------------------------------------------------------------


def _direction_law(es: EigenSystem):
    if es.rank == 0:
        raise CannotProjectError("the functional sample has no variability to project on")
    jn = variance_ratio_index(es.positive_eigenvalues, VARIANCE_SHARE)
    sd = np.std(es.scores[:, :jn], axis=0, ddof=1)
    return jn, sd


def _draw_one(es: EigenSystem, jn: int, sd, rng: np.random.Generator):
    eta = rng.normal(0.0, 1.0, size=jn) * sd
    return eta @ es.eigenfunctions[:jn]


def draw_directions(es: EigenSystem, K: int, rng_seed: int) -> list[NDArray[np.float64]]:
    """``K`` random directions in the span of the leading eigenfunctions.

    The span covers 95% of the summed squared eigenvalues; coefficients are
    centered normals with the sample variances of the corresponding scores.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    jn, sd = _direction_law(es)
    return [_draw_one(es, jn, sd, stream(rng_seed, DIRECTIONS, d, 0)) for d in range(K)]


def project(X: FunctionalSample, h: ArrayLike) -> NDArray[np.float64]:
    """Projections ``<X_i, h>``."""
    h = np.asarray(h, dtype=float)
    if h.shape != (X.grid.size,):
        raise DimensionError("direction does not match the sample grid")
    return gram_matrix(X.data, X.grid, h[None, :])[:, 0]


def _is_degenerate(projected, X: FunctionalSample, h) -> bool:
    scale = np.sqrt(np.mean(np.sum(X.data**2 * X.grid.quad_weights, axis=1)))
    scale *= np.sqrt(np.sum(h**2 * X.grid.quad_weights))
    return np.ptp(projected) <= 1e-10 * max(scale, np.finfo(float).tiny)


# -- statistics -------------------------------------------------------------


class _StepLayout:
    """Sort order and tie groups of a projection, shared by all bootstrap draws."""

    def __init__(self, projected: NDArray[np.float64]):
        self.order = np.argsort(projected, kind="stable")
        xs = projected[self.order]
        n = xs.size
        self.ends = np.flatnonzero(np.append(xs[1:] != xs[:-1], True))
        self.counts = np.diff(np.append(-1, self.ends)).astype(float)
        self.n = n

    def norms(self, residuals: NDArray[np.float64]):
        """KS and CvM norms for residual rows of a ``(m, n)`` matrix."""
        T = np.cumsum(residuals[:, self.order], axis=1)[:, self.ends] / np.sqrt(self.n)
        ks = np.max(np.abs(T), axis=1)
        cvm = (T**2 @ self.counts) / self.n
        return ks, cvm


def ks_cvm_statistics(projected: ArrayLike, residuals: ArrayLike) -> tuple[float, float]:
    """KS and CvM norms of ``T(x) = n^-1/2 sum_i 1{projected_i <= x} residual_i``.

    The supremum is taken over the jump points; the CvM integral is against
    the empirical distribution of the projections.
    """
    projected = np.asarray(projected, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    if projected.ndim != 1 or projected.shape != residuals.shape or projected.size == 0:
        raise DimensionError("projected values and residuals must be equal-length vectors")
    ks, cvm = _StepLayout(projected).norms(residuals[None, :])
    return float(ks[0]), float(cvm[0])


# -- bootstrap --------------------------------------------------------------


def wild_multipliers(n: int, rng_seed, size: int | None = None) -> NDArray[np.float64]:
    """Draws from the golden-ratio two-point law with mean 0 and variance 1.

    ``P(V = 1 - kappa) = kappa / sqrt 5`` and ``P(V = kappa) = 1 - kappa / sqrt 5``.
    With ``size`` the result has shape ``(size, n)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = as_generator(rng_seed)
    shape = (n,) if size is None else (size, n)
    return np.where(rng.random(shape) < P_LOW, 1.0 - KAPPA, KAPPA)


def _bootstrap_residuals(ds: MixedDataset, f: SFPLRFit, V, refit_k: bool):
    # residuals of the refitted model for rows Y* = fitted + V * residuals,
    # reusing the weight matrix and eigensystem of the original fit
    es = f.eigensystem
    n = f.n
    Ystar = f.fitted[None, :] + V * f.residuals[None, :]
    D = Ystar - (Ystar @ f.beta_operator.T) @ ds.Z.T if ds.p else Ystar
    if es.centered:
        D = D - D.mean(axis=1, keepdims=True)
    k = f.k_selected
    if k == 0:
        return D
    if not refit_k:
        S = es.scores[:, :k]
        coef = (D @ S) / (n * es.eigenvalues[:k])
        return D - coef @ S.T
    kk = min(f.k_max, es.rank)
    S = es.scores[:, :kk]
    coef = (D @ S) / (n * es.eigenvalues[:kk])
    kstar = np.argmin(sic_values(D.T, es, f.k_max), axis=0) + 1
    coef = np.where(np.arange(1, kk + 1)[None, :] <= kstar[:, None], coef, 0.0)
    return D - coef @ S.T


def bootstrap_pvalues(
    ds: MixedDataset,
    fit_result: SFPLRFit,
    proj: Projection,
    cfg: TestConfig,
    rng_seed: int,
) -> tuple[float, float]:
    """Wild-bootstrap p-values of the KS and CvM statistics for one direction.

    Replicates are drawn in fixed-size chunks, each from its own sub-stream of
    ``rng_seed``, so the result depends only on the seed.
    """
    layout = _StepLayout(proj.projected)
    ks_obs, cvm_obs = layout.norms(np.asarray(fit_result.residuals)[None, :])
    B = cfg.bootstrap_reps
    exceed_ks = exceed_cvm = 0
    for c, start in enumerate(range(0, B, BOOTSTRAP_CHUNK)):
        m = min(BOOTSTRAP_CHUNK, B - start)
        V = wild_multipliers(ds.n, stream(rng_seed, c), size=m)
        U = _bootstrap_residuals(ds, fit_result, V, cfg.refit_k)
        if not np.all(np.isfinite(U)):
            raise FloatingPointError(f"non-finite bootstrap residuals in replicates {start}..{start + m - 1}")
        ks, cvm = layout.norms(U)
        exceed_ks += int(np.sum(ks_obs[0] <= ks))
        exceed_cvm += int(np.sum(cvm_obs[0] <= cvm))
    return exceed_ks / B, exceed_cvm / B


def fdr_merge(pvalues: ArrayLike) -> float:
    """``min_i (K / i) p_(i)`` over the ascending p-values, capped at 1."""
    p = np.sort(np.asarray(pvalues, dtype=float).ravel())
    if p.size == 0:
        raise ValueError("need at least one p-value")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    K = p.size
    return float(min(np.min(K / np.arange(1, K + 1) * p), 1.0))


# -- full procedure ---------------------------------------------------------


def _one_direction(ds, f, cfg, jn, sd, d, direction=None) -> DirectionResult:
    fixed = direction is not None
    for attempt in range(MAX_DIRECTION_ATTEMPTS):
        h = direction if fixed else _draw_one(
            f.eigensystem, jn, sd, stream(cfg.seed, DIRECTIONS, d, attempt)
        )
        x = project(ds.X, h)
        degenerate = _is_degenerate(x, ds.X, h)
        if fixed or not degenerate:
            break
    attempts = attempt + 1
    if degenerate:
        return DirectionResult(d, 0.0, 0.0, 1.0, 1.0, degenerate=True, attempts=attempts)
    ks, cvm = ks_cvm_statistics(x, f.residuals)
    p_ks, p_cvm = bootstrap_pvalues(
        ds, f, Projection(h, x), cfg, derive_seed(cfg.seed, BOOTSTRAP, d)
    )
    return DirectionResult(d, ks, cvm, p_ks, p_cvm, attempts=attempts)


def run_test(
    ds: MixedDataset,
    cfg: TestConfig | None = None,
    directions: list | None = None,
    fit_result: SFPLRFit | None = None,
) -> TestReport:
    """Fit the model once and test linearity along ``K`` random directions.

    Args:
        ds: The data.
        cfg: Test settings; defaults follow the recommended values
            (7 directions, 10000 bootstrap draws, c = 3).
        directions: Optional fixed direction curves replacing the random draw.
        fit_result: Optional precomputed fit of ``ds`` under ``cfg.fit``.

    Returns:
        Per-direction statistics and p-values plus the merged p-values.
    """
    cfg = cfg or TestConfig()
    f = fit_result if fit_result is not None else fit(ds, cfg.fit)
    if directions is None:
        jn, sd = _direction_law(f.eigensystem)
        tasks = [(d, None) for d in range(cfg.num_directions)]
    else:
        jn = sd = None
        tasks = [(d, np.asarray(h, dtype=float)) for d, h in enumerate(directions)]
        if not tasks:
            raise ValueError("directions must not be empty")

    results = parallel_map(
        lambda t: _one_direction(ds, f, cfg, jn, sd, t[0], t[1]), tasks, cfg.threads
    )
    merged = {
        s: fdr_merge([getattr(r, f"p_{s}") for r in results]) if s in cfg.statistics else None
        for s in STATISTICS
    }
    return TestReport(
        per_direction=tuple(results),
        merged_p_ks=merged["ks"],
        merged_p_cvm=merged["cvm"],
        fit_summary=f.summary(),
        config=cfg,
        seed=int(cfg.seed),
    )
