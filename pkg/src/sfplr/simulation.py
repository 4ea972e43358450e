"""Simulated functional processes, the eight benchmark scenarios, and a Monte Carlo harness.

Data are generated from ``Y = Z'beta_k + <X, rho_k> + delta_d * dev_k(X) + eps``
with ``eps ~ N(0, 0.01)`` on a 200-point grid of [0, 1].
"""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from ._parallel import parallel_map
from ._random import DATA, TEST, as_generator, derive_seed, stream
from .estimation import MixedDataset
from .fda import FunctionalSample, Grid, curve_norm, gram_matrix
from .fpca import empirical_eigen
from .linearity import TestConfig, run_test

__all__ = [
    "ProcessKind",
    "BM",
    "BB",
    "FP",
    "OU",
    "GBM",
    "Scenario",
    "SCENARIOS",
    "LOCAL_DELTA",
    "MonteCarloResult",
    "gen_process",
    "deviation",
    "deviation_sample",
    "gen_scenario",
    "local_alternative_dataset",
    "local_coefficient",
    "rejection_rate",
]

NOISE_SD = 0.1


@dataclass(frozen=True)
class ProcessKind:
    """A functional process family and its parameters."""

    tag: str
    theta: float = 1 / 3
    sigma: float = 1.0
    x0: float = 0.0
    mu: float = 0.0
    s0: float = 2.0
    n_terms: int = 20

    def __post_init__(self):
        if self.tag not in ("BM", "BB", "FP", "OU", "GBM"):
            raise ValueError(f"unknown process {self.tag!r}")
        if self.sigma <= 0 or self.theta <= 0 or self.s0 <= 0 or self.n_terms < 1:
            raise ValueError("process parameters must be positive")


BM = ProcessKind("BM")
BB = ProcessKind("BB")
FP = ProcessKind("FP")
OU = ProcessKind("OU", theta=1 / 3, sigma=1.0, x0=0.0, mu=0.0)
GBM = ProcessKind("GBM", sigma=1.0, mu=0.5, s0=2.0)


def _brownian(n, t, rng):
    dt = np.diff(np.concatenate([[0.0], t]))
    return np.cumsum(rng.standard_normal((n, t.size)) * np.sqrt(dt), axis=1)


def gen_process(
    kind: ProcessKind, n: int, grid: Grid | None = None, rng_seed=0, center: bool = True
) -> FunctionalSample:
    """Draw ``n`` paths of ``kind`` on ``grid`` (then sample-centered by default)."""
    grid = grid or Grid.uniform()
    t = grid.points
    rng = as_generator(rng_seed)
    if kind.tag == "BM":
        X = _brownian(n, t, rng)
    elif kind.tag == "BB":
        B = _brownian(n, t, rng)
        X = B - np.outer(B[:, -1], t / t[-1])
    elif kind.tag == "FP":
        j = np.arange(1, kind.n_terms + 1)
        xi = rng.standard_normal((n, j.size)) / j
        X = xi @ (np.sqrt(2.0) * np.cos(np.pi * np.outer(j, t)))
    elif kind.tag == "OU":
        th, sg = kind.theta, kind.sigma
        s, u = np.meshgrid(t, t, indexing="ij")
        cov = sg**2 / (2 * th) * (np.exp(-th * np.abs(u - s)) - np.exp(-th * (u + s)))
        L = np.linalg.cholesky(cov + 1e-10 * np.eye(t.size))
        mean = kind.x0 * np.exp(-th * t) + kind.mu * (1 - np.exp(-th * t))
        X = mean + rng.standard_normal((n, t.size)) @ L.T
    else:
        B = _brownian(n, t, rng)
        X = kind.s0 * np.exp((kind.mu - kind.sigma**2 / 2) * t + kind.sigma * B)
    if center:
        X = X - X.mean(axis=0)
    return FunctionalSample(grid, X)


def _dev2_kernel(grid: Grid):
    s = grid.points[:, None]
    t = grid.points[None, :]
    w = grid.quad_weights
    k = 25.0 * np.sin(2 * np.pi * t * s) * s * (1 - s) * (1 - t)
    return w[:, None] * k * w[None, :]


def deviation_sample(theta: int, X: FunctionalSample) -> NDArray[np.float64]:
    """Deviation functional ``theta`` evaluated on every curve of ``X``."""
    w = X.grid.quad_weights
    D = X.data
    if theta == 1:
        return np.sqrt(np.maximum(np.sum(w * D * D, axis=1), 0.0))
    if theta == 2:
        return np.einsum("is,st,it->i", D, _dev2_kernel(X.grid), D)
    if theta == 3:
        return np.sum(w * np.exp(-D) * D * D, axis=1)
    raise ValueError(f"deviation index must be 1, 2 or 3, got {theta}")


def deviation(theta: int, X, grid: Grid) -> float:
    """Nonlinear functional: 1 the norm, 2 a quadratic form, 3 ``<exp(-X), X^2>``."""
    if theta == 1:
        return curve_norm(X, grid)
    return float(deviation_sample(theta, FunctionalSample(grid, np.asarray(X)[None, :]))[0])


# -- scenarios --------------------------------------------------------------


def _psi(j, t):
    return np.sqrt(2.0) * np.sin((j - 0.5) * np.pi * t)


def _phi(j, t):
    return np.sqrt(2.0) * np.cos(j * np.pi * t)


def _rho_fp(t):
    return sum(2**1.5 * (-1) ** j / j**2 * _phi(j, t) for j in range(1, 21))


@dataclass(frozen=True)
class Scenario:
    """One benchmark design: linear part, slope curve, process and deviation."""

    index: int
    z_columns: tuple[str, ...]
    beta: tuple[float, ...]
    rho: Callable[[NDArray[np.float64]], NDArray[np.float64]]
    process: ProcessKind
    theta: int
    delta: tuple[float, float, float]

    def __post_init__(self):
        if self.delta[0] != 0:
            raise ValueError("delta_0 must be zero (the null)")
        if len(self.beta) != len(self.z_columns):
            raise ValueError("one coefficient per scalar covariate")

    def rho_on(self, grid: Grid) -> NDArray[np.float64]:
        return np.asarray(self.rho(grid.points), dtype=float)


SCENARIOS: dict[int, Scenario] = {
    1: Scenario(1, ("Z1", "Z2"), (2.0, 1.0),
                lambda t: (2 * _psi(1, t) + 4 * _psi(2, t) + 5 * _psi(3, t)) / np.sqrt(2),
                BM, 1, (0.0, 2 / 5, 4 / 5)),
    2: Scenario(2, ("Z1", "Z2"), (3.0, 2.0),
                lambda t: (2 * _psi(1.5, t) + 4 * _psi(2.5, t) + 5 * _psi(3.5, t)) / np.sqrt(2),
                BB, 2, (0.0, 5 / 2, 15 / 2)),
    3: Scenario(3, ("Z1", "Z2"), (1.0, 2.0), _rho_fp, FP, 2, (0.0, -1.0, -2.0)),
    4: Scenario(4, ("Z3", "Z4"), (1.0, 2.0), _rho_fp, FP, 2, (0.0, -1.0, -3.0)),
    5: Scenario(5, ("Z3",), (2.0,), _rho_fp, FP, 1, (0.0, -1.0, -2.0)),
    6: Scenario(6, ("Z1", "Z2"), (2.0, 1.0),
                lambda t: np.sin(2 * np.pi * t) - np.cos(2 * np.pi * t),
                OU, 2, (0.0, -1 / 4, -1.0)),
    7: Scenario(7, ("Z2",), (2.0,), lambda t: t - (t - 0.75) ** 2, OU, 3, (0.0, -1 / 100, -1 / 2)),
    8: Scenario(8, ("Z1", "Z2"), (2.0, 1.0), lambda t: np.pi**2 * (t**2 - 1 / 3),
                GBM, 3, (0.0, 5 / 2, 9 / 2)),
}

# first-deviation coefficients anchoring the local alternatives at n = 50
LOCAL_DELTA = {1: 2 / 5, 2: 5 / 2, 3: -1.0, 8: 5 / 2}


def _scenario(sc) -> Scenario:
    if isinstance(sc, Scenario):
        return sc
    if sc not in SCENARIOS:
        raise ValueError(f"scenario must be one of 1..8, got {sc}")
    return SCENARIOS[sc]


def _generate(sc: Scenario, coef: float, n: int, rng_seed, grid, noise: bool) -> MixedDataset:
    grid = grid or Grid.uniform()
    seed = int(rng_seed)
    X = gen_process(sc.process, n, grid, stream(seed, 0))
    zrng = stream(seed, 1)
    pool = {
        "Z1": zrng.normal(1.0, 0.5, n),
        "Z2": zrng.normal(2.0, 1.0, n),
    }
    if {"Z3", "Z4"} & set(sc.z_columns):
        scores = empirical_eigen(X, center=True).scores
        pad = np.zeros((n, max(0, 4 - scores.shape[1])))
        scores = np.hstack([scores, pad])
        pool["Z3"] = 10.0 * scores[:, 2]
        pool["Z4"] = 4.0 * scores[:, 3]
    Z = np.column_stack([pool[c] for c in sc.z_columns])
    Y = Z @ np.asarray(sc.beta) + gram_matrix(X.data, grid, sc.rho_on(grid)[None, :])[:, 0]
    if coef != 0:
        Y = Y + coef * deviation_sample(sc.theta, X)
    if noise:
        Y = Y + stream(seed, 2).normal(0.0, NOISE_SD, n)
    return MixedDataset(X, Z, Y, z_names=sc.z_columns)


def gen_scenario(sc, d: int, n: int, rng_seed=0, grid: Grid | None = None, noise: bool = True):
    """Dataset from scenario ``sc`` (index or :class:`Scenario`) at deviation ``d``.

    ``noise=False`` drops the error term, which makes the null model exact.
    """
    sc = _scenario(sc)
    if d not in (0, 1, 2):
        raise ValueError(f"deviation index must be 0, 1 or 2, got {d}")
    return _generate(sc, sc.delta[d], n, rng_seed, grid, noise)


def local_coefficient(k: int, n: int) -> float:
    """``sqrt(50 / n)`` times the first deviation coefficient of scenario ``k``."""
    if k not in LOCAL_DELTA:
        raise ValueError(f"local alternatives exist for scenarios {sorted(LOCAL_DELTA)}, got {k}")
    return float(np.sqrt(50.0 / n) * LOCAL_DELTA[k])


def local_alternative_dataset(k: int, n: int, rng_seed=0, grid: Grid | None = None, noise: bool = True):
    return _generate(_scenario(k), local_coefficient(k, n), n, rng_seed, grid, noise)


# -- Monte Carlo ------------------------------------------------------------


@dataclass(frozen=True)
class MonteCarloResult:
    scenario: int
    deviation: int | str
    n: int
    M: int
    B: int
    K: int
    alpha: float
    rejection_rate_ks: float
    rejection_rate_cvm: float
    elapsed: float
    seed: int = 0
    pvalues_ks: tuple[float, ...] = ()
    pvalues_cvm: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["pvalues_ks"] = list(self.pvalues_ks)
        d["pvalues_cvm"] = list(self.pvalues_cvm)
        return d


def rejection_rate(
    sc,
    d,
    n: int,
    M: int,
    cfg: TestConfig | None = None,
    rng_seed: int = 0,
    threads: int | None = None,
    directions: list | None = None,
) -> MonteCarloResult:
    """Empirical rejection frequency of the merged tests over ``M`` replicates.

    Args:
        sc: Scenario index or object.
        d: Deviation index 0, 1, 2, or ``"local"`` for the local alternative.
        n: Sample size.
        M: Number of Monte Carlo replicates.
        cfg: Test settings; its seed is replaced per replicate.
        rng_seed: Master seed.
        threads: Replicates run concurrently on this many threads.
        directions: Fixed direction curves used in every replicate.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    cfg = cfg or TestConfig()
    sc = _scenario(sc)
    if d == "local":
        make = lambda seed: local_alternative_dataset(sc.index, n, seed)  # noqa: E731
    else:
        make = lambda seed: gen_scenario(sc, d, n, seed)  # noqa: E731

    def replicate(m):
        ds = make(derive_seed(rng_seed, DATA, m))
        rcfg = dataclasses.replace(cfg, seed=derive_seed(rng_seed, TEST, m), threads=1)
        rep = run_test(ds, rcfg, directions=directions)
        return (
            _p_or_one(rep.merged_p_ks),
            _p_or_one(rep.merged_p_cvm),
        )

    start = time.perf_counter()
    pv = parallel_map(replicate, range(M), threads)
    elapsed = time.perf_counter() - start
    p_ks = np.array([p[0] for p in pv])
    p_cvm = np.array([p[1] for p in pv])
    return MonteCarloResult(
        scenario=sc.index,
        deviation=d,
        n=n,
        M=M,
        B=cfg.bootstrap_reps,
        K=cfg.num_directions if directions is None else len(directions),
        alpha=cfg.alpha,
        rejection_rate_ks=float(np.mean(p_ks <= cfg.alpha)),
        rejection_rate_cvm=float(np.mean(p_cvm <= cfg.alpha)),
        elapsed=elapsed,
        seed=int(rng_seed),
        pvalues_ks=tuple(float(p) for p in p_ks),
        pvalues_cvm=tuple(float(p) for p in p_cvm),
    )


def _p_or_one(p):
    return 1.0 if p is None else float(p)
