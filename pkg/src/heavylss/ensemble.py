"""Monte Carlo for the real symmetric heavy-tailed Wigner ensemble.

Entries are symmetrized Pareto variables x = s b U^(-1/alpha) with
b = sqrt((alpha - 2)/alpha): mean 0, variance 1 and the exact tail
P(|x| > t) = (t/b)^(-alpha) for t >= b. Every sample draws from its own
Philox stream keyed by (seed, sample_index), so results do not depend on how
samples are scheduled across threads.
"""

import csv
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gamma

from .errors import DomainError

THREADS_ENV = "HEAVYLSS_THREADS"
MIN_IMAG = 0.1


def _check_alpha(alpha):
    if not 2.0 < alpha < 4.0:
        raise DomainError(f"alpha must lie in the open interval (2, 4), got {alpha}")


def tail_constant_c(alpha: float) -> float:
    """Gamma(alpha + 1) ((alpha - 2)/alpha)^(alpha/2), the tail constant of the sampler."""
    _check_alpha(alpha)
    return float(gamma(alpha + 1.0) * ((alpha - 2.0) / alpha) ** (alpha / 2.0))


def entry_scale(alpha: float) -> float:
    _check_alpha(alpha)
    return float(np.sqrt((alpha - 2.0) / alpha))


def sample_entry(alpha: float, rng: np.random.Generator, size=None):
    """Draw symmetrized Pareto entries (a scalar if ``size`` is None)."""
    b = entry_scale(alpha)
    # 1 - random() lies in (0, 1], so the magnitude is finite and >= b
    mag = b * (1.0 - rng.random(size)) ** (-1.0 / alpha)
    sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    out = sign * mag
    return float(out) if size is None else out


@dataclass(frozen=True)
class EnsembleConfig:
    N: int
    M: int
    alpha: float
    seed: int
    z_grid: Sequence[complex] = field(default=(2j,))

    def __post_init__(self):
        if self.N < 2 or self.M < 2:
            raise DomainError("need N >= 2 and M >= 2")
        _check_alpha(self.alpha)
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        grid = tuple(complex(z) for z in self.z_grid)
        if not grid:
            raise DomainError("z_grid is empty")
        for z in grid:
            if abs(z.imag) < MIN_IMAG:
                raise DomainError(f"|Im z| must be >= {MIN_IMAG}, got z = {z}")
        object.__setattr__(self, "z_grid", grid)


@dataclass(frozen=True)
class CovarianceEstimate:
    z: complex
    w: complex
    estimate: complex
    stderr: float
    M_effective: int
    bootstrap_stderr: Optional[float] = None


def sample_rng(seed: int, sample_index: int) -> np.random.Generator:
    """Counter-based stream for one sample, independent of all others."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(sample_index),))
    return np.random.Generator(np.random.Philox(ss))


def sample_matrix(cfg: EnsembleConfig, sample_index: int) -> np.ndarray:
    """A_N = [x_ij / sqrt(N)], the upper triangle i.i.d., mirrored below."""
    rng = sample_rng(cfg.seed, sample_index)
    X = sample_entry(cfg.alpha, rng, size=(cfg.N, cfg.N))
    upper = np.triu(X)
    A = upper + np.triu(upper, 1).T
    return A / np.sqrt(cfg.N)


def eigenvalues(matrix) -> np.ndarray:
    """Ascending eigenvalues of a real symmetric matrix (LAPACK via numpy)."""
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError("matrix must be square")
    if not np.array_equal(A, A.T):
        raise DomainError("matrix must be symmetric")
    return np.linalg.eigvalsh(A)


def resolvent_trace(eigs, z):
    """Tr (z - A)^(-1) = sum_j 1/(z - lambda_j); ``z`` may be an array."""
    eigs = np.asarray(eigs, dtype=float)
    z = np.asarray(z, dtype=complex)
    gaps = z[..., None] - eigs
    if np.min(np.abs(gaps)) < 1e-8:
        warnings.warn("z lies within 1e-8 of an eigenvalue", RuntimeWarning, stacklevel=2)
    out = (1.0 / gaps).sum(axis=-1)
    return complex(out) if out.ndim == 0 else out


def worker_count(threads: Optional[int] = None) -> int:
    """Requested threads, capped by $HEAVYLSS_THREADS when set."""
    n = threads if threads is not None else (os.cpu_count() or 1)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            cap = int(env)
        except ValueError as exc:
            raise DomainError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
        n = min(n, cap)
    return max(1, int(n))


def sample_traces(cfg: EnsembleConfig, threads: Optional[int] = None) -> np.ndarray:
    """(M, len(z_grid)) array of Tr G_i(z)."""
    zs = np.asarray(cfg.z_grid, dtype=complex)

    def one(i):
        return resolvent_trace(eigenvalues(sample_matrix(cfg, i)), zs)

    n = worker_count(threads)
    if n == 1:
        rows = [one(i) for i in range(cfg.M)]
    else:
        # eigvalsh releases the GIL; map() returns in index order
        with ThreadPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(one, range(cfg.M)))
    return np.vstack(rows)


def _pair_indices(n, pairs):
    if pairs is None:
        return [(i, j) for i in range(n) for j in range(i, n)]
    return [tuple(p) for p in pairs]


def covariance_from_traces(cfg: EnsembleConfig, traces, pairs=None, bootstrap: int = 0):
    """Scaled sample covariances N^(alpha/2 - 2) cov(T(z), T(w)) (no conjugation).

    ``pairs`` lists index pairs into ``z_grid`` (default: all i <= j).
    ``bootstrap`` > 0 adds a resampled stderr from that many replicates.
    """
    T = np.asarray(traces, dtype=complex)
    M = T.shape[0]
    scale = cfg.N ** (cfg.alpha / 2.0 - 2.0)
    D = T - T.mean(axis=0)
    boot_rng = sample_rng(cfg.seed, 2**63) if bootstrap else None
    out = []
    for i, j in _pair_indices(T.shape[1], pairs):
        P = D[:, i] * D[:, j]
        est = scale * P.sum() / (M - 1)
        se = scale * np.sqrt(np.var(P.real, ddof=1) + np.var(P.imag, ddof=1)) / np.sqrt(M)
        bse = None
        if bootstrap:
            idx = boot_rng.integers(0, M, size=(bootstrap, M))
            Ti, Tj = T[idx, i], T[idx, j]
            Di = Ti - Ti.mean(axis=1, keepdims=True)
            Dj = Tj - Tj.mean(axis=1, keepdims=True)
            reps = scale * (Di * Dj).sum(axis=1) / (M - 1)
            bse = float(np.sqrt(np.var(reps.real, ddof=1) + np.var(reps.imag, ddof=1)))
        out.append(CovarianceEstimate(cfg.z_grid[i], cfg.z_grid[j], complex(est), float(se), M, bse))
    return out


def empirical_fluct_covariance(cfg: EnsembleConfig, pairs=None, threads: Optional[int] = None,
                               bootstrap: int = 0):
    """Empirical fluctuation covariance for each (z, w) pair of the grid."""
    return covariance_from_traces(cfg, sample_traces(cfg, threads), pairs, bootstrap)


def write_traces_csv(path, cfg: EnsembleConfig, traces) -> None:
    """One row per (sample, z): ``sample,re_z,im_z,re_T,im_T``."""
    T = np.asarray(traces, dtype=complex)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["sample", "re_z", "im_z", "re_T", "im_T"])
        for i in range(T.shape[0]):
            for k, z in enumerate(cfg.z_grid):
                wr.writerow([i, f"{z.real:.17g}", f"{z.imag:.17g}",
                             f"{T[i, k].real:.17g}", f"{T[i, k].imag:.17g}"])
