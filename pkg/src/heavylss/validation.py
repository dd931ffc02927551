"""Identity and oracle suites with fixed, seeded sample panels.

Each suite returns a :class:`SuiteResult` holding the largest residual seen,
the tolerance it is held to and the wall time. :func:`run_validation` runs
them all; the command line ``validate`` is a thin wrapper around it.
"""

import time
import warnings
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .covariance import ModelParams, cov_closed, k_alpha
from .errors import NonConvergenceError
from .kernel import (TestFunction, lambda_measure_apply, pairing, phi_function,
                     plemelj_reconstruct, resolvent_lambda_residual)
from .oracles import (cov_double_laplace_fd, cov_log_fd, cov_r_integral, frac_power_constant,
                      frac_power_exact_residual, frac_power_identity_residual,
                      res_integral_identity_residual)
from .quadrature import DEFAULT_QCFG

LAMBDA_US = (0.3, 0.9, 1.0, 2.0, 5.0)
PLEMELJ_US = (0.5, 2.0)
# below this alpha the contracts relax to 1e-6 (quadrature near the alpha = 2 end)
NEAR_BOUNDARY_ALPHA = 2.1


@dataclass(frozen=True)
class SuiteResult:
    name: str
    max_residual: float
    tolerance: float
    seconds: float
    count: int

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_residual) and self.max_residual < self.tolerance)


def oracle_panel():
    """20 (z, w) pairs: both half-planes, near and far from [-2, 2], on and off the diagonal."""
    return [
        (2j, 3j), (2j, 1 + 1j), (1 + 1j, 1 - 1j), (0.5 + 0.3j, -1.5 + 0.4j), (2.5 + 0.3j, 2j),
        (1j, 1j), (0.5j, -0.5j), (-1 + 0.5j, 1 + 0.5j), (3 + 1j, -3 - 1j), (0.2 + 0.25j, 0.3 + 0.25j),
        (1.8 + 0.3j, 1.9 + 0.3j), (-2.2 + 0.4j, 0.1 + 2j), (4j, 0.5 + 0.5j), (1.5 - 0.6j, -1.5 - 0.6j),
        (2.1 + 0.2j, -2.1 + 0.2j), (5 + 0.5j, 1j), (-0.7 + 1.3j, -0.7 - 1.3j), (3j, 3j),
        (0.9 + 0.35j, -0.4 + 0.8j), (1.2 + 2.5j, 2.8 - 0.9j),
    ]


def frac_power_sigmas(n, seed):
    """Random sigma with Re(sigma) < 0."""
    rng = np.random.default_rng(seed)
    re = -np.exp(rng.uniform(np.log(0.05), np.log(5.0), n))
    im = rng.uniform(-5.0, 5.0, n)
    return re + 1j * im


def res_integral_sigmas(n, seed):
    """Random non-real pairs (sigma_1, sigma_2), |Im| >= 0.05."""
    rng = np.random.default_rng(seed)
    re = rng.uniform(-5.0, 5.0, (n, 2))
    im = np.exp(rng.uniform(np.log(0.05), np.log(5.0), (n, 2))) * rng.choice([-1.0, 1.0], (n, 2))
    s = re + 1j * im
    return s[:, 0], s[:, 1]


def plemelj_points():
    """10 sample z for the Plemelj reconstruction (off [-2, 2], away from the atoms)."""
    return [2j, 1 + 0.3j, -1.5 + 0.2j, 0.3 - 0.5j, 3 + 0.1j, -3 - 0.4j, 2.2 + 0.05j,
            0.5j, -0.1 + 4j, 1.9 - 0.3j]


def _timed(name, tol, residuals_fn):
    t0 = time.perf_counter()
    res = np.asarray(residuals_fn(), dtype=float)
    worst = float(np.max(res)) if res.size else 0.0
    return SuiteResult(name, worst, tol, time.perf_counter() - t0, int(res.size))


def suite_frac_power(params, qcfg=DEFAULT_QCFG, n=100, seed=11, printed_constant=False, tol=1e-8):
    """LHS of the fractional-power identity against c_a (-sigma)^(a/2).

    c_a is Gamma(-a/2) by default, or k_a with ``printed_constant``.
    """
    sig = frac_power_sigmas(n, seed)
    fn = frac_power_identity_residual if printed_constant else frac_power_exact_residual
    name = "frac-power (k_alpha)" if printed_constant else "frac-power (Gamma(-alpha/2))"
    return _timed(name, tol, lambda: [fn(s, params, qcfg) for s in sig])


def suite_res_integral(params, qcfg=DEFAULT_QCFG, n=100, seed=12, tol=1e-8):
    s1, s2 = res_integral_sigmas(n, seed)
    return _timed("res-integral", tol,
                  lambda: [res_integral_identity_residual(a, b, params, qcfg) for a, b in zip(s1, s2)])


def _rel(a, b):
    return abs(a - b) / abs(b)


def _rel_or_inf(thunk, ref):
    """Relative error of thunk() against ref; a case that fails to converge counts as inf."""
    try:
        return _rel(thunk(), ref)
    except NonConvergenceError:
        return np.inf


def suite_oracle_chain(params, qcfg=DEFAULT_QCFG, panel=None, fd_step=None,
                       printed_constant=False, tols=(1e-8, 1e-4, 1e-3)):
    """r-integral, log-product FD and double-Laplace FD against cov_closed.

    The double-Laplace integral carries the constant Gamma(-a/2) where the
    closed form has k_a; by default its target is rescaled by
    k_a/Gamma(-a/2), with ``printed_constant`` it is compared to cov_closed as is.
    """
    panel = oracle_panel() if panel is None else panel
    ref = [cov_closed(z, w, params) for z, w in panel]
    dl_factor = 1.0 if printed_constant else k_alpha(params) / frac_power_constant(params)
    out = [
        _timed("oracle r-integral", tols[0],
               lambda: [_rel(cov_r_integral(z, w, params, qcfg), r) for (z, w), r in zip(panel, ref)]),
        _timed("oracle log-product FD", tols[1],
               lambda: [_rel_or_inf(lambda: cov_log_fd(z, w, params, qcfg, fd_step=fd_step), r)
                        for (z, w), r in zip(panel, ref)]),
    ]
    name = "oracle double-Laplace FD" + (" (k_alpha)" if printed_constant else "")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        out.append(_timed(name, tols[2], lambda: [
            _rel_or_inf(lambda: cov_double_laplace_fd(z, w, params, qcfg, fd_step=fd_step),
                        dl_factor * r)
            for (z, w), r in zip(panel, ref)]))
    return out


def suite_lambda_resolvent(qcfg=DEFAULT_QCFG, us=LAMBDA_US, tol=1e-8):
    zs = [2j, 1 + 0.5j, 0.3 + 0.01j, 2.5 + 0.1j, -1.7 - 0.2j, 1 + 1j]
    return _timed("Lambda_u resolvent identity", tol,
                  lambda: [resolvent_lambda_residual(u, z, qcfg) for u in us for z in zs])


def suite_lambda_moments(qcfg=DEFAULT_QCFG, us=(0.5, 2.0), tol=1e-8):
    """|Lambda_u(1)| and the relative error of Lambda_u(x^2) against 2u^2."""
    one = TestFunction.from_callable(np.ones_like)
    sq = TestFunction.from_callable(np.square)

    def residuals():
        out = []
        for u in us:
            out.append(abs(lambda_measure_apply(u, one, qcfg)))
            out.append(abs(lambda_measure_apply(u, sq, qcfg) - 2 * u * u) / (2 * u * u))
        return out

    return _timed("Lambda_u moments", tol, residuals)


def suite_plemelj(qcfg=DEFAULT_QCFG, us=PLEMELJ_US, tol=1e-6):
    return _timed("Plemelj reconstruction", tol, lambda: [
        _rel(plemelj_reconstruct(u, z, qcfg), complex(phi_function(u, z)))
        for u in us for z in plemelj_points()])


def suite_pairing(params, qcfg=DEFAULT_QCFG, panel=None, tol=1e-6):
    panel = oracle_panel() if panel is None else panel
    return _timed("pairing vs closed form", tol, lambda: [
        _rel(pairing(TestFunction.resolvent(z), TestFunction.resolvent(w), params, qcfg),
             cov_closed(z, w, params)) for z, w in panel])


def run_validation(params: ModelParams, qcfg=DEFAULT_QCFG, fd_step: Optional[float] = None,
                   printed_constant=False, n_sigma=100, progress=None) -> List[SuiteResult]:
    """Every suite at the given parameters. Near alpha = 2 contracts relax to 1e-6."""
    relax = params.alpha < NEAR_BOUNDARY_ALPHA

    def tol(t):
        return max(t, 1e-6) if relax else t

    steps = [
        lambda: [suite_frac_power(params, qcfg, n_sigma, printed_constant=printed_constant,
                                  tol=tol(1e-8))],
        lambda: [suite_res_integral(params, qcfg, n_sigma, tol=tol(1e-8))],
        lambda: suite_oracle_chain(params, qcfg, fd_step=fd_step, printed_constant=printed_constant,
                                   tols=(tol(1e-8), tol(1e-4), tol(1e-3))),
        lambda: [suite_lambda_resolvent(qcfg, tol=tol(1e-8))],
        lambda: [suite_lambda_moments(qcfg, tol=tol(1e-8))],
        lambda: [suite_plemelj(qcfg, tol=tol(1e-6))],
        lambda: [suite_pairing(params, qcfg, tol=tol(1e-6))],
    ]
    results = []
    for step in steps:
        for r in step():
            results.append(r)
            if progress is not None:
                progress(r)
    return results
