"""Closed-form limiting covariance C(z, w) of resolvent-trace fluctuations.

For z, w off the real axis, with m = m(z), m_w = m(w) and p = alpha/2 - 1::

    C(z, w) = 4 c pi m m' m_w m_w' / (k_alpha sin(pi alpha / 2))
              * [(-m^2)^p - (-m_w^2)^p] / (m^2 - m_w^2)

Fractional powers are principal. The bracketed divided difference is formed
with ``expm1``/``log1p`` so it stays accurate up to and including the
confluent case m^2 = m_w^2, where it equals ``-p (-m^2)^(p-1)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from ._branch import cexpm1, clog1p, neg_power_divided_difference, principal_power
from .errors import DomainError
from .semicircle import stieltjes

#: c for which k_3 = 8 sqrt(pi) / 15 cancels, i.e. c / k_3 = 1
FIGURE_C = 8.0 * np.sqrt(np.pi) / 15.0


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    c: float = 1.0

    def __post_init__(self):
        if not 2.0 < self.alpha < 4.0:
            raise DomainError(f"alpha must lie in the open interval (2, 4), got {self.alpha}")
        if not self.c > 0:
            raise DomainError(f"c must be positive, got {self.c}")


def k_alpha(params):
    """2 Gamma(2 - alpha/2) / ((alpha/2)(1 + alpha/2))."""
    alpha = params.alpha if isinstance(params, ModelParams) else float(params)
    if not 2.0 < alpha < 4.0:
        raise DomainError(f"alpha must lie in the open interval (2, 4), got {alpha}")
    h = alpha / 2
    return 2.0 * gamma(2.0 - h) / (h * (1.0 + h))


def _prefactor(params):
    return 4.0 * params.c * np.pi / (k_alpha(params) * np.sin(np.pi * params.alpha / 2))


def _m_mprime(z):
    m = np.asarray(stieltjes(z))
    m2 = m * m
    if np.any(np.abs(m2 - 1.0) < 1e-14):
        raise DomainError("m'(z) is singular at z = +-2")
    return m, m2, m * m2 / (m2 - 1.0)


def _reduce(out):
    out = np.asarray(out)
    return complex(out) if out.ndim == 0 else out


def cov_closed(z, w, params):
    """C(z, w) with principal-branch powers; vectorized over z and w."""
    mz, mz2, gz = _m_mprime(z)
    mw, mw2, gw = _m_mprime(w)
    # canonical argument order makes C(z, w) and C(w, z) bit-identical
    swap = (mz2.real > mw2.real) | ((mz2.real == mw2.real) & (mz2.imag > mw2.imag))
    s1, s2 = np.where(swap, mw2, mz2), np.where(swap, mz2, mw2)
    diff = np.where(swap, -1.0, 1.0) * (mz - mw) * (mz + mw)
    ratio = neg_power_divided_difference(s1, s2, params.alpha / 2 - 1.0, diff=diff)
    g1, g2 = np.where(swap, gw, gz), np.where(swap, gz, gw)
    return _reduce(_prefactor(params) * (g1 * g2) * ratio)


def cov_diag(z, params):
    """C(z, z) from the confluent evaluation -p (-m^2)^(p-1) of the bracket."""
    m, m2, g = _m_mprime(z)
    p = params.alpha / 2 - 1.0
    bracket = -p * principal_power(-m2, p - 1.0, "-m(z)^2")
    return _reduce(_prefactor(params) * g * g * bracket)


def _log_signed_power(z, m, q, p):
    """log of exp(i sgn(Im z) pi p) m^q (q = alpha - 2), left unreduced."""
    sgn = np.sign(np.asarray(z, dtype=complex).imag)
    if np.any(sgn == 0):
        raise DomainError("the sign-resolved form needs z off the real axis")
    log_t = 1j * np.pi * p * sgn + q * np.log(m)
    return log_t


def cov_remark_form(z, w, params):
    """C(z, w) via (-m^2)^(alpha/2 - 1) = exp(i sgn(Im z) pi (alpha/2 - 1)) m^(alpha-2).

    Equal to :func:`cov_closed`; it never forms (-m^2) and therefore never
    touches the principal cut of the power function.
    """
    alpha = params.alpha
    p, q = alpha / 2 - 1.0, alpha - 2.0
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    mz, mz2, gz = _m_mprime(z)
    mw, mw2, gw = _m_mprime(w)
    lz = _log_signed_power(z, mz, q, p)
    lw = _log_signed_power(w, mw, q, p)
    lz, lw, mz, mw = np.broadcast_arrays(lz, lw, mz, mw)
    # T(z) - T(w) = T(w) expm1(log T(z) - log T(w)); the log difference is
    # reduced mod 2 pi i and, for equal half-planes, taken through log1p
    same_side = np.sign(z.imag) == np.sign(w.imag)
    same_side = np.broadcast_to(same_side, lz.shape)
    dlog = np.where(
        same_side,
        q * clog1p((mz - mw) / mw),
        lz - lw,
    )
    dlog = dlog - 2j * np.pi * np.round(dlog.imag / (2 * np.pi))
    denom = (mz - mw) * (mz + mw)
    with np.errstate(divide="ignore", invalid="ignore"):
        bracket = np.exp(lw) * cexpm1(dlog) / denom
    confluent = denom == 0
    if np.any(confluent):
        limit = 0.5 * q * np.exp(lz - 2.0 * np.log(mz))
        bracket = np.where(confluent, limit, bracket)
    return _reduce(_prefactor(params) * gz * gw * bracket)


def cov_real_combination(E, F, eta1, eta2, params):
    """-(1/4 pi^2) [C(z,w) + C(zb,wb) - C(zb,w) - C(z,wb)] at z = E+i eta1, w = F+i eta2.

    This is the density that tends to the kernel K_alpha(E, F) as eta -> 0.
    """
    if not (eta1 > 0 and eta2 > 0):
        raise DomainError("eta1 and eta2 must be positive")
    z = E + 1j * eta1
    w = F + 1j * eta2
    zb, wb = np.conj(z), np.conj(w)
    total = (cov_closed(z, w, params) + cov_closed(zb, wb, params)
             - cov_closed(zb, w, params) - cov_closed(z, wb, params))
    val = -np.asarray(total) / (4 * np.pi**2)
    return float(val.real) if val.ndim == 0 else val.real


def cov_real_combination_imag(E, F, eta1, eta2, params):
    """Imaginary residue discarded by :func:`cov_real_combination` (zero in exact arithmetic)."""
    z = E + 1j * eta1
    w = F + 1j * eta2
    zb, wb = np.conj(z), np.conj(w)
    total = (cov_closed(z, w, params) + cov_closed(zb, wb, params)
             - cov_closed(zb, w, params) - cov_closed(z, wb, params))
    return float(np.abs(np.imag(total)) / (4 * np.pi**2))
