"""Stieltjes transform of the semicircle law on [-2, 2].

Convention: ``m(z) = \\int sigma(dx) / (z - x)``, so ``m + 1/m = z`` and
``Im m(z)`` has the opposite sign of ``Im z``. Points are plain Python or
numpy complex numbers; every function accepts scalars or arrays.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BranchPointError, DomainError


def _check_off_support(z):
    z = np.asarray(z, dtype=complex)
    on_cut = (z.imag == 0) & (np.abs(z.real) <= 2)
    if np.any(on_cut):
        raise DomainError("z lies on the support [-2, 2] of the semicircle law")
    if not np.all(np.isfinite(z)):
        raise DomainError("z must be finite")
    return z


def stieltjes(z):
    """Semicircle Stieltjes transform m(z) for z off [-2, 2].

    Both roots of ``m**2 - z m + 1`` are formed without cancellation (the
    larger one directly, the smaller as its reciprocal); the Herglotz root is
    then picked by the sign of its imaginary part, or by ``|m| < 1`` on the
    real axis.

    >>> complex(stieltjes(3.0)).real
    0.3819660112501051
    """
    z = _check_off_support(z)
    q = np.sqrt(z * z - 4.0)
    q = np.where((z.real * q.real + z.imag * q.imag) < 0, -q, q)
    big = 0.5 * (z + q)
    small = 1.0 / big
    on_axis = z.imag == 0
    herglotz_small = np.sign(small.imag) == -np.sign(z.imag)
    pick_small = np.where(on_axis, np.abs(small) < 1.0, herglotz_small)
    m = np.where(pick_small, small, big)
    return m[()] if m.ndim == 0 else m


def stieltjes_derivative(z):
    """m'(z) = m^2 / (m^2 - 1), from differentiating the fixed point m = 1/(z - m)."""
    m = np.asarray(stieltjes(z))
    m2 = m * m
    if np.any(np.abs(m2 - 1.0) < 1e-14):
        raise BranchPointError("m'(z) is singular at z = +-2")
    d = m2 / (m2 - 1.0)
    return d[()] if d.ndim == 0 else d


@dataclass(frozen=True)
class BoundaryPair:
    """Limits m(E + i0) and m(E - i0)."""

    m_plus: complex
    m_minus: complex


def _check_edge(E):
    E = np.asarray(E, dtype=float)
    if np.any(np.abs(E) == 2.0):
        raise BranchPointError("E = +-2 is a branch point of m")
    return E


def m_plus(E):
    """Vectorized boundary value m(E + i0)."""
    E = _check_edge(E)
    inside = np.abs(E) < 2
    root_in = np.sqrt(np.clip(4.0 - E * E, 0.0, None))
    root_out = np.sqrt(np.clip(E * E - 4.0, 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        outside = 2.0 / (E + np.sign(E) * root_out)
    out = np.where(inside, 0.5 * (E - 1j * root_in), outside + 0j)
    return out[()] if out.ndim == 0 else out


def m_plus_derivative(E):
    m = np.asarray(m_plus(E))
    m2 = m * m
    out = m2 / (m2 - 1.0)
    return out[()] if out.ndim == 0 else out


def boundary_values(E):
    """(m_+(E), m_-(E)); the two coincide off the support."""
    E = float(E)
    mp = complex(m_plus(E))
    mm = mp.conjugate() if abs(E) < 2 else mp
    return BoundaryPair(mp, mm)


def boundary_derivative(E):
    """(m_+'(E), m_-'(E)), i.e. m^2/(m^2 - 1) applied to each boundary value."""
    pair = boundary_values(E)
    f = lambda m: m * m / (m * m - 1.0)
    return BoundaryPair(f(pair.m_plus), f(pair.m_minus))


def semicircle_density(x):
    x = np.asarray(x, dtype=float)
    out = np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2 * np.pi)
    return out[()] if out.ndim == 0 else out


def semicircle_cdf(x):
    x = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    out = 0.5 + x * np.sqrt(4.0 - x * x) / (4 * np.pi) + np.arcsin(x / 2) / np.pi
    return out[()] if out.ndim == 0 else out
