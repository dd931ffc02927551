"""Principal-branch fractional powers and cancellation-free differences of them.

numpy's complex ``log1p`` is evaluated as ``log(1 + z)`` and loses all relative
accuracy for small ``z``; the helpers below are accurate to a few ulps.
"""

import numpy as np

from .errors import DomainError

#: arguments with |arg| above this are treated as lying on the branch cut
ARG_GUARD = np.pi - 1e-12


def cexpm1(z):
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    re = np.expm1(x) * np.cos(y) - 2.0 * np.sin(0.5 * y) ** 2
    im = np.exp(x) * np.sin(y)
    return re + 1j * im


def clog1p(z):
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    re = 0.5 * np.log1p(x * (2.0 + x) + y * y)
    im = np.arctan2(y, 1.0 + x)
    return re + 1j * im


def check_off_cut(x, what="argument"):
    """Raise if any entry of ``x`` sits on the closed negative real axis."""
    x = np.asarray(x, dtype=complex)
    bad = (np.abs(np.angle(x)) > ARG_GUARD) | (x == 0)
    if np.any(bad):
        raise DomainError(f"{what} lies on the principal branch cut (-inf, 0]")


def principal_power(x, p, what="argument"):
    """``x**p`` on the principal branch, refusing arguments on the cut."""
    x = np.asarray(x, dtype=complex)
    check_off_cut(x, what)
    return np.exp(p * np.log(x))


def power_difference(a, b, p, diff=None, guard=True):
    """``a**p - b**p`` on the principal branch.

    ``diff`` may carry an accurately computed ``a - b``; it is used in place
    of the rounded subtraction.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if diff is None:
        diff = a - b
    ratio = np.asarray(diff, dtype=complex) / b
    near = clog1p(ratio)
    wrap = np.round((np.angle(a) - np.angle(b) - near.imag) / (2 * np.pi))
    base = principal_power(b, p) if guard else np.exp(p * np.log(b))
    return base * cexpm1(p * (near + 2j * np.pi * wrap))


def neg_power_divided_difference(s1, s2, p, diff=None, guard=True):
    """``((-s1)**p - (-s2)**p) / (s1 - s2)`` with its confluent limit.

    At ``s1 == s2`` the value is ``-p (-s1)**(p-1)``. ``diff`` optionally
    supplies ``s1 - s2`` computed without cancellation. Vectorized.
    ``guard=False`` skips the cut check for callers whose arguments carry a
    meaningful signed imaginary part arbitrarily close to the cut.
    """
    s1 = np.asarray(s1, dtype=complex)
    s2 = np.asarray(s2, dtype=complex)
    if diff is None:
        diff = s1 - s2
    diff = np.asarray(diff, dtype=complex)
    a, b = -s1, -s2
    if guard:
        check_off_cut(a, "-sigma_1")
        check_off_cut(b, "-sigma_2")
    s1, s2, diff, a, b = np.broadcast_arrays(s1, s2, diff, a, b)
    out = np.empty(a.shape, dtype=complex)
    same = diff == 0
    if np.any(~same):
        d = diff[~same]
        out[~same] = power_difference(a[~same], b[~same], p, diff=-d, guard=guard) / d
    if np.any(same):
        out[same] = -p * np.exp((p - 1.0) * np.log(a[same]))
    return out[()] if out.ndim == 0 else out
