"""The measures Lambda_u, the bilinear pairing <K_alpha, psi x phi> and its kernel density.

The pairing of two bounded test functions is

    <K, psi x phi> = (2c / k_alpha) int_0^inf Lambda_u(psi) Lambda_u(phi) u^(-1-alpha) du,

where Lambda_u is a signed density on [-2, 2] plus unit atoms at
+-(u + 1/u) for u > 1 (half weight at u = 1, where they sit on the edges).
Equivalently it integrates psi(E) phi(F) against a distribution K(E, F) that
has a density on the three regions bulk-bulk, edge-bulk, bulk-edge and a
line mass on |E| = |F| > 2. Both forms are implemented and checked against
each other and against the closed-form covariance.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._branch import neg_power_divided_difference
from .covariance import ModelParams, cov_real_combination, k_alpha
from .errors import BranchPointError, DomainError, PoleCollisionError
from .quadrature import DEFAULT_QCFG, quad, quad_halfline, quad_power_head
from .semicircle import m_plus, stieltjes, stieltjes_derivative

def measure_prefactor(params):
    """2c/k_alpha: the weight that makes the u-form reproduce cov_closed on resolvents."""
    return 2.0 * params.c / k_alpha(params)


# inner (measure) integrals are resolved this much tighter than the outer u-integral
_OUTER_REL_FLOOR = 1e-9


# ---------------------------------------------------------------- test functions


def _smoothstep(t):
    """C-infinity ramp: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        g0 = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        g1 = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return g0 / (g0 + g1)


@dataclass(frozen=True)
class TestFunction:
    """A bounded test function on the real line.

    ``kind`` is ``"resolvent"`` (x -> 1/(x - pole)), ``"callable"`` or
    ``"smoothed_indicator"``. ``support`` is a closed interval outside which
    the function vanishes (None if unknown), and ``breakpoints`` lists
    abscissae where it changes character quickly; both only steer quadrature.
    Use the constructors below rather than building one by hand.
    """

    __test__ = False  # not a pytest class

    kind: str
    fn: Callable = field(repr=False)
    support: Optional[tuple] = None
    breakpoints: tuple = ()
    pole: Optional[complex] = None
    is_complex: bool = False

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.fn(x))
        if out.shape != x.shape:
            out = np.vectorize(self.fn, otypes=[complex if self.is_complex else float])(x)
        return out

    @classmethod
    def resolvent(cls, pole):
        pole = complex(pole)
        if pole.imag == 0 and abs(pole.real) <= 2:
            raise DomainError("a resolvent pole on [-2, 2] is not a bounded test function")
        pts = (pole.real,) if abs(pole.imag) < 1 else ()
        return cls("resolvent", lambda x: 1.0 / (x - pole), None, pts, pole, True)

    @classmethod
    def from_callable(cls, f, support=None, breakpoints=()):
        if support is not None:
            support = (float(support[0]), float(support[1]))
            breakpoints = tuple(breakpoints) + support
        probe = np.asarray(f(np.array([0.0, 1.0])))
        return cls("callable", f, support, tuple(sorted(set(breakpoints))),
                   is_complex=np.iscomplexobj(probe))

    @classmethod
    def smoothed_indicator(cls, a, b, ramp):
        """1 on [a, b], C-infinity ramps of width ``ramp`` down to 0 outside."""
        a, b, ramp = float(a), float(b), float(ramp)
        if not (b > a and ramp > 0):
            raise DomainError("need a < b and ramp > 0")

        def f(x):
            return _smoothstep((x - a + ramp) / ramp) * _smoothstep((b + ramp - x) / ramp)

        return cls("smoothed_indicator", f, (a - ramp, b + ramp), (a - ramp, a, b, b + ramp))

    @classmethod
    def bump(cls, centre, radius):
        """exp(1 - 1/(1 - r^2)) with r = (x - centre)/radius, zero for |r| >= 1."""
        centre, radius = float(centre), float(radius)
        if not radius > 0:
            raise DomainError("radius must be positive")

        def f(x):
            r2 = ((np.asarray(x, dtype=float) - centre) / radius) ** 2
            with np.errstate(divide="ignore", over="ignore"):
                return np.where(r2 < 1, np.exp(1.0 - 1.0 / np.where(r2 < 1, 1.0 - r2, 1.0)), 0.0)

        return cls.from_callable(f, support=(centre - radius, centre + radius))


def _as_list(psis):
    return list(psis) if isinstance(psis, (list, tuple)) else [psis]


def _overlap(support, lo, hi):
    """Intersection of a test-function support with [lo, hi], or None if empty."""
    if support is None:
        return lo, hi
    a, b = max(lo, support[0]), min(hi, support[1])
    return (a, b) if a < b else None


# ---------------------------------------------------------------- Lambda_u


def lambda_density(x, u):
    """Density of Lambda_u on (-2, 2).

    (1/pi) u^2 (x^2 - 2u^2 - 2) / (sqrt(4 - x^2) ((u^2 + 1)^2 - u^2 x^2)). It
    is the jump (Phi_+ - Phi_-)/(2 pi i) of the function in :func:`phi_function`.
    """
    x = np.asarray(x, dtype=float)
    u2 = float(u) ** 2
    out = u2 * (x * x - 2 * u2 - 2) / (np.pi * np.sqrt(4 - x * x) * ((u2 + 1) ** 2 - u2 * x * x))
    return out[()] if out.ndim == 0 else out


def _density_theta(theta, u, scaled=False):
    """lambda_density(2 sin theta, u) * dx/dtheta; bounded on [-pi/2, pi/2].

    ``scaled`` divides by u^2, which leaves a finite limit at u = 0.
    """
    u2 = u * u
    s2 = np.sin(theta) ** 2
    # (u^2+1)^2 - 4u^2 sin^2 = (u^2-1)^2 + 4u^2 cos^2 keeps its digits near the edges
    denom = (u2 - 1.0) ** 2 + 4.0 * u2 * np.cos(theta) ** 2
    num = 4.0 * s2 - 2.0 * u2 - 2.0
    return (num if scaled else u2 * num) / (np.pi * denom)


def atom_weight(u):
    """Mass of each atom of Lambda_u: 0 below u = 1, 1 above, 1/2 at u = 1.

    At u = 1 the atoms land on the edges +-2, where the density of Lambda_u
    for u near 1 concentrates a mass of -+1/2; the half weight is the value
    that keeps u -> Lambda_u weakly continuous.
    """
    return np.where(u > 1, 1.0, np.where(u == 1, 0.5, 0.0))


def _theta_points(u, psis):
    """Breakpoints in theta: Lorentzian peaks near the edges and test-function features."""
    pts = set()
    width = abs(u * u - 1.0) / (2.0 * u) if u > 0 else np.inf
    if 0 < width < 0.5:
        for k in (1.0, 8.0):
            pts.update((np.pi / 2 - k * width, -np.pi / 2 + k * width))
    for psi in psis:
        for x in psi.breakpoints:
            if -2 < x < 2:
                pts.add(float(np.arcsin(x / 2)))
    return sorted(p for p in pts if -np.pi / 2 < p < np.pi / 2)


def _lambda_apply_stack(u, psis, qcfg, scaled=False):
    """Lambda_u applied to each test function in ``psis`` (one shared quadrature).

    With ``scaled`` the result is Lambda_u / u^2, and u = 0 is allowed.
    """
    u = float(u)
    if not (u > 0 or (scaled and u == 0)):
        raise DomainError("u must be positive")
    spans = [_overlap(psi.support, -2.0, 2.0) for psi in psis]
    dtype = complex if any(p.is_complex for p in psis) else float
    out = np.zeros(len(psis), dtype=dtype)
    active = [i for i, sp in enumerate(spans) if sp is not None]
    if active:
        a = min(spans[i][0] for i in active)
        b = max(spans[i][1] for i in active)
        ta, tb = np.arcsin(a / 2), np.arcsin(b / 2)
        chosen = [psis[i] for i in active]

        def integrand(theta):
            x = 2.0 * np.sin(theta)
            dens = _density_theta(theta, u, scaled)
            return np.stack([dens * psi(x) for psi in chosen])

        # absolute floor scales with the total mass of the density, ~ u^2/(1+u^2)
        scale = 1.0 / (1.0 + u * u) if scaled else u * u / (1.0 + u * u)
        pts = [p for p in _theta_points(u, chosen) if ta < p < tb]
        val, _ = quad(integrand, ta, tb, rel_tol=qcfg.rel_tol, abs_tol=qcfg.abs_tol * scale,
                      max_subdivisions=qcfg.max_subdivisions, points=pts)
        out[active] = val
    w = float(atom_weight(u))
    if w > 0:
        loc = u + 1.0 / u
        for i, psi in enumerate(psis):
            if psi.kind == "resolvent" and psi.pole.imag == 0 and abs(abs(psi.pole.real) - loc) == 0:
                raise PoleCollisionError(f"resolvent pole {psi.pole} sits on an atom of Lambda_u")
            atoms = psi(np.array([loc]))[0] + psi(np.array([-loc]))[0]
            out[i] += w * atoms / (u * u) if scaled else w * atoms
    return out


def lambda_measure_apply(u, psi, qcfg=DEFAULT_QCFG):
    """Lambda_u(psi): density part by quadrature in x = 2 sin(theta), plus the atoms."""
    val = _lambda_apply_stack(u, [psi], qcfg)[0]
    return complex(val) if psi.is_complex else float(val)


def lambda_resolvent_closed(u, z):
    """2 u^2 m m' / (1 - u^2 m^2), the value of Lambda_u(1/(x - z))."""
    m = complex(stieltjes(z))
    mp = complex(stieltjes_derivative(z))
    denom = 1.0 - u * u * m * m
    if denom == 0:
        raise PoleCollisionError(f"z = {z} is an atom location of Lambda_{u}")
    return 2.0 * u * u * m * mp / denom


def resolvent_lambda_residual(u, z, qcfg=DEFAULT_QCFG):
    """Relative gap between Lambda_u(1/(x - z)) by quadrature and its closed form."""
    z = complex(z)
    if u >= 1 and z.imag == 0 and abs(abs(z.real) - (u + 1.0 / u)) == 0:
        raise PoleCollisionError(f"z = {z} sits on an atom of Lambda_{u}")
    lhs = lambda_measure_apply(u, TestFunction.resolvent(z), qcfg)
    rhs = lambda_resolvent_closed(u, z)
    return abs(lhs - rhs) / abs(rhs)


def phi_function(u, z):
    """Phi(z): the closed form above plus the atom poles, analytic off [-2, 2]."""
    z = np.asarray(z, dtype=complex)
    m = np.asarray(stieltjes(z))
    m2 = m * m
    val = 2.0 * u * u * m * m2 / ((m2 - 1.0) * (1.0 - u * u * m2))
    w = float(atom_weight(u))
    if w > 0:
        loc = u + 1.0 / u
        val = val + w * (1.0 / (z - loc) + 1.0 / (z + loc))
    return val[()] if val.ndim == 0 else val


def phi_jump(u, x):
    """Phi_+(x) - Phi_-(x) on (-2, 2), from the boundary values of m."""
    x = np.asarray(x, dtype=float)
    mp = np.asarray(m_plus(x))
    mm = np.conj(mp)
    f = lambda m: 2.0 * u * u * m ** 3 / ((m * m - 1.0) * (1.0 - u * u * m * m))
    out = f(mp) - f(mm)
    return out[()] if out.ndim == 0 else out


def plemelj_reconstruct(u, z, qcfg=DEFAULT_QCFG):
    """(1/(2 pi i)) int (Phi_+ - Phi_-)(x)/(x - z) dx over (-2, 2), in x = 2 sin(theta)."""
    z = complex(z)
    if z.imag == 0 and abs(z.real) <= 2:
        raise DomainError("z must lie off [-2, 2]")

    def integrand(theta):
        x = 2.0 * np.sin(theta)
        return phi_jump(u, x) * 2.0 * np.cos(theta) / (x - z)

    pts = _theta_points(u, [])
    if abs(z.real) < 2 and abs(z.imag) < 1:
        pts = sorted(pts + [float(np.arcsin(z.real / 2))])
    val, _ = quad(integrand, -np.pi / 2, np.pi / 2, rel_tol=qcfg.rel_tol, abs_tol=qcfg.abs_tol,
                  max_subdivisions=qcfg.max_subdivisions, points=pts)
    return complex(val) / (2j * np.pi)


# ---------------------------------------------------------------- pairing (u-form)


def _u_points(psis):
    """u in (1, inf) where an atom crosses a test-function breakpoint."""
    pts = set()
    for psi in psis:
        for x in psi.breakpoints:
            s = abs(x)
            if s > 2:
                pts.add(0.5 * (s + np.sqrt(s * s - 4.0)))
    return sorted(pts)


def pairing(psi, phi, params, qcfg=DEFAULT_QCFG):
    """<K_alpha, psi x phi> = (2c/k_alpha) int_0^inf Lambda_u(psi) Lambda_u(phi) u^(-1-alpha) du.

    The u-integral is split at the atom onset u = 1. Near 0 each Lambda_u is
    O(u^2), so the integrand is u^(3 - alpha) times a bounded function of u;
    beyond 1 it decays like u^(-1-alpha).
    Each Lambda_u is resolved to ``qcfg.rel_tol`` and the u-integral to
    max(``qcfg.rel_tol``, 1e-9).
    """
    alpha = params.alpha
    pref = measure_prefactor(params)
    pair = [psi, phi]
    dtype = complex if (psi.is_complex or phi.is_complex) else float
    outer_rel = max(qcfg.rel_tol, _OUTER_REL_FLOOR)
    kw = dict(rel_tol=outer_rel, abs_tol=qcfg.abs_tol, max_subdivisions=qcfg.max_subdivisions)

    def integrand(us):
        out = np.empty(us.size, dtype=dtype)
        for i, u in enumerate(us):
            lp, lf = _lambda_apply_stack(u, pair, qcfg)
            out[i] = lp * lf * u ** (-1.0 - alpha)
        return out

    def head(us):
        # Lambda_u / u^2 is finite at u = 0, so the weight u^(3 - alpha) goes to the map
        out = np.empty(us.size, dtype=dtype)
        for i, u in enumerate(us):
            lp, lf = _lambda_apply_stack(u, pair, qcfg, scaled=True)
            out[i] = lp * lf
        return out

    low, _ = quad_power_head(head, 3.0 - alpha, **kw)
    high, _ = quad_halfline(integrand, lower=1.0, tail_power=1.0 / alpha,
                            points=_u_points(pair), **kw)
    total = pref * (low + high)
    return complex(total) if dtype is complex else float(total)


# ---------------------------------------------------------------- kernel density


@dataclass(frozen=True)
class KernelEvaluation:
    """K_alpha at (E, F).

    ``region`` is one of ``"bulk-bulk"``, ``"edge-bulk"`` (|E| > 2 > |F|),
    ``"bulk-edge"`` or ``"edge-edge-atomic"``. The first three carry a
    ``density``; the last carries ``atom_weight``, the factor multiplying
    delta(E - F) + delta(E + F).
    """

    region: str
    density: Optional[float] = None
    atom_weight: Optional[float] = None


def _check_not_edge(*xs):
    for x in xs:
        if abs(x) == 2.0:
            raise BranchPointError("E = +-2 is a branch point of the kernel")


def _bulk_m(E, root):
    """m_+(E) on the bulk from E and root = sqrt(4 - E^2)."""
    return 0.5 * (E - 1j * root)


def bulk_kernel(E, F, params, root_e=None, root_f=None):
    """Bulk-bulk density for |E|, |F| < 2 (vectorized).

    -(c/(pi k sin(pi a/2))) sum_{s,t=+-} sgn(s,t) g_s(E) g_t(F) D(m_s(E)^2, m_t(F)^2),
    g = m m', D the divided difference of (-sigma)^(a/2-1). Each difference
    m_s(E)^2 - m_t(F)^2 is assembled from E - F, E + F and the roots so it
    keeps its digits; D then passes smoothly through its confluent value on
    the diagonals E = F (same signs) and E = -F (opposite signs). The optional
    roots sqrt(4 - E^2), sqrt(4 - F^2) may be passed in when known more
    accurately than from E and F.
    """
    E = np.asarray(E, dtype=float)
    F = np.asarray(F, dtype=float)
    re = np.sqrt(np.maximum(4.0 - E * E, 0.0)) if root_e is None else np.asarray(root_e, dtype=float)
    rf = np.sqrt(np.maximum(4.0 - F * F, 0.0)) if root_f is None else np.asarray(root_f, dtype=float)
    if np.any(np.abs(E) > 2) or np.any(np.abs(F) > 2) or np.any(re <= 0) or np.any(rf <= 0):
        raise DomainError("bulk_kernel needs |E|, |F| < 2")
    p = params.alpha / 2 - 1.0
    me = _bulk_m(E, re)
    mf = _bulk_m(F, rf)
    ge = me * me * me / (me * me - 1.0)
    gf = mf * mf * mf / (mf * mf - 1.0)
    ge_c, gf_c, me_c, mf_c = np.conj(ge), np.conj(gf), np.conj(me), np.conj(mf)

    root_sum = re + rf
    e_minus_f = E - F
    e_plus_f = E + F
    # re - rf = (F^2 - E^2)/(re + rf)
    root_diff = -e_plus_f * e_minus_f / root_sum
    # m_+(E) -+ m_+(F) and m_+(E) -+ m_-(F); their products give the m^2 differences
    d_same = 0.5 * (e_minus_f - 1j * root_diff) * 0.5 * (e_plus_f - 1j * root_sum)
    d_cross = 0.5 * (e_minus_f - 1j * root_sum) * 0.5 * (e_plus_f - 1j * root_diff)

    def term(ma, mb, d):
        # -m^2 approaches the cut only at the edges, from a definite side
        return neg_power_divided_difference(ma * ma, mb * mb, p, diff=d, guard=False)

    total = (ge * gf * term(me, mf, d_same)
             + ge_c * gf_c * term(me_c, mf_c, np.conj(d_same))
             - ge * gf_c * term(me, mf_c, d_cross)
             - ge_c * gf * term(me_c, mf, np.conj(d_cross)))
    pref = -params.c / (np.pi * k_alpha(params) * np.sin(np.pi * params.alpha / 2))
    out = (pref * total).real
    return out[()] if out.ndim == 0 else out


def _mixed_from_m(m, F, root_f, params):
    """Edge-bulk density from the edge value m = m_+(E) (real, 0 < |m| < 1) and bulk F.

    (2c/k) |m|^(a-1) (2 + m^2 (2 - F^2)) m' / (pi ((m^2 + 1)^2 - m^2 F^2) sqrt(4 - F^2)),
    with m' = m^2/(m^2 - 1) < 0, so the density is negative.
    """
    m = np.asarray(m, dtype=float)
    F = np.asarray(F, dtype=float)
    m2 = m * m
    mprime = m2 / (m2 - 1.0)
    num = np.abs(m) ** (params.alpha - 1.0) * (2.0 + m2 * (2.0 - F * F)) * mprime
    den = np.pi * ((m2 + 1.0) ** 2 - m2 * F * F) * root_f
    return measure_prefactor(params) * num / den


def mixed_kernel(E_edge, F_bulk, params):
    """Density when one variable is outside [-2, 2] (``E_edge``) and the other inside."""
    E_edge = np.asarray(E_edge, dtype=float)
    F_bulk = np.asarray(F_bulk, dtype=float)
    m = np.asarray(m_plus(E_edge)).real
    out = _mixed_from_m(m, F_bulk, np.sqrt(4.0 - F_bulk * F_bulk), params)
    return out[()] if np.ndim(out) == 0 else out


def _atom_from_m(m, params):
    m = np.abs(np.asarray(m, dtype=float))
    m2 = m * m
    return measure_prefactor(params) * m ** (params.alpha - 1.0) * m2 / (1.0 - m2)


def atomic_weight(E, params):
    """(2c/k) |m_+(E)|^(a-1) |m_+'(E)| for |E| > 2."""
    return _atom_from_m(np.asarray(m_plus(E)).real, params)


def kernel_density(E, F, params):
    """Region-tagged value of K_alpha at (E, F)."""
    E, F = float(E), float(F)
    _check_not_edge(E, F)
    e_bulk, f_bulk = abs(E) < 2, abs(F) < 2
    if e_bulk and f_bulk:
        return KernelEvaluation("bulk-bulk", density=float(bulk_kernel(E, F, params)))
    if f_bulk:
        return KernelEvaluation("edge-bulk", density=float(mixed_kernel(E, F, params)))
    if e_bulk:
        return KernelEvaluation("bulk-edge", density=float(mixed_kernel(F, E, params)))
    return KernelEvaluation("edge-edge-atomic", density=0.0,
                            atom_weight=float(atomic_weight(E, params)))


def kernel_alpha3(E, F, c):
    """K_3 from its explicit closed forms (no fractional powers)."""
    E, F = float(E), float(F)
    _check_not_edge(E, F)
    pref = 15.0 * c / (8.0 * np.sqrt(np.pi))
    e_bulk, f_bulk = abs(E) < 2, abs(F) < 2
    if e_bulk and f_bulk:
        re, rf = np.sqrt(4.0 - E * E), np.sqrt(4.0 - F * F)
        val = (1.0 + (F * F - 2.0) * (E * E - 2.0) / (re * rf)) / (np.pi * (re + rf))
        return KernelEvaluation("bulk-bulk", density=float(pref * val))
    if e_bulk or f_bulk:
        edge, bulk = (F, E) if e_bulk else (E, F)
        m = float(np.asarray(m_plus(edge)).real)
        m2 = m * m
        val = m2 * (2.0 + m2 * (2.0 - bulk * bulk)) * (m2 / (m2 - 1.0)) / (
            np.pi * ((m2 + 1.0) ** 2 - m2 * bulk * bulk) * np.sqrt(4.0 - bulk * bulk))
        region = "bulk-edge" if e_bulk else "edge-bulk"
        return KernelEvaluation(region, density=float(2.0 * pref * val))
    m = float(np.asarray(m_plus(E)).real)
    m2 = m * m
    return KernelEvaluation("edge-edge-atomic", density=0.0,
                            atom_weight=float(2.0 * pref * m2 * m2 / (1.0 - m2)))


def kernel_limit(E, F, params, eta=1e-2, levels=4):
    """Richardson-extrapolated eta -> 0 limit of cov_real_combination(E, F, eta, eta).

    The combination is analytic in eta from the upper side, so halving eta
    and eliminating eta^1 ... eta^(levels-1) in turn is legitimate. Returns
    (estimate, error_indicator), the latter being the last correction.
    """
    etas = eta / 2.0 ** np.arange(levels)
    table = [np.array([cov_real_combination(E, F, h, h, params) for h in etas])]
    for j in range(1, levels):
        prev = table[-1]
        factor = 2.0**j
        table.append((factor * prev[1:] - prev[:-1]) / (factor - 1.0))
    best = float(table[-1][0])
    err = abs(best - float(table[-2][-1]))
    return best, err


# ---------------------------------------------------------------- pairing (kernel form)


def _tau_of_x(x):
    """Inverse of the bulk map x = 2 sin((pi/2) sin(pi tau/2))."""
    return float(2.0 / np.pi * np.arcsin(2.0 / np.pi * np.arcsin(x / 2.0)))


def _bulk_nodes(tau):
    """x = 2 sin(theta), theta = (pi/2) sin(pi tau/2), with sqrt(4 - x^2) and dx/dtau.

    theta approaches +-pi/2 quadratically in tau, which tames the
    1/(sqrt(4 - E^2) + sqrt(4 - F^2)) growth of the kernel at the corners.
    The distance to the edge is formed without cancellation.
    """
    a = 0.5 * np.pi * np.asarray(tau, dtype=float)
    # pi/2 - |theta| = pi sin^2(pi/4 - |a|/2)
    gap = np.pi * np.sin(0.25 * np.pi - 0.5 * np.abs(a)) ** 2
    x = 2.0 * np.sign(a) * np.cos(gap)
    root = 2.0 * np.sin(gap)
    jac = root * 0.25 * np.pi**2 * np.cos(a)
    return x, root, jac


def _tau_span(psi):
    sp = _overlap(psi.support, -2.0, 2.0)
    if sp is None:
        return None
    return _tau_of_x(sp[0]), _tau_of_x(sp[1])


def _tau_breaks(psi, span):
    pts = (_tau_of_x(x) for x in psi.breakpoints if -2 < x < 2)
    return [t for t in pts if span[0] < t < span[1]]


def _theta_span(psi):
    sp = _overlap(psi.support, -2.0, 2.0)
    if sp is None:
        return None
    return float(np.arcsin(sp[0] / 2)), float(np.arcsin(sp[1] / 2))


def _theta_breaks(psi, span):
    return [float(np.arcsin(x / 2)) for x in psi.breakpoints
            if -2 < x < 2 and span[0] < np.arcsin(x / 2) < span[1]]


def _edge_u_span(psi):
    """u-range [1, U] covering psi on |E| > 2 via E = +-(u + 1/u); None if psi vanishes there."""
    if psi.support is None:
        return 1.0, np.inf
    a, b = psi.support
    if -2 <= a and b <= 2:
        return None
    s = max(abs(a), abs(b))
    return 1.0, 0.5 * (s + np.sqrt(s * s - 4.0))


def _edge_integral(f, span, psis, kw):
    """int over u in span of f(u), with E = u + 1/u, on [1, U] or [1, inf)."""
    lo, hi = span
    pts = _u_points(psis)
    if np.isinf(hi):
        val, _ = quad_halfline(f, lower=lo, tail_power=1.0, points=pts, **kw)
    else:
        val, _ = quad(f, lo, hi, points=[p for p in pts if lo < p < hi], **kw)
    return val


def pairing_via_kernel(psi, phi, params, qcfg=DEFAULT_QCFG):
    """<K_alpha, psi x phi> assembled region by region from the kernel density.

    * bulk-bulk: double integral of bulk_kernel, both variables through :func:`_bulk_nodes`;
    * two mixed strips: the edge variable runs over |E| > 2 through E = +-(u + 1/u),
      u > 1, whose Jacobian 1 - 1/u^2 cancels the edge singularity of m_+';
    * the atomic line: int_{|E|>2} psi(E) (phi(E) + phi(-E)) w(E) dE, same map.
    """
    rel = max(qcfg.rel_tol, _OUTER_REL_FLOOR)
    kw = dict(rel_tol=rel, abs_tol=qcfg.abs_tol, max_subdivisions=qcfg.max_subdivisions)
    kw_inner = dict(kw, rel_tol=max(qcfg.rel_tol, 0.01 * rel))
    dtype = complex if (psi.is_complex or phi.is_complex) else float
    total = np.zeros((), dtype=dtype)

    span_pe, span_fe = _edge_u_span(psi), _edge_u_span(phi)

    # bulk-bulk
    span_pt, span_ft = _tau_span(psi), _tau_span(phi)
    if span_pt is not None and span_ft is not None:
        ft_breaks = _tau_breaks(phi, span_ft)

        def outer(tau):
            E, re, jac_e = _bulk_nodes(tau)
            w_e = psi(E) * jac_e

            def inner(tv):
                F, rf, jac_f = _bulk_nodes(tv)
                K = bulk_kernel(E[:, None], F[None, :], params, re[:, None], rf[None, :])
                return K * (phi(F) * jac_f)[None, :]

            val, _ = quad(inner, *span_ft, points=ft_breaks, **kw_inner)
            return w_e * val

        val, _ = quad(outer, *span_pt, points=_tau_breaks(psi, span_pt), **kw)
        total = total + val

    def edge_values(test, u):
        E = u + 1.0 / u
        return test(E), test(-E)

    def strip(edge_fn, bulk_fn, u_span, th_span):
        """int_{|E|>2} edge_fn(E) int_{|F|<2} bulk_fn(F) K(E, F) dF dE."""
        breaks = _theta_breaks(bulk_fn, th_span)

        def outer(u):
            u = np.asarray(u, dtype=float)
            m = 1.0 / u
            jac = 1.0 - m * m
            ep, em = edge_values(edge_fn, u)

            def inner(ph):
                F, rf = 2.0 * np.sin(ph), 2.0 * np.cos(ph)
                K = _mixed_from_m(m[:, None], F[None, :], rf[None, :], params)
                return K * (bulk_fn(F) * rf)[None, :]

            val, _ = quad(inner, *th_span, points=breaks, **kw_inner)
            # m_+(-E) = -m_+(E) leaves the even kernel unchanged
            return (ep + em) * jac * val

        return _edge_integral(outer, u_span, [edge_fn], kw)

    span_pb, span_fb = _theta_span(psi), _theta_span(phi)
    if span_pe is not None and span_fb is not None:
        total = total + strip(psi, phi, span_pe, span_fb)
    if span_fe is not None and span_pb is not None:
        total = total + strip(phi, psi, span_fe, span_pb)

    # atomic line
    if span_pe is not None and span_fe is not None:
        hi = max(span_pe[1], span_fe[1]) if not (np.isinf(span_pe[1]) or np.isinf(span_fe[1])) \
            else np.inf
        hi = min(span_pe[1], span_fe[1]) if not np.isinf(min(span_pe[1], span_fe[1])) else hi

        def atomic(u):
            u = np.asarray(u, dtype=float)
            m = 1.0 / u
            pp, pm = edge_values(psi, u)
            fp, fm = edge_values(phi, u)
            return (pp + pm) * (fp + fm) * _atom_from_m(m, params) * (1.0 - m * m)

        total = total + _edge_integral(atomic, (1.0, hi), [psi, phi], kw)

    return complex(total) if dtype is complex else float(np.real(total))


# ---------------------------------------------------------------- figure grid


@dataclass(frozen=True)
class KernelGrid:
    """Bulk-bulk densities on an n x n grid; ``density[i, j]`` is K(E[i], F[j])."""

    E: np.ndarray
    F: np.ndarray
    density: np.ndarray


def figure_grid(alpha, c, n):
    """K_alpha on the uniform grid of (-2 + d, 2 - d)^2 with d = 4/(10 n)."""
    n = int(n)
    if n < 2:
        raise DomainError("n must be at least 2")
    params = ModelParams(alpha, c)
    d = 4.0 / (10.0 * n)
    x = np.linspace(-2.0 + d, 2.0 - d, n)
    K = bulk_kernel(x[:, None], x[None, :], params)
    return KernelGrid(x, x.copy(), K)
