"""Globally adaptive Gauss-Kronrod (G10/K21) quadrature.

Integrands are vectorized: ``f(x)`` receives a 1-D float array of nodes and
returns an array whose last axis matches it. Leading axes are integrated
component-wise on a shared mesh, and may be complex. Half-line integrals are
mapped onto [0, 2] with optional power laws at both ends to absorb algebraic
endpoint behaviour.
"""

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonConvergenceError

# QUADPACK qk21 abscissae (descending) and weights
_XGK = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208292569510, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809302575, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
# G10 shares the odd-indexed Kronrod abscissae; it has no centre node
_WG_FULL = np.zeros(21)
_WG_FULL[1:10:2] = _WG
_WG_FULL[11:20:2] = _WG[::-1]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-15
    max_subdivisions: int = 5000
    fd_step: float = 1e-4

    def __post_init__(self):
        if not self.rel_tol >= 1e-12:
            raise DomainError("rel_tol must be >= 1e-12")
        if not self.abs_tol >= 0:
            raise DomainError("abs_tol must be non-negative")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be positive")
        if not 1e-7 <= self.fd_step <= 1e-3:
            raise DomainError("fd_step must lie in [1e-7, 1e-3]")


DEFAULT_QCFG = QuadratureConfig()


def _gk21(f, a, b):
    """K21 values and error estimates on intervals [a_i, b_i] (one batched call)."""
    centre = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = (centre[:, None] + half[:, None] * _NODES[None, :]).ravel()
    fx = np.asarray(f(x))
    lead = fx.shape[:-1]
    fx = fx.reshape(lead + (a.size, 21))
    kron = half * (fx @ _WK)
    gauss = half * (fx @ _WG_FULL)
    # QUADPACK error heuristic, per component
    mean = kron / np.where(half == 0, 1.0, 2 * half)
    resasc = np.abs(half) * (np.abs(fx - mean[..., None]) @ _WK)
    resabs = np.abs(half) * (np.abs(fx) @ _WK)
    err = np.abs(kron - gauss)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    floor = 50 * _EPS * resabs
    err = np.maximum(err, floor)
    if lead:
        err = err.reshape(-1, a.size).max(axis=0)
        floor = floor.reshape(-1, a.size).max(axis=0)
    if not (np.all(np.isfinite(kron)) and np.all(np.isfinite(err))):
        raise NonConvergenceError("integrand returned non-finite values")
    return kron, err, floor


def quad(f, a, b, *, rel_tol=1e-11, abs_tol=1e-15, max_subdivisions=5000, points=()):
    """Integrate ``f`` over the finite interval [a, b].

    Returns ``(value, error_estimate)``. ``points`` are interior breakpoints
    (peaks, kinks) that seed the initial partition. The estimate never drops
    below the rounding floor 50 eps int |f|; reaching that floor counts as
    converged, which matters for integrals that cancel to (nearly) zero.
    """
    a, b = float(a), float(b)
    if a == b:
        probe = np.asarray(f(np.array([a])))
        return np.zeros(probe.shape[:-1], dtype=probe.dtype)[()], 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    cuts = sorted({a, b, *(float(p) for p in points if a < p < b)})
    lo = np.array(cuts[:-1])
    hi = np.array(cuts[1:])
    vals, errs, floors = _gk21(f, lo, hi)

    # parked intervals: (neg_err, counter, lo, hi, value, floor) in a heap;
    # frozen ones are too narrow to split further
    heap = []
    done_val = 0.0
    done_err = 0.0
    done_floor = 0.0
    counter = 0
    for i in range(lo.size):
        heap.append((-errs[i], counter, lo[i], hi[i], vals[..., i], floors[i]))
        counter += 1
    heapq.heapify(heap)
    n_intervals = lo.size

    while True:
        total = done_val + sum(item[4] for item in heap)
        err_total = done_err + sum(-item[0] for item in heap)
        floor_total = done_floor + sum(item[5] for item in heap)
        target = max(abs_tol, rel_tol * float(np.max(np.abs(total))), 2.0 * floor_total)
        if err_total <= target:
            return sign * total, err_total
        if n_intervals >= max_subdivisions:
            raise NonConvergenceError(
                f"quadrature did not converge in {max_subdivisions} subintervals "
                f"(error {err_total:.3g} > {target:.3g})",
                estimate=sign * total,
                error=err_total,
            )
        # bisect the largest-error intervals until the rest fit in half the target
        chosen = []
        remaining = err_total
        while heap and remaining > 0.5 * target:
            item = heapq.heappop(heap)
            remaining += item[0]
            width = item[3] - item[2]
            if width <= 8 * _EPS * max(abs(item[2]), abs(item[3]), 1e-300):
                done_val = done_val + item[4]
                done_err += -item[0]
                done_floor += item[5]
                continue
            chosen.append(item)
        if not chosen:
            if heap:
                continue
            raise NonConvergenceError(
                "quadrature stalled on unresolvable subintervals",
                estimate=sign * total,
                error=err_total,
            )
        left = np.array([c[2] for c in chosen])
        right = np.array([c[3] for c in chosen])
        mid = 0.5 * (left + right)
        new_lo = np.concatenate([left, mid])
        new_hi = np.concatenate([mid, right])
        v, e, fl = _gk21(f, new_lo, new_hi)
        for i in range(new_lo.size):
            heapq.heappush(heap, (-e[i], counter, new_lo[i], new_hi[i], v[..., i], fl[i]))
            counter += 1
        n_intervals += len(chosen)


def quad_halfline(f, lower=0.0, *, scale=1.0, head_power=1.0, tail_power=1.0,
                  points=(), rel_tol=1e-11, abs_tol=1e-15, max_subdivisions=5000):
    """Integrate ``f`` over [lower, inf).

    The head [lower, lower + scale] is mapped by ``x = lower + scale t**q``
    (``q = head_power``) and the tail by ``x = lower + scale (2 - t)**-k``
    (``k = tail_power``), t in [0, 2]. An integrand behaving like
    ``(x - lower)**g`` at the lower end is smooth in t for ``q = 1/(g + 1)``;
    one decaying like ``x**-b`` is smooth at t = 2 for ``k = 1/(b - 1)``.
    ``k = 1`` is the plain Mobius map, adequate for exponential decay.
    """
    q, k, s = float(head_power), float(tail_power), float(scale)

    def mapped(t):
        t = np.asarray(t, dtype=float)
        head = t <= 1.0
        th = np.where(head, t, 0.5)
        tt = np.where(head, 1.5, 2.0 - t)
        x = np.where(head, lower + s * th**q, lower + s * tt ** (-k))
        jac = np.where(head, s * q * th ** (q - 1.0), s * k * tt ** (-k - 1.0))
        with np.errstate(over="ignore", invalid="ignore"):
            return np.asarray(f(x)) * jac

    tpts = [1.0]
    for p in points:
        y = (float(p) - lower) / s
        if 0 < y <= 1:
            tpts.append(y ** (1.0 / q))
        elif y > 1:
            tpts.append(2.0 - y ** (-1.0 / k))
    return quad(mapped, 0.0, 2.0, rel_tol=rel_tol, abs_tol=abs_tol,
                max_subdivisions=max_subdivisions, points=tpts)


def quad_power_head(g, expo, upper=1.0, *, rel_tol=1e-11, abs_tol=1e-15,
                    max_subdivisions=5000, points=()):
    """int_0^upper r**expo g(r) dr for expo > -1 and ``g`` bounded near 0.

    With r = upper t**q, q = 1/(1 + expo), the weight and Jacobian combine to
    the constant q upper**(1 + expo), so the t-integrand is just g. ``g`` must
    accept r = 0 (nodes underflow there when q is large) and return its limit.
    """
    if not expo > -1:
        raise DomainError("expo must exceed -1")
    q = 1.0 / (1.0 + expo)
    upper = float(upper)
    tpts = [(float(p) / upper) ** (1.0 / q) for p in points if 0 < p < upper]
    val, err = quad(lambda t: g(upper * np.asarray(t, dtype=float) ** q), 0.0, 1.0,
                    rel_tol=rel_tol, abs_tol=abs_tol, max_subdivisions=max_subdivisions,
                    points=tpts)
    fac = q * upper ** (1.0 + expo)
    return fac * val, fac * err


def quad_power_tail(g, expo, lower=1.0, *, rel_tol=1e-11, abs_tol=1e-15,
                    max_subdivisions=5000, points=()):
    """int_lower^inf r**expo g(r) dr for expo < -1 and ``g`` bounded at infinity.

    With r = lower t**(-1/b), b = -1 - expo, the t-integrand on [0, 1] is g
    times a constant. ``g`` is called with r = inf at t = 0 and must return
    its limit there.
    """
    if not expo < -1:
        raise DomainError("expo must be below -1")
    b = -1.0 - expo
    lower = float(lower)
    if not lower > 0:
        raise DomainError("lower must be positive")
    tpts = [(lower / float(p)) ** b for p in points if p > lower]

    def mapped(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            r = lower * t ** (-1.0 / b)
        return g(r)

    val, err = quad(mapped, 0.0, 1.0, rel_tol=rel_tol, abs_tol=abs_tol,
                    max_subdivisions=max_subdivisions, points=tpts)
    fac = lower ** (1.0 + expo) / b
    return fac * val, fac * err


def quad_power_halfline(g, expo, *, tail_power=1.0, points=(), rel_tol=1e-11, abs_tol=1e-15,
                        max_subdivisions=5000):
    """int_0^inf r**expo g(r) dr: :func:`quad_power_head` on [0, 1] plus a mapped tail."""
    kw = dict(rel_tol=rel_tol, abs_tol=abs_tol, max_subdivisions=max_subdivisions)
    head, e1 = quad_power_head(g, expo, points=points, **kw)
    tail, e2 = quad_halfline(lambda r: r**expo * g(r), lower=1.0, tail_power=tail_power,
                             points=[p for p in points if p > 1], **kw)
    return head + tail, e1 + e2


def qcfg_kwargs(qcfg):
    return dict(rel_tol=qcfg.rel_tol, abs_tol=qcfg.abs_tol,
                max_subdivisions=qcfg.max_subdivisions)
