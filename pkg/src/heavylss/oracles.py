"""Quadrature evaluations of the integral representations of C(z, w).

Each function here is independent of the closed form in :mod:`covariance`:

* :func:`cov_r_integral` integrates the resolvent-type r-integral;
* :func:`cov_log_fd` integrates the log-product representation and takes the
  mixed derivative by a four-point finite-difference stencil;
* :func:`cov_double_laplace_fd` integrates the exponentially damped double
  Laplace kernel over (0, inf)^2 and applies the same stencil.

The two integral identities behind the closed form are exposed as residuals.
"""

import warnings

import numpy as np
from scipy.special import gamma

from ._branch import cexpm1, clog1p, power_difference, principal_power
from .covariance import ModelParams, k_alpha
from .errors import DomainError
from .quadrature import (DEFAULT_QCFG, qcfg_kwargs, quad, quad_halfline, quad_power_halfline,
                         quad_power_head, quad_power_tail)
from .semicircle import stieltjes, stieltjes_derivative

# slow-decay threshold for the double Laplace damping rate
_SLOW_DAMPING = 0.05
# larger head exponents push mapped nodes into underflow; the capped map
# leaves a mild integrable endpoint singularity that bisection handles
_MAX_HEAD_POWER = 12.0


def _head_power(q):
    return min(q, _MAX_HEAD_POWER)


def _check_nonreal(*points):
    for z in points:
        if complex(z).imag == 0:
            raise DomainError(f"covariance oracles need z off the real axis, got {z}")


def _near_contour_points(*sigmas):
    """Breakpoints at Re(sigma) for poles hugging the positive real axis."""
    return [s.real for s in sigmas if s.real > 0 and abs(s.imag) < 0.5 * s.real + 0.1]


def cov_r_integral(z, w, params, qcfg=DEFAULT_QCFG):
    """c * int_0^inf 4 r^(a/2-1)/k_a * m m' m_w m_w' / ((r - m^2)(r - m_w^2)) dr."""
    _check_nonreal(z, w)
    p = params.alpha / 2 - 1.0
    k = k_alpha(params)
    mz, mw = complex(stieltjes(z)), complex(stieltjes(w))
    gz = mz * complex(stieltjes_derivative(z))
    gw = mw * complex(stieltjes_derivative(w))
    s1, s2 = mz * mz, mw * mw
    coef = 4.0 * gz * gw / k

    val = coef * _pole_pair_integral(s1, s2, p, qcfg)
    return params.c * complex(val)


def _pole_pair_integral(s1, s2, p, qcfg):
    """int_0^inf r^p / ((r - s1)(r - s2)) dr, 0 <= p < 1, split at r = 1.

    The head carries r^p and the tail r^(p - 2) as map weights; the bounded
    remainders are 1/((r - s1)(r - s2)) and 1/((1 - s1/r)(1 - s2/r)).
    """
    kw = qcfg_kwargs(qcfg)
    pts = _near_contour_points(s1, s2)

    def head(r):
        return 1.0 / ((r - s1) * (r - s2))

    def tail(r):
        inv = 1.0 / np.asarray(r, dtype=float)
        return 1.0 / ((1.0 - s1 * inv) * (1.0 - s2 * inv))

    v1, _ = quad_power_head(head, p, points=pts, **kw)
    v2, _ = quad_power_tail(tail, p - 2.0, points=pts, **kw)
    return complex(v1 + v2)


def _stencil(z, h):
    """Displacements z +- h d; d = 1 keeps Im z fixed so the stencil never meets the axis."""
    z = complex(z)
    plus, minus = z + h, z - h
    for pt in (plus, minus):
        if pt.imag == 0 and abs(pt.real) <= 2:
            raise DomainError("finite-difference stencil touches the support [-2, 2]")
    return plus, minus


def _log_factor(m, r):
    """Log(1/m - r m) - Log(1/m), principal logs, accurate as r -> 0."""
    inv = 1.0 / m
    r = np.asarray(r, dtype=float)
    # the ratio of the two arguments is exactly 1 - r m^2
    near = clog1p(-r * (m * m))
    wrap = np.round((np.angle(inv - r * m) - np.angle(inv) - near.imag) / (2 * np.pi))
    return near + 2j * np.pi * wrap


def _over_r(values, r, limit):
    """values / r, with the r -> 0 limit filled in where r underflowed to 0."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = values / r
    return np.where(r == 0, limit, out)


def _log_factor_difference(m1, m2, r):
    """_log_factor(m1, r) - _log_factor(m2, r) as one log1p, free of cancellation.

    Along r >= 0 neither 1 - r m^2 crosses the cut (m^2 is never positive real
    off the axis), so the principal logs carry no 2 pi i jumps.
    """
    b = m2 * m2
    d = (m1 - m2) * (m1 + m2)
    return clog1p(-r * d / (1.0 - r * b))


def log_product_integral(z, w, params, qcfg=DEFAULT_QCFG):
    """int_0^inf [Log(1/m - r m) - Log(1/m)][same at w] / (k_a r^(1 + a/2)) dr."""
    _check_nonreal(z, w)
    alpha = params.alpha
    k = k_alpha(params)
    mz, mw = complex(stieltjes(z)), complex(stieltjes(w))

    # each log factor is -r m^2 + O(r^2): integrate r^(1 - a/2) times the two quotients
    def g(r):
        lz = _over_r(_log_factor(mz, r), r, -mz * mz)
        lw = _over_r(_log_factor(mw, r), r, -mw * mw)
        return lz * lw / k

    # the log factors grow like log(r): a tail map twice as steep as for a
    # pure power makes the mapped integrand vanish at the far end
    val, _ = quad_power_halfline(g, 1.0 - alpha / 2, tail_power=4.0 / alpha, **qcfg_kwargs(qcfg))
    return complex(val)


def cov_log_fd(z, w, params, qcfg=DEFAULT_QCFG, fd_step=None):
    """c * d_z d_w of :func:`log_product_integral` by the four-point stencil.

    ``fd_step`` overrides ``qcfg.fd_step`` without its range check; it exists
    for diagnostics that deliberately use a poor step.

    The four stencil integrals share one quadrature mesh (their weighted sum
    is integrated directly), so mesh-dependent quadrature error cancels in the
    difference quotient instead of being amplified by 1/(4 h^2).
    """
    _check_nonreal(z, w)
    alpha = params.alpha
    h = qcfg.fd_step if fd_step is None else float(fd_step)
    k = k_alpha(params)
    zp, zm = _stencil(z, h)
    wp, wm = _stencil(w, h)
    m_zp, m_zm = complex(stieltjes(zp)), complex(stieltjes(zm))
    m_wp, m_wm = complex(stieltjes(wp)), complex(stieltjes(wm))

    d_z = (m_zp - m_zm) * (m_zp + m_zm)
    d_w = (m_wp - m_wm) * (m_wp + m_wm)
    scale = 1.0 / (4 * h * h * k)

    def g(r):
        dz = _over_r(_log_factor_difference(m_zp, m_zm, r), r, -d_z)
        dw = _over_r(_log_factor_difference(m_wp, m_wm, r), r, -d_w)
        return dz * dw * scale

    val, _ = quad_power_halfline(g, 1.0 - alpha / 2, tail_power=2.0 / alpha, **qcfg_kwargs(qcfg))
    return params.c * complex(val)


def _laplace_coefficients(z):
    sgn = 1.0 if complex(z).imag > 0 else -1.0
    m = complex(stieltjes(z))
    return 1j * sgn * m, 1j * sgn / m


def laplace_kernel(z, w, t, s, alpha):
    """L(z, w; t, s) = [(at + bs)^(a/2) - (at)^(a/2) - (bs)^(a/2)] exp(t/u_z + s/u_w) / (t s).

    Here a = i sgn(Im z) m(z) and the damping exponent is i sgn(Im z)/m(z),
    whose real part is negative. Broadcasts over t and s.
    """
    _check_nonreal(z, w)
    a, ez = _laplace_coefficients(z)
    b, ew = _laplace_coefficients(w)
    return _laplace_from_coefficients(a, ez, b, ew, np.asarray(t, float), np.asarray(s, float), alpha)


def _laplace_from_coefficients(a, ez, b, ew, t, s, alpha):
    h = alpha / 2
    bracket = _bracket(a * t, b * s, h)
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        damp = np.exp(ez * t + ew * s)
        out = bracket * damp / (t * s)
    return np.where(damp == 0, 0.0, out)


def _damping_rate(z):
    return -(1j * np.sign(complex(z).imag) / complex(stieltjes(z))).real


def double_laplace_fd_integrand_rates(z, w):
    """Exponential damping rates in t and s."""
    return _damping_rate(z), _damping_rate(w)


def _second_remainder(e1, e2, h):
    """(1 + e1 + e2)^h - (1 + e1)^h - (1 + e2)^h + 1 for small e1, e2.

    Binomial series sum_k C(h, k) [(e1 + e2)^k - e1^k - e2^k], with the bracket
    carried as e1 e2 T_k, T_2 = 2, T_(k+1) = (e1 + e2) T_k + e1^(k-1) + e2^(k-1),
    so the product e1 e2 keeps full relative accuracy however unequal the two
    steps are.
    """
    total = e1 + e2
    coef = h * (h - 1.0) / 2.0
    tk = np.full_like(total, 2.0)
    p1 = np.ones_like(total)
    p2 = np.ones_like(total)
    acc = coef * tk
    for k in range(2, 60):
        p1, p2 = p1 * e1, p2 * e2
        tk = total * tk + p1 + p2
        coef = coef * (h - k) / (k + 1)
        acc = acc + coef * tk
    return e1 * e2 * acc


def _mixed_power_difference(x, d1, d2, h):
    """f(x + d1 + d2) - f(x + d1) - f(x + d2) + f(x) for f(u) = u^h, |d1| << |x|.

    Small relative steps go through :func:`_second_remainder`. Otherwise it is
    the difference of two accurate first differences in d1, whose ratio
    ((x + d2)/x)^(h-1) then stays away from 1.
    """
    x, d1, d2 = np.broadcast_arrays(*(np.asarray(v, dtype=complex) for v in (x, d1, d2)))
    out = np.empty(x.shape, dtype=complex)
    e1, e2 = d1 / x, d2 / x
    series = np.abs(e2) < 0.3
    if np.any(series):
        out[series] = principal_power(x[series], h) * _second_remainder(e1[series], e2[series], h)
    far = ~series
    if np.any(far):
        xf, a, b = x[far], d1[far], d2[far]
        out[far] = (power_difference(xf + a + b, xf + b, h, diff=a)
                    - power_difference(xf + a, xf, h, diff=a))
    return out


def _bracket(x, y, h):
    """(x + y)^h - x^h - y^h, keeping the O(small) increment's digits."""
    x, y = np.broadcast_arrays(x, y)
    x_big = np.abs(x) >= np.abs(y)
    big = np.where(x_big, x, y)
    small = np.where(x_big, y, x)
    return power_difference(big + small, big, h, diff=small) - principal_power(small, h)


def _laplace_mixed_difference(cz, cw, t, s, alpha):
    """Four-point mixed difference of L t s over the z and w stencils, then / (t s).

    ``cz = (a_-, e_-, a_+, e_+)`` holds the bracket and damping coefficients at
    z - h and z + h (likewise ``cw``). With L t s = H(a t, b s) E(z) F(w) and
    H(x, y) = (x + y)^h - x^h - y^h, the discrete product rule gives

        d_z d_w H E_+ F_+ + d_z H E_+ dF + d_w H dE F_+ + H dE dF,

    and every difference of H is a mixed second difference of u^h, formed
    without cancellation. Rounding is therefore not amplified by 1/(4 h^2).
    """
    h = alpha / 2
    am, ezm, ap, ezp = cz
    bm, ewm, bp, ewp = cw
    with np.errstate(under="ignore"):
        e_lo = np.exp(ezm * t)
        f_lo = np.exp(ewm * s)
    d_e = e_lo * cexpm1((ezp - ezm) * t)
    d_f = f_lo * cexpm1((ewp - ewm) * s)
    e_hi, f_hi = e_lo + d_e, f_lo + d_f

    x = am * t
    y = bm * s
    dx = (ap - am) * t
    dy = (bp - bm) * s
    h_zw = _mixed_power_difference(x + y, dx, dy, h)
    h_z = _mixed_power_difference(x, dx, y, h)
    h_w = _mixed_power_difference(y, dy, x, h)
    h_lo = _bracket(x, y, h)
    mixed = h_zw * e_hi * f_hi + h_z * e_hi * d_f + h_w * d_e * f_hi + h_lo * d_e * d_f
    return mixed / (t * s)


def cov_double_laplace_fd(z, w, params, qcfg=DEFAULT_QCFG, rel_tol=1e-8, fd_step=None):
    """c * d_z d_w int int L(z, w; t, s) dt ds via iterated 1-D quadrature and the stencil.

    The s-integral is inner, the t-integral outer, and the inner pass runs
    ten times tighter than ``rel_tol``. The stencil combination of the four
    integrands is formed analytically (see :func:`_laplace_mixed_difference`)
    and integrated on a shared mesh. ``fd_step`` is as in :func:`cov_log_fd`.
    """
    _check_nonreal(z, w)
    alpha = params.alpha
    h = qcfg.fd_step if fd_step is None else float(fd_step)
    rz, rw = double_laplace_fd_integrand_rates(z, w)
    if min(rz, rw) < _SLOW_DAMPING:
        warnings.warn(
            f"slow exponential damping (rates {rz:.3g}, {rw:.3g}); quadrature may be expensive",
            RuntimeWarning,
            stacklevel=2,
        )
    zp, zm = _stencil(z, h)
    wp, wm = _stencil(w, h)
    cz = (*_laplace_coefficients(zm), *_laplace_coefficients(zp))
    cw = (*_laplace_coefficients(wm), *_laplace_coefficients(wp))
    p = alpha / 2 - 1.0
    tol = max(rel_tol, qcfg.rel_tol)
    kw = dict(rel_tol=tol, abs_tol=qcfg.abs_tol, max_subdivisions=qcfg.max_subdivisions)
    kw_inner = dict(kw, rel_tol=max(0.1 * tol, qcfg.rel_tol))
    scale = 1.0 / (4 * h * h)

    def outer(t):
        tcol = np.asarray(t, float)[:, None]
        val, _ = quad_halfline(
            lambda s: _laplace_mixed_difference(cz, cw, tcol, np.asarray(s, float)[None, :], alpha) * scale,
            scale=1.0 / rw,
            head_power=_head_power(1.0 / p),
            **kw_inner,
        )
        return val

    val, _ = quad_halfline(outer, scale=1.0 / rz, head_power=_head_power(1.0 / p), **kw)
    return params.c * complex(val)


def _exp_remainder_ratio(x):
    """(exp(x) - x - 1) / x^2 without cancellation; 1/2 at x = 0."""
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 0.5
    xl = np.where(small, 1.0, x)
    out = (cexpm1(xl) - xl) / (xl * xl)
    if np.any(small):
        xs = x[small]
        term = np.full(xs.shape, 0.5, dtype=complex)
        acc = term.copy()
        for n in range(3, 25):
            term = term * xs / n
            acc = acc + term
        out[small] = acc
    return out


def frac_power_lhs(sigma, params, qcfg=DEFAULT_QCFG):
    """int_0^inf (exp(r sigma) - r sigma - 1) / r^(a/2 + 1) dr for Re sigma < 0.

    On [1, inf) the polynomial part is integrated in closed form,
    int_1^inf (-r sigma - 1) r^(-a/2-1) dr = -sigma/(a/2 - 1) - 2/a,
    leaving an exponentially decaying quadrature.
    """
    sigma = complex(sigma)
    if not sigma.real < 0:
        raise DomainError("the fractional-power identity needs Re(sigma) < 0")
    h = params.alpha / 2
    kw = qcfg_kwargs(qcfg)

    # r = t^q with q = 1/(2 - h): the head integrand becomes q sigma^2 E2(sigma t^q),
    # E2(x) = (e^x - x - 1)/x^2, because r^(1-h) t^(q-1) = 1
    q = 1.0 / (2.0 - h)
    head_val, _ = quad(lambda t: q * sigma * sigma * _exp_remainder_ratio(sigma * t**q),
                       0.0, 1.0, **kw)
    decay = -sigma.real

    def tail(r):
        with np.errstate(under="ignore"):
            return np.exp(r * sigma) / r ** (h + 1)

    tail_val, _ = quad_halfline(tail, lower=1.0, scale=max(1.0, 1.0 / decay), **kw)
    return complex(head_val + tail_val - sigma / (h - 1.0) - 1.0 / h)


def frac_power_identity_residual(sigma, params, qcfg=DEFAULT_QCFG):
    """Relative gap between the quadrature LHS and k_a (-sigma)^(a/2)."""
    lhs = frac_power_lhs(sigma, params, qcfg)
    rhs = k_alpha(params) * complex(principal_power(-complex(sigma), params.alpha / 2))
    return abs(lhs - rhs) / abs(rhs)


def frac_power_constant(alpha):
    """Gamma(-a/2): the constant the quadrature LHS actually converges to.

    Integrating by parts twice reduces the LHS to Gamma(-a/2) (-sigma)^(a/2);
    k_a differs from it by the factor (a + 2)/(2(a - 2)).
    """
    alpha = alpha.alpha if isinstance(alpha, ModelParams) else float(alpha)
    if not 2.0 < alpha < 4.0:
        raise DomainError(f"alpha must lie in the open interval (2, 4), got {alpha}")
    return float(gamma(-alpha / 2))


def frac_power_exact_residual(sigma, params, qcfg=DEFAULT_QCFG):
    """Relative gap between the quadrature LHS and Gamma(-a/2) (-sigma)^(a/2)."""
    lhs = frac_power_lhs(sigma, params, qcfg)
    rhs = frac_power_constant(params) * complex(principal_power(-complex(sigma), params.alpha / 2))
    return abs(lhs - rhs) / abs(rhs)


def _check_resolvent_sigma(sigma):
    if complex(sigma).imag == 0:
        raise DomainError(
            "sigma must be non-real: [0, inf) is the contour and (-inf, 0] the branch cut")


def res_integral_lhs(sigma1, sigma2, params, qcfg=DEFAULT_QCFG):
    """int_0^inf r^(a/2-1) / ((r - sigma1)(r - sigma2)) dr by quadrature."""
    s1, s2 = complex(sigma1), complex(sigma2)
    _check_resolvent_sigma(s1)
    _check_resolvent_sigma(s2)
    return _pole_pair_integral(s1, s2, params.alpha / 2 - 1.0, qcfg)


def res_integral_closed(sigma1, sigma2, params):
    """pi / (sin(pi a/2)(s1 - s2)) [(-s1)^p - (-s2)^p]; -pi p (-s)^(p-1)/sin(pi a/2) when equal."""
    s1, s2 = complex(sigma1), complex(sigma2)
    _check_resolvent_sigma(s1)
    _check_resolvent_sigma(s2)
    p = params.alpha / 2 - 1.0
    sin = np.sin(np.pi * params.alpha / 2)
    if s1 == s2:
        return complex(-np.pi * p * principal_power(-s1, p - 1.0) / sin)
    diff = complex(power_difference(-s1, -s2, p, diff=s2 - s1))
    return np.pi * diff / (sin * (s1 - s2))


def res_integral_identity_residual(sigma1, sigma2, params, qcfg=DEFAULT_QCFG):
    lhs = res_integral_lhs(sigma1, sigma2, params, qcfg)
    rhs = res_integral_closed(sigma1, sigma2, params)
    return abs(lhs - rhs) / abs(rhs)
