"""Independent brute-force oracles: closed forms and adaptive quadrature.

Everything here is deliberately dumb and estimator-free, so the Monte Carlo
engine can be validated against values computed by a different route. The
closed forms are verified against scipy's adaptive quadrature in the test
suite before anything else trusts them.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate


def interval_interaction_closed(alpha: float) -> float:
    """L_alpha((0,1), (-1,0)) = (2 - 2^(1-alpha)) / (alpha (1-alpha))."""
    return (2.0 - 2.0 ** (1.0 - alpha)) / (alpha * (1.0 - alpha))


def halfline_perimeter_closed(alpha: float) -> float:
    """P_alpha([0, inf); (-1, 1)) = 2^(1-alpha) / (alpha (1-alpha))."""
    return 2.0 ** (1.0 - alpha) / (alpha * (1.0 - alpha))


def segment_limit_value_closed(alpha: float, length: float) -> float:
    """(1-alpha) P_alpha([0, L]; R) = 2 L^(1-alpha) / alpha."""
    return 2.0 * length ** (1.0 - alpha) / alpha


def interval_boundary_curvature_closed(alpha: float) -> float:
    """H_alpha[(-1,1)](1) = 2^(1-alpha) / alpha (positive: complement wins)."""
    return 2.0 ** (1.0 - alpha) / alpha


def wedge_symdiff_area(angle: float) -> float:
    """Area of (H_nu1 symdiff H_nu2) cap unit disc for normals at `angle`."""
    return float(abs(angle))


def interaction_quad_1d(alpha: float, a: tuple, b: tuple) -> float:
    """L_alpha over two disjoint 1-D intervals by adaptive quadrature."""
    (a0, a1), (b0, b1) = a, b
    val, _ = integrate.dblquad(
        lambda y, x: abs(x - y) ** (-1.0 - alpha),
        a0,
        a1,
        lambda x: b0,
        lambda x: b1,
        epsabs=1e-11,
        epsrel=1e-11,
    )
    return val


def halfline_perimeter_quad(alpha: float) -> float:
    """Three-term quadrature for P_alpha([0,inf); (-1,1))."""
    t1 = interaction_quad_1d(alpha, (0.0, 1.0), (-1.0, 0.0))
    t2, _ = integrate.dblquad(
        lambda y, x: (x - y) ** (-1.0 - alpha),
        1.0,
        np.inf,
        lambda x: -1.0,
        lambda x: 0.0,
        epsabs=1e-11,
    )
    t3, _ = integrate.dblquad(
        lambda y, x: (x - y) ** (-1.0 - alpha),
        0.0,
        1.0,
        lambda x: -np.inf,
        lambda x: -1.0,
        epsabs=1e-11,
    )
    return t1 + t2 + t3


def ramp_energy_quad(alpha: float, lo: float = -1.0, hi: float = 2.0) -> float:
    """J_alpha(clamp(x,0,1); (lo,hi)) on the line by adaptive quadrature."""

    def u(x):
        return min(max(x, 0.0), 1.0)

    def kern(x, y):
        if x == y:
            return 0.0
        return abs(u(x) - u(y)) * abs(x - y) ** (-1.0 - alpha)

    inner, _ = integrate.dblquad(
        kern, lo, hi, lambda x: lo, lambda x: hi, epsabs=1e-10, epsrel=1e-10
    )
    left, _ = integrate.dblquad(
        kern, lo, hi, lambda x: -np.inf, lambda x: lo, epsabs=1e-10
    )
    right, _ = integrate.dblquad(
        kern, lo, hi, lambda x: hi, lambda x: np.inf, epsabs=1e-10
    )
    return 0.5 * inner + left + right


def perimeter_quad_1d(alpha: float, e0: float, lo: float, hi: float) -> float:
    """P_alpha([e0, inf); (lo, hi)) on the line by adaptive quadrature."""

    def kern(x, y):
        if x == y:
            return 0.0
        inside_x = x >= e0
        inside_y = y >= e0
        return float(inside_x != inside_y) * abs(x - y) ** (-1.0 - alpha)

    inner, _ = integrate.dblquad(
        kern, lo, hi, lambda x: lo, lambda x: hi, epsabs=1e-10, epsrel=1e-10
    )
    left, _ = integrate.dblquad(kern, lo, hi, lambda x: -np.inf, lambda x: lo, epsabs=1e-10)
    right, _ = integrate.dblquad(kern, lo, hi, lambda x: hi, lambda x: np.inf, epsabs=1e-10)
    return 0.5 * inner + left + right


def translated_halfline_energy_quad(alpha: float, delta: float) -> float:
    """J_alpha of chi_{[delta,inf)} glued to chi_{[0,inf)} outside (-1,1)."""

    def u(x):
        if -1.0 <= x <= 1.0:
            return 1.0 if x >= delta else 0.0
        return 1.0 if x >= 0.0 else 0.0

    def kern(x, y):
        if x == y:
            return 0.0
        return abs(u(x) - u(y)) * abs(x - y) ** (-1.0 - alpha)

    inner, _ = integrate.dblquad(
        kern, -1, 1, lambda x: -1, lambda x: 1, epsabs=1e-10, epsrel=1e-10
    )
    left, _ = integrate.dblquad(kern, -1, 1, lambda x: -np.inf, lambda x: -1, epsabs=1e-10)
    right, _ = integrate.dblquad(kern, -1, 1, lambda x: 1, lambda x: np.inf, epsabs=1e-10)
    return 0.5 * inner + left + right


def koranyi_halfspace_density_quad() -> float:
    """theta for the Koranyi unit ball: int_0^1 sqrt(1-b^4) db (times 4/sqrt(16))."""
    val, _ = integrate.quad(lambda b: math.sqrt(1.0 - b ** 4), 0.0, 1.0, epsabs=1e-13)
    return val


def pv_marginal_closed_1d(alpha: float, p: float, eps: float) -> float:
    """F_eps(p) for the non-calibration control zeta(x, y) = sign(y) on the line.

    F_eps(p) = int_{|y-p|>eps} |y-p|^(-1-alpha) (sign(p) - sign(y)) dy.
    For 0 < eps < p the y < 0 half-line contributes 2/(alpha p^alpha) per
    one-sided tail; y > 0 contributes nothing.
    """
    if not (0.0 < eps < p):
        raise ValueError("closed form assumes 0 < eps < p")
    return 2.0 * p ** (-alpha) / alpha


def pv_marginal_quad_1d(alpha: float, p: float, eps: float, cut: float = 50.0) -> float:
    """Quadrature cross-check for `pv_marginal_closed_1d` (finite cut + tail)."""

    def integrand(y):
        return (np.sign(p) - np.sign(y)) * abs(y - p) ** (-1.0 - alpha)

    total = 0.0
    for lo, hi in ((-cut, min(0.0, p - eps)), (max(0.0, p + eps), cut)):
        if hi > lo:
            val, _ = integrate.quad(integrand, lo, hi, epsabs=1e-11, limit=400)
            total += val
    # tails: sign(y) fixed at +-1 beyond the cut
    tail_pos = (np.sign(p) - 1.0) * (cut - p) ** (-alpha) / alpha
    tail_neg = (np.sign(p) + 1.0) * (cut + p) ** (-alpha) / alpha
    return total + tail_pos + tail_neg


def rescaled_interaction_quad_1d(profile, eps: float, Q: float = 1.0) -> float:
    """(1/eps) L_{K_eps}((0,1), (-1,0)) on the line for a radial profile."""

    def kern(x, y):
        r = abs(x - y)
        return float(profile.value(np.asarray(r / eps))) * eps ** (-Q)

    val, _ = integrate.dblquad(
        lambda y, x: kern(x, y), 0.0, 1.0, lambda x: -1.0, lambda x: 0.0, epsabs=1e-11
    )
    return val / eps


def convolution_lhs_quad_1d() -> float:
    """Exact lhs of the convolution bound for G = chi_[-1,1], u = chi_[0,1]: 14/3."""
    val, _ = integrate.quad(
        lambda y: max(2.0 - abs(y), 0.0) * 2.0 * min(abs(y), 1.0), -2.0, 2.0
    )
    return val


def bump_translation_lhs_quad(t: float, radius: float = 1.0) -> float:
    """int |u(x+t) - u(x)| dx for the 1-D quartic bump."""

    def u(x):
        s = 1.0 - (x / radius) ** 2
        return s * s if abs(x) < radius else 0.0

    val, _ = integrate.quad(
        lambda x: abs(u(x + t) - u(x)),
        -radius - abs(t),
        radius + abs(t),
        epsabs=1e-12,
        limit=200,
    )
    return val


def bump_total_variation_1d(radius: float = 1.0) -> float:
    """Total variation of the quartic bump on the line: rises to 1 and back."""
    return 2.0
