"""Monte Carlo estimators for the nonlocal interaction functionals.

Every estimator reduces to rays: sample a base point x from the bounded
side (importance mixture), draw an antithetic pair of cone directions, cut
the ray r -> x * delta_r(omega) at the target's breakpoints, and integrate
the kernel's radial shell mass exactly between cuts. Expectation over
(x, omega) against Haar polar measure recovers the double integral:

    int_B dx int_G K(g) f(x, x g) dg
        = Q vol(B1) E_x E_omega [ int_0^inf Ktilde(r) r^(Q-1) f(x, z(r)) dr ].

The radial direction carries no variance and no truncation bias: tails past
the last breakpoint use the constant membership value and the exact tail
mass (tail_policy "analytic"; "drop" zeroes them and flags the estimate).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import Kernel
from .rays import RayBundle, merge_breakpoints, real_roots_in
from .regions import (
    ClampAffineField,
    Complement,
    IndicatorField,
    Intersection,
    PatchField,
    Region,
    ScalarField,
)
from .sampling import Estimate, McConfig, build_proposal, combined_sigma, run_sharded

_PAD = np.inf


def _interval_grid(breakpoints: np.ndarray):
    """Edges, midpoints and evaluation radii from sorted padded breakpoints."""
    N = breakpoints.shape[0]
    lo = np.concatenate([np.zeros((N, 1)), breakpoints], axis=1)
    hi = np.concatenate([breakpoints, np.full((N, 1), _PAD)], axis=1)
    finite = np.isfinite(hi)
    finite_lo = np.isfinite(lo)
    mids = np.where(
        finite, 0.5 * (lo + hi), np.where(finite_lo, 2.0 * lo + 1.0, 1.0)
    )
    return lo, hi, mids, finite


def _masses(kernel: Kernel, lo, hi):
    with np.errstate(invalid="ignore"):
        m = kernel.profile.mass(lo, hi)
    return m


def _apply_payoff(kernel, lo, hi, payoff, finite, tail_policy):
    """Sum payoff-weighted interval masses; returns (finite part, tail part)."""
    m = np.where(payoff != 0.0, _masses(kernel, lo, hi), 0.0)
    contrib = m * payoff
    finite_part = np.sum(np.where(finite, contrib, 0.0), axis=1)
    tail_part = np.sum(np.where(~finite, contrib, 0.0), axis=1)
    if tail_policy == "drop":
        tail_part = np.zeros_like(tail_part)
    return finite_part, tail_part


def _pick_sampling_side(A: Region, B: Region):
    """Return (x_side, target) preferring a bounded sampling side."""
    if B.bounding_box() is not None:
        return B, A
    if A.bounding_box() is not None:
        return A, B  # L_K is symmetric for symmetric kernels
    raise ValueError("interaction requires at least one bounded region")


def interaction(kernel: Kernel, A: Region, B: Region, cfg: McConfig) -> Estimate:
    """L_K(A, B): kernel-weighted interaction between disjoint sets."""
    x_side, target = _pick_sampling_side(A, B)
    group = kernel.group
    # singular contributions live where the target's boundary meets the
    # x-side, so only the target's interfaces get collars
    proposal = build_proposal(cfg, kernel, x_side, interface_sources=[target])
    polar = kernel.polar_constant

    def worker(rng, m):
        x, q = proposal.sample_with_density(rng, m)
        ok = x_side.contains(x) & (q > 0)
        w = np.where(ok, 1.0 / np.where(q > 0, q, 1.0), 0.0)
        omega = kernel.norm.sample_cone(rng, m)
        main = np.zeros(m)
        tail = np.zeros(m)
        for sgn in (1.0, -1.0):
            bundle = RayBundle(group, x, sgn * omega)
            bp = target.ray_breakpoints(bundle, _PAD)
            lo, hi, mids, finite = _interval_grid(bp)
            chi = target.contains(bundle.point_at(mids)).astype(float)
            f, t = _apply_payoff(kernel, lo, hi, chi, finite, cfg.tail_policy)
            main += 0.5 * f
            tail += 0.5 * t
        live = w > 0  # dead draws may carry infinite masses; select, don't multiply
        with np.errstate(invalid="ignore"):
            total = np.where(live, (main + tail) * w, 0.0)
            tails = np.where(live, tail * w, 0.0)
        return [np.mean(total) * polar, np.mean(tails) * polar]

    vals, stds, used = run_sharded(cfg, worker, components=2)
    flags = ("tail_dropped",) if cfg.tail_policy == "drop" else ()
    return Estimate(
        value=float(vals[0]),
        std_error=float(stds[0]),
        samples_used=used,
        tail_correction=float(vals[1]),
        seed=cfg.seed,
        config_hash=cfg.digest(),
        flags=flags,
    )


@dataclass(frozen=True)
class EnergyEstimate:
    """J = inner/2 + cross, with the two pieces estimated jointly."""

    inner: Estimate  # J^1: both points in the window
    cross: Estimate  # J^2: one point outside
    total: Estimate

    @property
    def value(self):
        return self.total.value

    @property
    def std_error(self):
        return self.total.std_error


def _zero_safe(coef, mass):
    """coef * mass treating exact-zero coefficients as killing infinities."""
    return np.where(coef == 0.0, 0.0, coef * np.where(coef == 0.0, 0.0, mass))


def _clamp_interval_masses(kernel, a, b, u_x, lo, hi, mids):
    """Exact interval masses of |clip(a + b r) - u_x| for the ramp field.

    Between consecutive cuts (roots of phi = 0, 1, u_x) the ramp stays in a
    single branch, so each interval integrates either a constant or a
    sign-constant affine function against the kernel shell measure.
    """
    phi_mid = a[:, None] + b[:, None] * np.minimum(mids, 1e30)
    low = phi_mid < 0.0
    high = phi_mid > 1.0
    m0 = _masses(kernel, lo, hi)
    hi_fin = np.where(np.isfinite(hi), hi, lo)
    m1 = kernel.profile.weighted_mass(lo, hi_fin, 1.0)  # zero on tail slots
    const_low = _zero_safe(np.broadcast_to(u_x[:, None], m0.shape), m0)
    const_high = _zero_safe(np.broadcast_to((1.0 - u_x)[:, None], m0.shape), m0)
    affine = np.abs(
        _zero_safe(np.broadcast_to((a - u_x)[:, None], m0.shape), m0)
        + _zero_safe(np.broadcast_to(b[:, None], m1.shape), m1)
    )
    # an affine stretch reaching the tail must have b == 0 (phi is bounded
    # there); the classification by phi_mid keeps unbounded stretches in the
    # constant branches, so the affine branch only sees finite intervals
    return np.where(low, const_low, np.where(high, const_high, affine))


def nonlocal_energy(
    kernel: Kernel, u: ScalarField, window: Region, cfg: McConfig
) -> EnergyEstimate:
    """J_K(u; window) = 1/2 J^1 + J^2, both halves from one ray pass."""
    if window.bounding_box() is None:
        raise ValueError("the window must be bounded")
    group = kernel.group
    proposal = build_proposal(cfg, kernel, window, interface_sources=[u])
    polar = kernel.polar_constant
    clampish = isinstance(u, ClampAffineField) or (
        isinstance(u, PatchField) and isinstance(u.inside, ClampAffineField)
    )

    def worker(rng, m):
        x, q = proposal.sample_with_density(rng, m)
        ok = window.contains(x) & (q > 0)
        w = np.where(ok, 1.0 / np.where(q > 0, q, 1.0), 0.0)
        u_x = u.eval(x)
        omega = kernel.norm.sample_cone(rng, m)
        inner = np.zeros(m)
        cross = np.zeros(m)
        tail = np.zeros(m)
        for sgn in (1.0, -1.0):
            bundle = RayBundle(group, x, sgn * omega)
            parts = [
                u.ray_breakpoints(bundle, _PAD),
                window.ray_breakpoints(bundle, _PAD),
            ]
            if clampish:
                ramp = u if isinstance(u, ClampAffineField) else u.inside
                a, b = ramp.ray_affine(bundle)
                parts.append(
                    real_roots_in(np.stack([a - u_x, b], axis=1), 0.0, _PAD, _PAD)
                )
            bp = merge_breakpoints(parts, _PAD)
            lo, hi, mids, finite = _interval_grid(bp)
            pts = bundle.point_at(mids)
            in_window = window.contains(pts)
            if not clampish:
                payoff = np.abs(u.eval(pts) - u_x[:, None])
                f_in, t_in = _apply_payoff(
                    kernel, lo, hi, payoff * in_window, finite, cfg.tail_policy
                )
                f_out, t_out = _apply_payoff(
                    kernel, lo, hi, payoff * ~in_window, finite, cfg.tail_policy
                )
            else:
                ramp = u if isinstance(u, ClampAffineField) else u.inside
                a, b = ramp.ray_affine(bundle)
                jm = _clamp_interval_masses(kernel, a, b, u_x, lo, hi, mids)
                if isinstance(u, PatchField):
                    in_patch = u.window.contains(pts)
                    payoff_out = np.abs(u.outside.eval(pts) - u_x[:, None])
                    m0 = np.where(payoff_out != 0.0, _masses(kernel, lo, hi), 0.0)
                    jm = np.where(in_patch, jm, payoff_out * m0)
                f_in = np.sum(np.where(finite & in_window, jm, 0.0), axis=1)
                f_out_all = np.where(~in_window, jm, 0.0)
                f_out = np.sum(np.where(finite, f_out_all, 0.0), axis=1)
                t_in = np.sum(np.where(~finite & in_window, jm, 0.0), axis=1)
                t_out = np.sum(np.where(~finite, f_out_all, 0.0), axis=1)
                if cfg.tail_policy == "drop":
                    t_in = np.zeros_like(t_in)
                    t_out = np.zeros_like(t_out)
            inner += 0.5 * (f_in + t_in)
            cross += 0.5 * (f_out + t_out)
            tail += 0.5 * (t_in + t_out)
        live = w > 0
        with np.errstate(invalid="ignore"):
            return [
                np.mean(np.where(live, inner * w, 0.0)) * polar,
                np.mean(np.where(live, cross * w, 0.0)) * polar,
                np.mean(np.where(live, (0.5 * inner + cross) * w, 0.0)) * polar,
                np.mean(np.where(live, tail * w, 0.0)) * polar,
            ]

    vals, stds, used = run_sharded(cfg, worker, components=4)
    flags = ("tail_dropped",) if cfg.tail_policy == "drop" else ()

    def mk(v, s, t=0.0):
        return Estimate(
            value=float(v),
            std_error=float(s),
            samples_used=used,
            tail_correction=float(t),
            seed=cfg.seed,
            config_hash=cfg.digest(),
            flags=flags,
        )

    return EnergyEstimate(
        inner=mk(vals[0], stds[0]),
        cross=mk(vals[1], stds[1]),
        total=mk(vals[2], stds[2], vals[3]),
    )


def nonlocal_perimeter(
    kernel: Kernel,
    E: Region,
    window: Region,
    cfg: McConfig,
    method: str = "single",
) -> Estimate:
    """P_K(E; window), by the single two-point form or the three-term sum."""
    if method == "single":
        return nonlocal_energy(kernel, IndicatorField(E), window, cfg).total
    if method != "three_term":
        raise ValueError(f"unknown method {method!r}")
    Ec = Complement(E)
    Wc = Complement(window)
    terms = [
        interaction(kernel, Intersection((Ec, window)), Intersection((E, window)), cfg),
        interaction(
            kernel, Intersection((E, Wc)), Intersection((Ec, window)), cfg.with_seed(cfg.seed + 1)
        ),
        interaction(
            kernel, Intersection((Ec, Wc)), Intersection((E, window)), cfg.with_seed(cfg.seed + 2)
        ),
    ]
    out = terms[0].plus(terms[1]).plus(terms[2])
    return out


def rescaled_perimeter(
    kernel: Kernel, eps: float, E: Region, window: Region, cfg: McConfig
) -> Estimate:
    """eps^-1 P_{K_eps}(E; window)."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return nonlocal_perimeter(kernel.rescale(eps), E, window, cfg).scaled(1.0 / eps)


def rescaled_inner_energy(
    kernel: Kernel, eps: float, E: Region, window: Region, cfg: McConfig
) -> Estimate:
    """(1/(2 eps)) J^1_{K_eps}(E; window): the local half of the energy."""
    energy = nonlocal_energy(kernel.rescale(eps), IndicatorField(E), window, cfg)
    return energy.inner.scaled(0.5 / eps)


def energy_gap(
    kernel: Kernel, v: ScalarField, u: ScalarField, window: Region, cfg: McConfig
) -> Estimate:
    """J_K(v; window) - J_K(u; window) on common rays (paired estimator).

    Both payoffs are evaluated on the same sampled pairs with merged
    breakpoints, so rays that never meet the perturbation cancel exactly and
    the difference carries only the perturbation's noise.
    """
    if window.bounding_box() is None:
        raise ValueError("the window must be bounded")
    group = kernel.group
    proposal = build_proposal(cfg, kernel, window, interface_sources=[v, u])
    polar = kernel.polar_constant

    def payoff_masses(field, bundle, lo, hi, mids, finite, f_x, pts):
        if isinstance(field, ClampAffineField) or (
            isinstance(field, PatchField)
            and isinstance(field.inside, ClampAffineField)
        ):
            ramp = field if isinstance(field, ClampAffineField) else field.inside
            a, b = ramp.ray_affine(bundle)
            jm = _clamp_interval_masses(kernel, a, b, f_x, lo, hi, mids)
            if isinstance(field, PatchField):
                in_patch = field.window.contains(pts)
                pay_out = np.abs(field.outside.eval(pts) - f_x[:, None])
                m0 = np.where(pay_out != 0.0, _masses(kernel, lo, hi), 0.0)
                jm = np.where(in_patch, jm, pay_out * m0)
            return jm
        payoff = np.abs(field.eval(pts) - f_x[:, None])
        return np.where(payoff != 0.0, _masses(kernel, lo, hi), 0.0) * payoff

    def worker(rng, m):
        x, q = proposal.sample_with_density(rng, m)
        ok = window.contains(x) & (q > 0)
        w = np.where(ok, 1.0 / np.where(q > 0, q, 1.0), 0.0)
        vx = v.eval(x)
        ux = u.eval(x)
        omega = kernel.norm.sample_cone(rng, m)
        diff = np.zeros(m)
        for sgn in (1.0, -1.0):
            bundle = RayBundle(group, x, sgn * omega)
            parts = [
                v.ray_breakpoints(bundle, _PAD),
                u.ray_breakpoints(bundle, _PAD),
                window.ray_breakpoints(bundle, _PAD),
            ]
            for fld, fx in ((v, vx), (u, ux)):
                ramp = None
                if isinstance(fld, ClampAffineField):
                    ramp = fld
                elif isinstance(fld, PatchField) and isinstance(
                    fld.inside, ClampAffineField
                ):
                    ramp = fld.inside
                if ramp is not None:
                    a, b = ramp.ray_affine(bundle)
                    parts.append(
                        real_roots_in(np.stack([a - fx, b], axis=1), 0.0, _PAD, _PAD)
                    )
            bp = merge_breakpoints(parts, _PAD)
            lo, hi, mids, finite = _interval_grid(bp)
            pts = bundle.point_at(mids)
            in_w = window.contains(pts)
            weight = 1.0 - 0.5 * in_w  # J = 1/2 J^1 + J^2 per interval
            pm_v = payoff_masses(v, bundle, lo, hi, mids, finite, vx, pts)
            pm_u = payoff_masses(u, bundle, lo, hi, mids, finite, ux, pts)
            if cfg.tail_policy == "drop":
                pm_v = np.where(finite, pm_v, 0.0)
                pm_u = np.where(finite, pm_u, 0.0)
            diff += 0.5 * np.sum((pm_v - pm_u) * weight, axis=1)
        live = w > 0
        with np.errstate(invalid="ignore"):
            return [np.mean(np.where(live, diff * w, 0.0)) * polar]

    vals, stds, used = run_sharded(cfg, worker, components=1)
    return Estimate(
        value=float(vals[0]),
        std_error=float(stds[0]),
        samples_used=used,
        seed=cfg.seed,
        config_hash=cfg.digest(),
    )


# ---------------------------------------------------------------------------
# principal values


@dataclass(frozen=True)
class CurvatureEstimate:
    value: float
    std_error: float
    samples_used: int
    cutoffs: tuple
    table: tuple  # value at each cutoff
    table_std: tuple
    diverged: bool
    seed: int = 0

    def agrees_with(self, value: float, sigmas: float = 3.0, atol: float = 1e-12) -> bool:
        return abs(self.value - value) <= sigmas * self.std_error + atol


def mean_curvature(
    kernel: Kernel, E: Region, point: np.ndarray, cfg: McConfig, cutoffs=None
) -> CurvatureEstimate:
    """H_K[E](x): principal value of int (chi_Ec - chi_E)(y) K(y^-1 x) dy.

    Matched antithetic direction pairs cancel the leading singular term
    exactly; interval masses are integrated from each cutoff in the grid and
    the reported value extrapolates the two smallest cutoffs. Non-decaying
    increments across shells raise the divergence flag.
    """
    group = kernel.group
    point = np.asarray(point, dtype=float)
    if cutoffs is None:
        cutoffs = np.geomspace(1e-2, cfg.r_min, 8)
    cutoffs = np.asarray(sorted(cutoffs, reverse=True), dtype=float)
    polar = kernel.polar_constant

    def worker(rng, m):
        omega = kernel.norm.sample_cone(rng, m)
        x = np.broadcast_to(point, (m, group.n)).copy()
        acc = np.zeros((m, len(cutoffs)))
        for sgn in (1.0, -1.0):
            bundle = RayBundle(group, x, sgn * omega)
            bp = E.ray_breakpoints(bundle, _PAD)
            lo, hi, mids, finite = _interval_grid(bp)
            sign_payoff = 1.0 - 2.0 * E.contains(bundle.point_at(mids)).astype(float)
            m_all = _masses(kernel, np.maximum(lo[None, ...], cutoffs[:, None, None]), hi[None, ...])
            contrib = np.where(
                hi[None, ...] > cutoffs[:, None, None], m_all * sign_payoff[None, ...], 0.0
            )
            acc += 0.5 * np.sum(contrib, axis=2).T
        return np.mean(acc, axis=0) * polar

    vals, stds, used = run_sharded(cfg, worker, components=len(cutoffs))
    # divergence: increments between consecutive cutoffs must die out
    incr = np.abs(np.diff(vals))
    tol = 3.0 * np.sqrt(stds[:-1] ** 2 + stds[1:] ** 2) + 1e-12
    diverged = bool(len(incr) >= 2 and incr[-1] > tol[-1] and incr[-1] >= incr[-2])
    value = 2.0 * vals[-1] - vals[-2] if len(vals) >= 2 else vals[-1]
    std = float(np.sqrt((2 * stds[-1]) ** 2 + stds[-2] ** 2)) if len(vals) >= 2 else stds[-1]
    return CurvatureEstimate(
        value=float(value),
        std_error=std,
        samples_used=used,
        cutoffs=tuple(cutoffs),
        table=tuple(float(v) for v in vals),
        table_std=tuple(float(s) for s in stds),
        diverged=diverged,
        seed=cfg.seed,
    )


def mean_curvature_field(
    kernel: Kernel, foliation, point: np.ndarray, cfg: McConfig, cutoffs=None
) -> CurvatureEstimate:
    """H_K(phi)(x) through the identity with the superlevel set {phi > phi(x)}."""
    region = foliation.superlevel_through(point)
    return mean_curvature(kernel, region, point, cfg, cutoffs=cutoffs)


# ---------------------------------------------------------------------------
# inequality checks


@dataclass(frozen=True)
class BoundCheck:
    name: str
    lhs: float
    rhs: float
    slack: float  # 3 sigma style tolerance already folded in
    passed: bool
    detail: dict

    def to_json_dict(self):
        return {
            "check": self.name,
            "pass": bool(self.passed),
            "statistic": self.lhs,
            "threshold": self.rhs + self.slack,
            "detail": {k: v for k, v in self.detail.items()},
        }


def translation_bound_check(group, u, g, cfg: McConfig) -> BoundCheck:
    """int |u(x g) - u(x)| dx <= d(0, g) |D_X u|(G) for horizontal g.

    u must expose eval, horizontal_gradient and bounding_box (catalog bump
    fields). The translation g must be horizontal so the CC distance is the
    Euclidean length of its first-layer part.
    """
    g = np.asarray(g, dtype=float)
    if np.any(np.abs(g[group.m1 :]) > 1e-12):
        raise ValueError("translation check requires a horizontal g")
    dist = float(np.linalg.norm(g[: group.m1]))
    lo, hi = u.bounding_box()
    lo2, hi2 = group.translate_box(group.inverse(g), lo, hi)
    lo, hi = np.minimum(lo, lo2), np.maximum(hi, hi2)
    vol = float(np.prod(hi - lo))

    def worker(rng, m):
        x = rng.uniform(lo, hi, size=(m, group.n))
        lhs = np.abs(u.eval(group.product(x, np.broadcast_to(g, x.shape))) - u.eval(x))
        tv = np.linalg.norm(u.horizontal_gradient(x), axis=-1)
        return [np.mean(lhs) * vol, np.mean(tv) * vol]

    vals, stds, used = run_sharded(cfg, worker, components=2, rays_per_draw=1)
    lhs, rhs = float(vals[0]), dist * float(vals[1])
    slack = 3.0 * float(np.hypot(stds[0], dist * stds[1])) + 1e-12
    return BoundCheck(
        name="translation_estimate",
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        passed=lhs <= rhs + slack,
        detail={"distance": dist, "total_variation": float(vals[1]), "samples": used},
    )


def interaction_bound_check(
    kernel: Kernel, E: Region, F: Region, cfg: McConfig, perimeter_E=None,
    volume_E=None, perimeter_F=None, volume_F=None,
) -> BoundCheck:
    """L_K(E,F) <= V(E,F) int min(1, ||xi||) K(xi) dxi for disjoint E, F."""
    from .kernels import integrability_check

    integ = integrability_check(kernel)
    caps = []
    if perimeter_E is not None and volume_E is not None:
        caps.append(max(perimeter_E / 2.0, volume_E))
    if perimeter_F is not None and volume_F is not None:
        caps.append(max(perimeter_F / 2.0, volume_F))
    if not caps:
        raise ValueError("need perimeter/volume data for at least one set")
    V = min(caps)
    lhs = interaction(kernel, E, F, cfg)
    rhs = V * integ.value
    slack = 3.0 * lhs.std_error + 1e-12
    return BoundCheck(
        name="interaction_volume_bound",
        lhs=lhs.value,
        rhs=rhs,
        slack=slack,
        passed=(lhs.value <= rhs + slack) and integ.converged,
        detail={
            "V": V,
            "kernel_integral": integ.value,
            "lhs_std": lhs.std_error,
            "integrable": integ.converged,
        },
    )


def convolution_bound_check(
    kernel_G: Kernel, E: Region, cfg: McConfig, y_radius: float | None = None
) -> BoundCheck:
    """int int (G*G)(y) |chi_E(x y) - chi_E(x)| dy dx <= 4 ||G||_1 P_G(E).

    G must be integrable (e.g. a truncated kernel). Writing the left side as
    int (G*G)(y) vol(E \\ E y^-1) * 2 dy, the outer y is drawn radially, the
    translate overlap is sampled over E's box, and the group convolution
    (G*G)(y) = int G(y z^-1) G(z) dz gets one inner radial draw per sample.
    """
    group = kernel_G.group
    prof = kernel_G.profile
    polar = kernel_G.polar_constant
    norm_l1 = polar * float(prof.mass(0.0, np.inf))
    if not np.isfinite(norm_l1):
        raise ValueError("convolution bound requires an integrable kernel")
    box = E.bounding_box()
    if box is None:
        raise ValueError("E must be bounded for the convolution check")
    lo, hi = box
    vol_box = float(np.prod(hi - lo))
    sup = prof.support_radius
    if y_radius is None:
        # factor 3 covers quasi-norm triangle constants for compact supports;
        # heavy-tailed kernels get a moderate radius plus a conservative
        # analytic tail bound below
        y_radius = 3.0 * sup if sup is not None else 50.0
    r_lo = cfg.r_min

    def radial_draw(rng, m):
        """delta_r omega with log-uniform r on [r_lo, y_radius]; 1/density."""
        r = np.exp(rng.uniform(np.log(r_lo), np.log(y_radius), size=m))
        omega = kernel_G.norm.sample_cone(rng, m)
        pts = omega * r[:, None] ** group.weights
        inv_density = polar * r ** group.Q * np.log(y_radius / r_lo)
        return pts, inv_density

    def worker(rng, m):
        x = rng.uniform(lo, hi, size=(m, group.n))
        y, wy = radial_draw(rng, m)
        z, wz = radial_draw(rng, m)
        conv = kernel_G.value(group.product(y, -z)) * kernel_G.value(z) * wz
        jump = E.contains(x).astype(float) * (
            1.0 - E.contains(group.product(x, y)).astype(float)
        )
        # channel 1: the lhs over the sampled y-range; 2: covered (G*G) mass;
        # 3: the volume of E (for the conservative tail bound)
        return [
            2.0 * np.mean(conv * wy * jump * vol_box),
            np.mean(conv * wy),
            np.mean(E.contains(x)) * vol_box,
        ]

    vals, stds, used = run_sharded(cfg, worker, components=3, rays_per_draw=1)
    # beyond the sampled radius, (G*G) A <= 2|E| (G*G); the missing (G*G)
    # mass is bounded by ||G||_1^2 minus the covered part
    tail_bound = 2.0 * float(vals[2]) * max(0.0, norm_l1 ** 2 - float(vals[1]))
    lhs = float(vals[0]) + tail_bound
    perim = interaction(kernel_G, Complement(E), E, cfg.with_seed(cfg.seed + 7))
    rhs = 4.0 * norm_l1 * perim.value
    slack = 3.0 * float(np.hypot(stds[0], 4.0 * norm_l1 * perim.std_error)) + 1e-12
    return BoundCheck(
        name="convolution_inequality",
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        passed=lhs <= rhs + slack,
        detail={
            "norm_l1": norm_l1,
            "perimeter": perim.value,
            "samples": used,
            "y_truncated_at": y_radius,
            "tail_bound": tail_bound,
            "sampled_lhs": float(vals[0]),
            "lhs_std": float(stds[0]),
        },
    )


def rescaled_interaction_bound(
    kernel: Kernel,
    E: Region,
    F: Region,
    N_perimeter: float,
    eps_grid,
    cfg: McConfig,
) -> dict:
    """Table of eps^-1 L_{K_eps}(E, F) against the slow-scale transport bound.

    Requires int K(xi) ||xi|| dxi < infinity (compact support or fast decay);
    kernels failing the strong integrability check are rejected.
    """
    weighted = kernel.polar_constant * float(
        kernel.profile.weighted_mass(0.0, np.inf, 1.0)
    )
    if not np.isfinite(weighted):
        raise ValueError("kernel fails the strong integrability condition")
    rhs = 0.5 * N_perimeter * weighted
    rows = []
    ok = True
    for j, eps in enumerate(eps_grid):
        est = interaction(kernel.rescale(eps), E, F, cfg.with_seed(cfg.seed + j))
        value = est.value / eps
        std = est.std_error / eps
        passed = value <= rhs + 3.0 * std + 1e-12
        ok = ok and passed
        rows.append(
            {
                "eps": float(eps),
                "value": value,
                "std_error": std,
                "rhs": rhs,
                "pass": passed,
            }
        )
    return {"rows": rows, "rhs": rhs, "pass": ok}
