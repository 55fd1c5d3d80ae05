"""Rescaled-functional asymptotics: cell energies, liminf density, Davila scan.

The cell energy b(H) is an infimum over families converging to the
halfspace; the constant family gives a certified upper bound, which is what
the scans tabulate. For kernels with slow decay (positive infcappa) the
scans increase as eps shrinks, consistent with the divergence of the lower
bound; compactly supported kernels stabilize. rho(nu) divides by the
halfspace perimeter density computed with the same norm ball.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import rescaled_inner_energy, rescaled_perimeter
from .geometry import theta
from .kernels import Kernel, infcappa_check
from .regions import HalfSpace, NormBall, Region
from .sampling import Estimate, McConfig


@dataclass(frozen=True)
class EpsilonScan:
    eps: tuple
    values: tuple
    std_errors: tuple
    extrapolated: float | None
    trend: str  # "converging" | "increasing" | "noisy"

    def rows(self):
        return [
            {"epsilon_or_alpha": e, "value": v, "stderr": s}
            for e, v, s in zip(self.eps, self.values, self.std_errors)
        ]


def _classify(eps, values, stds):
    """Fit a + b eps^gamma through the last three points; label the trend."""
    if len(values) < 3:
        return None, "noisy"
    e1, e2, e3 = eps[-3], eps[-2], eps[-1]
    v1, v2, v3 = values[-3], values[-2], values[-1]
    noise = 3.0 * float(np.sqrt(np.mean(np.square(stds[-3:])))) + 1e-300
    d1, d2 = v2 - v1, v3 - v2
    if abs(d1) <= noise and abs(d2) <= noise:
        return float(v3), "converging"  # flat within noise
    if d1 * d2 <= 0:
        return None, "noisy"
    # geometric grid: gamma from the decrement ratio
    q = np.log(e3 / e2) / np.log(e2 / e1)
    ratio = d2 / d1
    if not np.isfinite(ratio) or ratio <= 0:
        return None, "noisy"
    gamma = np.log(ratio) / np.log(e3 / e2) * np.sign(1.0)
    if abs(ratio) < 1.0:
        # decrements shrink: extrapolate the geometric tail
        limit = v3 + d2 * ratio / (1.0 - ratio)
        resid = abs(d2 * ratio / (1.0 - ratio))
        label = "converging" if resid <= max(noise, 0.05 * abs(limit)) else "noisy"
        return float(limit), label
    label = "increasing" if d2 > 0 else "noisy"
    _ = q, gamma
    return None, label


def cell_energy_upper(
    kernel: Kernel, nu, eps_grid, cfg: McConfig, window: Region | None = None
) -> EpsilonScan:
    """(1/2eps) J^1_eps of the constant halfspace family in the unit ball.

    An admissible family for the cell-energy infimum, hence an upper bound.
    Requires the slow-decay check to pass (the positivity hypothesis).
    """
    if infcappa_check(kernel) <= 0.0:
        raise ValueError("kernel fails the slow-decay (infcappa) hypothesis")
    group = kernel.group
    H = HalfSpace(group, np.asarray(nu, dtype=float))
    B = window if window is not None else NormBall(group, kernel.norm, radius=1.0)
    values, stds = [], []
    eps_grid = tuple(float(e) for e in eps_grid)
    for j, eps in enumerate(eps_grid):
        est = rescaled_inner_energy(kernel, eps, H, B, cfg.with_seed(cfg.seed + j))
        values.append(est.value)
        stds.append(est.std_error)
    extrapolated, trend = _classify(eps_grid, values, stds)
    return EpsilonScan(
        eps=eps_grid,
        values=tuple(values),
        std_errors=tuple(stds),
        extrapolated=extrapolated,
        trend=trend,
    )


def liminf_density(
    kernel: Kernel, nu, eps_grid, cfg: McConfig
) -> tuple[Estimate, EpsilonScan]:
    """rho(nu) = b-upper / theta(nu); flagged as an upper bound of the density."""
    nu = np.asarray(nu, dtype=float)
    scan = cell_energy_upper(kernel, nu / np.linalg.norm(nu), eps_grid, cfg)
    if scan.trend == "converging" and scan.extrapolated is not None:
        b_val = scan.extrapolated
        b_std = scan.std_errors[-1]
        flags = ("UPPER-BOUND-OF-b", "extrapolated")
    else:
        b_val = scan.values[-1]
        b_std = scan.std_errors[-1]
        flags = ("UPPER-BOUND-OF-b", f"trend:{scan.trend}")
    th = theta(kernel.norm, nu)
    return (
        Estimate(
            value=b_val / th,
            std_error=b_std / th,
            samples_used=0,
            seed=cfg.seed,
            config_hash=cfg.digest(),
            flags=flags,
        ),
        scan,
    )


@dataclass(frozen=True)
class GammaLiminfReport:
    eps: tuple
    lower_terms: tuple  # (1/2eps) J^1_eps entries
    lower_stds: tuple
    full_terms: tuple  # eps^-1 P_eps entries
    full_stds: tuple
    termwise_pass: bool
    reference: float  # matched-minimum line: min lower term
    reference_vs_table: bool

    @property
    def passed(self):
        return self.termwise_pass and self.reference_vs_table


def gamma_liminf_check(
    kernel: Kernel, E: HalfSpace, window: Region, eps_grid, cfg: McConfig
) -> GammaLiminfReport:
    """Term-wise eps^-1 P_eps >= (1/2eps) J^1_eps, plus the reference line."""
    lows, lstd, fulls, fstd = [], [], [], []
    ok = True
    for j, eps in enumerate(eps_grid):
        sub = cfg.with_seed(cfg.seed + 17 * j)
        low = rescaled_inner_energy(kernel, eps, E, window, sub)
        full = rescaled_perimeter(kernel, eps, E, window, sub.with_seed(sub.seed + 1))
        lows.append(low.value)
        lstd.append(low.std_error)
        fulls.append(full.value)
        fstd.append(full.std_error)
        tol = 3.0 * float(np.hypot(low.std_error, full.std_error)) + 1e-12
        ok = ok and (full.value >= low.value - tol)
    ref = min(lows)
    ref_ok = ref <= min(fulls) + 3.0 * float(np.hypot(max(lstd), max(fstd))) + 1e-12
    return GammaLiminfReport(
        eps=tuple(float(e) for e in eps_grid),
        lower_terms=tuple(lows),
        lower_stds=tuple(lstd),
        full_terms=tuple(fulls),
        full_stds=tuple(fstd),
        termwise_pass=ok,
        reference=ref,
        reference_vs_table=ref_ok,
    )


# ---------------------------------------------------------------------------
# Euclidean anchor


@dataclass(frozen=True)
class ScanRow:
    alpha: float
    value: float  # (1-alpha) P_alpha(E; R^n)
    std_error: float
    ratio_to_perimeter: float


@dataclass(frozen=True)
class LimitScan:
    rows: tuple
    extrapolated_constant: float
    perimeter: float


def _segment_global_perimeter(group, norm, length, alpha, cfg) -> Estimate:
    """P_alpha([0, L]; R) split per endpoint, each translated to the origin.

    Near the sharp-interface limit a large share of the energy sits within
    float-rounding distance of the interfaces; coordinates resolve that
    range exactly only around 0, so each endpoint is estimated in its own
    translated frame (left-invariance) and the two halves are summed.
    """
    from .engine import interaction
    from .regions import Box, Complement, HalfSpace, interval

    right_ray = HalfSpace(group, np.array([1.0]))  # [0, inf)
    left_ray = Complement(right_ray)
    E0 = interval(group, 0.0, float(length))  # endpoint of interest at 0
    EL = interval(group, -float(length), 0.0)  # the L endpoint moved to 0
    t0 = interaction(
        _segment_kernel(group, norm, alpha), E0, left_ray, cfg
    )
    tL = interaction(
        _segment_kernel(group, norm, alpha), EL, right_ray, cfg.with_seed(cfg.seed + 1)
    )
    return t0.plus(tL)


def _segment_kernel(group, norm, alpha):
    from .kernels import fractional_kernel

    return fractional_kernel(group, norm, float(alpha))


def classical_limit_scan(
    group, norm, E: Region, perimeter: float, alpha_grid, cfg: McConfig
) -> LimitScan:
    """(1 - alpha) P_alpha(E; R^n) over an alpha grid, with extrapolation.

    The sharp-interface limit constant is reported as the Richardson
    extrapolation of value/perimeter toward alpha = 1; only internal
    consistency between sets is ever asserted. 1-D segments are decomposed
    per endpoint in translated frames (exact near-interface resolution).
    """
    from .engine import interaction
    from .kernels import fractional_kernel
    from .regions import Box, Complement

    is_segment = (
        group.step == 1
        and group.n == 1
        and isinstance(E, Box)
        and abs(float(E.lo[0])) < 1e-14
    )
    rows = []
    for j, alpha in enumerate(alpha_grid):
        sub = cfg.with_seed(cfg.seed + 31 * j)
        if is_segment:
            est = _segment_global_perimeter(group, norm, float(E.hi[0]), alpha, sub)
        else:
            kernel = fractional_kernel(group, norm, float(alpha))
            est = interaction(kernel, Complement(E), E, sub)
        val = (1.0 - alpha) * est.value
        rows.append(
            ScanRow(
                alpha=float(alpha),
                value=val,
                std_error=(1.0 - alpha) * est.std_error,
                ratio_to_perimeter=val / perimeter,
            )
        )
    # Richardson toward alpha = 1 on the last two nodes: c(a) ~ c + k(1-a)
    a1, a2 = rows[-2].alpha, rows[-1].alpha
    c1, c2 = rows[-2].ratio_to_perimeter, rows[-1].ratio_to_perimeter
    w = (1.0 - a1) / ((1.0 - a1) - (1.0 - a2))
    c_star = c1 + (c2 - c1) * w
    return LimitScan(rows=tuple(rows), extrapolated_constant=float(c_star), perimeter=perimeter)


def isometry_invariance_check(
    kernel: Kernel, nu1, nu2, eps: float, cfg: McConfig
) -> dict:
    """Rescaled halfspace energies agree for rotated normals (radial kernels)."""
    group = kernel.group
    if group.step > 1 and group.layer_dims != (2, 1):
        raise ValueError("horizontal rotations are wired for R^n and H1 only")
    B = NormBall(group, kernel.norm, radius=1.0)
    out = []
    for nu in (nu1, nu2):
        H = HalfSpace(group, np.asarray(nu, dtype=float))
        # shared seed: identical normals give bit-identical estimates
        out.append(rescaled_inner_energy(kernel, eps, H, B, cfg))
    a, b = out
    tol = 3.0 * float(np.hypot(a.std_error, b.std_error)) + 1e-12
    return {
        "value_1": a.value,
        "value_2": b.value,
        "sigma": float(np.hypot(a.std_error, b.std_error)),
        "pass": abs(a.value - b.value) <= tol,
    }
