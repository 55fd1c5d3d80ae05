"""Pair calibrations, foliations, and the calibrating functional.

The halfspace calibration is the sign of the paired horizontal increment;
its two defining properties (sign alignment with jumps, vanishing
principal-value marginals) are implemented as sampled checks with exact
radial integration, so the cancellation for halfspaces is reproduced to
machine precision rather than approximated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import (
    CurvatureEstimate,
    _interval_grid,
    _masses,
    mean_curvature,
    mean_curvature_field,
)
from .kernels import Kernel
from .rays import RayBundle, merge_breakpoints, real_roots_in
from .regions import Complement, HalfSpace, Region
from .sampling import Estimate, McConfig, build_proposal, combined_sigma, run_sharded

_PAD = np.inf


class PairField:
    """zeta : G x G -> [-1, 1]."""

    antisymmetric: bool = False

    def eval(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def difference_at(self, p: np.ndarray, y: np.ndarray) -> np.ndarray:
        """zeta(y, p) - zeta(p, y), broadcast over y batches."""
        return self.eval(y, p) - self.eval(p, y)

    def ray_breakpoints(self, bundle: RayBundle, pad: float):
        """Radii where the pair difference can jump along y = z(r)."""
        return np.full((bundle.size, 1), pad)


def _sign(v: np.ndarray) -> np.ndarray:
    return np.sign(v)  # sign(0) = 0 convention throughout


class HalfspaceCalibration(PairField):
    """zeta_nu(x, y) = sign(<pi_1 log(x^-1 y), nu>); antisymmetric, values in {-1,0,1}."""

    antisymmetric = True

    def __init__(self, group, nu):
        nu = np.asarray(nu, dtype=float)
        if nu.shape != (group.m1,) or not np.any(nu):
            raise ValueError("calibration needs a nonzero horizontal normal")
        self.group = group
        self.nu = nu

    def eval(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        m1 = self.group.m1
        return _sign((q[..., :m1] - p[..., :m1]) @ self.nu)

    def difference_at(self, p, y):
        return -2.0 * self.eval(p, y)

    # the difference is constant along each ray: no cuts needed


class PointwisePairField(PairField):
    """zeta(p, q) = s(q): depends on the second argument only (control case)."""

    def __init__(self, region: Region):
        self.group = region.group
        self.region = region

    def eval(self, p, q):
        return 2.0 * self.region.contains(q).astype(float) - 1.0

    def ray_breakpoints(self, bundle, pad):
        return self.region.ray_breakpoints(bundle, pad)


class FoliationSignPair(PairField):
    """zeta(x, y) = sign(phi(y) - phi(x)) induced by a foliation function."""

    antisymmetric = True

    def __init__(self, foliation):
        self.group = foliation.group
        self.foliation = foliation

    def eval(self, p, q):
        return _sign(self.foliation.value(q) - self.foliation.value(p))

    def difference_at(self, p, y):
        return -2.0 * self.eval(p, y)

    def ray_breakpoints(self, bundle, pad):
        return self.foliation.level_breakpoints(bundle, pad)


class Antisymmetrized(PairField):
    """zeta_hat(p, q) = (zeta(p, q) - zeta(q, p)) / 2."""

    antisymmetric = True

    def __init__(self, base: PairField):
        self.base = base
        self.group = getattr(base, "group", None)

    def eval(self, p, q):
        return 0.5 * (self.base.eval(p, q) - self.base.eval(q, p))

    def difference_at(self, p, y):
        return self.base.difference_at(p, y)

    def ray_breakpoints(self, bundle, pad):
        return self.base.ray_breakpoints(bundle, pad)


def antisymmetrize(zeta: PairField) -> PairField:
    return zeta if zeta.antisymmetric else Antisymmetrized(zeta)


@dataclass(frozen=True)
class AffineFoliation:
    """phi(x) = <pi_1 x, nu> - offset: foliates G by parallel halfspaces."""

    group: object
    nu: tuple
    offset: float = 0.0

    def value(self, pts):
        pts = np.asarray(pts, dtype=float)
        return pts[..., : self.group.m1] @ np.asarray(self.nu) - self.offset

    def superlevel_through(self, x):
        lvl = float(self.value(np.asarray(x, dtype=float)))
        return HalfSpace(self.group, np.asarray(self.nu), self.offset + lvl)

    def zero_set_region(self) -> Region:
        return HalfSpace(self.group, np.asarray(self.nu), self.offset)

    def level_breakpoints(self, bundle, pad):
        # phi(z(r)) - phi(x) is affine with zero constant term: root at 0 only
        return np.full((bundle.size, 1), pad)

    def negated(self):
        return ScaledFoliation(self, -1.0)


@dataclass(frozen=True)
class ScaledFoliation:
    base: object
    factor: float

    @property
    def group(self):
        return self.base.group

    def value(self, pts):
        return self.factor * self.base.value(pts)

    def superlevel_through(self, x):
        region = self.base.superlevel_through(x)
        return Complement(region) if self.factor < 0 else region

    def zero_set_region(self):
        region = self.base.zero_set_region()
        return Complement(region) if self.factor < 0 else region

    def level_breakpoints(self, bundle, pad):
        return self.base.level_breakpoints(bundle, pad)


class RegionFoliation:
    """phi adapted to a general region via signed membership (no smoothness)."""

    def __init__(self, region: Region):
        self.group = region.group
        self.region = region

    def value(self, pts):
        return 2.0 * self.region.contains(pts).astype(float) - 1.0

    def superlevel_through(self, x):
        inside = bool(self.region.contains(np.asarray(x, dtype=float)[None, :])[0])
        # {phi > phi(x)}: empty when x is inside (phi = 1 is the maximum)
        from .regions import EmptyRegion

        return self.region if not inside else EmptyRegion(self.group)

    def zero_set_region(self):
        return self.region

    def level_breakpoints(self, bundle, pad):
        return self.region.ray_breakpoints(bundle, pad)


# ---------------------------------------------------------------------------
# checks


@dataclass(frozen=True)
class IdentityCheckResult:
    pairs_tested: int
    active_pairs: int
    violations: int
    passed: bool


def calibration_identity_check(
    zeta: PairField, u, window: Region, cfg: McConfig, tol: float = 1e-12
) -> IdentityCheckResult:
    """Count violations of zeta(p,q)(u(q)-u(p)) = |u(q)-u(p)| on sampled pairs."""
    box = window.bounding_box()
    if box is None:
        raise ValueError("identity check needs a bounded sampling window")
    lo, hi = box
    group = window.group
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    m = cfg.samples
    p = rng.uniform(lo, hi, size=(m, group.n))
    q = rng.uniform(lo, hi, size=(m, group.n))
    up, uq = u.eval(p), u.eval(q)
    active = up != uq
    jump = uq - up
    resid = np.abs(zeta.eval(p, q) * jump - np.abs(jump))
    violations = int(np.count_nonzero(active & (resid > tol)))
    return IdentityCheckResult(
        pairs_tested=m,
        active_pairs=int(np.count_nonzero(active)),
        violations=violations,
        passed=violations == 0,
    )


@dataclass(frozen=True)
class PvDecayRow:
    eps: float
    mean_abs: float
    max_z: float  # largest |estimate| / sigma over the sampled points
    consistent_with_zero: bool


def calibration_pv_check(
    kernel: Kernel,
    zeta: PairField,
    window: Region,
    eps_grid,
    cfg: McConfig,
    points: int = 16,
) -> dict:
    """Window table of F_eps(p) = int_{||y^-1 p|| > eps} K (zeta(y,p)-zeta(p,y)) dy.

    For each sampled p the radial integral is exact beyond each cutoff;
    antithetic direction pairs realise the halfspace cancellation exactly.
    """
    box = window.bounding_box()
    if box is None:
        raise ValueError("pv check needs a bounded window")
    lo, hi = box
    group = kernel.group
    eps_grid = np.asarray(sorted(eps_grid, reverse=True), dtype=float)
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 77)))
    pts = []
    while len(pts) < points:
        cand = rng.uniform(lo, hi, size=(4 * points, group.n))
        cand = cand[window.contains(cand)]
        pts.extend(list(cand))
    pts = np.asarray(pts[:points])
    polar = kernel.polar_constant

    values = np.zeros((points, len(eps_grid)))
    sigmas = np.zeros((points, len(eps_grid)))
    for i, p in enumerate(pts):

        def worker(rng_, m, p=p):
            omega = kernel.norm.sample_cone(rng_, m)
            x = np.broadcast_to(p, (m, group.n)).copy()
            acc = np.zeros((m, len(eps_grid)))
            for sgn in (1.0, -1.0):
                bundle = RayBundle(group, x, sgn * omega)
                bp = zeta.ray_breakpoints(bundle, _PAD)
                lo_e, hi_e, mids, _ = _interval_grid(bp)
                diff = zeta.difference_at(p, bundle.point_at(mids))
                m_all = _masses(
                    kernel,
                    np.maximum(lo_e[None, ...], eps_grid[:, None, None]),
                    hi_e[None, ...],
                )
                contrib = np.where(
                    hi_e[None, ...] > eps_grid[:, None, None],
                    m_all * diff[None, ...],
                    0.0,
                )
                acc += 0.5 * np.sum(contrib, axis=2).T
            return np.mean(acc, axis=0) * polar

        vals, stds, _ = run_sharded(
            cfg.with_seed(cfg.seed + 101 * i), worker, components=len(eps_grid)
        )
        values[i] = vals
        sigmas[i] = stds

    rows = []
    for j, eps in enumerate(eps_grid):
        z = np.abs(values[:, j]) / np.maximum(sigmas[:, j], 1e-300)
        z = np.where(np.abs(values[:, j]) <= 1e-12, 0.0, z)
        rows.append(
            PvDecayRow(
                eps=float(eps),
                mean_abs=float(np.mean(np.abs(values[:, j]))),
                max_z=float(np.max(z)),
                consistent_with_zero=bool(np.all(z <= 3.0)),
            )
        )
    passed = all(r.consistent_with_zero for r in rows)
    return {"rows": rows, "pass": passed, "points": pts}


@dataclass(frozen=True)
class FoliationReport:
    level_set_matches: bool
    curvature_sequence_cauchy: bool
    sign_conditions_hold: bool
    detail: dict

    @property
    def passed(self):
        return (
            self.level_set_matches
            and self.curvature_sequence_cauchy
            and self.sign_conditions_hold
        )


def foliation_check(
    kernel: Kernel,
    foliation,
    E: Region,
    window: Region,
    cfg: McConfig,
    points: int = 12,
) -> FoliationReport:
    """Executable version of 'window is foliated by sub/supersolutions for E'."""
    from .geometry import symdiff_volume

    sd = symdiff_volume(foliation.zero_set_region(), E, window, cfg)
    level_ok = sd.value <= 3.0 * sd.std_error + 1e-12

    box = window.bounding_box()
    lo, hi = box
    group = kernel.group
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 13)))
    pts = []
    while len(pts) < points:
        cand = rng.uniform(lo, hi, size=(4 * points, group.n))
        cand = cand[window.contains(cand)]
        pts.extend(list(cand))
    pts = np.asarray(pts[:points])

    cutoffs = np.geomspace(1e-1, cfg.r_min, 6)
    cauchy_ok = True
    signs_ok = True
    diags = []
    small = cfg.with_seed(cfg.seed + 29)
    for i, p in enumerate(pts):
        est = mean_curvature_field(
            kernel, foliation, p, small.with_seed(small.seed + i), cutoffs=cutoffs
        )
        incr = np.abs(np.diff(np.asarray(est.table)))
        noise = 3.0 * np.sqrt(
            np.asarray(est.table_std)[:-1] ** 2 + np.asarray(est.table_std)[1:] ** 2
        )
        cauchy_ok = cauchy_ok and bool(np.all(incr <= np.maximum(noise, 1e-10)))
        inside = bool(E.contains(p[None, :])[0])
        tol = 3.0 * est.std_error + 1e-12
        if inside:
            signs_ok = signs_ok and est.value <= tol
        else:
            signs_ok = signs_ok and est.value >= -tol
        diags.append({"point_inside": inside, "H": est.value, "std": est.std_error})
    return FoliationReport(
        level_set_matches=level_ok,
        curvature_sequence_cauchy=cauchy_ok,
        sign_conditions_hold=signs_ok,
        detail={"symdiff": sd.value, "symdiff_std": sd.std_error, "points": diags},
    )


# ---------------------------------------------------------------------------
# calibrating functional


def _check_outer_datum(F: Region, E: Region, window: Region, cfg: McConfig):
    box = window.bounding_box()
    lo, hi = box
    span = hi - lo
    lo2, hi2 = lo - 0.5 * span, hi + 0.5 * span
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 3)))
    x = rng.uniform(lo2, hi2, size=(4096, window.group.n))
    outside = ~window.contains(x)
    mism = np.count_nonzero(F.contains(x[outside]) != E.contains(x[outside]))
    if mism:
        raise ValueError(
            f"competitor violates the outer datum at {mism} sampled points"
        )


def calibrating_functional(
    kernel: Kernel,
    foliation,
    E: Region,
    window: Region,
    F: Region,
    cfg: McConfig,
    check_datum: bool = True,
) -> Estimate:
    """C_window(F): sign-weighted pair energy over pairs meeting the window.

    C(F) = 1/2 int_{pairs meeting window} sign(phi(x)-phi(y))
           (chi_F(x)-chi_F(y)) K(y^-1 x); the 1/2 normalisation makes
    C(E) = P_K(E; window) exact when {phi > 0} = E.
    """
    if check_datum:
        _check_outer_datum(F, E, window, cfg)
    group = kernel.group
    proposal = build_proposal(cfg, kernel, window, interface_sources=[F, E])
    polar = kernel.polar_constant

    def worker(rng, m):
        x, q = proposal.sample_with_density(rng, m)
        ok = window.contains(x) & (q > 0)
        w = np.where(ok, 1.0 / np.where(q > 0, q, 1.0), 0.0)
        phi_x = foliation.value(x)
        chiF_x = F.contains(x).astype(float)
        omega = kernel.norm.sample_cone(rng, m)
        full = np.zeros(m)
        outer = np.zeros(m)
        for sgn in (1.0, -1.0):
            bundle = RayBundle(group, x, sgn * omega)
            bp = merge_breakpoints(
                [
                    F.ray_breakpoints(bundle, _PAD),
                    window.ray_breakpoints(bundle, _PAD),
                    foliation.level_breakpoints(bundle, _PAD),
                    _level_cut(foliation, bundle, phi_x),
                ],
                _PAD,
            )
            lo_e, hi_e, mids, finite = _interval_grid(bp)
            y = bundle.point_at(mids)
            sgn_phi = _sign(phi_x[:, None] - foliation.value(y))
            jump = chiF_x[:, None] - F.contains(y).astype(float)
            payoff = sgn_phi * jump
            in_w = window.contains(y)
            masses = np.where(payoff != 0.0, _masses(kernel, lo_e, hi_e), 0.0)
            contrib = masses * payoff
            full += 0.5 * np.sum(contrib, axis=1)
            outer += 0.5 * np.sum(np.where(~in_w, contrib, 0.0), axis=1)
        # pass 1 covers x in window, y anywhere; pass 2 the swapped copy
        live = w > 0
        with np.errstate(invalid="ignore"):
            return [0.5 * np.mean(np.where(live, (full + outer) * w, 0.0)) * polar]

    vals, stds, used = run_sharded(cfg, worker, components=1)
    return Estimate(
        value=float(vals[0]),
        std_error=float(stds[0]),
        samples_used=used,
        seed=cfg.seed,
        config_hash=cfg.digest(),
    )


def _level_cut(foliation, bundle, phi_x):
    """Radii where phi(z(r)) = phi(x) for affine foliations (else no cuts)."""
    if isinstance(foliation, AffineFoliation) or (
        isinstance(foliation, ScaledFoliation)
        and isinstance(foliation.base, AffineFoliation)
    ):
        base = foliation if isinstance(foliation, AffineFoliation) else foliation.base
        nu = np.asarray(base.nu)
        m1 = bundle.group.m1
        a = bundle.coeffs[:, 0, :m1] @ nu - base.offset
        b = bundle.coeffs[:, 1, :m1] @ nu
        scale = getattr(foliation, "factor", 1.0)
        return real_roots_in(
            np.stack([scale * a - phi_x, scale * b], axis=1), 0.0, _PAD, _PAD
        )
    return np.full((bundle.size, 1), _PAD)


def curvature_identity_check(
    kernel: Kernel,
    foliation,
    E: Region,
    window: Region,
    F: Region,
    cfg: McConfig,
) -> dict:
    """Splitting of the calibrating functional through the mean curvature.

    With the 1/2 normalisation of the functional,
        C(F) = int_{F cap window} H_K(phi)(x) dx
             + int_{x in E minus window} int_{y in window}
               sign(phi(x) - phi(y)) K(y^-1 x) dy dx,
    where the second term is estimated by rays from the window with the
    roles of the pair relabelled (symmetric kernel).
    """
    lhs = calibrating_functional(kernel, foliation, E, window, F, cfg)

    group = kernel.group
    box = window.bounding_box()
    lo, hi = box
    vol = float(np.prod(hi - lo))
    polar = kernel.polar_constant
    inner_cut = cfg.r_min

    def worker_curv(rng, m):
        x = rng.uniform(lo, hi, size=(m, group.n))
        keep = window.contains(x) & F.contains(x)
        omega = kernel.norm.sample_cone(rng, m)
        acc = np.zeros(m)
        for sgn in (1.0, -1.0):
            bundle = RayBundle(group, x, sgn * omega)
            region = _superlevel_batch(foliation, x)
            bp = region.ray_breakpoints(bundle, _PAD)
            lo_e, hi_e, mids, _ = _interval_grid(bp)
            s = 1.0 - 2.0 * region.contains(bundle.point_at(mids)).astype(float)
            masses = np.where(
                s != 0.0, _masses(kernel, np.maximum(lo_e, inner_cut), hi_e), 0.0
            )
            acc += 0.5 * np.sum(np.where(hi_e > inner_cut, masses * s, 0.0), axis=1)
        return [np.mean(np.where(keep, acc, 0.0)) * vol * polar]

    def worker_outer(rng, m):
        x = rng.uniform(lo, hi, size=(m, group.n))
        keep = window.contains(x)
        phi_x = foliation.value(x)
        omega = kernel.norm.sample_cone(rng, m)
        target = Intersection_safe(E, Complement(window))
        acc = np.zeros(m)
        for sgn in (1.0, -1.0):
            bundle = RayBundle(group, x, sgn * omega)
            bp = merge_breakpoints(
                [
                    target.ray_breakpoints(bundle, _PAD),
                    foliation.level_breakpoints(bundle, _PAD),
                    _level_cut(foliation, bundle, phi_x),
                ],
                _PAD,
            )
            lo_e, hi_e, mids, _ = _interval_grid(bp)
            y = bundle.point_at(mids)
            # relabelled pair: the far point plays the x slot of the identity
            payoff = _sign(foliation.value(y) - phi_x[:, None]) * target.contains(y)
            masses = np.where(payoff != 0.0, _masses(kernel, lo_e, hi_e), 0.0)
            acc += 0.5 * np.sum(masses * payoff, axis=1)
        return [np.mean(np.where(keep, acc, 0.0)) * vol * polar]

    v1, s1, _ = run_sharded(cfg.with_seed(cfg.seed + 41), worker_curv, components=1)
    v2, s2, _ = run_sharded(cfg.with_seed(cfg.seed + 42), worker_outer, components=1)
    rhs = float(v1[0]) + float(v2[0])
    sigma = float(np.sqrt(lhs.std_error ** 2 + s1[0] ** 2 + s2[0] ** 2))
    return {
        "lhs": lhs.value,
        "rhs": rhs,
        "sigma": sigma,
        "pass": abs(lhs.value - rhs) <= 3.0 * sigma + 1e-10,
        "curvature_term": 2.0 * float(v1[0]),
        "outer_term": 2.0 * float(v2[0]),
    }


def _superlevel_batch(foliation, x):
    """Superlevel regions through a batch reduce to one region for foliations
    whose level sets are parallel (affine case): use the pointwise region."""
    if isinstance(foliation, (AffineFoliation, ScaledFoliation)):
        return _BatchAffineSuperlevel(foliation, x)
    raise NotImplementedError("batched curvature needs an affine-type foliation")


class _BatchAffineSuperlevel(Region):
    """{phi > phi(x_i)} per ray: for affine phi the cut solves a linear equation."""

    def __init__(self, foliation, x):
        self.foliation = foliation
        self.x = x
        base = foliation.base if isinstance(foliation, ScaledFoliation) else foliation
        self.group = base.group
        self._base = base
        self._factor = getattr(foliation, "factor", 1.0)

    def contains(self, pts):
        phi = self.foliation.value(pts)
        ref = self.foliation.value(self.x)
        while ref.ndim < phi.ndim:
            ref = ref[..., None]
        return phi > ref

    def ray_breakpoints(self, bundle, pad):
        nu = np.asarray(self._base.nu)
        m1 = self.group.m1
        a = bundle.coeffs[:, 0, :m1] @ nu
        b = bundle.coeffs[:, 1, :m1] @ nu
        ax = self.x[:, :m1] @ nu
        return real_roots_in(np.stack([a - ax, b], axis=1), 0.0, pad, pad)


def Intersection_safe(*regions):
    from .regions import Intersection

    return Intersection(regions)
