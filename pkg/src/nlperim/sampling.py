"""Seeded, sharded Monte Carlo plumbing: estimates, proposals, workers.

Every estimator splits its budget into a fixed number of shards, each with
a sub-seed spawned deterministically from the master seed. Shard means are
combined by an associative mean/variance combiner, so results are
bit-identical for a fixed (config, seed) regardless of thread count.

The x-proposal is a defensive mixture: a uniform component over the
sampling window plus power-law collars hugging the interfaces that make
the integrand singular. Densities are exact, so importance weights are
unbiased; the collars only reduce variance (without them the payoff
dist^-alpha has infinite second moment for alpha >= 1/2).
"""

from __future__ import annotations

import json
import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from .groups import StratifiedGroup
from .norms import HomogeneousNorm
from .regions import ShellInterface, SlabInterface


@dataclass(frozen=True)
class McConfig:
    """Sampling budget and estimator policy knobs."""

    samples: int = 200_000
    seed: int = 0
    shards: int = 32
    shells_per_decade: int = 8
    r_min: float = 1e-8
    r_out: float = 1e4
    tail_policy: str = "analytic"  # or "drop"
    interface_bias: float = 0.5
    collar_gamma: float | None = None
    threads: int = 1

    def __post_init__(self):
        if self.samples <= 0 or self.shards <= 0:
            raise ValueError("samples and shards must be positive")
        if not (0.0 < self.r_min < self.r_out):
            raise ValueError("need 0 < r_min < r_out")
        if self.tail_policy not in ("analytic", "drop"):
            raise ValueError(f"unknown tail policy {self.tail_policy!r}")
        if not (0.0 <= self.interface_bias < 1.0):
            raise ValueError("interface_bias must lie in [0, 1)")

    @property
    def per_shard(self) -> int:
        return max(1, -(-self.samples // (2 * self.shards)))  # ray pairs

    def shell_edges(self, lo: float | None = None, hi: float | None = None):
        lo = self.r_min if lo is None else lo
        hi = self.r_out if hi is None else hi
        count = max(2, int(np.ceil(np.log10(hi / lo) * self.shells_per_decade)) + 1)
        return np.geomspace(lo, hi, count)

    def with_seed(self, seed: int) -> "McConfig":
        return replace(self, seed=int(seed))

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(asdict(self), sort_keys=True).encode()
        ).hexdigest()[:16]


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo value with honest standard error and provenance."""

    value: float
    std_error: float
    samples_used: int
    tail_correction: float = 0.0
    seed: int = 0
    config_hash: str = ""
    flags: tuple = ()

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be nonnegative")

    def scaled(self, c: float) -> "Estimate":
        return replace(
            self,
            value=c * self.value,
            std_error=abs(c) * self.std_error,
            tail_correction=c * self.tail_correction,
        )

    def plus(self, other: "Estimate") -> "Estimate":
        return Estimate(
            value=self.value + other.value,
            std_error=float(np.hypot(self.std_error, other.std_error)),
            samples_used=self.samples_used + other.samples_used,
            tail_correction=self.tail_correction + other.tail_correction,
            seed=self.seed,
            config_hash=self.config_hash,
            flags=tuple(sorted(set(self.flags) | set(other.flags))),
        )

    def minus(self, other: "Estimate") -> "Estimate":
        return self.plus(other.scaled(-1.0))

    def agrees_with(self, value: float, sigmas: float = 3.0, atol: float = 1e-12) -> bool:
        return abs(self.value - value) <= sigmas * self.std_error + atol

    def to_json_dict(self) -> dict:
        return {
            "value": self.value,
            "std_error": self.std_error,
            "samples": self.samples_used,
            "tail_correction": self.tail_correction,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "flags": list(self.flags),
        }


def combined_sigma(*estimates: Estimate) -> float:
    return float(np.sqrt(sum(e.std_error ** 2 for e in estimates)))


def run_sharded(cfg: McConfig, worker, components: int = 1, rays_per_draw: int = 2):
    """Run `worker(rng, count) -> (components,) shard mean` over all shards.

    Returns (values, std_errors, samples_used): vectors of length
    `components`. Shard order is fixed; threads only schedule execution.
    """
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.shards)
    count = cfg.per_shard

    def one(i):
        rng = np.random.default_rng(seeds[i])
        out = np.asarray(worker(rng, count), dtype=float)
        return out.reshape(components)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            means = np.stack(list(pool.map(one, range(cfg.shards))))
    else:
        means = np.stack([one(i) for i in range(cfg.shards)])
    values = means.mean(axis=0)
    if cfg.shards > 1:
        stds = means.std(axis=0, ddof=1) / np.sqrt(cfg.shards)
    else:
        stds = np.full(components, np.inf)
    return values, stds, count * cfg.shards * rays_per_draw


# ---------------------------------------------------------------------------
# proposals


class BoxUniform:
    def __init__(self, group: StratifiedGroup, lo, hi):
        self.group = group
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.volume = float(np.prod(self.hi - self.lo))

    def sample(self, rng, count):
        return rng.uniform(self.lo, self.hi, size=(count, self.group.n))

    def density(self, pts):
        pts = np.asarray(pts, dtype=float)
        inside = np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)
        return inside / self.volume


class SlabCollar:
    """Power-law collar around a flat interface <pi_1 x, nu> = offset.

    The distance |h - offset| follows the truncated density prop. to d^-gamma
    on [d_min, s_max] (exact inverse CDF, so no underflow atom at d = 0);
    the complementary coordinates follow the window box. For an axis-aligned
    nu and offset 0 the singular coordinate is assigned directly, keeping
    sampled distances exact down to d_min = 1e-300.
    """

    def __init__(self, group, box_lo, box_hi, nu, offset, s_max, gamma):
        self.group = group
        self.nu = np.asarray(nu, dtype=float)  # unit, length m1
        self.offset = float(offset)
        self.s_max = float(s_max)
        self.gamma = float(gamma)
        self.lo = np.asarray(box_lo, dtype=float)
        self.hi = np.asarray(box_hi, dtype=float)
        self.volume = float(np.prod(self.hi - self.lo))
        self._nu_full = group.embed_horizontal(self.nu)
        nz = np.nonzero(self.nu)[0]
        self._axis = int(nz[0]) if (len(nz) == 1 and abs(self.nu[nz[0]]) == 1.0) else None
        # an axis-aligned interface through 0 admits exact subnormal offsets;
        # otherwise rounding quantises distances near the interface, so the
        # collar stops where realised and nominal distances start to disagree
        if self._axis is not None and self.offset == 0.0:
            self.D_MIN = 1e-250
        else:
            self.D_MIN = 1e-12 * max(1.0, abs(self.offset))
        p = 1.0 - self.gamma
        self._cdf_lo = self.D_MIN ** p
        self._cdf_hi = self.s_max ** p

    def _h(self, pts):
        return pts[..., : self.group.m1] @ self.nu

    def _line_length(self, pts):
        """Length of the box chord through each point along nu."""
        t_lo = np.full(pts.shape[0], -np.inf)
        t_hi = np.full(pts.shape[0], np.inf)
        ok = np.ones(pts.shape[0], dtype=bool)
        for j in range(self.group.n):
            d = self._nu_full[j]
            c = pts[:, j]
            if abs(d) < 1e-15:
                ok &= (c >= self.lo[j]) & (c <= self.hi[j])
                continue
            a = (self.lo[j] - c) / d
            b = (self.hi[j] - c) / d
            t_lo = np.maximum(t_lo, np.minimum(a, b))
            t_hi = np.minimum(t_hi, np.maximum(a, b))
        return np.where(ok, np.clip(t_hi - t_lo, 0.0, None), 0.0)

    def _draw_dist(self, rng, count):
        u = rng.random(count)
        p = 1.0 - self.gamma
        return (self._cdf_lo + u * (self._cdf_hi - self._cdf_lo)) ** (1.0 / p)

    sides = (1.0, -1.0)  # restricted to one side when the other is dead

    def sample(self, rng, count):
        pts = rng.uniform(self.lo, self.hi, size=(count, self.group.n))
        dist = self._draw_dist(rng, count)
        if len(self.sides) == 2:
            signed = np.where(rng.random(count) < 0.5, dist, -dist)
        else:
            signed = self.sides[0] * dist
        if self._axis is not None:
            # <x', nu> = offset + signed exactly (sgn in {-1, +1})
            sgn = self.nu[self._axis]
            pts[:, self._axis] = sgn * (self.offset + signed)
        else:
            h = self.offset + signed
            shift = h - self._h(pts)
            pts[:, : self.group.m1] += shift[:, None] * self.nu
        return pts

    def density(self, pts):
        pts = np.asarray(pts, dtype=float)
        signed = self._h(pts) - self.offset
        d = np.abs(signed)
        inside = (d >= self.D_MIN) & (d <= self.s_max)
        if len(self.sides) == 1:
            inside &= np.sign(signed) == self.sides[0]
            share = 1.0
        else:
            share = 0.5
        with np.errstate(divide="ignore", over="ignore"):
            f = (
                share
                * (1.0 - self.gamma)
                * d ** (-self.gamma)
                / (self._cdf_hi - self._cdf_lo)
            )
        return np.where(inside, f * self._line_length(pts) / self.volume, 0.0)


class ShellCollar:
    """Power-law collar around a norm sphere ||center^-1 x|| = radius.

    Curved interfaces cannot hold exact subnormal offsets in coordinates,
    so the collar is truncated where float rounding would quantise the
    sampled distance onto the sphere itself.
    """

    def __init__(self, group, norm: HomogeneousNorm, center, radius, s_max, gamma):
        self.group = group
        self.norm = norm
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.gamma = float(gamma)
        self.s_out = float(s_max)
        self.s_in = float(min(s_max, 0.95 * radius))
        self.D_MIN = 1e-12 * max(1.0, radius)

    def _draw_dist(self, rng, count, s):
        p = 1.0 - self.gamma
        lo = self.D_MIN ** p
        u = rng.random(count)
        return (lo + u * (s ** p - lo)) ** (1.0 / p)

    def sample(self, rng, count):
        outside = rng.random(count) < 0.5
        s = np.where(outside, self.s_out, self.s_in)
        du = self._draw_dist(rng, count, s)
        r = self.radius + np.where(outside, du, -du)
        omega = self.norm.sample_cone(rng, count)
        pts = omega * r[:, None] ** self.group.weights
        if np.any(self.center):
            pts = self.group.product(self.center, pts)
        return pts

    def density(self, pts):
        pts = np.asarray(pts, dtype=float)
        rel = pts if not np.any(self.center) else self.group.product(-self.center, pts)
        u = self.norm(rel)
        du = u - self.radius
        s = np.where(du > 0, self.s_out, self.s_in)
        d = np.abs(du)
        p = 1.0 - self.gamma
        inside = (d >= self.D_MIN) & (d <= s) & (u > 0)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            f = 0.5 * p * d ** (-self.gamma) / (s ** p - self.D_MIN ** p)
            polar = self.norm.polar_constant * np.maximum(u, 1e-300) ** (self.group.Q - 1.0)
        return np.where(inside, f / polar, 0.0)


class MixtureProposal:
    def __init__(self, components, weights):
        if len(components) != len(weights) or not components:
            raise ValueError("mixture needs matching components and weights")
        w = np.asarray(weights, dtype=float)
        self.components = list(components)
        self.weights = w / w.sum()

    def sample_with_density(self, rng, count):
        idx = rng.choice(len(self.components), size=count, p=self.weights)
        pts = np.empty((count, self.components[0].group.n))
        for k, comp in enumerate(self.components):
            rows = idx == k
            m = int(rows.sum())
            if m:
                pts[rows] = comp.sample(rng, m)
        q = self.density(pts)
        return pts, q

    def density(self, pts):
        q = np.zeros(np.asarray(pts).shape[0])
        for w, comp in zip(self.weights, self.components):
            q = q + w * comp.density(pts)
        return q


def _slab_relevant(group, lo, hi, spec: SlabInterface, margin: float = 0.05):
    """Keep a slab collar only when its plane meets the inflated window box."""
    nu = np.asarray(spec.nu)
    corners_min = 0.0
    corners_max = 0.0
    for j in range(group.m1):
        a, b = nu[j] * lo[j], nu[j] * hi[j]
        corners_min += min(a, b)
        corners_max += max(a, b)
    pad = margin * (corners_max - corners_min + 1.0)
    return corners_min - pad <= spec.offset <= corners_max + pad


def _live_sides(group, x_region, lo, hi, spec: SlabInterface, probes: int = 48):
    """Which sides of the interface intersect the x-region (deterministic probe)."""
    rng = np.random.default_rng(np.random.SeedSequence((1234, probes)))
    nu = np.asarray(spec.nu)
    base = rng.uniform(lo, hi, size=(probes, group.n))
    h0 = base[:, : group.m1] @ nu
    span = float(np.max(hi - lo))
    sides = []
    for sgn in (1.0, -1.0):
        alive = False
        for scale in (1e-3, 1e-2, 0.1, 0.3):
            pts = base.copy()
            shift = (spec.offset + sgn * scale * span) - h0
            pts[:, : group.m1] += shift[:, None] * nu
            if np.any(x_region.contains(pts)):
                alive = True
                break
        if alive:
            sides.append(sgn)
    return tuple(sides) if sides else (1.0, -1.0)


def build_proposal(cfg: McConfig, kernel, x_region, interface_sources=()):
    """Uniform window proposal plus collars on the relevant interfaces."""
    box = x_region.bounding_box()
    if box is None:
        raise ValueError("the sampling side of the estimand must be bounded")
    lo, hi = box
    group = kernel.group
    uniform = BoxUniform(group, lo, hi)
    interfaces = []
    seen = set()
    for src in interface_sources:
        for spec in src.interfaces():
            key = repr(spec)
            if key not in seen:
                seen.add(key)
                interfaces.append(spec)
    gamma = cfg.collar_gamma
    if gamma is None:
        gamma = kernel.alpha if kernel.alpha is not None else 0.5
    gamma = min(max(gamma, 0.05), 0.995)
    s_max = 0.5 * float(np.max(hi - lo))
    comps = []
    for spec in interfaces:
        if isinstance(spec, SlabInterface):
            if not _slab_relevant(group, lo, hi, spec):
                continue
            collar = SlabCollar(group, lo, hi, spec.nu, spec.offset, s_max, gamma)
            collar.sides = _live_sides(group, x_region, lo, hi, spec)
            comps.append(collar)
        elif isinstance(spec, ShellInterface):
            norm = HomogeneousNorm(group=group, kind=spec.norm_kind)
            comps.append(
                ShellCollar(group, norm, spec.center, spec.radius, s_max, gamma)
            )
    beta = cfg.interface_bias if comps else 0.0
    if beta == 0.0:
        return MixtureProposal([uniform], [1.0])
    weights = [1.0 - beta] + [beta / len(comps)] * len(comps)
    return MixtureProposal([uniform] + comps, weights)
