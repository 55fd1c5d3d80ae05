"""Measurable sets and [0,1]-valued fields as exact membership oracles.

Regions know three things: membership, a coordinate bounding box (or None
when unbounded), and where they cut a polynomial ray (breakpoints). Boolean
combinations merge their children's breakpoints, so membership only ever
needs to be sampled at interval midpoints. Model sets (halfspaces, norm
balls, boxes) stay analytic; voxel masks exist for competitor perturbations.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .groups import StratifiedGroup
from .norms import HomogeneousNorm, norm_from_spec
from .rays import RayBundle, merge_breakpoints, polymul, real_roots_in


@dataclass(frozen=True)
class SlabInterface:
    """Flat interface {<pi_1 x, nu> = offset}; spawns power-law collars."""

    nu: tuple
    offset: float


@dataclass(frozen=True)
class ShellInterface:
    """Norm-sphere interface {||c^-1 x|| = radius}."""

    center: tuple
    radius: float
    norm_kind: str


class Region:
    group: StratifiedGroup

    def contains(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounding_box(self):
        """(lo, hi) coordinate box or None when unbounded."""
        return None

    def ray_breakpoints(self, bundle: RayBundle, pad: float):
        """Per-ray crossing radii (N, K) padded with pad, or None if no cuts."""
        raise NotImplementedError

    def interfaces(self) -> list:
        return []

    def dilate(self, lam: float) -> "Region":
        raise NotImplementedError(f"{type(self).__name__} does not support dilation")

    def translate(self, p: np.ndarray) -> "Region":
        return _Translated(self, np.asarray(p, dtype=float))

    # boolean sugar
    def complement(self) -> "Region":
        return Complement(self)

    def intersect(self, other: "Region") -> "Region":
        return Intersection((self, other))

    def union(self, other: "Region") -> "Region":
        return Union((self, other))


class HalfSpace(Region):
    """Vertical halfspace {x : <pi_1 log x, nu> >= offset}."""

    def __init__(self, group, nu, offset: float = 0.0):
        nu = np.asarray(nu, dtype=float)
        if nu.shape != (group.m1,) or not np.any(nu):
            raise ValueError("halfspace normal must be a nonzero first-layer vector")
        self.group = group
        self.nu = nu
        self.offset = float(offset)

    @property
    def unit_normal(self) -> np.ndarray:
        return self.nu / np.linalg.norm(self.nu)

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        return pts[..., : self.group.m1] @ self.nu >= self.offset

    def ray_breakpoints(self, bundle, pad):
        # first-layer coordinates are exactly affine in r
        c0 = bundle.coeffs[:, 0, : self.group.m1] @ self.nu - self.offset
        c1 = bundle.coeffs[:, 1, : self.group.m1] @ self.nu
        return real_roots_in(np.stack([c0, c1], axis=1), 0.0, pad, pad)

    def interfaces(self):
        return [SlabInterface(nu=tuple(self.unit_normal), offset=self.offset / np.linalg.norm(self.nu))]

    def dilate(self, lam):
        return HalfSpace(self.group, self.nu, self.offset * lam)

    def translate(self, p):
        shift = float(np.asarray(p, float)[: self.group.m1] @ self.nu)
        return HalfSpace(self.group, self.nu, self.offset + shift)


class NormBall(Region):
    """Open metric ball {x : ||center^-1 x|| < radius} for a homogeneous norm."""

    def __init__(self, group, norm: HomogeneousNorm, center=None, radius: float = 1.0):
        if radius <= 0:
            raise ValueError(f"ball radius must be positive, got {radius}")
        self.group = group
        self.norm = norm
        self.center = (
            group.identity() if center is None else np.asarray(center, dtype=float)
        )
        self.radius = float(radius)

    def contains(self, pts):
        rel = self.group.product(-self.center, np.asarray(pts, dtype=float))
        return self.norm(rel) < self.radius

    def bounding_box(self):
        lo, hi = self.norm.ball_box(self.radius)
        return self.group.translate_box(self.center, lo, hi)

    def _rel_coeffs(self, bundle):
        if np.any(self.center):
            return bundle.translated_coeffs(-self.center)
        return bundle.coeffs

    def ray_breakpoints(self, bundle, pad):
        w = self._rel_coeffs(bundle)
        kind = self.norm.kind
        if kind == "euclidean":
            poly = None
            for j in range(self.group.n):
                pj = polymul(w[:, :2, j], w[:, :2, j])
                poly = pj if poly is None else poly + pj
            poly[:, 0] -= self.radius ** 2
            return real_roots_in(poly, 0.0, pad, pad)
        if kind == "koranyi":
            from .norms import KORANYI_CONSTANT

            h = polymul(w[:, :2, 0], w[:, :2, 0]) + polymul(w[:, :2, 1], w[:, :2, 1])
            poly = polymul(h, h) + KORANYI_CONSTANT * polymul(w[:, :3, 2], w[:, :3, 2])
            poly[:, 0] -= self.radius ** 4
            return real_roots_in(poly, 0.0, pad, pad)
        # box norm: crossings of each coordinate with +-radius^layer
        parts = []
        weights = self.group.weights
        for j in range(self.group.n):
            d = int(weights[j])
            for sgn in (1.0, -1.0):
                poly = w[:, : d + 1, j].copy()
                poly[:, 0] -= sgn * self.radius ** d
                parts.append(real_roots_in(poly, 0.0, pad, pad))
        return merge_breakpoints(parts, pad)

    def interfaces(self):
        return [
            ShellInterface(
                center=tuple(self.center), radius=self.radius, norm_kind=self.norm.kind
            )
        ]

    def dilate(self, lam):
        return NormBall(
            self.group,
            self.norm,
            center=self.group.dilate(lam, self.center),
            radius=lam * self.radius,
        )

    def translate(self, p):
        return NormBall(
            self.group,
            self.norm,
            center=self.group.product(p, self.center),
            radius=self.radius,
        )


class Box(Region):
    """Axis-aligned coordinate box [lo, hi]; intervals in R^1."""

    def __init__(self, group, lo, hi):
        self.group = group
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if self.lo.shape != (group.n,) or np.any(self.lo >= self.hi):
            raise ValueError("box needs lo < hi per coordinate")

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)

    def bounding_box(self):
        return self.lo.copy(), self.hi.copy()

    def ray_breakpoints(self, bundle, pad):
        parts = []
        weights = self.group.weights
        for j in range(self.group.n):
            d = int(weights[j])
            for bound in (self.lo[j], self.hi[j]):
                poly = bundle.coeffs[:, : d + 1, j].copy()
                poly[:, 0] -= bound
                parts.append(real_roots_in(poly, 0.0, pad, pad))
        return merge_breakpoints(parts, pad)

    def interfaces(self):
        out = []
        if self.group.step == 1:
            for j in range(self.group.n):
                nu = np.zeros(self.group.n)
                nu[j] = 1.0
                out.append(SlabInterface(nu=tuple(nu), offset=self.lo[j]))
                out.append(SlabInterface(nu=tuple(nu), offset=self.hi[j]))
        else:
            for j in range(self.group.m1):
                nu = np.zeros(self.group.m1)
                nu[j] = 1.0
                out.append(SlabInterface(nu=tuple(nu), offset=self.lo[j]))
                out.append(SlabInterface(nu=tuple(nu), offset=self.hi[j]))
        return out

    def dilate(self, lam):
        scale = lam ** self.group.weights
        return Box(self.group, self.lo * scale, self.hi * scale)


def interval(group, a: float, b: float) -> Box:
    """Convenience for R^1 intervals."""
    return Box(group, np.array([a]), np.array([b]))


class Complement(Region):
    def __init__(self, base: Region):
        self.group = base.group
        self.base = base

    def contains(self, pts):
        return ~self.base.contains(pts)

    def ray_breakpoints(self, bundle, pad):
        return self.base.ray_breakpoints(bundle, pad)

    def interfaces(self):
        return self.base.interfaces()

    def dilate(self, lam):
        return Complement(self.base.dilate(lam))

    def translate(self, p):
        return Complement(self.base.translate(p))

    def complement(self):
        return self.base


class _Boolean(Region):
    def __init__(self, parts):
        parts = tuple(parts)
        if not parts:
            raise ValueError("boolean region needs at least one part")
        self.group = parts[0].group
        self.parts = parts

    def ray_breakpoints(self, bundle, pad):
        return merge_breakpoints(
            [p.ray_breakpoints(bundle, pad) for p in self.parts], pad
        )

    def interfaces(self):
        return [i for p in self.parts for i in p.interfaces()]


class Intersection(_Boolean):
    def contains(self, pts):
        out = self.parts[0].contains(pts)
        for p in self.parts[1:]:
            out = out & p.contains(pts)
        return out

    def bounding_box(self):
        los, his = [], []
        for p in self.parts:
            bb = p.bounding_box()
            if bb is not None:
                los.append(bb[0])
                his.append(bb[1])
        if not los:
            return None
        return np.max(los, axis=0), np.min(his, axis=0)

    def dilate(self, lam):
        return Intersection([p.dilate(lam) for p in self.parts])

    def translate(self, p):
        return Intersection([q.translate(p) for q in self.parts])


class Union(_Boolean):
    def contains(self, pts):
        out = self.parts[0].contains(pts)
        for p in self.parts[1:]:
            out = out | p.contains(pts)
        return out

    def bounding_box(self):
        boxes = [p.bounding_box() for p in self.parts]
        if any(b is None for b in boxes):
            return None
        return (
            np.min([b[0] for b in boxes], axis=0),
            np.max([b[1] for b in boxes], axis=0),
        )

    def dilate(self, lam):
        return Union([p.dilate(lam) for p in self.parts])

    def translate(self, p):
        return Union([q.translate(p) for q in self.parts])


class _Translated(Region):
    """Generic left translate p * E for regions without a closed form."""

    def __init__(self, base: Region, p: np.ndarray):
        self.group = base.group
        self.base = base
        self.p = p
        self.p_inv = -p

    def contains(self, pts):
        return self.base.contains(self.group.product(self.p_inv, np.asarray(pts, float)))

    def bounding_box(self):
        bb = self.base.bounding_box()
        if bb is None:
            return None
        return self.group.translate_box(self.p, bb[0], bb[1])

    def ray_breakpoints(self, bundle, pad):
        shifted = bundle.__class__.__new__(bundle.__class__)
        shifted.group = bundle.group
        shifted.x = bundle.x
        shifted.omega = bundle.omega
        shifted.coeffs = bundle.translated_coeffs(self.p_inv)
        return self.base.ray_breakpoints(shifted, pad)

    def interfaces(self):
        return []


class VoxelRegion(Region):
    """Occupancy mask over an axis-aligned coordinate box.

    Membership outside the box falls back to `outside`. Used only for
    competitor perturbations, never for model sets.
    """

    def __init__(self, group, lo, hi, mask: np.ndarray, outside: bool = False):
        self.group = group
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.mask = np.asarray(mask, dtype=bool)
        if self.mask.ndim != group.n:
            raise ValueError("voxel mask rank must equal the group dimension")
        self.outside = bool(outside)
        self.cell = (self.hi - self.lo) / np.array(self.mask.shape, dtype=float)

    @property
    def volume(self) -> float:
        return float(np.prod(self.cell) * np.count_nonzero(self.mask))

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        rel = (pts - self.lo) / self.cell
        idx = np.floor(rel).astype(int)
        inside = np.all((pts >= self.lo) & (pts < self.hi), axis=-1)
        idx = np.clip(idx, 0, np.array(self.mask.shape) - 1)
        vals = self.mask[tuple(idx[..., j] for j in range(self.group.n))]
        return np.where(inside, vals, self.outside)

    def bounding_box(self):
        if self.outside:
            return None
        return self.lo.copy(), self.hi.copy()

    def ray_breakpoints(self, bundle, pad):
        parts = []
        weights = self.group.weights
        for j in range(self.group.n):
            d = int(weights[j])
            planes = self.lo[j] + self.cell[j] * np.arange(self.mask.shape[j] + 1)
            for plane in planes:
                poly = bundle.coeffs[:, : d + 1, j].copy()
                poly[:, 0] -= plane
                parts.append(real_roots_in(poly, 0.0, pad, pad))
        return merge_breakpoints(parts, pad)

    def symmetric_difference_cells(self, other: "VoxelRegion") -> int:
        return int(np.count_nonzero(self.mask ^ other.mask))


def save_voxel_mask(path: str, region: VoxelRegion):
    header = {
        "dims": list(region.mask.shape),
        "box": {"lo": region.lo.tolist(), "hi": region.hi.tolist()},
        "order": "row-major",
    }
    with open(path + ".json", "w", encoding="utf-8") as fh:
        json.dump(header, fh, sort_keys=True)
    np.packbits(region.mask.reshape(-1)).tofile(path + ".bits")


def load_voxel_mask(path: str, group) -> VoxelRegion:
    with open(path + ".json", "r", encoding="utf-8") as fh:
        header = json.load(fh)
    dims = tuple(header["dims"])
    bits = np.fromfile(path + ".bits", dtype=np.uint8)
    flat = np.unpackbits(bits)[: int(np.prod(dims))].astype(bool)
    return VoxelRegion(
        group,
        np.asarray(header["box"]["lo"], float),
        np.asarray(header["box"]["hi"], float),
        flat.reshape(dims),
    )


# ---------------------------------------------------------------------------
# scalar fields


class ScalarField:
    """u : G -> [0, 1]."""

    group: StratifiedGroup
    piecewise_constant: bool = True

    def eval(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def superlevel(self, t: float) -> Region:
        """Strict superlevel set {u > t}; monotone decreasing in t."""
        raise NotImplementedError

    def levels(self):
        """Ascending distinct values taken by a piecewise-constant field."""
        raise NotImplementedError

    def ray_breakpoints(self, bundle, pad):
        raise NotImplementedError

    def interfaces(self):
        return []


class EmptyRegion(Region):
    def __init__(self, group):
        self.group = group

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.zeros(pts.shape[:-1], dtype=bool)

    def bounding_box(self):
        z = np.zeros(self.group.n)
        return z, z + 1e-9

    def ray_breakpoints(self, bundle, pad):
        return np.full((bundle.size, 1), pad)

    def dilate(self, lam):
        return self

    def translate(self, p):
        return self


class FullRegion(Region):
    def __init__(self, group):
        self.group = group

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.ones(pts.shape[:-1], dtype=bool)

    def ray_breakpoints(self, bundle, pad):
        return np.full((bundle.size, 1), pad)

    def dilate(self, lam):
        return self

    def translate(self, p):
        return self


class IndicatorField(ScalarField):
    def __init__(self, region: Region):
        self.group = region.group
        self.region = region

    def eval(self, pts):
        return self.region.contains(pts).astype(float)

    def superlevel(self, t):
        if t >= 1.0:
            return EmptyRegion(self.group)
        if t < 0.0:
            return FullRegion(self.group)
        return self.region

    def levels(self):
        return [0.0, 1.0]

    def ray_breakpoints(self, bundle, pad):
        return self.region.ray_breakpoints(bundle, pad)

    def interfaces(self):
        return self.region.interfaces()


class NestedLevelField(ScalarField):
    """u = sum (v_i - v_{i-1}) chi_{E_i} for nested E_1 >= E_2 >= ... >= E_k.

    Takes the value v_j on E_j minus E_{j+1}; superlevel sets walk the chain,
    so the coarea t-integral is a finite sum with no discretisation error.
    """

    def __init__(self, regions, values):
        if len(regions) != len(values) or not regions:
            raise ValueError("need one value per nested region")
        vals = [float(v) for v in values]
        if any(b <= a for a, b in zip(vals, vals[1:])) or vals[0] <= 0 or vals[-1] > 1:
            raise ValueError("values must be strictly increasing within (0, 1]")
        self.group = regions[0].group
        self.regions = tuple(regions)
        self.values = tuple(vals)

    def eval(self, pts):
        out = np.zeros(np.asarray(pts).shape[:-1])
        prev = 0.0
        for region, v in zip(self.regions, self.values):
            out = out + (v - prev) * region.contains(pts)
            prev = v
        return out

    def superlevel(self, t):
        for region, v in zip(self.regions, self.values):
            if v > t:
                return region
        return EmptyRegion(self.group)

    def levels(self):
        return [0.0, *self.values]

    def ray_breakpoints(self, bundle, pad):
        return merge_breakpoints(
            [r.ray_breakpoints(bundle, pad) for r in self.regions], pad
        )

    def interfaces(self):
        return [i for r in self.regions for i in r.interfaces()]


class ClampAffineField(ScalarField):
    """u(x) = clip(scale * <pi_1 x, nu> + offset, 0, 1): the graded ramp."""

    piecewise_constant = False

    def __init__(self, group, nu, scale: float = 1.0, offset: float = 0.0):
        nu = np.asarray(nu, dtype=float)
        if nu.shape != (group.m1,) or not np.any(nu) or scale == 0.0:
            raise ValueError("ramp needs a nonzero first-layer direction and slope")
        self.group = group
        self.nu = nu
        self.scale = float(scale)
        self.offset = float(offset)

    def raw(self, pts):
        pts = np.asarray(pts, dtype=float)
        return self.scale * (pts[..., : self.group.m1] @ self.nu) + self.offset

    def eval(self, pts):
        return np.clip(self.raw(pts), 0.0, 1.0)

    def ray_affine(self, bundle):
        """(a, b) with raw(z(r)) = a + b r along each ray."""
        a = self.scale * (bundle.coeffs[:, 0, : self.group.m1] @ self.nu) + self.offset
        b = self.scale * (bundle.coeffs[:, 1, : self.group.m1] @ self.nu)
        return a, b

    def superlevel(self, t):
        thr = (t - self.offset) / self.scale
        if self.scale > 0:
            return HalfSpace(self.group, self.nu, thr)
        return Complement(HalfSpace(self.group, self.nu, thr))

    def ray_breakpoints(self, bundle, pad):
        a, b = self.ray_affine(bundle)
        parts = [
            real_roots_in(np.stack([a - lvl, b], axis=1), 0.0, pad, pad)
            for lvl in (0.0, 1.0)
        ]
        return merge_breakpoints(parts, pad)

    def interfaces(self):
        unit = self.nu / np.linalg.norm(self.nu)
        scale = self.scale * np.linalg.norm(self.nu)
        return [
            SlabInterface(nu=tuple(unit), offset=(lvl - self.offset) / scale)
            for lvl in (0.0, 0.5, 1.0)
        ]


class ConstantField(ScalarField):
    def __init__(self, group, value: float):
        if not (0.0 <= value <= 1.0):
            raise ValueError("field values must lie in [0,1]")
        self.group = group
        self.value = float(value)

    def eval(self, pts):
        return np.full(np.asarray(pts).shape[:-1], self.value)

    def superlevel(self, t):
        return FullRegion(self.group) if self.value > t else EmptyRegion(self.group)

    def levels(self):
        return [self.value]

    def ray_breakpoints(self, bundle, pad):
        return np.full((bundle.size, 1), pad)


class PatchField(ScalarField):
    """inside-field on a window, outside-field elsewhere (outer datum glue)."""

    def __init__(self, window: Region, inside: ScalarField, outside: ScalarField):
        self.group = window.group
        self.window = window
        self.inside = inside
        self.outside = outside

    @property
    def piecewise_constant(self):
        return self.inside.piecewise_constant and self.outside.piecewise_constant

    def eval(self, pts):
        w = self.window.contains(pts)
        return np.where(w, self.inside.eval(pts), self.outside.eval(pts))

    def superlevel(self, t):
        return Union(
            (
                Intersection((self.inside.superlevel(t), self.window)),
                Intersection((self.outside.superlevel(t), Complement(self.window))),
            )
        )

    def levels(self):
        return sorted(set(self.inside.levels()) | set(self.outside.levels()))

    def ray_breakpoints(self, bundle, pad):
        return merge_breakpoints(
            [
                self.window.ray_breakpoints(bundle, pad),
                self.inside.ray_breakpoints(bundle, pad),
                self.outside.ray_breakpoints(bundle, pad),
            ],
            pad,
        )

    def interfaces(self):
        return self.inside.interfaces() + self.outside.interfaces()


class BumpField(ScalarField):
    """Smooth compactly supported test field with analytic horizontal gradient.

    u(x) = (1 - |x - p|^2 / R^2)^2 on the Euclidean ball |x - p| < R, else 0.
    Only used by direct integral checks (no ray machinery needed).
    """

    piecewise_constant = False

    def __init__(self, group, center=None, radius: float = 1.0):
        self.group = group
        self.center = (
            group.identity() if center is None else np.asarray(center, dtype=float)
        )
        self.radius = float(radius)

    def eval(self, pts):
        pts = np.asarray(pts, dtype=float)
        d2 = np.sum((pts - self.center) ** 2, axis=-1) / self.radius ** 2
        u = np.clip(1.0 - d2, 0.0, None)
        return u * u

    def euclidean_gradient(self, pts):
        pts = np.asarray(pts, dtype=float)
        rel = pts - self.center
        d2 = np.sum(rel * rel, axis=-1) / self.radius ** 2
        fac = np.where(d2 < 1.0, -4.0 * (1.0 - d2) / self.radius ** 2, 0.0)
        return fac[..., None] * rel

    def horizontal_gradient(self, pts):
        """(X_1 u, ..., X_m u) via the left-invariant frame at each point."""
        grad = self.euclidean_gradient(pts)
        frame = horizontal_frame(self.group, np.asarray(pts, dtype=float))
        return np.einsum("...ji,...i->...j", frame, grad)

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius


def horizontal_frame(group: StratifiedGroup, pts: np.ndarray) -> np.ndarray:
    """Coordinate columns of the left-invariant horizontal frame X_1..X_m.

    Row j of the result is the coordinate vector of X_j at each point:
    X_j(p) = d/dt [ p * (t e_j) ] at t = 0 = e_j + 1/2 [p, e_j] (+ step-3 term).
    """
    pts = np.asarray(pts, dtype=float)
    m1, n = group.m1, group.n
    out = np.zeros(pts.shape[:-1] + (m1, n))
    for j in range(m1):
        ej = np.zeros(n)
        ej[j] = 1.0
        vec = np.broadcast_to(ej, pts.shape).copy()
        term = ej + 0.5 * group.bracket(pts, vec)
        if group.step >= 3:
            term = term + _T12 * group.bracket(pts, group.bracket(pts, vec))
        out[..., j, :] = term
    return out


_T12 = 1.0 / 12.0


# ---------------------------------------------------------------------------
# config parsing


def region_from_spec(group, spec, norm=None):
    """Build a region from JSON-style {type, ...} trees."""
    if isinstance(spec, Region):
        return spec
    kind = spec["type"]
    if kind == "halfspace":
        return HalfSpace(group, np.asarray(spec["nu"], float), spec.get("offset", 0.0))
    if kind == "ball":
        ball_norm = norm_from_spec(group, spec.get("norm")) if "norm" in spec or norm is None else norm
        return NormBall(
            group,
            ball_norm,
            center=np.asarray(spec.get("center", np.zeros(group.n)), float),
            radius=float(spec.get("radius", 1.0)),
        )
    if kind == "box":
        return Box(group, np.asarray(spec["lo"], float), np.asarray(spec["hi"], float))
    if kind == "voxel":
        path = spec["file"]
        return load_voxel_mask(os.path.splitext(path)[0], group)
    if kind == "complement":
        return Complement(region_from_spec(group, spec["of"], norm))
    if kind == "intersection":
        return Intersection([region_from_spec(group, s, norm) for s in spec["of"]])
    if kind == "union":
        return Union([region_from_spec(group, s, norm) for s in spec["of"]])
    raise ValueError(f"unknown region type {kind!r}")
