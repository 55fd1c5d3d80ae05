"""Surface and volume quantities of model sets.

theta(nu) is the Euclidean (n-1)-measure of the vertical hyperplane
{<pi_1 log x, nu> = 0} inside the unit norm ball; for vertical halfspaces it
coincides with the horizontal perimeter density, because the horizontal
frame pairs with the constant Euclidean normal to give |nu| identically.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import integrate

from .groups import StratifiedGroup
from .norms import KORANYI_CONSTANT, HomogeneousNorm
from .regions import Box, HalfSpace, NormBall, Region, horizontal_frame
from .sampling import Estimate, McConfig, run_sharded


def _layer1_complement_basis(group: StratifiedGroup, nu: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the hyperplane's coordinate directions.

    Columns: first the m1-1 horizontal directions orthogonal to nu, then the
    upper-layer coordinate axes.
    """
    m1, n = group.m1, group.n
    nu = nu / np.linalg.norm(nu)
    basis = []
    seed = np.eye(m1)
    for v in seed:
        w = v - (v @ nu) * nu
        for b in basis:
            w = w - (w @ b[:m1]) * b[:m1]
        if np.linalg.norm(w) > 1e-10:
            w = w / np.linalg.norm(w)
            full = np.zeros(n)
            full[:m1] = w
            basis.append(full)
    for j in range(m1, n):
        e = np.zeros(n)
        e[j] = 1.0
        basis.append(e)
    return np.stack(basis, axis=1)  # (n, n-1)


@lru_cache(maxsize=None)
def _koranyi_slice_area() -> float:
    # area of {b^4 + K c^2 < 1} in the (b, c) plane: c-thickness 2 sqrt(1-b^4)/sqrt(K)
    val, _ = integrate.quad(lambda b: math.sqrt(1.0 - b ** 4), 0.0, 1.0, epsabs=1e-13)
    return 4.0 * val / math.sqrt(KORANYI_CONSTANT)


def theta(norm: HomogeneousNorm, nu: np.ndarray, mc: McConfig | None = None) -> float:
    """Halfspace perimeter density: H^{n-1}_e(boundary of H_nu inside B(0,1)).

    Closed forms for Euclidean norms, a cached quadrature for the Koranyi
    ball (horizontally rotation invariant), deterministic grid quadrature
    otherwise; `theta_mc` gives the Monte Carlo cross-check.
    """
    group = norm.group
    nu = np.asarray(nu, dtype=float)
    if not np.any(nu):
        raise ValueError("theta needs a nonzero horizontal direction")
    if norm.kind == "euclidean":
        return {1: 1.0, 2: 2.0, 3: math.pi}[group.n]
    if norm.kind == "koranyi":
        return _koranyi_slice_area()
    est = theta_mc(norm, nu, mc or McConfig(samples=400_000, seed=2024))
    return est.value


def theta_mc(norm: HomogeneousNorm, nu: np.ndarray, cfg: McConfig) -> Estimate:
    """Monte Carlo theta: uniform samples on the hyperplane inside a box."""
    group = norm.group
    nu = np.asarray(nu, dtype=float)
    basis = _layer1_complement_basis(group, nu)
    if basis.shape[1] == 0:  # R^1: the hyperplane is the single point 0
        return Estimate(value=1.0, std_error=0.0, samples_used=0, seed=cfg.seed)
    _, hi = norm.ball_box(1.0)
    # box of parameter coordinates: project the ball box onto each direction
    ext = np.abs(basis).T @ np.abs(hi)
    area_box = float(np.prod(2.0 * ext))

    def worker(rng, m):
        t = rng.uniform(-ext, ext, size=(m, basis.shape[1]))
        pts = t @ basis.T
        inside = norm(pts) < 1.0
        return [np.mean(inside) * area_box]

    vals, stds, used = run_sharded(cfg, worker, components=1, rays_per_draw=1)
    return Estimate(
        value=float(vals[0]),
        std_error=float(stds[0]),
        samples_used=used,
        seed=cfg.seed,
        config_hash=cfg.digest(),
    )


def _sphere_quadrature(center, radius, n_theta=160, n_phi=320):
    """Gauss-grid nodes and Euclidean area weights on a round 2-sphere."""
    t_nodes, t_w = np.polynomial.legendre.leggauss(n_theta)
    theta_n = np.arccos(t_nodes)  # colatitude via cos substitution
    phi = (np.arange(n_phi) + 0.5) * (2 * np.pi / n_phi)
    T, P = np.meshgrid(theta_n, phi, indexing="ij")
    normals = np.stack(
        [np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1
    ).reshape(-1, 3)
    weights = (
        np.broadcast_to(t_w[:, None], T.shape).reshape(-1)
        * (2 * np.pi / n_phi)
        * radius ** 2
    )
    pts = center + radius * normals
    return pts, normals, weights


def horizontal_perimeter(group: StratifiedGroup, E: Region, window=None) -> float:
    """P_G of a smooth model set: vertical halfspace or Euclidean coordinate ball.

    Surface integral of |projection of the Euclidean unit normal onto the
    moving horizontal frame|. For vertical halfspaces inside a unit norm
    ball this equals theta(nu); coordinate balls use sphere quadrature.
    """
    if isinstance(E, HalfSpace):
        if window is None or not isinstance(window, NormBall):
            raise ValueError("halfspace perimeter is computed inside a norm ball")
        if np.any(window.center) or E.offset != 0.0:
            raise ValueError("supported case: centred ball, halfspace through 0")
        base = theta(window.norm, E.nu)
        return base * window.radius ** (group.Q - 1.0)
    if isinstance(E, _EuclideanBall):
        if group.step == 1:
            n = group.n
            return {1: 2.0, 2: 2 * math.pi * E.radius, 3: 4 * math.pi * E.radius ** 2}[n]
        if group.layer_dims != (2, 1):
            raise ValueError("coordinate-ball perimeter implemented on H1 and R^n")
        pts, normals, weights = _sphere_quadrature(E.center, E.radius)
        frame = horizontal_frame(group, pts)
        pair = np.einsum("pji,pi->pj", frame, normals)
        dens = np.linalg.norm(pair, axis=-1)
        return float(np.sum(dens * weights))
    if isinstance(E, Box) and group.step == 1 and group.n == 1:
        return 2.0
    raise ValueError(f"unsupported boundary type {type(E).__name__}")


class _EuclideanBall(Region):
    """Coordinate (Euclidean) ball used as a smooth model hypersurface."""

    def __init__(self, group, center=None, radius=1.0):
        self.group = group
        self.center = (
            group.identity() if center is None else np.asarray(center, dtype=float)
        )
        self.radius = float(radius)

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.sum((pts - self.center) ** 2, axis=-1) < self.radius ** 2

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def ray_breakpoints(self, bundle, pad):
        from .rays import polymul, real_roots_in

        w = bundle.coeffs - 0.0
        poly = None
        for j in range(self.group.n):
            cj = w[:, :, j].copy()
            cj[:, 0] -= self.center[j]
            pj = polymul(cj, cj)
            poly = pj if poly is None else _pad_add(poly, pj)
        poly[:, 0] -= self.radius ** 2
        return real_roots_in(poly, 0.0, pad, pad)

    @property
    def volume(self):
        n = self.group.n
        unit = {1: 2.0, 2: math.pi, 3: 4 * math.pi / 3}[n]
        return unit * self.radius ** n

    def interfaces(self):
        if self.group.step == 1:
            from .regions import ShellInterface

            return [
                ShellInterface(
                    center=tuple(self.center),
                    radius=self.radius,
                    norm_kind="euclidean",
                )
            ]
        return []

    def dilate(self, lam):
        raise NotImplementedError("dilating a coordinate ball leaves the model class")


def _pad_add(p, q):
    width = max(p.shape[1], q.shape[1])
    out = np.zeros((p.shape[0], width))
    out[:, : p.shape[1]] += p
    out[:, : q.shape[1]] += q
    return out


def euclidean_ball(group, center=None, radius=1.0) -> _EuclideanBall:
    return _EuclideanBall(group, center, radius)


def symdiff_volume(A: Region, B: Region, window: Region, cfg: McConfig) -> Estimate:
    """H^Q((A symdiff B) cap window) by uniform Monte Carlo over the window box."""
    box = window.bounding_box()
    if box is None:
        raise ValueError("symdiff_volume needs a bounded window")
    lo, hi = box
    vol = float(np.prod(hi - lo))
    group = window.group

    def worker(rng, m):
        x = rng.uniform(lo, hi, size=(m, group.n))
        inside = window.contains(x)
        diff = A.contains(x) != B.contains(x)
        return [np.mean(inside & diff) * vol]

    vals, stds, used = run_sharded(cfg, worker, components=1, rays_per_draw=1)
    return Estimate(
        value=float(vals[0]),
        std_error=float(stds[0]),
        samples_used=used,
        seed=cfg.seed,
        config_hash=cfg.digest(),
    )


def region_volume(region: Region, cfg: McConfig) -> Estimate:
    """Monte Carlo Haar volume of a bounded region."""
    from .regions import EmptyRegion

    return symdiff_volume(region, EmptyRegion(region.group), region, cfg)
