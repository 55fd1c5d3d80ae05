"""Homogeneous symmetric norms and their unit-ball geometry.

Every norm here satisfies ||delta_lam x|| = lam ||x|| and ||x^-1|| = ||x||.
Each norm also knows its unit-ball volume and a coordinate bounding box,
which back the polar-coordinate sampling used by the estimators:
Haar measure factorizes as Q * vol(B1) * r^(Q-1) dr x (cone measure).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .groups import StratifiedGroup

_EUCLID_BALL_VOL = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}

KORANYI_CONSTANT = 16.0  # gauge constant in ((a^2+b^2)^2 + 16 c^2)^(1/4)


@dataclass(frozen=True)
class HomogeneousNorm:
    """A homogeneous symmetric gauge on a stratified group."""

    group: StratifiedGroup
    kind: str  # "euclidean" | "koranyi" | "box"

    def __post_init__(self):
        if self.kind == "euclidean" and self.group.step != 1:
            raise ValueError("euclidean norm is homogeneous only on abelian groups")
        if self.kind == "koranyi" and (self.group.layer_dims != (2, 1)):
            raise ValueError("koranyi norm is defined on the Heisenberg group")
        if self.kind not in ("euclidean", "koranyi", "box"):
            raise ValueError(f"unknown norm kind {self.kind!r}")

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.kind == "euclidean":
            return np.sqrt(np.sum(pts * pts, axis=-1))
        if self.kind == "koranyi":
            a, b, c = pts[..., 0], pts[..., 1], pts[..., 2]
            h2 = a * a + b * b
            return (h2 * h2 + KORANYI_CONSTANT * c * c) ** 0.25
        return np.maximum(self._box_raw(pts), self._box_raw(-pts))

    def _box_raw(self, pts: np.ndarray) -> np.ndarray:
        out = None
        for i, sl in enumerate(self.group.layer_slices()):
            layer = np.max(np.abs(pts[..., sl]), axis=-1) ** (1.0 / (i + 1))
            out = layer if out is None else np.maximum(out, layer)
        return out

    # -- unit-ball geometry ------------------------------------------------

    @property
    def ball_volume(self) -> float:
        """Haar volume of the unit ball, in closed form per kind."""
        if self.kind == "euclidean":
            return _EUCLID_BALL_VOL[self.group.n]
        if self.kind == "koranyi":
            # integrate the c-thickness 2 sqrt(1-rho^4)/sqrt(K) over the unit disc
            return math.pi ** 2 / (2.0 * math.sqrt(KORANYI_CONSTANT))
        # box ball of radius 1 is the coordinate box itself
        return float(np.prod([2.0 ** m for m in self.group.layer_dims]))

    def ball_box(self, radius: float = 1.0):
        """Tight axis-aligned box containing the centred ball of given radius."""
        g = self.group
        if self.kind == "euclidean":
            hi = np.full(g.n, radius)
        elif self.kind == "koranyi":
            hi = np.array(
                [radius, radius, radius ** 2 / math.sqrt(KORANYI_CONSTANT)]
            )
        else:
            hi = radius ** g.weights
        return -hi, hi

    @property
    def polar_constant(self) -> float:
        """Q * vol(B1): the weight of r^(Q-1) dr in polar coordinates."""
        return self.group.Q * self.ball_volume

    def sample_cone(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw unit-sphere directions from the cone measure.

        Rejection-samples the unit ball in its bounding box and projects
        each accepted point to the sphere by a dilation.
        """
        g = self.group
        lo, hi = self.ball_box(1.0)
        out = np.empty((count, g.n))
        filled = 0
        while filled < count:
            m = max(count - filled, 1)
            draw = int(m / max(self.ball_volume / np.prod(hi - lo), 0.05)) + 8
            cand = rng.uniform(lo, hi, size=(draw, g.n))
            r = self(cand)
            cand = cand[(r > 1e-12) & (r < 1.0)]
            take = min(len(cand), count - filled)
            if take:
                sel = cand[:take]
                rr = self(sel)
                out[filled : filled + take] = sel * (1.0 / rr[:, None]) ** g.weights
                filled += take
        return out


def norm_from_spec(group: StratifiedGroup, spec) -> HomogeneousNorm:
    if isinstance(spec, HomogeneousNorm):
        return spec
    if isinstance(spec, dict):
        spec = spec.get("type", spec.get("kind"))
    if spec is None:
        spec = "euclidean" if group.step == 1 else (
            "koranyi" if group.layer_dims == (2, 1) else "box"
        )
    return HomogeneousNorm(group=group, kind=str(spec))
