"""Carnot group arithmetic in exponential coordinates of the first kind.

Elements are coordinate vectors graded by layer; the group product is the
Baker-Campbell-Hausdorff series truncated at the group's step, which is exact
for nilpotent algebras of step <= 3. In these coordinates the identity is 0,
inversion is negation and log is the identity map.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

# BCH coefficients stored exactly, converted to float once at import.
_HALF = float(Fraction(1, 2))
_TWELFTH = float(Fraction(1, 12))


class GroupStructureError(ValueError):
    """Raised for inconsistent layer/bracket data or mismatched points."""


@dataclass(frozen=True)
class StratifiedGroup:
    """Descriptor of a stratified (Carnot) group.

    Parameters
    ----------
    name : str
        Catalog name or a label for custom structures.
    layer_dims : tuple of int
        Dimensions m_1..m_s of the layers; n = sum, step = len.
    brackets : tuple of (i, j, k, c)
        Structure constants: [e_i, e_j] = sum_k c e_k on the graded basis,
        zero-based indices, given for i < j only (antisymmetry is filled in).
    """

    name: str
    layer_dims: tuple
    brackets: tuple = ()
    _tensor: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        dims = tuple(int(m) for m in self.layer_dims)
        if not dims or any(m <= 0 for m in dims):
            raise GroupStructureError(f"bad layer_dims {self.layer_dims}")
        object.__setattr__(self, "layer_dims", dims)
        n = sum(dims)
        tensor = np.zeros((n, n, n))
        for (i, j, k, c) in self.brackets:
            tensor[i, j, k] += float(c)
            tensor[j, i, k] -= float(c)
        object.__setattr__(self, "_tensor", tensor)
        self._validate()

    # -- basic derived data -------------------------------------------------

    @property
    def n(self) -> int:
        return sum(self.layer_dims)

    @property
    def step(self) -> int:
        return len(self.layer_dims)

    @property
    def Q(self) -> int:
        """Homogeneous dimension sum_i i*m_i."""
        return sum((i + 1) * m for i, m in enumerate(self.layer_dims))

    @property
    def m1(self) -> int:
        return self.layer_dims[0]

    def layer_slices(self):
        out, start = [], 0
        for m in self.layer_dims:
            out.append(slice(start, start + m))
            start += m
        return out

    def layer_of(self, index: int) -> int:
        """1-based layer containing basis index."""
        start = 0
        for i, m in enumerate(self.layer_dims):
            if index < start + m:
                return i + 1
            start += m
        raise GroupStructureError(f"index {index} out of range")

    @property
    def weights(self) -> np.ndarray:
        """Per-coordinate dilation exponents (layer numbers)."""
        return np.concatenate(
            [np.full(m, i + 1) for i, m in enumerate(self.layer_dims)]
        ).astype(float)

    # -- validation ---------------------------------------------------------

    def _validate(self):
        n, C = self.n, self._tensor
        if self.step > 3:
            raise GroupStructureError("BCH product implemented for step <= 3 only")
        # grading: [g_a, g_b] subset g_{a+b}, zero past the top layer
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if C[i, j, k] == 0.0:
                        continue
                    la, lb, lk = self.layer_of(i), self.layer_of(j), self.layer_of(k)
                    if lk != la + lb:
                        raise GroupStructureError(
                            f"bracket [e{i},e{j}] -> e{k} violates grading"
                        )
        # Jacobi on all basis triples: [x,[y,z]] + [y,[z,x]] + [z,[x,y]] = 0
        inner = np.einsum("jzw,iwk->ijzk", C, C)  # [e_i,[e_j,e_z]]
        jac = inner + np.einsum("ijzk->jzik", inner) + np.einsum("ijzk->zijk", inner)
        if not np.allclose(jac, 0.0, atol=1e-12):
            raise GroupStructureError("structure constants violate the Jacobi identity")

    # -- algebra ------------------------------------------------------------

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Lie bracket of coordinate vectors, broadcast over leading axes."""
        return np.einsum("ijk,...i,...j->...k", self._tensor, x, y)

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise GroupStructureError(
                f"point has {x.shape[-1]} coordinates, group {self.name} has {self.n}"
            )
        return x

    def product(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Group product via BCH truncated at the step (exact for step <= 3)."""
        x, y = self._check(x), self._check(y)
        z = x + y + _HALF * self.bracket(x, y)
        if self.step >= 3:
            xy = self.bracket(x, y)
            z = z + _TWELFTH * (self.bracket(x, xy) - self.bracket(y, xy))
        return z

    def inverse(self, x: np.ndarray) -> np.ndarray:
        """Inverse is coordinate negation in first-kind coordinates."""
        return -self._check(x)

    def dilate(self, lam: float, x: np.ndarray) -> np.ndarray:
        """Anisotropic dilation: layer-i coordinates scale by lam^i."""
        if lam <= 0:
            raise ValueError(f"dilation factor must be positive, got {lam}")
        return self._check(x) * lam ** self.weights

    def pi1(self, x: np.ndarray) -> np.ndarray:
        """Horizontal projection of log (log is the identity here)."""
        return self._check(x)[..., : self.m1]

    def embed_horizontal(self, v: np.ndarray) -> np.ndarray:
        """Lift a first-layer vector to a group point with zero upper layers."""
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape[:-1] + (self.n,))
        out[..., : self.m1] = v
        return out

    def identity(self) -> np.ndarray:
        return np.zeros(self.n)

    def translate_box(self, p: np.ndarray, lo: np.ndarray, hi: np.ndarray):
        """Conservative bounding box of the translate p * [lo, hi].

        Exact interval bound for step <= 2; step 3 adds a padded bound on the
        twelfth-order BCH terms. Over-coverage only costs sampling efficiency.
        """
        p = self._check(p)
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        mid, rad = (lo + hi) / 2.0, (hi - lo) / 2.0
        center = self.product(p, mid)
        absC = np.abs(self._tensor)

        def bound(u, v):
            return np.einsum("ijk,i,j->k", absC, u, v)

        spread = rad + _HALF * bound(np.abs(p), rad)
        if self.step >= 3:
            span = np.abs(mid) + rad
            spread = spread + 2 * _TWELFTH * (
                bound(np.abs(p), bound(np.abs(p), span))
                + bound(span, bound(span, np.abs(p)))
            )
        return center - spread, center + spread


# ---------------------------------------------------------------------------
# catalog


def _abelian(n: int) -> StratifiedGroup:
    return StratifiedGroup(name=f"r{n}", layer_dims=(n,))


def heisenberg() -> StratifiedGroup:
    """H^1: coordinates (a, b, c), [e1, e2] = e3."""
    return StratifiedGroup(name="heisenberg", layer_dims=(2, 1), brackets=((0, 1, 2, 1.0),))


def free_step2(generators: int) -> StratifiedGroup:
    """Free nilpotent group of step 2 on 2 or 3 generators."""
    if generators == 2:
        g = heisenberg()
        return StratifiedGroup(name="free_step2_2", layer_dims=g.layer_dims, brackets=g.brackets)
    if generators == 3:
        return StratifiedGroup(
            name="free_step2_3",
            layer_dims=(3, 3),
            brackets=((0, 1, 3, 1.0), (0, 2, 4, 1.0), (1, 2, 5, 1.0)),
        )
    raise GroupStructureError("free step-2 catalog covers 2 or 3 generators")


_CATALOG = {
    "r1": lambda: _abelian(1),
    "r2": lambda: _abelian(2),
    "r3": lambda: _abelian(3),
    "heisenberg": heisenberg,
    "free_step2_2": lambda: free_step2(2),
    "free_step2_3": lambda: free_step2(3),
}


def group_from_name(name: str) -> StratifiedGroup:
    try:
        return _CATALOG[name]()
    except KeyError:
        raise GroupStructureError(
            f"unknown group {name!r}; catalog: {sorted(_CATALOG)}"
        ) from None


def group_from_spec(spec) -> StratifiedGroup:
    """Build a group from a name or a {layer_dims, brackets} mapping."""
    if isinstance(spec, StratifiedGroup):
        return spec
    if isinstance(spec, str):
        return group_from_name(spec)
    if isinstance(spec, dict):
        if "name" in spec and "layer_dims" not in spec:
            return group_from_name(spec["name"])
        brackets = tuple(tuple(b) for b in spec.get("brackets", ()))
        return StratifiedGroup(
            name=spec.get("name", "custom"),
            layer_dims=tuple(spec["layer_dims"]),
            brackets=brackets,
        )
    raise GroupStructureError(f"cannot interpret group spec {spec!r}")


def load_group(path: str) -> StratifiedGroup:
    with open(path, "r", encoding="utf-8") as fh:
        return group_from_spec(json.load(fh))
