"""Radial interaction kernels and their executable admissibility checks.

A kernel is a radial profile composed with a homogeneous symmetric norm,
so nonnegativity and the symmetry K(x^-1) = K(x) hold by construction.
Profiles expose the exact radial shell masses

    mass(a, b)        = int_a^b Ktilde(s) s^(Q-1) ds
    weighted_mass(.., p) = int_a^b Ktilde(s) s^(Q-1+p) ds

which, multiplied by the polar constant Q vol(B1), give the Haar integrals
of the kernel over norm shells. Estimators consume these instead of raw
kernel values, so the radial singularity is handled in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .groups import StratifiedGroup
from .norms import HomogeneousNorm, norm_from_spec

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def _power_mass(a, b, expo):
    """int_a^b s^expo ds, vectorised, tolerating a=0 and b=inf."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if abs(expo + 1.0) < 1e-14:
            out = np.log(b) - np.log(np.maximum(a, 1e-300))
        else:
            p = expo + 1.0
            bp = np.where(np.isinf(b), 0.0 if p < 0 else np.inf, b ** p)
            ap = np.where(a <= 0.0, np.inf if p < 0 else 0.0, np.maximum(a, 1e-300) ** p)
            out = (bp - ap) / p
    return np.where(b > a, out, 0.0)


class RadialProfile:
    """Base class; subclasses define value/mass/weighted_mass."""

    Q: float

    def value(self, r):
        raise NotImplementedError

    def mass(self, a, b):
        return self.weighted_mass(a, b, 0.0)

    def weighted_mass(self, a, b, p):
        return _numeric_weighted_mass(self, a, b, p)

    @property
    def support_radius(self):
        """Radius beyond which the profile vanishes, or None."""
        return None


def _numeric_weighted_mass(profile, a, b, p, panels=12):
    """Panelled log-substituted Gauss-Legendre fallback for smooth profiles."""
    a = np.maximum(np.asarray(a, dtype=float), 1e-12)
    b = np.asarray(b, dtype=float)
    sup = profile.support_radius
    if sup is not None:
        b = np.minimum(b, sup)
    b = np.where(np.isinf(b), np.maximum(a, 1.0) * 1e9, b)
    bad = b <= a
    la, lb = np.log(a), np.log(np.where(bad, a * 2, b))
    edges = la[..., None] + (lb - la)[..., None] * np.linspace(0, 1, panels + 1)
    mid = (edges[..., 1:] + edges[..., :-1]) / 2.0
    half = (edges[..., 1:] - edges[..., :-1]) / 2.0
    t = mid[..., None] + half[..., None] * _GL_NODES  # (..., panels, nodes)
    s = np.exp(t)
    vals = profile.value(s) * s ** (profile.Q + p)  # extra s from d(log s)
    out = np.einsum("...pk,k->...", half[..., None] * vals, _GL_WEIGHTS)
    return np.where(bad, 0.0, out)


@dataclass(frozen=True)
class FractionalProfile(RadialProfile):
    """Ktilde(r) = r^(-Q-alpha), the fractional kernel profile."""

    Q: float
    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha outside (0,1): {self.alpha}")

    def value(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return np.maximum(r, 1e-300) ** (-(self.Q + self.alpha))

    def weighted_mass(self, a, b, p):
        return _power_mass(a, b, -1.0 - self.alpha + p)


@dataclass(frozen=True)
class TruncatedFractionalProfile(RadialProfile):
    """min(r^(-Q-alpha), 1): bounded head, fractional tail (L^1 overall)."""

    Q: float
    alpha: float

    @property
    def _switch(self):
        return 1.0  # r^(-Q-alpha) = 1 at r = 1

    def value(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            raw = np.maximum(r, 1e-300) ** (-(self.Q + self.alpha))
        return np.minimum(raw, 1.0)

    def weighted_mass(self, a, b, p):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        s = self._switch
        head = _power_mass(np.minimum(a, s), np.minimum(b, s), self.Q - 1.0 + p)
        tail = _power_mass(np.maximum(a, s), np.maximum(b, s), -1.0 - self.alpha + p)
        return head + tail


@dataclass(frozen=True)
class CompactBumpProfile(RadialProfile):
    """Ktilde(r) = (1 - r^2)^2 on [0, 1], zero outside."""

    Q: float

    def value(self, r):
        r = np.asarray(r, dtype=float)
        u = np.clip(1.0 - r * r, 0.0, None)
        return u * u

    def weighted_mass(self, a, b, p):
        a = np.minimum(np.asarray(a, dtype=float), 1.0)
        b = np.minimum(np.asarray(b, dtype=float), 1.0)
        q = self.Q - 1.0 + p
        return (
            _power_mass(a, b, q)
            - 2.0 * _power_mass(a, b, q + 2.0)
            + _power_mass(a, b, q + 4.0)
        )

    @property
    def support_radius(self):
        return 1.0


@dataclass(frozen=True)
class IndicatorProfile(RadialProfile):
    """Ktilde = chi_[0, radius]."""

    Q: float
    radius: float = 1.0

    def value(self, r):
        return (np.asarray(r, dtype=float) <= self.radius).astype(float)

    def weighted_mass(self, a, b, p):
        a = np.minimum(np.asarray(a, dtype=float), self.radius)
        b = np.minimum(np.asarray(b, dtype=float), self.radius)
        return _power_mass(a, b, self.Q - 1.0 + p)

    @property
    def support_radius(self):
        return self.radius


@dataclass(frozen=True)
class ExpDecayProfile(RadialProfile):
    """Ktilde(r) = exp(-r); decays faster than any power."""

    Q: float

    def value(self, r):
        return np.exp(-np.asarray(r, dtype=float))


@dataclass(frozen=True)
class RescaledProfile(RadialProfile):
    """eps^-Q Ktilde(r/eps): shell masses pull back exactly."""

    base: RadialProfile
    eps: float

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError(f"rescaling factor must be positive, got {self.eps}")

    @property
    def Q(self):
        return self.base.Q

    def value(self, r):
        return self.eps ** (-self.Q) * self.base.value(np.asarray(r) / self.eps)

    def weighted_mass(self, a, b, p):
        scale = self.eps ** p
        return scale * self.base.weighted_mass(
            np.asarray(a) / self.eps, np.asarray(b) / self.eps, p
        )

    @property
    def support_radius(self):
        sup = self.base.support_radius
        return None if sup is None else sup * self.eps


@dataclass(frozen=True)
class CappedProfile(RadialProfile):
    """min(Ktilde, cap): the truncation T(s)=min(s,1) applied to any profile."""

    base: RadialProfile
    cap: float = 1.0

    @property
    def Q(self):
        return self.base.Q

    def value(self, r):
        return np.minimum(self.base.value(r), self.cap)

    @property
    def support_radius(self):
        return self.base.support_radius


@dataclass(frozen=True)
class Kernel:
    """A radial kernel bound to a group and a homogeneous norm."""

    group: StratifiedGroup
    norm: HomogeneousNorm
    profile: RadialProfile
    alpha: float | None = None  # set for exact fractional scaling
    radial_decreasing: bool = True

    def value(self, pts: np.ndarray) -> np.ndarray:
        return self.profile.value(self.norm(pts))

    @property
    def polar_constant(self) -> float:
        return self.norm.polar_constant

    @property
    def compactly_supported(self) -> bool:
        return self.profile.support_radius is not None

    def rescale(self, eps: float) -> "Kernel":
        """K_eps = eps^-Q K o delta_(1/eps); equals eps^alpha K when fractional."""
        if eps == 1.0:
            return self
        return replace(self, profile=RescaledProfile(base=self.profile, eps=eps))

    def truncated(self, cap: float = 1.0) -> "Kernel":
        """Apply T(s) = min(s, cap); the result is integrable under (min 1,|x|) bound."""
        return replace(
            self, profile=CappedProfile(base=self.profile, cap=cap), alpha=None
        )

    def shell_mass(self, a, b) -> np.ndarray:
        """Haar mass of the kernel over the norm shell a < ||g|| < b."""
        return self.polar_constant * self.profile.mass(a, b)


def fractional_kernel(group, norm, alpha: float) -> Kernel:
    norm = norm_from_spec(group, norm)
    return Kernel(
        group=group,
        norm=norm,
        profile=FractionalProfile(Q=group.Q, alpha=float(alpha)),
        alpha=float(alpha),
    )


_PROFILE_CATALOG = {
    "indicator_unit": lambda Q: IndicatorProfile(Q=Q, radius=1.0),
    "exp_decay": lambda Q: ExpDecayProfile(Q=Q),
}


def kernel_from_spec(group, spec) -> Kernel:
    """Build a kernel from {type, alpha, norm[, profile]} (JSON-friendly)."""
    if isinstance(spec, Kernel):
        return spec
    kind = spec.get("type", "fractional")
    norm = norm_from_spec(group, spec.get("norm"))
    if kind == "fractional":
        return fractional_kernel(group, norm, spec["alpha"])
    if kind == "truncated_fractional":
        alpha = float(spec["alpha"])
        if not (0.0 < alpha < 1.0):
            raise ValueError(f"alpha outside (0,1): {alpha}")
        prof = TruncatedFractionalProfile(Q=group.Q, alpha=alpha)
        return Kernel(group=group, norm=norm, profile=prof)
    if kind == "compact_bump":
        return Kernel(group=group, norm=norm, profile=CompactBumpProfile(Q=group.Q))
    if kind == "custom_profile":
        name = spec.get("profile")
        if name not in _PROFILE_CATALOG:
            raise ValueError(
                f"unknown custom profile {name!r}; catalog: {sorted(_PROFILE_CATALOG)}"
            )
        prof = _PROFILE_CATALOG[name](group.Q)
        return Kernel(group=group, norm=norm, profile=prof, radial_decreasing=True)
    raise ValueError(f"unknown kernel type {kind!r}")


# ---------------------------------------------------------------------------
# admissibility checks


@dataclass(frozen=True)
class IntegrabilityReport:
    value: float
    converged: bool
    inner_shell_sums: tuple
    outer_shell_sums: tuple

    def __bool__(self):
        return self.converged


def integrability_check(kernel: Kernel, decades: int = 12) -> IntegrabilityReport:
    """Evaluate int min(1, ||x||) K(x) dx by exact radial shell sums.

    The integral reduces to Q vol(B1) [ int_0^1 Ktilde s^Q ds + int_1^inf
    Ktilde s^(Q-1) ds ]. Decade shell sums toward 0 and toward infinity must
    decay geometrically, otherwise the check reports divergence.
    """
    prof = kernel.profile
    sigma = kernel.polar_constant
    inner_edges = 10.0 ** (-np.arange(decades + 1, dtype=float))
    inner = [
        float(prof.weighted_mass(inner_edges[k + 1], inner_edges[k], 1.0))
        for k in range(decades)
    ]
    outer_edges = 10.0 ** (np.arange(decades + 1, dtype=float))
    outer = [
        float(prof.mass(outer_edges[k], outer_edges[k + 1])) for k in range(decades)
    ]

    def _decaying(seq):
        seq = [s for s in seq]
        head = max(seq[0], 1e-300)
        if seq[-1] > 1e-12 * head and seq[-1] >= 0.9 * seq[-2]:
            return False
        return all(np.isfinite(s) for s in seq)

    converged = _decaying(inner) and _decaying(outer)
    value = sigma * (
        sum(inner)
        + float(prof.weighted_mass(0.0, inner_edges[-1], 1.0))
        + sum(outer)
        + float(prof.mass(outer_edges[-1], np.inf))
    )
    return IntegrabilityReport(
        value=value,
        converged=bool(converged),
        inner_shell_sums=tuple(inner),
        outer_shell_sums=tuple(outer),
    )


def infcappa_check(kernel: Kernel, r_max: float = 1e6, grid: int = 600) -> float:
    """inf over r > 1 of Ktilde(r) r^(Q+1), scanned on a log grid.

    A positive value certifies the slow-decay hypothesis behind the uniform
    positivity of the rescaled halfspace energies. The infimum is evaluated
    on [1, r_max]; for profiles with known power tails the grid attains it.
    """
    r = np.geomspace(1.0, r_max, grid)
    vals = kernel.profile.value(r) * r ** (kernel.group.Q + 1.0)
    return float(np.min(vals))
