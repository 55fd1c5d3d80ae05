"""Polynomial ray bundles: group segments r -> x * delta_r(omega).

Along such a ray every coordinate is a polynomial in r whose degree is
bounded by the coordinate's layer (step <= 3 overall), because the BCH
product respects the grading. Region boundaries therefore cut each ray at
roots of small polynomials, which we solve in batch. Estimators integrate
kernel shell masses exactly between consecutive cut radii, so the radial
direction carries no Monte Carlo variance and no truncation bias.
"""

from __future__ import annotations

import numpy as np

from .groups import StratifiedGroup, _HALF, _TWELFTH


def _poly_bracket(group: StratifiedGroup, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Bracket of polynomial curves, coefficient arrays (N, D+1, n)."""
    D = P.shape[1] - 1
    out = np.zeros_like(P)
    for a in range(D + 1):
        if not P[:, a, :].any():
            continue
        for b in range(D + 1 - a):
            if not Q[:, b, :].any():
                continue
            out[:, a + b, :] += group.bracket(P[:, a, :], Q[:, b, :])
    return out


def _poly_bch(group: StratifiedGroup, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    Z = P + Q
    B = _poly_bracket(group, P, Q)
    Z = Z + _HALF * B
    if group.step >= 3:
        Z = Z + _TWELFTH * (
            _poly_bracket(group, P, B) - _poly_bracket(group, Q, B)
        )
    return Z


class RayBundle:
    """A batch of rays r -> x * delta_r(omega), r >= 0."""

    def __init__(self, group: StratifiedGroup, x: np.ndarray, omega: np.ndarray):
        self.group = group
        x = np.atleast_2d(np.asarray(x, dtype=float))
        omega = np.atleast_2d(np.asarray(omega, dtype=float))
        if omega.shape[0] == 1 and x.shape[0] > 1:
            omega = np.broadcast_to(omega, x.shape).copy()
        self.x = x
        self.omega = omega
        N, n = x.shape
        D = group.step
        P = np.zeros((N, D + 1, n))
        P[:, 0, :] = x
        W = np.zeros((N, D + 1, n))
        for i, sl in enumerate(group.layer_slices()):
            W[:, i + 1, sl] = omega[:, sl]
        self.coeffs = _poly_bch(group, P, W)

    @property
    def size(self) -> int:
        return self.x.shape[0]

    def point_at(self, r: np.ndarray) -> np.ndarray:
        """Evaluate rays at radii; r of shape (N,) or (N, K)."""
        r = np.asarray(r, dtype=float)
        c = self.coeffs  # (N, D+1, n)
        if r.ndim == 1:
            acc = c[:, -1, :]
            for d in range(c.shape[1] - 2, -1, -1):
                acc = acc * r[:, None] + c[:, d, :]
            return acc
        acc = np.broadcast_to(c[:, None, -1, :], r.shape + (c.shape[2],)).copy()
        for d in range(c.shape[1] - 2, -1, -1):
            acc = acc * r[..., None] + c[:, None, d, :]
        return acc

    def translated_coeffs(self, left: np.ndarray) -> np.ndarray:
        """Coefficients of left * z(r) for a fixed group element."""
        c = self.coeffs
        P = np.zeros_like(c)
        P[:, 0, :] = np.asarray(left, dtype=float)
        return _poly_bch(self.group, P, c)

    def scalar_poly(self, coeff_matrix: np.ndarray, vec: np.ndarray) -> np.ndarray:
        """<vec, coords(r)> as per-ray scalar polynomial (N, D+1)."""
        return np.einsum("ndk,k->nd", coeff_matrix, vec)


# ---------------------------------------------------------------------------
# batched scalar-polynomial roots


def polymul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Product of per-ray scalar polynomials, ascending coefficients."""
    N, d1 = p.shape
    _, d2 = q.shape
    out = np.zeros((N, d1 + d2 - 1))
    for a in range(d1):
        out[:, a : a + d2] += p[:, a : a + 1] * q
    return out


def real_roots_in(coeffs: np.ndarray, lo: float, hi: float, pad: float) -> np.ndarray:
    """Real roots of per-ray polynomials inside (lo, hi), padded with pad.

    coeffs: (N, D+1) ascending. Handles per-ray degree drops; quadratics and
    linears in closed form, higher degrees via batched companion eigenvalues.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    N, D1 = coeffs.shape
    D = D1 - 1
    if D == 0:
        return np.full((N, 1), pad)
    scale = np.max(np.abs(coeffs), axis=1, keepdims=True)
    scale[scale == 0.0] = 1.0
    c = coeffs / scale
    out = np.full((N, D), pad)
    degs = np.full(N, -1)
    tol = 1e-13
    for d in range(D, -1, -1):
        live = (degs < 0) & (np.abs(c[:, d]) > tol)
        degs[live] = d
    degs[degs < 0] = 0

    def _store(rows, roots):
        # roots: (M, k) possibly complex; keep near-real roots inside range
        re, im = roots.real, np.abs(roots.imag)
        ok = (im <= 1e-8 * (1.0 + np.abs(re))) & (re > lo) & (re < hi)
        vals = np.where(ok, re, pad)
        out[rows, : vals.shape[1]] = vals

    lin = degs == 1
    if lin.any():
        r = -c[lin, 0] / c[lin, 1]
        good = (r > lo) & (r < hi)
        out[np.nonzero(lin)[0][good], 0] = r[good]
    quad = degs == 2
    if quad.any():
        a, b, cc = c[quad, 2], c[quad, 1], c[quad, 0]
        disc = b * b - 4 * a * cc
        pos = disc >= 0
        sq = np.sqrt(np.clip(disc, 0, None))
        # numerically stable pair
        qq = -0.5 * (b + np.sign(b + (b == 0)) * sq)
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = np.where(pos, qq / a, np.inf)
            r2 = np.where(pos & (np.abs(qq) > 0), cc / qq, np.inf)
        roots = np.stack([r1, r2], axis=1)
        ok = (roots > lo) & (roots < hi) & np.isfinite(roots)
        vals = np.where(ok, roots, pad)
        out[np.nonzero(quad)[0], :2] = vals
    for d in range(3, D + 1):
        rows = np.nonzero(degs == d)[0]
        if rows.size == 0:
            continue
        cd = c[rows][:, : d + 1]
        lead = cd[:, d : d + 1]
        comp = np.zeros((rows.size, d, d))
        comp[:, 1:, :-1] = np.broadcast_to(np.eye(d - 1), (rows.size, d - 1, d - 1))
        comp[:, :, -1] = -cd[:, :d] / lead
        _store(rows, np.linalg.eigvals(comp))
    out.sort(axis=1)
    return out


def merge_breakpoints(parts, pad: float) -> np.ndarray:
    """Concatenate per-ray breakpoint arrays and sort; pad value sorts last."""
    parts = [p for p in parts if p is not None and p.shape[1] > 0]
    if not parts:
        raise ValueError("no breakpoint sources")
    merged = np.concatenate(parts, axis=1)
    merged = np.minimum(merged, pad)
    merged.sort(axis=1)
    return merged
