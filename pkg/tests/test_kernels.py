import numpy as np
import pytest

from nlperim.kernels import (
    CompactBumpProfile,
    ExpDecayProfile,
    FractionalProfile,
    fractional_kernel,
    infcappa_check,
    integrability_check,
    kernel_from_spec,
)


def test_fractional_values_and_homogeneity(h1, koranyi, rng):
    K = fractional_kernel(h1, koranyi, 0.5)
    assert np.isclose(K.value(np.array([1.0, 0.0, 0.0])), 1.0)
    pts = rng.normal(size=(32, 3))
    ratio = K.value(h1.dilate(2.0, pts)) / K.value(pts)
    assert np.allclose(ratio, 2.0 ** (-4.5), rtol=1e-12)


def test_alpha_range():
    with pytest.raises(ValueError):
        FractionalProfile(Q=4, alpha=1.5)


def test_rescale_pointwise_identity(h1, koranyi, rng):
    K = fractional_kernel(h1, koranyi, 0.5)
    Ke = K.rescale(0.25)
    pts = rng.normal(size=(16, 3))
    assert np.allclose(Ke.value(pts), 0.5 * K.value(pts), rtol=1e-12)
    assert K.rescale(1.0) is K
    with pytest.raises(ValueError):
        K.rescale(-2.0)


def test_rescale_exact_pullback(h1, koranyi, rng):
    # K_eps(delta_eps g) = eps^-Q K(g) exactly
    K = fractional_kernel(h1, koranyi, 0.3)
    eps = 0.2
    Ke = K.rescale(eps)
    g = rng.normal(size=(8, 3))
    assert np.allclose(Ke.value(h1.dilate(eps, g)), eps ** (-4.0) * K.value(g), rtol=1e-11)


def test_rescaled_indicator_support(r1, euclid1):
    K = kernel_from_spec(r1, {"type": "custom_profile", "profile": "indicator_unit", "norm": "euclidean"})
    Ke = K.rescale(0.1)
    assert np.isclose(Ke.profile.support_radius, 0.1)


def test_truncation_cap(r1, euclid1):
    K = fractional_kernel(r1, euclid1, 0.5)
    G = K.truncated()
    far = np.array([[3.0]])
    near = np.array([[0.01]])
    assert np.isclose(G.value(far), K.value(far))  # below the cap
    assert np.isclose(G.value(near), 1.0)  # capped
    # G integrable: mass finite
    assert np.isfinite(G.profile.mass(0.0, np.inf))


def test_kernel_symmetry(h1, koranyi, rng):
    K = fractional_kernel(h1, koranyi, 0.5)
    pts = rng.normal(size=(32, 3))
    assert np.allclose(K.value(h1.inverse(pts)), K.value(pts), rtol=1e-12)


def test_integrability_fractional_closed_form(r1, euclid1):
    for alpha in (0.3, 0.5, 0.8):
        K = fractional_kernel(r1, euclid1, alpha)
        rep = integrability_check(K)
        expected = 2.0 * (1.0 / (1.0 - alpha) + 1.0 / alpha)
        assert rep.converged
        assert np.isclose(rep.value, expected, rtol=1e-8)


def test_integrability_divergence_flag(r1):
    # Ktilde = r^(-Q-1) at the alpha -> 1 boundary: the head integral of
    # min(1, r) K r^(Q-1) = r^-1 diverges; decade sums stay constant
    class BoundaryProfile(FractionalProfile):
        def __post_init__(self):
            pass

    K = fractional_kernel(r1, "euclidean", 0.5)
    bad = K.__class__(
        group=K.group, norm=K.norm, profile=BoundaryProfile(Q=1, alpha=1.0), alpha=None
    )
    rep = integrability_check(bad)
    assert not rep.converged


def test_integrability_compact(r1):
    K = kernel_from_spec(r1, {"type": "compact_bump", "norm": "euclidean"})
    rep = integrability_check(K)
    assert rep.converged and np.isfinite(rep.value)


def test_infcappa_values(r1, h1, koranyi):
    K = fractional_kernel(h1, koranyi, 0.5)
    assert np.isclose(infcappa_check(K), 1.0, rtol=1e-6)  # inf of r^(1-alpha) at r=1
    Kc = kernel_from_spec(r1, {"type": "compact_bump", "norm": "euclidean"})
    assert infcappa_check(Kc) == 0.0
    Ke = kernel_from_spec(r1, {"type": "custom_profile", "profile": "exp_decay", "norm": "euclidean"})
    assert infcappa_check(Ke) < 1e-6


def test_truncated_fractional_infcappa(h1):
    K = kernel_from_spec(h1, {"type": "truncated_fractional", "alpha": 0.5, "norm": "koranyi"})
    assert infcappa_check(K) >= 1.0 - 1e-9


def test_kernel_spec_errors(r1):
    with pytest.raises(ValueError):
        kernel_from_spec(r1, {"type": "fractional", "alpha": 1.5})
    with pytest.raises(ValueError):
        kernel_from_spec(r1, {"type": "custom_profile", "profile": "nope"})
    with pytest.raises(ValueError):
        kernel_from_spec(r1, {"type": "weird"})


def test_shell_mass_matches_numeric(r1, euclid1):
    K = fractional_kernel(r1, euclid1, 0.5)
    a, b = 0.2, 1.7
    exact = K.profile.mass(a, b)
    grid = np.linspace(a, b, 20001)
    num = np.trapezoid(K.profile.value(grid), grid)  # Q = 1: mass = int Ktilde
    assert np.isclose(exact, num, rtol=1e-6)


def test_exp_profile_numeric_mass():
    prof = ExpDecayProfile(Q=1)
    val = prof.mass(0.5, 2.0)
    assert np.isclose(val, np.exp(-0.5) - np.exp(-2.0), rtol=1e-8)


def test_bump_profile_mass_closed_form():
    prof = CompactBumpProfile(Q=1)
    grid = np.linspace(0.1, 0.9, 10001)
    num = np.trapezoid(prof.value(grid), grid)
    assert np.isclose(prof.mass(0.1, 0.9), num, rtol=1e-7)
