import numpy as np
import pytest

from nlperim.calibration import (
    AffineFoliation,
    Antisymmetrized,
    HalfspaceCalibration,
    PairField,
    PointwisePairField,
    antisymmetrize,
    calibrating_functional,
    calibration_identity_check,
    calibration_pv_check,
    curvature_identity_check,
    foliation_check,
)
from nlperim.engine import nonlocal_perimeter
from nlperim.kernels import fractional_kernel
from nlperim.regions import (
    Complement,
    ConstantField,
    HalfSpace,
    IndicatorField,
    Intersection,
    NormBall,
    Union,
    interval,
)
from nlperim.sampling import McConfig


@pytest.fixture(scope="module")
def kh(h1, koranyi):
    return fractional_kernel(h1, koranyi, 0.5)


@pytest.fixture(scope="module")
def k1(r1, euclid1):
    return fractional_kernel(r1, euclid1, 0.5)


def test_zeta_values(h1):
    nu = np.array([1.0, 0.0])
    zeta = HalfspaceCalibration(h1, nu)
    assert zeta.eval(np.zeros(3), np.array([1.0, 0.0, 0.0])) == 1.0
    # x strictly in H, y strictly out: value -1
    x = np.array([[0.5, 2.0, -1.0]])
    y = np.array([[-0.3, 0.2, 0.4]])
    assert zeta.eval(x, y)[0] == -1.0


def test_zeta_antisymmetry(h1, rng):
    zeta = HalfspaceCalibration(h1, np.array([0.6, -0.8]))
    p = rng.normal(size=(64, 3))
    q = rng.normal(size=(64, 3))
    assert np.allclose(zeta.eval(p, q), -zeta.eval(q, p))


def test_antisymmetrize(h1, rng):
    zeta = HalfspaceCalibration(h1, np.array([1.0, 0.0]))
    assert antisymmetrize(zeta) is zeta  # already antisymmetric

    class Ones(PairField):
        def eval(self, p, q):
            return np.ones(np.asarray(p).shape[:-1])

    hat = antisymmetrize(Ones())
    p, q = rng.normal(size=(2, 16, 3))
    assert np.allclose(hat.eval(p, q), 0.0)

    class FirstOnly(PairField):
        def eval(self, p, q):
            return np.asarray(p)[..., 0]

    f = FirstOnly()
    fh = antisymmetrize(f)
    assert np.allclose(fh.eval(p, q), 0.5 * (p[:, 0] - q[:, 0]))
    # idempotence
    fhh = antisymmetrize(fh)
    assert np.allclose(fhh.eval(p, q), fh.eval(p, q))


def test_identity_check_halfspace(h1, koranyi):
    nu = np.array([1.0, 0.0])
    zeta = HalfspaceCalibration(h1, nu)
    B = NormBall(h1, koranyi, radius=1.0)
    res = calibration_identity_check(zeta, IndicatorField(HalfSpace(h1, nu)), B,
                                     McConfig(samples=100_000, seed=1))
    assert res.passed and res.violations == 0 and res.active_pairs > 10_000


def test_identity_check_reversed(h1, koranyi):
    nu = np.array([1.0, 0.0])
    zeta = HalfspaceCalibration(h1, nu)
    B = NormBall(h1, koranyi, radius=1.0)
    res = calibration_identity_check(zeta, IndicatorField(HalfSpace(h1, -nu)), B,
                                     McConfig(samples=20_000, seed=2))
    assert res.violations == res.active_pairs > 0


def test_identity_check_constant_vacuous(h1, koranyi):
    zeta = HalfspaceCalibration(h1, np.array([1.0, 0.0]))
    B = NormBall(h1, koranyi, radius=1.0)
    res = calibration_identity_check(zeta, ConstantField(h1, 0.4), B,
                                     McConfig(samples=5000, seed=3))
    assert res.passed and res.active_pairs == 0


def test_pv_check_halfspace(h1, koranyi, kh):
    zeta = HalfspaceCalibration(h1, np.array([1.0, 0.0]))
    B = NormBall(h1, koranyi, radius=1.0)
    out = calibration_pv_check(kh, zeta, B,
                               [0.5, 0.35, 0.25, 0.18, 0.12, 0.09, 0.06, 0.04],
                               McConfig(samples=10_000, seed=4), points=8)
    assert out["pass"]
    assert all(r.mean_abs < 1e-10 for r in out["rows"])  # exact cancellation


def test_pv_check_detects_noncalibration(r1, k1):
    ctrl = PointwisePairField(HalfSpace(r1, np.array([1.0])))
    out = calibration_pv_check(k1, ctrl, interval(r1, -1.0, 1.0), [0.5, 0.25],
                               McConfig(samples=20_000, seed=5), points=6)
    assert not out["pass"]


def test_pv_control_oracle(r1, k1):
    # F_eps(p) for zeta(x,y)=sign(y) against the closed form
    from nlperim.oracles import pv_marginal_closed_1d, pv_marginal_quad_1d
    from nlperim.rays import RayBundle
    from nlperim.engine import _interval_grid as grid, _masses

    ctrl = PointwisePairField(HalfSpace(r1, np.array([1.0])))
    p = np.array([0.37])
    eps = 0.25
    rngs = np.random.default_rng(0)
    om = k1.norm.sample_cone(rngs, 4000)
    x = np.broadcast_to(p, (4000, 1)).copy()
    acc = np.zeros(4000)
    for sgn in (1.0, -1.0):
        bundle = RayBundle(r1, x, sgn * om)
        bp = ctrl.ray_breakpoints(bundle, np.inf)
        lo, hi, mids, _ = grid(bp)
        diff = ctrl.difference_at(p, bundle.point_at(mids))
        masses = np.where(diff != 0.0, _masses(k1, np.maximum(lo, eps), hi), 0.0)
        acc += 0.5 * np.sum(np.where(hi > eps, masses * diff, 0.0), axis=1)
    est = acc.mean() * k1.polar_constant
    oracle = pv_marginal_closed_1d(0.5, 0.37, 0.25)
    assert np.isclose(est, oracle, rtol=1e-10)
    assert np.isclose(pv_marginal_quad_1d(0.5, 0.37, 0.25), oracle, rtol=1e-6)


def test_foliation_checks(h1, koranyi, kh, r1, k1):
    nu = np.array([1.0, 0.0])
    H = HalfSpace(h1, nu)
    B = NormBall(h1, koranyi, radius=1.0)
    fol = AffineFoliation(h1, tuple(nu))
    rep = foliation_check(kh, fol, H, B, McConfig(samples=20_000, seed=6), points=5)
    assert rep.passed
    # flipped foliation fails the level-set match
    bad = foliation_check(kh, fol.negated(), H, B, McConfig(samples=20_000, seed=7), points=3)
    assert not bad.level_set_matches
    # R^1 case
    rep1 = foliation_check(k1, AffineFoliation(r1, (1.0,)), HalfSpace(r1, np.array([1.0])),
                           interval(r1, -1.0, 1.0), McConfig(samples=20_000, seed=8), points=5)
    assert rep1.passed


def test_calibrating_functional_equals_perimeter(h1, koranyi, kh):
    nu = np.array([1.0, 0.0])
    H = HalfSpace(h1, nu)
    B = NormBall(h1, koranyi, radius=1.0)
    fol = AffineFoliation(h1, tuple(nu))
    c = calibrating_functional(kh, fol, H, B, H, McConfig(samples=100_000, seed=9))
    p = nonlocal_perimeter(kh, H, B, McConfig(samples=100_000, seed=10))
    assert abs(c.value - p.value) <= 3 * np.hypot(c.std_error, p.std_error)


def test_calibrating_functional_sign_flip(r1, k1):
    E = HalfSpace(r1, np.array([1.0]))
    W = interval(r1, -1.0, 1.0)
    fol = AffineFoliation(r1, (1.0,))
    cfg = McConfig(samples=40_000, seed=11)
    c = calibrating_functional(k1, fol, E, W, E, cfg)
    cneg = calibrating_functional(k1, fol.negated(), E, W, E, cfg, check_datum=False)
    assert np.isclose(cneg.value, -c.value, rtol=1e-12)


def test_calibrating_functional_outer_datum_guard(r1, k1):
    E = HalfSpace(r1, np.array([1.0]))
    W = interval(r1, -1.0, 1.0)
    fol = AffineFoliation(r1, (1.0,))
    bad_F = HalfSpace(r1, np.array([1.0]), 1.5)  # differs outside the window
    with pytest.raises(ValueError):
        calibrating_functional(k1, fol, E, W, bad_F, McConfig(samples=2000, seed=12))


def test_curvature_identity_notch(r1, k1):
    E = HalfSpace(r1, np.array([1.0]))
    W = interval(r1, -1.0, 1.0)
    notch = Intersection((E, Complement(interval(r1, 0.2, 0.4))))
    F = Union((Intersection((notch, W)), Intersection((E, Complement(W)))))
    out = curvature_identity_check(k1, AffineFoliation(r1, (1.0,)), E, W, F,
                                   McConfig(samples=100_000, seed=13))
    assert out["pass"]
    # the halfspace foliation has vanishing curvature: first term near zero
    assert abs(out["curvature_term"]) < 0.05 * abs(out["rhs"]) + 0.05


def test_functional_invariance_across_competitors(r1, k1):
    # vanishing curvature: C is the same for every admissible competitor
    E = HalfSpace(r1, np.array([1.0]))
    W = interval(r1, -1.0, 1.0)
    fol = AffineFoliation(r1, (1.0,))
    cfg = McConfig(samples=60_000, seed=14)
    comps = []
    for delta in (0.0, 0.3, -0.5):
        F = Union((Intersection((HalfSpace(r1, np.array([1.0]), delta), W)),
                   Intersection((E, Complement(W)))))
        comps.append(calibrating_functional(k1, fol, E, W, F, cfg))
    for a in comps[1:]:
        assert abs(a.value - comps[0].value) <= 3 * np.hypot(a.std_error, comps[0].std_error)
