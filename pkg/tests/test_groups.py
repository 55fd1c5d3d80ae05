import numpy as np
import pytest

from nlperim.groups import (
    GroupStructureError,
    StratifiedGroup,
    free_step2,
    group_from_spec,
    heisenberg,
)


def test_heisenberg_bch_example(h1):
    out = h1.product(np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))
    assert np.allclose(out, [1.0, 1.0, 0.5])


def test_abelian_product(r2):
    assert np.allclose(r2.product(np.array([1.0, 2.0]), np.array([3.0, 4.0])), [4.0, 6.0])


def test_associativity_free_step2_3(rng):
    G = free_step2(3)
    x, y, z = rng.normal(size=(3, G.n))
    lhs = G.product(G.product(x, y), z)
    rhs = G.product(x, G.product(y, z))
    assert np.abs(lhs - rhs).max() < 1e-12


def test_inverse_examples(h1, rng):
    assert np.allclose(h1.inverse(np.array([1.0, 1.0, 0.5])), [-1.0, -1.0, -0.5])
    assert np.allclose(h1.inverse(h1.identity()), 0.0)
    x = rng.normal(size=(5, 3))
    assert np.abs(h1.product(x, h1.inverse(x))).max() < 1e-14


def test_dilations(h1, rng):
    assert np.allclose(h1.dilate(2.0, np.array([1.0, 1.0, 1.0])), [2.0, 2.0, 4.0])
    x = rng.normal(size=3)
    assert np.allclose(h1.dilate(1.0, x), x)
    assert np.allclose(h1.dilate(2.0, h1.dilate(3.0, x)), h1.dilate(6.0, x))
    with pytest.raises(ValueError):
        h1.dilate(-1.0, x)


def test_dilation_is_homomorphism(h1, rng):
    x, y = rng.normal(size=(2, 3))
    lam = 1.7
    lhs = h1.dilate(lam, h1.product(x, y))
    rhs = h1.product(h1.dilate(lam, x), h1.dilate(lam, y))
    assert np.abs(lhs - rhs).max() < 1e-12


def test_pi1_examples(h1, rng):
    assert np.allclose(h1.pi1(np.array([3.0, 4.0, 9.0])), [3.0, 4.0])
    assert np.allclose(h1.pi1(h1.identity()), 0.0)
    x, y = rng.normal(size=(2, 3))
    # layer one of the product carries no bracket correction
    assert np.allclose(h1.pi1(h1.product(x, y)), h1.pi1(x) + h1.pi1(y))


def test_homogeneous_dimension():
    assert heisenberg().Q == 4
    assert free_step2(3).Q == 9
    assert group_from_spec("r3").Q == 3


def test_jacobi_and_grading_validation():
    with pytest.raises(GroupStructureError):
        # bracket landing in the wrong layer
        StratifiedGroup(name="bad", layer_dims=(2, 1), brackets=((0, 2, 1, 1.0),))
    with pytest.raises(GroupStructureError):
        StratifiedGroup(name="bad2", layer_dims=(3,), brackets=((0, 1, 2, 1.0),))


def test_group_from_spec_dict():
    g = group_from_spec({"layer_dims": [2, 1], "brackets": [(0, 1, 2, 1.0)]})
    assert g.Q == 4
    assert np.allclose(
        g.product(np.array([1.0, 0, 0]), np.array([0.0, 1, 0])), [1, 1, 0.5]
    )
    with pytest.raises(GroupStructureError):
        group_from_spec("no_such_group")


def test_haar_translation_invariance_mc(h1, rng):
    # coordinate volume of tau_p(A) equals that of A for a box A
    p = np.array([0.3, -0.2, 0.1])
    lo, hi = np.array([-0.5, -0.5, -0.5]), np.array([0.5, 0.5, 0.5])
    # sample the translated box via a bounding box and measure its volume
    tlo, thi = h1.translate_box(p, lo, hi)
    n = 400_000
    pts = rng.uniform(tlo, thi, size=(n, 3))
    back = h1.product(-p, pts)
    inside = np.all((back >= lo) & (back <= hi), axis=1)
    vol = inside.mean() * np.prod(thi - tlo)
    sigma = np.prod(thi - tlo) * np.sqrt(inside.mean() * (1 - inside.mean()) / n)
    assert abs(vol - 1.0) < 3 * sigma + 1e-3


def test_volume_scaling_q(h1, rng):
    # volume(delta_lam A) = lam^Q vol(A) for a box, by direct mapping
    lam = 1.5
    lo, hi = np.array([-1.0, -1.0, -1.0]), np.array([1.0, 1.0, 1.0])
    scaled_lo, scaled_hi = lo * lam ** h1.weights, hi * lam ** h1.weights
    vol = np.prod(scaled_hi - scaled_lo)
    assert np.isclose(vol, lam ** h1.Q * np.prod(hi - lo))
