import numpy as np
import pytest

from nlperim.regions import (
    Box,
    ClampAffineField,
    Complement,
    HalfSpace,
    IndicatorField,
    Intersection,
    NestedLevelField,
    NormBall,
    Union,
    VoxelRegion,
    interval,
    load_voxel_mask,
    region_from_spec,
    save_voxel_mask,
)


def test_halfspace_membership(h1):
    H = HalfSpace(h1, np.array([1.0, 0.0]))
    assert H.contains(np.array([[1.0, -5.0, 7.0]]))[0]
    assert not H.contains(np.array([[-1.0, 0.0, 0.0]]))[0]


def test_halfspace_dilation_invariance(h1, rng):
    H = HalfSpace(h1, np.array([1.0, 0.0]))
    pts = rng.normal(size=(256, 3))
    for lam in (0.5, 3.0):
        assert np.array_equal(H.contains(h1.dilate(lam, pts)), H.contains(pts))


def test_halfspace_inversion_maps_to_complement(h1, rng):
    H = HalfSpace(h1, np.array([1.0, 0.0]))
    pts = rng.normal(size=(256, 3))
    strict = pts[:, 0] > 0
    inside = pts[strict]
    assert not H.contains(h1.inverse(inside)).any()


def test_halfspace_translate_exact(h1, rng):
    H = HalfSpace(h1, np.array([1.0, 0.0]))
    p = rng.normal(size=3)
    T = H.translate(p)
    pts = rng.normal(size=(512, 3))
    expected = H.contains(h1.product(-p, pts))
    assert np.array_equal(T.contains(pts), expected)


def test_ball_translate_and_dilate(h1, koranyi, rng):
    B = NormBall(h1, koranyi, radius=0.8)
    p = rng.normal(size=3) * 0.3
    T = B.translate(p)
    pts = rng.normal(size=(512, 3))
    assert np.array_equal(T.contains(pts), B.contains(h1.product(-p, pts)))
    D = B.dilate(2.0)
    assert np.array_equal(D.contains(pts), B.contains(h1.dilate(0.5, pts)))


def test_bounding_boxes_cover(h1, koranyi, rng):
    B = NormBall(h1, koranyi, center=np.array([0.4, -0.2, 0.1]), radius=0.7)
    lo, hi = B.bounding_box()
    # rejection-sample points of the ball and check the box holds them
    pts = rng.uniform(lo - 1.0, hi + 1.0, size=(20000, 3))
    inside = pts[B.contains(pts)]
    assert np.all(inside >= lo - 1e-12) and np.all(inside <= hi + 1e-12)


def test_boolean_de_morgan(h1, koranyi, rng):
    A = HalfSpace(h1, np.array([1.0, 0.0]))
    B = NormBall(h1, koranyi, radius=1.0)
    pts = rng.normal(size=(512, 3))
    lhs = Complement(Union((A, B))).contains(pts)
    rhs = Intersection((Complement(A), Complement(B))).contains(pts)
    assert np.array_equal(lhs, rhs)


def test_level_sets(h1, koranyi):
    A = HalfSpace(h1, np.array([1.0, 0.0]))
    u = IndicatorField(A)
    pts = np.array([[0.5, 0.0, 0.0], [-0.5, 0.0, 0.0]])
    assert np.array_equal(u.superlevel(0.5).contains(pts), A.contains(pts))
    assert not u.superlevel(1.0).contains(pts).any()
    B = Intersection((A, NormBall(h1, koranyi, radius=0.5)))
    two = NestedLevelField([A, B], [0.5, 1.0])
    assert two.superlevel(0.25) is A
    assert two.superlevel(0.75) is B
    vals = two.eval(np.array([[0.2, 0.0, 0.0], [5.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]))
    assert np.allclose(vals, [1.0, 0.5, 0.0])


def test_level_sets_monotone(h1, koranyi, rng):
    A = HalfSpace(h1, np.array([1.0, 0.0]))
    B = Intersection((A, NormBall(h1, koranyi, radius=0.5)))
    u = NestedLevelField([A, B], [0.4, 1.0])
    pts = rng.normal(size=(256, 3))
    prev = u.superlevel(0.0).contains(pts)
    for t in (0.2, 0.5, 0.9):
        cur = u.superlevel(t).contains(pts)
        assert not np.any(cur & ~prev)  # decreasing in t
        prev = cur


def test_clamp_field(r1):
    u = ClampAffineField(r1, np.array([1.0]), scale=1.0, offset=0.0)
    x = np.array([[-0.5], [0.25], [2.0]])
    assert np.allclose(u.eval(x), [0.0, 0.25, 1.0])
    sl = u.superlevel(0.25)
    assert sl.contains(np.array([[0.3]]))[0]
    assert not sl.contains(np.array([[0.2]]))[0]


def test_voxel_roundtrip(tmp_path, h1, rng):
    mask = rng.random((6, 6, 6)) < 0.4
    lo, hi = np.array([-1.0, -1.0, -0.5]), np.array([1.0, 1.0, 0.5])
    vox = VoxelRegion(h1, lo, hi, mask)
    path = str(tmp_path / "mask")
    save_voxel_mask(path, vox)
    back = load_voxel_mask(path, h1)
    assert np.array_equal(back.mask, mask)
    assert np.allclose(back.lo, lo) and np.allclose(back.hi, hi)
    pts = rng.uniform(lo, hi, size=(512, 3))
    assert np.array_equal(back.contains(pts), vox.contains(pts))
    assert np.isclose(vox.volume, mask.sum() * np.prod((hi - lo) / 6.0))


def test_voxel_header_schema(tmp_path, h1, rng):
    import json

    mask = rng.random((4, 4, 4)) < 0.5
    vox = VoxelRegion(h1, -np.ones(3), np.ones(3), mask)
    path = str(tmp_path / "m2")
    save_voxel_mask(path, vox)
    header = json.loads(open(path + ".json").read())
    assert header["dims"] == [4, 4, 4]
    assert header["order"] == "row-major"
    assert "lo" in header["box"] and "hi" in header["box"]


def test_region_from_spec_tree(h1, rng):
    spec = {
        "type": "intersection",
        "of": [
            {"type": "halfspace", "nu": [1.0, 0.0]},
            {"type": "complement", "of": {"type": "ball", "radius": 0.5, "norm": "koranyi"}},
        ],
    }
    R = region_from_spec(h1, spec)
    pts = rng.normal(size=(128, 3))
    from nlperim.norms import HomogeneousNorm

    kor = HomogeneousNorm(group=h1, kind="koranyi")
    expected = (pts[:, 0] >= 0) & ~(kor(pts) < 0.5)
    assert np.array_equal(R.contains(pts), expected)
    with pytest.raises(ValueError):
        region_from_spec(h1, {"type": "nope"})


def test_interval_and_box(r1):
    E = interval(r1, 0.0, 1.0)
    assert E.contains(np.array([[0.5]]))[0]
    assert not E.contains(np.array([[1.5]]))[0]
    with pytest.raises(ValueError):
        Box(r1, np.array([1.0]), np.array([0.0]))


def test_zero_normal_rejected(h1):
    with pytest.raises(ValueError):
        HalfSpace(h1, np.array([0.0, 0.0]))
