"""Acceptance suite: one test per criterion, one printed PASS line each.

Tolerances are pinned here, straight from the statements being verified:
1 percent against brute-force oracles where a closed form exists, otherwise
three combined standard errors. Runtimes are asserted where stated.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from nlperim.calibration import (
    AffineFoliation,
    HalfspaceCalibration,
    calibration_identity_check,
    calibration_pv_check,
)
from nlperim.coarea import CompetitorSpec, coarea_check, generate_competitors, minimality_experiment
from nlperim.engine import (
    convolution_bound_check,
    interaction,
    interaction_bound_check,
    mean_curvature,
    mean_curvature_field,
    nonlocal_perimeter,
    rescaled_inner_energy,
    rescaled_interaction_bound,
    rescaled_perimeter,
    translation_bound_check,
)
from nlperim.geometry import euclidean_ball, horizontal_perimeter
from nlperim.groups import group_from_name, heisenberg
from nlperim.kernels import fractional_kernel, infcappa_check, kernel_from_spec
from nlperim.norms import HomogeneousNorm
from nlperim.oracles import (
    convolution_lhs_quad_1d,
    halfline_perimeter_quad,
    interaction_quad_1d,
    ramp_energy_quad,
    rescaled_interaction_quad_1d,
    segment_limit_value_closed,
)
from nlperim.regions import (
    BumpField,
    ClampAffineField,
    HalfSpace,
    IndicatorField,
    Intersection,
    NestedLevelField,
    NormBall,
    interval,
)
from nlperim.sampling import McConfig
from nlperim.scaling import cell_energy_upper, classical_limit_scan, gamma_liminf_check


def _report(criterion: str, passed: bool, detail: str = ""):
    state = "PASS" if passed else "FAIL"
    print(f"[{state}] {criterion}" + (f" :: {detail}" if detail else ""))
    assert passed, f"{criterion}: {detail}"


@pytest.fixture(scope="module")
def r1():
    return group_from_name("r1")


@pytest.fixture(scope="module")
def r2():
    return group_from_name("r2")


@pytest.fixture(scope="module")
def h1():
    return heisenberg()


@pytest.fixture(scope="module")
def euclid1(r1):
    return HomogeneousNorm(group=r1, kind="euclidean")


@pytest.fixture(scope="module")
def euclid2(r2):
    return HomogeneousNorm(group=r2, kind="euclidean")


@pytest.fixture(scope="module")
def koranyi(h1):
    return HomogeneousNorm(group=h1, kind="koranyi")


def test_criterion_1_oracle_agreement(r1, euclid1):
    details = []
    ok = True
    for alpha in (0.3, 0.5, 0.8):
        K = fractional_kernel(r1, euclid1, alpha)
        cfg = McConfig(samples=1_000_000, seed=1001)
        t0 = time.monotonic()
        est_l = interaction(K, interval(r1, 0.0, 1.0), interval(r1, -1.0, 0.0), cfg)
        t_l = time.monotonic() - t0
        oracle_l = interaction_quad_1d(alpha, (0.0, 1.0), (-1.0, 0.0))
        rel_l = abs(est_l.value - oracle_l) / oracle_l
        t0 = time.monotonic()
        est_p = nonlocal_perimeter(
            K, HalfSpace(r1, np.array([1.0])), interval(r1, -1.0, 1.0), cfg.with_seed(1002)
        )
        t_p = time.monotonic() - t0
        oracle_p = halfline_perimeter_quad(alpha)
        rel_p = abs(est_p.value - oracle_p) / oracle_p
        ok = ok and rel_l <= 0.01 and rel_p <= 0.01 and t_l < 30.0 and t_p < 30.0
        details.append(f"a={alpha}: L rel {rel_l:.1e} ({t_l:.1f}s), P rel {rel_p:.1e} ({t_p:.1f}s)")
    _report("criterion 1: 1-D oracle agreement at 1e6 samples", ok, "; ".join(details))


def _two_level(group, norm, window_radius):
    H = HalfSpace(group, _unit_nu(group))
    inner = NormBall(group, norm, radius=0.5 * window_radius)
    return NestedLevelField([H, Intersection((H, inner))], [0.5, 1.0])


def _three_level(group, norm, window_radius):
    H = HalfSpace(group, _unit_nu(group))
    mid = NormBall(group, norm, radius=0.75 * window_radius)
    inner = NormBall(group, norm, radius=0.5 * window_radius)
    return NestedLevelField(
        [H, Intersection((H, mid)), Intersection((H, inner))], [0.4, 0.7, 1.0]
    )


def _unit_nu(group):
    nu = np.zeros(group.m1)
    nu[0] = 1.0
    return nu


def test_criterion_2_coarea(r1, euclid1, h1, koranyi):
    ok = True
    details = []
    K1 = fractional_kernel(r1, euclid1, 0.5)
    W1 = interval(r1, -1.0, 2.0)
    fields_1d = [
        ("two_level", _two_level(r1, euclid1, 1.0), interval(r1, -1.0, 1.0)),
        ("three_level", _three_level(r1, euclid1, 1.0), interval(r1, -1.0, 1.0)),
        ("ramp", ClampAffineField(r1, np.array([1.0]), 1.0, 0.0), W1),
    ]
    for name, u, W in fields_1d:
        t0 = time.monotonic()
        res = coarea_check(K1, u, W, McConfig(samples=80_000, seed=1010))
        dt = time.monotonic() - t0
        ok = ok and res.passed and dt < 120.0
        details.append(f"R1 {name}: |d|={abs(res.lhs.value - res.rhs_value):.3f} ({dt:.0f}s)")
        if name == "ramp":
            oracle = ramp_energy_quad(0.5)
            ok = ok and abs(res.lhs.value - oracle) <= 3 * res.lhs.std_error
    KH = fractional_kernel(h1, koranyi, 0.5)
    BH = NormBall(h1, koranyi, radius=1.0)
    fields_h1 = [
        ("two_level", _two_level(h1, koranyi, 1.0)),
        ("three_level", _three_level(h1, koranyi, 1.0)),
        ("ramp", ClampAffineField(h1, np.array([1.0, 0.0]), 1.0, 0.5)),
    ]
    for name, u in fields_h1:
        t0 = time.monotonic()
        res = coarea_check(KH, u, BH, McConfig(samples=60_000, seed=1011))
        dt = time.monotonic() - t0
        ok = ok and res.passed and dt < 120.0
        details.append(f"H1 {name}: |d|={abs(res.lhs.value - res.rhs_value):.3f} ({dt:.0f}s)")
    _report("criterion 2: coarea identity (R1 oracle-backed, H1 self-consistent)", ok,
            "; ".join(details))


def test_criterion_3_halfspace_minimality(h1, koranyi):
    K = fractional_kernel(h1, koranyi, 0.5)
    H = HalfSpace(h1, np.array([1.0, 0.0]))
    B = NormBall(h1, koranyi, radius=1.0)
    spec = CompetitorSpec(base=H, window=B, seed=11, voxel_resolution=8)
    comps = generate_competitors(spec, 50)
    rep = minimality_experiment(K, H, B, comps, McConfig(samples=40_000, seed=1020))
    ok = rep.all_above and rep.large_positive and rep.large_count > 0
    worst = min(r.gap / max(r.gap_sigma, 1e-300) for r in rep.rows)
    _report(
        "criterion 3: halfspace minimality, 50 competitors",
        ok,
        f"all gaps >= -3 sigma: {rep.all_above}; "
        f"{rep.large_count} large-symdiff competitors positive at 3 sigma: "
        f"{rep.large_positive}; worst z = {worst:.1f}",
    )


def test_criterion_4_calibration_axioms(h1, koranyi):
    K = fractional_kernel(h1, koranyi, 0.5)
    nu = np.array([1.0, 0.0])
    zeta = HalfspaceCalibration(h1, nu)
    B = NormBall(h1, koranyi, radius=1.0)
    ident = calibration_identity_check(
        zeta, IndicatorField(HalfSpace(h1, nu)), B, McConfig(samples=100_000, seed=1030)
    )
    pv = calibration_pv_check(
        K, zeta, B, [0.5, 0.35, 0.25, 0.18, 0.12, 0.09, 0.06, 0.04],
        McConfig(samples=10_000, seed=1031), points=12,
    )
    ok = ident.passed and ident.pairs_tested >= 100_000 and pv["pass"]
    _report(
        "criterion 4: calibration axioms",
        ok,
        f"violations {ident.violations}/{ident.active_pairs} active pairs; "
        f"PV grid consistent with zero: {pv['pass']}",
    )


def test_criterion_5_halfspace_curvature(h1, koranyi, r2, euclid2):
    ok = True
    worst = 0.0
    rng = np.random.default_rng(77)
    for group, norm in ((h1, koranyi), (r2, euclid2)):
        K = fractional_kernel(group, norm, 0.5)
        nu = _unit_nu(group)
        H = HalfSpace(group, nu)
        fol = AffineFoliation(group, tuple(nu))
        cfg = McConfig(samples=10_000, seed=1040)
        for i in range(5):  # boundary points: first coordinate exactly 0
            pt = rng.normal(size=group.n) * 0.4
            pt[0] = 0.0
            est = mean_curvature(K, H, pt, cfg.with_seed(cfg.seed + i))
            ok = ok and abs(est.value) <= 3 * est.std_error + 1e-12 and not est.diverged
        for i in range(5):  # near-boundary: level-set curvature through x
            pt = rng.normal(size=group.n) * 0.4
            pt[0] = rng.normal() * 0.05
            est = mean_curvature_field(K, fol, pt, cfg.with_seed(cfg.seed + 50 + i))
            ok = ok and abs(est.value) <= 3 * est.std_error + 1e-12
            worst = max(worst, abs(est.value))
    _report(
        "criterion 5: halfspace nonlocal curvature vanishes at 20 points",
        ok,
        f"largest |H| = {worst:.2e}",
    )


def test_criterion_6_scaling_laws(h1, koranyi):
    K = fractional_kernel(h1, koranyi, 0.5)
    H = HalfSpace(h1, np.array([1.0, 0.0]))
    B = NormBall(h1, koranyi, radius=1.0)
    base = nonlocal_perimeter(K, H, B, McConfig(samples=80_000, seed=1050))
    ok = True
    details = []
    for lam in (0.5, 2.0, 4.0):
        est = nonlocal_perimeter(
            K, H.dilate(lam), B.dilate(lam), McConfig(samples=80_000, seed=1051)
        )
        pred = lam ** (h1.Q - 0.5) * base.value
        sig = float(np.hypot(est.std_error, lam ** (h1.Q - 0.5) * base.std_error))
        z = (est.value - pred) / sig
        ok = ok and abs(z) <= 3.0
        details.append(f"lam={lam}: z={z:+.2f}")
    for eps in (0.5, 2.0, 4.0):
        est = rescaled_perimeter(K, eps, H, B, McConfig(samples=80_000, seed=1052))
        pred = eps ** (0.5 - 1.0) * base.value
        sig = float(np.hypot(est.std_error, eps ** (-0.5) * base.std_error))
        z = (est.value - pred) / sig
        ok = ok and abs(z) <= 3.0
        details.append(f"eps={eps}: z={z:+.2f}")
    _report("criterion 6: dilation and rescaling laws", ok, "; ".join(details))


def test_criterion_7_sharp_interface_anchor(r1, euclid1):
    cfg = McConfig(samples=400_000, seed=1060)
    grid = [0.5, 0.8, 0.9, 0.95, 0.99]
    constants = []
    ok = True
    worst = 0.0
    for L in (1.0, 2.0):
        scan = classical_limit_scan(r1, euclid1, interval(r1, 0.0, L), 2.0, grid, cfg)
        constants.append(scan.extrapolated_constant)
        for row in scan.rows:
            oracle = segment_limit_value_closed(row.alpha, L)
            rel = abs(row.value - oracle) / oracle
            worst = max(worst, rel)
            ok = ok and rel <= 0.01
    drift = abs(constants[0] - constants[1]) / abs(constants[0])
    ok = ok and drift <= 0.05
    _report(
        "criterion 7: sharp-interface anchor",
        ok,
        f"worst grid-point error {worst:.2e}; constants {constants[0]:.4f} vs "
        f"{constants[1]:.4f} (drift {drift:.1%})",
    )


def test_criterion_8_cell_energy_and_liminf_terms(h1, koranyi):
    K = fractional_kernel(h1, koranyi, 0.5)
    assert infcappa_check(K) > 0
    nu = np.array([1.0, 0.0])
    eps_grid = [1.0, 0.7, 0.5, 0.35, 0.25]
    scan = cell_energy_upper(K, nu, eps_grid, McConfig(samples=30_000, seed=1070))
    positive = all(v > 3 * s for v, s in zip(scan.values, scan.std_errors))
    H = HalfSpace(h1, nu)
    B = NormBall(h1, koranyi, radius=1.0)
    rep = gamma_liminf_check(K, H, B, eps_grid, McConfig(samples=30_000, seed=1071))
    ok = positive and rep.termwise_pass
    _report(
        "criterion 8: cell-energy positivity and term-wise liminf bound",
        ok,
        f"entries positive beyond 3 sigma: {positive}; term-wise: {rep.termwise_pass}",
    )


def test_criterion_9_inequality_suite(r1, euclid1, h1, koranyi):
    ok = True
    details = []

    # translation estimate
    chk = translation_bound_check(r1, BumpField(r1, radius=1.0), np.array([0.1]),
                                  McConfig(samples=100_000, seed=1080))
    ok = ok and chk.passed
    details.append(f"translation R1 {chk.passed}")
    chk = translation_bound_check(h1, BumpField(h1, radius=1.0),
                                  np.array([0.15, 0.0, 0.0]),
                                  McConfig(samples=100_000, seed=1081))
    ok = ok and chk.passed
    details.append(f"translation H1 {chk.passed}")

    # interaction-volume bound
    Kt1 = kernel_from_spec(r1, {"type": "truncated_fractional", "alpha": 0.5,
                                "norm": "euclidean"})
    chk = interaction_bound_check(Kt1, interval(r1, 0.0, 1.0), interval(r1, -1.0, 0.0),
                                  McConfig(samples=60_000, seed=1082),
                                  perimeter_E=2.0, volume_E=1.0)
    ok = ok and chk.passed
    details.append(f"volume bound R1 {chk.passed}")
    KtH = fractional_kernel(h1, koranyi, 0.5)
    Eb = euclidean_ball(h1, radius=0.4)
    Fb = euclidean_ball(h1, center=np.array([1.5, 0.0, 0.0]), radius=0.4)
    chk = interaction_bound_check(KtH, Eb, Fb, McConfig(samples=60_000, seed=1083),
                                  perimeter_E=horizontal_perimeter(h1, Eb),
                                  volume_E=Eb.volume)
    ok = ok and chk.passed
    details.append(f"volume bound H1 {chk.passed}")

    # convolution inequality
    Kind = kernel_from_spec(r1, {"type": "custom_profile", "profile": "indicator_unit",
                                 "norm": "euclidean"})
    chk = convolution_bound_check(Kind, interval(r1, 0.0, 1.0),
                                  McConfig(samples=200_000, seed=1084))
    ok = ok and chk.passed
    ok = ok and abs(chk.detail["sampled_lhs"] - convolution_lhs_quad_1d()) <= \
        4 * chk.detail["lhs_std"]
    details.append(f"convolution R1 {chk.passed}")
    GtrH = kernel_from_spec(h1, {"type": "truncated_fractional", "alpha": 0.5,
                                 "norm": "koranyi"})
    chk = convolution_bound_check(GtrH, NormBall(h1, koranyi, radius=0.6),
                                  McConfig(samples=100_000, seed=1085))
    ok = ok and chk.passed
    details.append(f"convolution H1 {chk.passed}")

    # slow-scale transport bound
    Kb1 = kernel_from_spec(r1, {"type": "compact_bump", "norm": "euclidean"})
    out = rescaled_interaction_bound(Kb1, interval(r1, 0.0, 1.0),
                                     interval(r1, -1.0, 0.0), N_perimeter=1.0,
                                     eps_grid=[1.0, 0.5, 0.25],
                                     cfg=McConfig(samples=60_000, seed=1086))
    ok = ok and out["pass"]
    # cross-check one table entry against the quadrature oracle
    oracle = rescaled_interaction_quad_1d(Kb1.profile, 0.5)
    row = out["rows"][1]
    ok = ok and abs(row["value"] - oracle) <= 3 * row["std_error"] + 1e-6
    details.append(f"transport bound R1 {out['pass']}")
    KbH = kernel_from_spec(h1, {"type": "compact_bump", "norm": "koranyi"})
    N = euclidean_ball(h1, radius=1.0)
    E = euclidean_ball(h1, radius=0.45)
    F = euclidean_ball(h1, center=np.array([2.2, 0.0, 0.0]), radius=0.45)
    outh = rescaled_interaction_bound(KbH, E, F,
                                      N_perimeter=horizontal_perimeter(h1, N),
                                      eps_grid=[1.0, 0.5],
                                      cfg=McConfig(samples=40_000, seed=1087))
    ok = ok and outh["pass"]
    details.append(f"transport bound H1 {outh['pass']}")

    _report("criterion 9: inequality suite (one-sided at 3 sigma)", ok, "; ".join(details))


def test_criterion_10_determinism_and_calibrated_errors(r1, euclid1, tmp_path):
    # byte-identical reruns through the CLI
    cfg_path = tmp_path / "c.json"
    cfg_path.write_text(json.dumps({
        "experiment": "checks",
        "mc": {"samples": 60_000, "seed": 9},
        "params": {"alphas": [0.5]},
    }))
    outs = []
    for name in ("u", "v"):
        res = subprocess.run(
            [sys.executable, "-m", "nlperim.cli", "run", "--config", str(cfg_path),
             "--out", str(tmp_path / name)],
            capture_output=True, text=True,
        )
        assert res.returncode == 0, res.stderr
        outs.append({
            "csv": (tmp_path / name / "results.csv").read_bytes(),
            "summary": (tmp_path / name / "summary.json").read_bytes(),
        })
    identical = outs[0] == outs[1]

    # error-bar calibration: 100 independent seeds, 2-sigma coverage >= 90
    K = fractional_kernel(r1, euclid1, 0.5)
    A, B = interval(r1, 0.0, 1.0), interval(r1, -1.0, 0.0)
    oracle = interaction_quad_1d(0.5, (0.0, 1.0), (-1.0, 0.0))
    covered = 0
    for seed in range(100):
        est = interaction(K, A, B, McConfig(samples=40_000, seed=seed))
        covered += abs(est.value - oracle) <= 2 * est.std_error
    ok = identical and covered >= 90
    _report(
        "criterion 10: determinism and calibrated error bars",
        ok,
        f"byte-identical rerun: {identical}; oracle coverage {covered}/100 at 2 sigma",
    )
