"""Command line: run experiment configs, list kinds, validate documents.

Exit codes: 0 all asserted checks pass, 2 a check failed, 1 configuration
or runtime error. Results are CSV + JSON + manifest (+ rendered figures);
for a fixed (config, seed) the CSV/JSON bytes are identical across reruns.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .calibration import (
    HalfspaceCalibration,
    calibration_identity_check,
    calibration_pv_check,
)
from .config import (
    EXPERIMENT_KINDS,
    ConfigError,
    ResolvedExperiment,
    _KIND_DEFAULTS,
    load_config,
)
from .coarea import CompetitorSpec, coarea_check, generate_competitors, minimality_experiment
from .engine import (
    interaction,
    interaction_bound_check,
    nonlocal_energy,
    nonlocal_perimeter,
)
from .geometry import theta
from .kernels import fractional_kernel, integrability_check
from .oracles import (
    halfline_perimeter_closed,
    interval_interaction_closed,
    segment_limit_value_closed,
)
from .regions import (
    Box,
    Complement,
    HalfSpace,
    IndicatorField,
    NestedLevelField,
    NormBall,
    interval,
)
from .report import (
    RunArtifacts,
    elapsed_since,
    figure_check_margins,
    figure_gap_scatter,
    figure_pair_tables,
    figure_scan,
    write_csv,
    write_json,
    write_manifest,
)
from .sampling import Estimate
from .scaling import cell_energy_upper, classical_limit_scan, gamma_liminf_check

_KIND_HELP = {
    "perimeter": "nonlocal perimeter of a model set in a ball window, both estimator forms",
    "coarea": "level-integral identity for a graded field against the direct energy",
    "calibrate": "halfspace calibration: sign identity and vanishing PV marginals",
    "minimality": "competitor gap table for the halfspace in the unit ball",
    "gamma": "rescaled halfspace energies: cell-energy scan and term-wise liminf bound",
    "davila": "Euclidean sharp-interface anchor: (1-alpha) P_alpha scan with extrapolation",
    "checks": "oracle-backed estimator suite on the line (fast, asserted)",
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nlperim",
        description="Numerical laboratory for nonlocal perimeters on Carnot groups.",
    )
    parser.add_argument("--version", action="version", version=f"nlperim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("--config", required=True, help="path to a JSON config")
    run_p.add_argument("--seed", type=int, default=None, help="override mc.seed")
    run_p.add_argument("--threads", type=int, default=None, help="worker threads")
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--json", action="store_true", help="print the summary as JSON")
    run_p.add_argument(
        "--no-figures", action="store_true", help="skip matplotlib rendering"
    )

    list_p = sub.add_parser("list", help="list experiment kinds")
    list_p.add_argument("--json", action="store_true")

    val_p = sub.add_parser("validate", help="validate a config document")
    val_p.add_argument("--config", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "list":
            return _cmd_list(args)
        if args.command == "validate":
            load_config(args.config)
            print("ok")
            return 0
        return _cmd_run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure, not a check failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _cmd_list(args) -> int:
    if args.json:
        payload = [
            {"kind": k, "description": _KIND_HELP[k], "default_params": _KIND_DEFAULTS[k]}
            for k in EXPERIMENT_KINDS
        ]
        print(json.dumps(payload, sort_keys=True))
    else:
        for k in EXPERIMENT_KINDS:
            print(f"{k:12s} {_KIND_HELP[k]}")
    return 0


def _cmd_run(args) -> int:
    t0 = time.monotonic()
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["mc"]["seed"] = args.seed
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("NLP_DEFAULT_THREADS", cfg["mc"]["threads"]))
    cfg["mc"]["threads"] = threads
    if args.out is not None:
        cfg["out"] = args.out
    exp = ResolvedExperiment(cfg)
    art = RunArtifacts(out_dir=cfg["out"])
    runner = _RUNNERS[exp.kind]
    summary, passed = runner(exp, art, not args.no_figures)
    summary["experiment"] = exp.kind
    summary["config_hash"] = exp.hash
    summary["pass"] = bool(passed)
    write_json(art.path("summary.json"), summary)
    write_manifest(
        art.path("manifest.json"),
        config_hash=exp.hash,
        seed=exp.mc.seed,
        wall_time_s=elapsed_since(t0),
        defaults=exp.doc,
    )
    if args.json:
        print(json.dumps({"pass": bool(passed), "out": cfg["out"], "hash": exp.hash},
                         sort_keys=True))
    else:
        state = "PASS" if passed else "FAIL"
        print(f"[{state}] {exp.kind} -> {cfg['out']} (hash {exp.hash})")
    return 0 if passed else 2


# ---------------------------------------------------------------------------
# runners


def _unit_ball(exp) -> NormBall:
    return NormBall(exp.group, exp.kernel.norm, radius=exp.params.get("window_radius", 1.0))


def _run_perimeter(exp, art, figures):
    region = exp.region(exp.params["region"] if exp.params["region"]["nu"] is not None
                        else {"type": "halfspace", "nu": list(exp.default_nu())})
    window = _unit_ball(exp)
    single = nonlocal_perimeter(exp.kernel, region, window, exp.mc, method="single")
    three = nonlocal_perimeter(exp.kernel, region, window, exp.mc, method="three_term")
    sigma = float(np.hypot(single.std_error, three.std_error))
    agree = abs(single.value - three.value) <= 3.0 * sigma + 1e-12
    rows = [
        ("single_form", single.value, single.std_error, single.tail_correction),
        ("three_term", three.value, three.std_error, three.tail_correction),
    ]
    write_csv(art.path("results.csv"),
              ["method", "value", "std_error", "tail_correction"], rows)
    write_json(art.path("estimates.json"),
               {"single": single, "three_term": three, "agree_3sigma": agree})
    if figures:
        figure_check_margins(
            art.path("fig_perimeter.png"),
            ["single vs three-term"],
            [3.0 * sigma - abs(single.value - three.value)],
            "estimator consistency margin",
        )
    return {"single": single.value, "three_term": three.value,
            "sigma": sigma}, agree


def _coarea_field(exp, window):
    kind = exp.params["field"]
    group = exp.group
    norm = exp.kernel.norm
    nu = exp.default_nu()
    H = HalfSpace(group, nu)
    inner = NormBall(group, norm, radius=0.5 * window.radius)
    if kind == "two_level":
        from .regions import Intersection

        return NestedLevelField([H, Intersection((H, inner))], [0.5, 1.0])
    if kind == "three_level":
        from .regions import Intersection

        mid = NormBall(group, norm, radius=0.75 * window.radius)
        return NestedLevelField(
            [H, Intersection((H, mid)), Intersection((H, inner))], [0.4, 0.7, 1.0]
        )
    if kind == "ramp":
        from .regions import ClampAffineField

        return ClampAffineField(group, nu / np.linalg.norm(nu), scale=1.0, offset=0.5)
    raise ConfigError(f"params.field: unknown field {kind!r}")


def _run_coarea(exp, art, figures):
    window = _unit_ball(exp)
    u = _coarea_field(exp, window)
    res = coarea_check(exp.kernel, u, window, exp.mc)
    rows = [("direct", res.lhs.value, res.lhs.std_error),
            ("level_integral", res.rhs_value, res.rhs_std)]
    write_csv(art.path("results.csv"), ["side", "value", "std_error"], rows)
    if figures:
        figure_check_margins(
            art.path("fig_coarea.png"),
            ["coarea identity"],
            [3.0 * float(np.hypot(res.lhs.std_error, res.rhs_std))
             - abs(res.lhs.value - res.rhs_value)],
            "coarea identity margin",
        )
    return {"lhs": res.lhs.value, "rhs": res.rhs_value,
            "levels": list(res.levels_used)}, res.passed


def _run_calibrate(exp, art, figures):
    from dataclasses import replace as dc_replace

    nu = exp.default_nu()
    zeta = HalfspaceCalibration(exp.group, nu)
    H = HalfSpace(exp.group, nu)
    window = _unit_ball(exp)
    id_cfg = dc_replace(exp.mc, samples=int(exp.params["pairs"]))
    ident = calibration_identity_check(zeta, IndicatorField(H), window, id_cfg)
    pv = calibration_pv_check(
        exp.kernel, zeta, window, exp.params["eps_grid"], exp.mc,
        points=exp.params["points"],
    )
    rows = [(r.eps, r.mean_abs, r.max_z, r.consistent_with_zero) for r in pv["rows"]]
    write_csv(art.path("results.csv"),
              ["eps", "mean_abs_F", "max_z", "consistent_with_zero"], rows)
    if figures:
        figure_scan(
            art.path("fig_pv.png"),
            [r.eps for r in pv["rows"]],
            [r.mean_abs for r in pv["rows"]],
            [0.0 for _ in pv["rows"]],
            "eps", "PV marginal magnitude", reference=0.0,
        )
    passed = ident.passed and pv["pass"]
    return {"identity_violations": ident.violations,
            "identity_pairs": ident.pairs_tested,
            "pv_pass": pv["pass"]}, passed


def _run_minimality(exp, art, figures):
    nu = exp.default_nu()
    H = HalfSpace(exp.group, nu)
    window = _unit_ball(exp)
    spec = CompetitorSpec(base=H, window=window, seed=exp.params["competitor_seed"])
    comps = generate_competitors(spec, exp.params["competitors"])
    report = minimality_experiment(exp.kernel, H, window, comps, exp.mc)
    rows = [
        (r.competitor_id, r.kind, r.J_value, r.J_stderr, r.gap, r.gap_sigma,
         r.symdiff, r.flags)
        for r in report.rows
    ]
    write_csv(
        art.path("results.csv"),
        ["competitor_id", "kind", "J_value", "J_stderr", "gap", "gap_sigma",
         "symdiff", "flags"],
        rows,
    )
    if figures:
        figure_gap_scatter(
            art.path("fig_gaps.png"),
            [r.symdiff for r in report.rows],
            [r.gap for r in report.rows],
            [r.gap_sigma for r in report.rows],
            "halfspace minimality gaps",
        )
    return {
        "reference": report.reference.value,
        "all_above": report.all_above,
        "large_positive": report.large_positive,
        "large_count": report.large_count,
    }, report.all_above


def _run_gamma(exp, art, figures):
    nu = exp.default_nu()
    eps_grid = exp.params["eps_grid"]
    scan = cell_energy_upper(exp.kernel, nu / np.linalg.norm(nu), eps_grid, exp.mc)
    H = HalfSpace(exp.group, nu)
    window = _unit_ball(exp)
    rep = gamma_liminf_check(exp.kernel, H, window, eps_grid, exp.mc.with_seed(exp.mc.seed + 1))
    positive = all(
        v > 3.0 * s for v, s in zip(scan.values, scan.std_errors)
    )
    rows = [
        (e, v, s, f, fs)
        for e, v, s, f, fs in zip(rep.eps, rep.lower_terms, rep.lower_stds,
                                  rep.full_terms, rep.full_stds)
    ]
    write_csv(
        art.path("results.csv"),
        ["epsilon_or_alpha", "half_inner_energy", "stderr", "full_rescaled", "full_stderr"],
        rows,
    )
    write_csv(
        art.path("cell_energy.csv"),
        ["epsilon_or_alpha", "value", "stderr", "extrapolation", "trend"],
        [(e, v, s, scan.extrapolated if scan.extrapolated is not None else "",
          scan.trend) for e, v, s in zip(scan.eps, scan.values, scan.std_errors)],
    )
    if figures:
        figure_pair_tables(
            art.path("fig_gamma.png"),
            rep.eps, rep.lower_terms, rep.lower_stds, rep.full_terms, rep.full_stds,
            "eps", "rescaled energies", "(1/2eps) J1_eps", "eps^-1 P_eps",
        )
    passed = positive and rep.passed
    return {
        "trend": scan.trend,
        "entries_positive": positive,
        "termwise_pass": rep.termwise_pass,
        "theta": theta(exp.kernel.norm, nu),
    }, passed


def _run_davila(exp, art, figures):
    if exp.group.step != 1 or exp.group.n != 1:
        raise ConfigError("group: the davila experiment runs on r1")
    alpha_grid = exp.params["alpha_grid"]
    rows = []
    constants = []
    passed = True
    for length in exp.params["lengths"]:
        E = interval(exp.group, 0.0, float(length))
        scan = classical_limit_scan(
            exp.group, exp.kernel.norm, E, perimeter=2.0, alpha_grid=alpha_grid,
            cfg=exp.mc,
        )
        constants.append(scan.extrapolated_constant)
        for r in scan.rows:
            oracle = segment_limit_value_closed(r.alpha, float(length))
            ok = abs(r.value - oracle) <= 0.01 * oracle
            passed = passed and ok
            rows.append((length, r.alpha, r.value, r.std_error, oracle, ok))
    if len(constants) >= 2:
        rel = abs(constants[0] - constants[1]) / abs(constants[0])
        passed = passed and rel <= 0.05
    write_csv(
        art.path("results.csv"),
        ["length", "epsilon_or_alpha", "value", "stderr", "oracle", "within_1pct"],
        rows,
    )
    if figures:
        sub = [r for r in rows if r[0] == exp.params["lengths"][0]]
        figure_scan(
            art.path("fig_davila.png"),
            [1.0 - r[1] for r in sub], [r[2] for r in sub], [r[3] for r in sub],
            "1 - alpha", "sharp-interface scan", log_x=True,
        )
    return {"constants": constants}, passed


def _run_checks(exp, art, figures):
    from .groups import group_from_name
    from .norms import HomogeneousNorm

    group = group_from_name("r1")
    norm = HomogeneousNorm(group=group, kind="euclidean")
    mc = exp.mc
    if exp.params["samples_override"]:
        mc = exp.mc.with_seed(exp.mc.seed)
    rows = []
    margins = []
    names = []
    passed = True
    for alpha in exp.params["alphas"]:
        kernel = fractional_kernel(group, norm, alpha)
        A, B = interval(group, 0.0, 1.0), interval(group, -1.0, 0.0)
        est = interaction(kernel, A, B, mc)
        oracle = interval_interaction_closed(alpha)
        ok = abs(est.value - oracle) <= 0.01 * oracle
        rows.append((f"interaction_alpha_{alpha}", est.value, oracle, est.std_error, ok))
        names.append(f"L a={alpha}")
        margins.append(0.01 * oracle - abs(est.value - oracle))
        passed = passed and ok
        H = HalfSpace(group, np.array([1.0]))
        W = interval(group, -1.0, 1.0)
        per = nonlocal_perimeter(kernel, H, W, mc)
        oracle_p = halfline_perimeter_closed(alpha)
        ok_p = abs(per.value - oracle_p) <= 0.01 * oracle_p
        rows.append((f"perimeter_alpha_{alpha}", per.value, oracle_p, per.std_error, ok_p))
        names.append(f"P a={alpha}")
        margins.append(0.01 * oracle_p - abs(per.value - oracle_p))
        passed = passed and ok_p
    kernel = fractional_kernel(group, norm, 0.5)
    integ = integrability_check(kernel)
    rows.append(("integrability", integ.value, integ.value, 0.0, integ.converged))
    names.append("integrable")
    margins.append(1.0 if integ.converged else -1.0)
    passed = passed and integ.converged
    write_csv(art.path("results.csv"),
              ["check", "value", "reference", "std_error", "pass"], rows)
    if figures:
        figure_check_margins(art.path("fig_checks.png"), names, margins,
                             "oracle agreement margins")
    return {"checks": len(rows)}, passed


_RUNNERS = {
    "perimeter": _run_perimeter,
    "coarea": _run_coarea,
    "calibrate": _run_calibrate,
    "minimality": _run_minimality,
    "gamma": _run_gamma,
    "davila": _run_davila,
    "checks": _run_checks,
}


def _estimate_json(est: Estimate):
    return est.to_json_dict()


if __name__ == "__main__":
    sys.exit(main())
