"""Experiment configuration: one JSON document, fully defaulted, hashable.

CLI flags override top-level keys; every default lands in the resolved
document so the manifest never hides a silent parameter. The hash is taken
over the canonical (sorted-key) serialization, so key order never matters.
"""

from __future__ import annotations

import copy
import hashlib
import json

import numpy as np

from .groups import group_from_spec
from .kernels import kernel_from_spec
from .norms import norm_from_spec
from .regions import region_from_spec
from .sampling import McConfig

EXPERIMENT_KINDS = (
    "perimeter",
    "coarea",
    "calibrate",
    "minimality",
    "gamma",
    "davila",
    "checks",
)

_MC_DEFAULTS = {
    "samples": 200_000,
    "seed": 0,
    "shards": 32,
    "shells_per_decade": 8,
    "r_min": 1e-8,
    "r_out": 1e4,
    "tail_policy": "analytic",
    "interface_bias": 0.5,
    "collar_gamma": None,
    "threads": 1,
}

_KIND_DEFAULTS = {
    "perimeter": {
        "region": {"type": "halfspace", "nu": None},
        "window_radius": 1.0,
    },
    "coarea": {"field": "two_level", "window_radius": 1.0},
    "calibrate": {
        "nu": None,
        "eps_grid": [0.5, 0.35, 0.25, 0.18, 0.12, 0.09, 0.06, 0.04],
        "pairs": 100_000,
        "points": 12,
    },
    "minimality": {"nu": None, "competitors": 50, "competitor_seed": 11},
    "gamma": {"nu": None, "eps_grid": [1.0, 0.7, 0.5, 0.35, 0.25]},
    "davila": {
        "alpha_grid": [0.5, 0.8, 0.9, 0.95, 0.99],
        "lengths": [1.0, 2.0],
    },
    "checks": {"alphas": [0.3, 0.5, 0.8], "samples_override": None},
}


class ConfigError(ValueError):
    pass


def _default_group_for(kind: str) -> str:
    return "r1" if kind in ("davila", "checks") else "heisenberg"


def resolve_config(raw: dict) -> dict:
    """Fill every default; raise ConfigError naming the offending field."""
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    cfg = copy.deepcopy(raw)
    kind = cfg.get("experiment")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(
            f"experiment: expected one of {EXPERIMENT_KINDS}, got {kind!r}"
        )
    cfg.setdefault("group", _default_group_for(kind))
    cfg.setdefault("norm", None)
    cfg.setdefault(
        "kernel", {"type": "fractional", "alpha": 0.5, "norm": cfg.get("norm")}
    )
    alpha = cfg["kernel"].get("alpha")
    if cfg["kernel"].get("type", "fractional") in (
        "fractional",
        "truncated_fractional",
    ) and not (alpha is not None and 0.0 < float(alpha) < 1.0):
        raise ConfigError(f"kernel.alpha: alpha outside (0,1): {alpha}")
    mc = dict(_MC_DEFAULTS)
    mc.update(cfg.get("mc", {}))
    unknown = set(mc) - set(_MC_DEFAULTS)
    if unknown:
        raise ConfigError(f"mc: unknown fields {sorted(unknown)}")
    cfg["mc"] = mc
    params = dict(_KIND_DEFAULTS[kind])
    params.update(cfg.get("params", {}))
    cfg["params"] = params
    cfg.setdefault("out", f"results/{kind}")
    return cfg


def config_hash(cfg: dict) -> str:
    semantic = {k: v for k, v in cfg.items() if k != "out"}
    blob = json.dumps(semantic, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


class ResolvedExperiment:
    """Concrete objects built from a resolved configuration document."""

    def __init__(self, cfg: dict):
        self.doc = cfg
        self.kind = cfg["experiment"]
        try:
            self.group = group_from_spec(cfg["group"])
        except Exception as exc:
            raise ConfigError(f"group: {exc}") from exc
        try:
            self.norm = norm_from_spec(self.group, cfg.get("norm"))
        except Exception as exc:
            raise ConfigError(f"norm: {exc}") from exc
        try:
            kspec = dict(cfg["kernel"])
            kspec.setdefault("norm", None)
            if kspec["norm"] is None:
                kspec["norm"] = self.norm
            self.kernel = kernel_from_spec(self.group, kspec)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"kernel: {exc}") from exc
        try:
            self.mc = McConfig(**cfg["mc"])
        except Exception as exc:
            raise ConfigError(f"mc: {exc}") from exc
        self.params = cfg["params"]
        self.hash = config_hash(cfg)

    def region(self, spec):
        try:
            return region_from_spec(self.group, spec, self.norm)
        except Exception as exc:
            raise ConfigError(f"region: {exc}") from exc

    def default_nu(self) -> np.ndarray:
        nu = self.params.get("nu")
        if nu is None:
            out = np.zeros(self.group.m1)
            out[0] = 1.0
            return out
        out = np.asarray(nu, dtype=float)
        if out.shape != (self.group.m1,):
            raise ConfigError(f"params.nu: expected {self.group.m1} components")
        return out


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config: file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})")
    return resolve_config(raw)
