"""Result files: delimited tables, JSON summaries, manifests, figures.

The CSV contract is bit-exact for a fixed (config, seed): '.' decimal
separator, LF line endings, a header row, shortest round-trip float
formatting. Figures are rendered from the same rows; the manifest carries
wall time and is the only file allowed to differ between identical reruns.
"""

from __future__ import annotations

import json
import os
import platform
import time
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import __version__


def _fmt(x) -> str:
    if isinstance(x, float):
        if x != x:
            return "nan"
        return repr(x)
    if isinstance(x, (np.floating,)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    if isinstance(x, bool):
        return "true" if x else "false"
    return str(x)


def write_csv(path: str, header, rows):
    """Rows are sequences aligned with header; bytes are deterministic."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    payload = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(payload)
    return path


def write_json(path: str, payload: dict):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_plain(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "to_json_dict"):
        return _plain(obj.to_json_dict())
    return obj


def write_manifest(path: str, config_hash: str, seed: int, wall_time_s: float,
                   defaults: dict, notes: dict | None = None):
    payload = {
        "config_hash": config_hash,
        "seed": seed,
        "wall_time_s": wall_time_s,
        "versions": {
            "package": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "defaults_applied": defaults,
        "chart": {
            "coordinates": "exponential, first kind (log = identity, inverse = negation)",
            "koranyi_constant": 16.0,
            "theta_norm": "same norm ball as the kernel",
        },
    }
    if notes:
        payload["notes"] = notes
    return write_json(path, payload)


@dataclass
class RunArtifacts:
    out_dir: str
    files: list = field(default_factory=list)

    def path(self, name: str) -> str:
        os.makedirs(self.out_dir, exist_ok=True)
        p = os.path.join(self.out_dir, name)
        self.files.append(p)
        return p


# ---------------------------------------------------------------------------
# figures


def _new_axes(title, xlabel, ylabel):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130, metadata={"Software": "nlperim"})
    plt.close(fig)
    return path


def figure_scan(path, xs, values, stds, xlabel, title, reference=None, log_x=True):
    fig, ax = _new_axes(title, xlabel, "value")
    ax.errorbar(xs, values, yerr=np.asarray(stds) * 3.0, fmt="o-", capsize=3,
                label="estimate (3 sigma bars)")
    if reference is not None:
        ax.axhline(reference, color="crimson", ls="--", label="reference")
    if log_x:
        ax.set_xscale("log")
    ax.legend()
    return _save(fig, path)


def figure_gap_scatter(path, symdiffs, gaps, gap_sigmas, title):
    fig, ax = _new_axes(title, "symmetric difference volume", "energy gap")
    ax.errorbar(symdiffs, gaps, yerr=3.0 * np.asarray(gap_sigmas), fmt="o",
                capsize=2, alpha=0.8)
    ax.axhline(0.0, color="black", lw=0.8)
    return _save(fig, path)


def figure_check_margins(path, names, margins, title):
    fig, ax = _new_axes(title, "margin (rhs + slack - lhs)", "")
    ypos = np.arange(len(names))
    colors = ["seagreen" if m >= 0 else "crimson" for m in margins]
    ax.barh(ypos, margins, color=colors)
    ax.set_yticks(ypos, names)
    ax.axvline(0.0, color="black", lw=0.8)
    return _save(fig, path)


def figure_pair_tables(path, xs, lower, lower_std, upper, upper_std, xlabel, title,
                       lower_label, upper_label):
    fig, ax = _new_axes(title, xlabel, "value")
    ax.errorbar(xs, lower, yerr=3.0 * np.asarray(lower_std), fmt="s-", capsize=3,
                label=lower_label)
    ax.errorbar(xs, upper, yerr=3.0 * np.asarray(upper_std), fmt="o-", capsize=3,
                label=upper_label)
    ax.set_xscale("log")
    ax.legend()
    return _save(fig, path)


def elapsed_since(t0: float) -> float:
    return round(time.monotonic() - t0, 3)
