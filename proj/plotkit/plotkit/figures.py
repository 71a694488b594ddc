"""Figure builders. Each returns a matplotlib Figure; nothing is written here."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .artifacts import Run, lateral_offset  # noqa: E402

FIGURES = ("overhead", "deviation", "profiles", "laptimes")


def overhead(run: Run) -> plt.Figure:
    c = run.centerline
    n = c.left_normal
    left = c.points + c.w_in[:, None] * n
    right = c.points + c.w_out[:, None] * n
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(left[:, 0], left[:, 1], color="k", lw=1.0, label="track edge")
    ax.plot(right[:, 0], right[:, 1], color="k", lw=1.0)
    ax.plot(c.east, c.north, color="0.6", lw=0.8, ls="--", label="centerline")
    f = run.final
    ax.plot(f.east, f.north, color="tab:red", lw=1.5, label=f"iteration {len(run.paths) - 1}")
    ax.set_aspect("equal")
    ax.set_xlabel("East (m)")
    ax.set_ylabel("North (m)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def deviation(run: Run) -> plt.Figure:
    c = run.centerline
    fig, ax = plt.subplots(figsize=(8, 3.5))
    # bounds straight from the centerline CSV, no resampling
    ax.plot(c.s, c.w_in, color="k", lw=1.0, label="w_in")
    ax.plot(c.s, c.w_out, color="k", lw=1.0, ls="--", label="w_out")
    for i, p in enumerate(run.paths[1:], start=1):
        e = lateral_offset(c, p.points)
        s = _station_on(c, p.points)
        last = i == len(run.paths) - 1
        ax.plot(s, e, lw=1.5 if last else 0.7, alpha=1.0 if last else 0.4,
                color="tab:red" if last else "tab:blue", label=f"iteration {i}" if last else None)
    ax.set_xlabel("Distance along centerline s (m)")
    ax.set_ylabel("Lateral deviation e (m)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def profiles(run: Run) -> plt.Figure:
    fig, (ak, au) = plt.subplots(2, 1, sharex=True, figsize=(8, 5))
    last = len(run.paths) - 1
    for i, style in ((0, dict(color="0.5", ls="--")), (last, dict(color="tab:red"))):
        ak.plot(run.paths[i].s, run.paths[i].k, lw=1.0, label=f"iteration {i}", **style)
        au.plot(run.profiles[i].s, run.profiles[i].ux, lw=1.0, label=f"iteration {i}", **style)
    if run.sim_log is not None:
        au.plot(run.sim_log["s_m"], run.sim_log["ux_mps"], lw=0.8, color="tab:green", label="simulated")
    ak.set_ylabel("Curvature K (1/m)")
    au.set_ylabel("Speed Ux (m/s)")
    au.set_xlabel("Distance along path s (m)")
    ak.legend(loc="best", fontsize=8)
    au.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def laptimes(run: Run) -> plt.Figure:
    its = run.records["iterations"]
    idx = np.array([it["index"] for it in its])
    t = np.array([it["lap_time_integrated"] for it in its], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(idx, t, color="tab:blue", width=0.6)
    sim = [it.get("lap_time_simulated") for it in its]
    if all(v is not None for v in sim):
        ax.plot(idx, sim, "o", color="tab:red", label="simulated")
        ax.legend(loc="best", fontsize=8)
    lo = float(np.min(t))
    ax.set_ylim(0.9 * lo, 1.02 * float(np.max(t)))
    ax.set_xticks(idx)
    ax.set_xlabel("Iteration")
    ax.set_ylabel("Lap time (s)")
    fig.tight_layout()
    return fig


def _station_on(reference, points: np.ndarray) -> np.ndarray:
    # arc length of the nearest centerline station; good enough for an x axis
    d = np.hypot(points[:, None, 0] - reference.east[None, :], points[:, None, 1] - reference.north[None, :])
    return reference.s[np.argmin(d, axis=1)]


BUILDERS = {"overhead": overhead, "deviation": deviation, "profiles": profiles, "laptimes": laptimes}
