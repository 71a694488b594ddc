"""Readers for the run directory written by `racing optimize`."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TRACK_COLUMNS = ["s_m", "k_1pm", "w_in_m", "w_out_m", "east_m", "north_m", "psi_r_rad"]
PROFILE_COLUMNS = ["s_m", "ux_mps"]
SIM_COLUMNS = ["t_s", "s_m", "e_m", "dpsi_rad", "ux_mps", "delta_rad", "fyf_n", "fyr_n", "fx_n"]


class ArtifactError(Exception):
    """A run artifact is missing or does not parse. The message names the file."""


@dataclass
class Track:
    s: np.ndarray
    k: np.ndarray
    w_in: np.ndarray
    w_out: np.ndarray
    east: np.ndarray
    north: np.ndarray
    psi: np.ndarray

    @property
    def left_normal(self) -> np.ndarray:
        # heading 0 is north, left of north is west
        return np.stack([-np.cos(self.psi), -np.sin(self.psi)], axis=1)

    @property
    def points(self) -> np.ndarray:
        return np.stack([self.east, self.north], axis=1)


@dataclass
class Profile:
    s: np.ndarray
    ux: np.ndarray


@dataclass
class Run:
    directory: Path
    paths: list[Track]
    profiles: list[Profile]
    records: dict
    sim_log: dict[str, np.ndarray] | None = None
    files: list[Path] = field(default_factory=list)

    @property
    def centerline(self) -> Track:
        return self.paths[0]

    @property
    def final(self) -> Track:
        return self.paths[-1]


def read_table(file: Path, columns: list[str]) -> dict[str, np.ndarray]:
    """Header-checked numeric CSV, same rules as the C++ reader."""
    if not file.is_file():
        raise ArtifactError(f"{file}: missing")
    lines = [ln.strip() for ln in file.read_text().splitlines()]
    lines = [(i + 1, ln) for i, ln in enumerate(lines) if ln]
    if not lines:
        raise ArtifactError(f"{file}: empty")
    header = [c.strip() for c in lines[0][1].split(",")]
    if header != columns:
        raise ArtifactError(f"{file}: header must be '{','.join(columns)}'")
    rows = []
    for line_no, ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != len(columns):
            raise ArtifactError(f"{file}:{line_no}: expected {len(columns)} fields, got {len(cells)}")
        try:
            row = [float(c) for c in cells]
        except ValueError as e:
            raise ArtifactError(f"{file}:{line_no}: {e}") from None
        if not all(np.isfinite(row)):
            raise ArtifactError(f"{file}:{line_no}: non-finite value")
        rows.append(row)
    if len(rows) < 2:
        raise ArtifactError(f"{file}: fewer than two rows")
    data = np.array(rows, dtype=float)
    return {name: data[:, i] for i, name in enumerate(columns)}


def read_track(file: Path) -> Track:
    t = read_table(file, TRACK_COLUMNS)
    return Track(t["s_m"], t["k_1pm"], t["w_in_m"], t["w_out_m"], t["east_m"], t["north_m"], t["psi_r_rad"])


def read_profile(file: Path) -> Profile:
    t = read_table(file, PROFILE_COLUMNS)
    return Profile(t["s_m"], t["ux_mps"])


def _numbered(directory: Path, stem: str) -> list[Path]:
    found = {}
    for f in directory.glob(f"{stem}_*.csv"):
        m = re.fullmatch(rf"{stem}_(\d+)\.csv", f.name)
        if m:
            found[int(m.group(1))] = f
    for i in range(max(found, default=-1) + 1):
        if i not in found:
            raise ArtifactError(f"{directory / f'{stem}_{i}.csv'}: missing")
    return [found[i] for i in range(len(found))]


def load_run(directory: Path | str) -> Run:
    directory = Path(directory)
    if not directory.is_dir():
        raise ArtifactError(f"{directory}: not a directory")
    path_files = _numbered(directory, "path")
    speed_files = _numbered(directory, "speed")
    if not path_files:
        raise ArtifactError(f"{directory / 'path_0.csv'}: missing")
    if len(speed_files) != len(path_files):
        raise ArtifactError(f"{directory / f'speed_{len(speed_files)}.csv'}: missing")

    records_file = directory / "records.json"
    if not records_file.is_file():
        raise ArtifactError(f"{records_file}: missing")
    try:
        records = json.loads(records_file.read_text())
        iterations = records["iterations"]
        for it in iterations:
            float(it["lap_time_integrated"])
    except (ValueError, KeyError, TypeError) as e:
        raise ArtifactError(f"{records_file}: {e}") from None
    if len(iterations) != len(path_files):
        raise ArtifactError(f"{records_file}: {len(iterations)} iterations but {len(path_files)} path files")

    run = Run(directory, [read_track(f) for f in path_files], [read_profile(f) for f in speed_files], records)
    run.files = [*path_files, *speed_files, records_file]
    sim_file = directory / "sim_log.csv"
    if sim_file.exists():
        run.sim_log = read_table(sim_file, SIM_COLUMNS)
        run.files.append(sim_file)
    return run


def lateral_offset(reference: Track, points: np.ndarray) -> np.ndarray:
    """Signed distance of each point from the reference polyline, left positive."""
    a = reference.points[:-1]
    d = reference.points[1:] - a
    length2 = np.einsum("ij,ij->i", d, d)
    out = np.empty(len(points))
    for i, p in enumerate(points):
        t = np.clip(np.einsum("ij,ij->i", p - a, d) / length2, 0.0, 1.0)
        foot = a + t[:, None] * d
        dist = np.hypot(*(p - foot).T)
        j = int(np.argmin(dist))
        cross = d[j, 0] * (p[1] - a[j, 1]) - d[j, 1] * (p[0] - a[j, 0])
        out[i] = np.copysign(dist[j], cross)
    return out
