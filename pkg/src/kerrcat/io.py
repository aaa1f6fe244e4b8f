"""Versioned file formats: CSV tables, state JSON, run manifests, heatmaps.

Every format carries an explicit version tag (a leading `# format=...`
comment for CSV, a "format_version" field for JSON) so files identify
themselves. Floats are serialized with shortest round-trip repr, which
keeps identical pipelines byte-identical and reads back to full
precision.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__ as _tool_version
from .analysis import PhaseGrid, WignerMap
from .errors import ConfigError
from .fock import QuantumState
from .planner import ControlPath, PathPoint, Schedule

PATH_FORMAT = "kerrcat.path.v1"
SCHEDULE_FORMAT = "kerrcat.schedule.v1"
TRAJECTORY_FORMAT = "kerrcat.trajectory.v1"
WIGNER_FORMAT = "kerrcat.wigner.v1"
COMPARISON_FORMAT = "kerrcat.comparison.v1"
SWEEP_FORMAT = "kerrcat.sweep.v1"
STATE_FORMAT = "kerrcat.state.v1"
MANIFEST_FORMAT = "kerrcat.manifest.v1"


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_table(
    path: Path,
    fmt: str,
    header: Sequence[str],
    columns: Sequence[np.ndarray],
    extra_comments: Mapping[str, str] | None = None,
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# format={fmt}\n")
        for key, val in (extra_comments or {}).items():
            fh.write(f"# {key}={val}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([_fmt(v) for v in row])


def _read_table(path: Path, fmt: str, header: Sequence[str]):
    path = Path(path)
    comments: dict[str, str] = {}
    with path.open(newline="") as fh:
        pos = fh.tell()
        line = fh.readline()
        while line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            comments[key.strip()] = val.strip()
            pos = fh.tell()
            line = fh.readline()
        fh.seek(pos)
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if comments.get("format") != fmt:
        raise ConfigError(
            f"{path} declares format {comments.get('format')!r}, expected {fmt!r}"
        )
    if not rows or rows[0] != list(header):
        raise ConfigError(f"{path} header {rows[0] if rows else None} != {list(header)}")
    data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    if data.size == 0:
        data = data.reshape(0, len(header))
    return data, comments


def write_path_csv(path: Path, control_path: ControlPath) -> None:
    s = control_path.arclengths()
    _write_table(
        path,
        PATH_FORMAT,
        ("s", "delta", "beta", "penalty", "theta"),
        (s, control_path.deltas, control_path.betas, control_path.penalties, control_path.thetas),
        {"ds": _fmt(control_path.ds), "total_penalty": _fmt(control_path.total_penalty)},
    )


def read_path_csv(path: Path) -> ControlPath:
    data, comments = _read_table(path, PATH_FORMAT, ("s", "delta", "beta", "penalty", "theta"))
    points = tuple(
        PathPoint(delta=row[1], beta=row[2], penalty=row[3], theta=row[4]) for row in data
    )
    return ControlPath(
        points=points,
        ds=float(comments.get("ds", "nan")),
        total_penalty=float(comments.get("total_penalty", "nan")),
    )


def write_schedule_csv(path: Path, schedule: Schedule) -> None:
    _write_table(
        path,
        SCHEDULE_FORMAT,
        ("t", "delta", "beta"),
        (schedule.times, schedule.deltas, schedule.betas),
        {"source": schedule.source},
    )


def read_schedule_csv(path: Path) -> Schedule:
    data, comments = _read_table(path, SCHEDULE_FORMAT, ("t", "delta", "beta"))
    return Schedule(
        times=data[:, 0],
        deltas=data[:, 1],
        betas=data[:, 2],
        source=comments.get("source", "custom"),
    )


def write_trajectory_csv(path: Path, trajectory) -> None:
    _write_table(
        path,
        TRAJECTORY_FORMAT,
        ("t", "fidelity", "parity", "n_mean", "trace"),
        (
            trajectory.times,
            trajectory.fidelity,
            trajectory.parity,
            trajectory.n_mean,
            trajectory.trace,
        ),
        {"kind": trajectory.kind, "kappa": _fmt(trajectory.kappa), "dt": _fmt(trajectory.dt)},
    )


def read_trajectory_csv(path: Path) -> dict[str, np.ndarray]:
    """Trajectory table as plain arrays (snapshots live in separate state files)."""
    data, comments = _read_table(
        path, TRAJECTORY_FORMAT, ("t", "fidelity", "parity", "n_mean", "trace")
    )
    out = {
        name: data[:, i] for i, name in enumerate(("t", "fidelity", "parity", "n_mean", "trace"))
    }
    out["kappa"] = float(comments.get("kappa", "0"))
    return out


def write_wigner_csv(path: Path, wmap: WignerMap) -> None:
    pts = wmap.grid.points()
    _write_table(
        path,
        WIGNER_FORMAT,
        ("x", "p", "W"),
        (pts.real.ravel(), pts.imag.ravel(), wmap.values.ravel()),
        {"resolution": str(wmap.grid.resolution)},
    )


def read_wigner_csv(path: Path) -> WignerMap:
    data, comments = _read_table(path, WIGNER_FORMAT, ("x", "p", "W"))
    res = int(comments["resolution"])
    x = data[:, 0].reshape(res, res)
    p = data[:, 1].reshape(res, res)
    grid = PhaseGrid((x.min(), x.max()), (p.min(), p.max()), res)
    return WignerMap(grid=grid, values=data[:, 2].reshape(res, res))


def write_comparison_csv(path: Path, report) -> None:
    _write_table(
        path,
        COMPARISON_FORMAT,
        ("t", "fidelity_first", "fidelity_second", "volume_first", "volume_second"),
        (
            report.times,
            report.fidelity_first,
            report.fidelity_second,
            report.volume_first,
            report.volume_second,
        ),
        {
            "labels": ",".join(report.labels),
            "mark_time": _fmt(report.mark_time),
        },
    )


def write_sweep_csv(
    path: Path, delta0s: Sequence[float], beta_fs: Sequence[float], sizes: Sequence[float]
) -> None:
    _write_table(
        path,
        SWEEP_FORMAT,
        ("delta0", "beta_f", "cat_size"),
        (np.asarray(delta0s), np.asarray(beta_fs), np.asarray(sizes)),
    )


def _pairs(vec: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in vec]


def write_state_json(path: Path, state: QuantumState, meta: Mapping[str, object] | None = None) -> None:
    doc: dict[str, object] = {
        "format_version": STATE_FORMAT,
        "kind": state.kind,
        "dim": state.dim,
    }
    if state.kind == "pure":
        doc["amplitudes"] = _pairs(state.data)
    else:
        doc["matrix"] = [_pairs(row) for row in state.data]
    if meta:
        doc["meta"] = dict(meta)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1) + "\n")


def read_state_json(path: Path) -> QuantumState:
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != STATE_FORMAT:
        raise ConfigError(
            f"{path} declares format_version {doc.get('format_version')!r}, expected {STATE_FORMAT!r}"
        )
    if doc["kind"] == "pure":
        amps = np.array([complex(re, im) for re, im in doc["amplitudes"]])
        return QuantumState.pure(amps)
    mat = np.array([[complex(re, im) for re, im in row] for row in doc["matrix"]])
    return QuantumState.density(mat, tol=1e-6)


def sha256_of(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record: settings, versions, and output digests.

    The numeric pipeline is fixed-step and deterministic, so re-running
    the recorded config reproduces every digest below byte for byte.
    """

    command: str
    config: dict
    created_utc: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    tool_version: str = _tool_version
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)


def write_manifest(path: Path, manifest: RunManifest) -> None:
    doc = {
        "format_version": MANIFEST_FORMAT,
        "command": manifest.command,
        "tool_version": manifest.tool_version,
        "created_utc": manifest.created_utc,
        "config": manifest.config,
        "inputs": manifest.inputs,
        "outputs": manifest.outputs,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_manifest(path: Path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != MANIFEST_FORMAT:
        raise ConfigError(
            f"{path} declares format_version {doc.get('format_version')!r}, "
            f"expected {MANIFEST_FORMAT!r}"
        )
    return doc


def render_heatmap(wmap: WignerMap, path: Path, title: str | None = None) -> None:
    """PNG heatmap with a symmetric diverging color scale centered at 0."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    vmax = float(np.abs(wmap.values).max()) or 1.0
    fig, ax = plt.subplots(figsize=(5, 4.2))
    extent = (*wmap.grid.x_range, *wmap.grid.p_range)
    img = ax.imshow(
        wmap.values,
        origin="lower",
        extent=extent,
        cmap="RdBu_r",
        vmin=-vmax,
        vmax=vmax,
        interpolation="nearest",
    )
    ax.set_xlabel("Re alpha")
    ax.set_ylabel("Im alpha")
    if title:
        ax.set_title(title)
    fig.colorbar(img, ax=ax, label="W")
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
