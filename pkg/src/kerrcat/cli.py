"""Command line front end: plan, evolve, analyze, compare, sweep.

All energies and rates are in units of the Kerr coefficient (K = 1).
Every run directory receives a manifest recording the resolved settings
and sha256 digests of the outputs; the pipeline is deterministic, so
re-running a manifest's config reproduces the numeric files bit for bit.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import io as kio
from .analysis import PhaseGrid, cat_size, fidelity, nonclassical_volume, protocol_report, wigner
from .dynamics import EvolutionConfig, evolve_lindblad, evolve_schrodinger
from .errors import ConfigError, KerrcatError, LobeDetectionError, NumericsError
from .fock import FockBasis, cat_state
from .planner import (
    PlannerConfig,
    plan_path,
    schedule_from_path,
    spc_schedule,
    time_for_penalty,
)

# Penalty rate of the reference protocol: the default plan integrates to
# ~0.2763, so this rate reproduces the reference duration T ~= 2.5.
DEFAULT_PEAK_PENALTY = 0.1105

MAX_WORKERS = 4

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "delta0": {"type": "number", "exclusiveMinimum": 0},
        "beta0": {"type": "number", "minimum": 0},
        "ds": {"type": "number", "exclusiveMinimum": 0},
        "theta_samples": {"type": "integer", "minimum": 8},
        "dim": {"type": "integer", "minimum": 8},
        "duration": {"type": "number", "exclusiveMinimum": 0},
        "peak_penalty": {"type": "number", "exclusiveMinimum": 0},
        "spc": {"type": "boolean"},
        "spc_beta0": {"type": "number", "exclusiveMinimum": 0},
        "spc_t_end": {"type": "number", "exclusiveMinimum": 0},
    },
}


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: e.json_path)
    if errors:
        first = errors[0]
        raise ConfigError(f"config file {path}: {first.message} (at {first.json_path})")
    return doc


def _pick(args: argparse.Namespace, cfg: dict, key: str, default):
    """Explicit flag > config file > built-in default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    return cfg.get(key, default)


def _out_dir(args: argparse.Namespace) -> Path:
    out = args.out_dir or Path(os.environ.get("KERRCAT_OUT_DIR", "runs"))
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish_manifest(out: Path, command: str, config: dict, inputs: dict | None = None) -> None:
    outputs = {
        p.relative_to(out).as_posix(): kio.sha256_of(p)
        for p in sorted(out.rglob("*"))
        if p.is_file() and p.name != "manifest.json"
    }
    manifest = kio.RunManifest(
        command=command, config=config, inputs=inputs or {}, outputs=outputs
    )
    kio.write_manifest(out / "manifest.json", manifest)


def cmd_plan(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    if args.spc or cfg.get("spc", False):
        beta0 = _pick(args, cfg, "spc_beta0", 4.3)
        duration = _pick(args, cfg, "duration", 5.0)
        t_end = _pick(args, cfg, "spc_t_end", None)
        schedule = spc_schedule(beta0, duration, t_end=t_end)
        kio.write_schedule_csv(out / "schedule.csv", schedule)
        print(f"single-parameter baseline: beta0 = {beta0:.6f}")
        print(f"duration T = {schedule.duration:.6f}")
        print(f"final drive beta_f = {schedule.betas[-1]:.6f}")
        snapshot = {"spc": True, "spc_beta0": beta0, "duration": duration,
                    "spc_t_end": t_end, "seed": args.seed}
        _finish_manifest(out, "plan", snapshot)
        return 0

    delta0 = _pick(args, cfg, "delta0", 2.0)
    if delta0 == 0:
        raise ConfigError(
            "delta0 = 0 starts on the ground-state degeneracy; choose delta0 > 0"
        )
    beta0 = _pick(args, cfg, "beta0", 0.0)
    ds = _pick(args, cfg, "ds", 0.02)
    theta_samples = _pick(args, cfg, "theta_samples", 181)
    dim = args.dim or cfg.get("dim")
    kwargs = {"basis": FockBasis(dim)} if dim else {}
    planner_cfg = PlannerConfig(
        delta0=delta0, beta0=beta0, ds=ds, theta_samples=theta_samples, **kwargs
    )
    path = plan_path(planner_cfg)
    peak = _pick(args, cfg, "peak_penalty", DEFAULT_PEAK_PENALTY)
    duration = _pick(args, cfg, "duration", None)
    if duration is None:
        duration = time_for_penalty(path, peak)
    schedule = schedule_from_path(path, duration)

    print(f"final drive beta_f = {path.final_drive:.6f}")
    print(f"penalty integral I = {path.total_penalty:.6f}")
    print(f"duration T = {duration:.6f}")
    print(f"peak penalty rate I/T = {path.total_penalty / duration:.6f}")

    kio.write_path_csv(out / "path.csv", path)
    kio.write_schedule_csv(out / "schedule.csv", schedule)
    snapshot = {
        "delta0": delta0, "beta0": beta0, "ds": ds, "theta_samples": theta_samples,
        "dim": planner_cfg.basis.dim, "duration": duration, "peak_penalty": peak,
        "seed": args.seed,
    }
    _finish_manifest(out, "plan", snapshot)
    return 0


def _run_single_evolution(spec: dict) -> dict:
    """One evolve run (worker for the kappa sweep); writes a full run dir."""
    schedule = kio.read_schedule_csv(spec["schedule"])
    beta_max = float(np.max(np.abs(schedule.betas)))
    dim = spec["dim"] or max(40, math.ceil(8.0 * beta_max))
    basis = FockBasis(dim)
    initial = spec["initial"]
    state0 = basis.fock_state(initial)
    parity = "even" if initial == 0 else "odd"
    alpha = spec["target_amplitude"]
    if alpha is None:
        beta_f = float(schedule.betas[-1])
        if beta_f <= 0:
            raise ConfigError(
                "schedule ends at zero drive; pass --target-amplitude for the fidelity column"
            )
        alpha = math.sqrt(beta_f)
    target = cat_state(alpha, parity, basis)

    kappa = spec["kappa"]
    evo_cfg = EvolutionConfig(dt=spec["dt"], kappa=kappa, store_every=spec["store_every"])
    evolve = evolve_schrodinger if kappa == 0.0 else evolve_lindblad
    traj = evolve(state0, schedule, basis, evo_cfg, target)

    out = Path(spec["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    kio.write_trajectory_csv(out / "trajectory.csv", traj)
    kio.write_state_json(
        out / "final_state.json",
        traj.final_state,
        meta={"t": float(traj.times[-1]), "kappa": kappa},
    )
    n_snap = spec["snapshots"]
    if n_snap > 0:
        idx = np.unique(np.round(np.linspace(0, len(traj.times) - 1, n_snap)).astype(int))
        for rank, i in enumerate(idx):
            kio.write_state_json(
                out / "snapshots" / f"snap_{rank:04d}.json",
                traj.states[i],
                meta={"t": float(traj.times[i]), "kappa": kappa},
            )
    snapshot = {
        "schedule": spec["schedule"], "initial": initial, "kappa": kappa,
        "dt": spec["dt"], "store_every": spec["store_every"], "snapshots": n_snap,
        "dim": dim, "target_amplitude": alpha, "target_parity": parity,
        "seed": spec["seed"],
    }
    _finish_manifest(out, "evolve", snapshot, inputs={spec["schedule"]: kio.sha256_of(spec["schedule"])})
    return {
        "kappa": kappa,
        "final_fidelity": float(traj.fidelity[-1]),
        "final_parity": float(traj.parity[-1]),
        "final_n_mean": float(traj.n_mean[-1]),
        "out_dir": str(out),
    }


def cmd_evolve(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    base = {
        "schedule": str(args.schedule),
        "initial": int(args.initial),
        "dt": args.dt,
        "store_every": args.store_every,
        "snapshots": args.snapshots,
        "target_amplitude": args.target_amplitude,
        "dim": args.dim,
        "seed": args.seed,
    }
    if args.kappa_list:
        kappas = [float(tok) for tok in args.kappa_list.split(",") if tok.strip()]
        if not kappas:
            raise ConfigError("--kappa-list is empty")
        specs = [
            {**base, "kappa": k, "out_dir": str(out / f"kappa_{k:g}")} for k in kappas
        ]
        workers = min(len(specs), os.cpu_count() or 1, MAX_WORKERS)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_single_evolution, specs))
        for res in results:
            print(
                f"kappa = {res['kappa']:g}: final fidelity = {res['final_fidelity']:.6f}, "
                f"final parity = {res['final_parity']:.6f}"
            )
        return 0

    res = _run_single_evolution({**base, "kappa": args.kappa, "out_dir": str(out)})
    print(f"final fidelity = {res['final_fidelity']:.6f}")
    print(f"final parity = {res['final_parity']:.6f}")
    print(f"final n_mean = {res['final_n_mean']:.6f}")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    if (args.state is None) == (args.run is None):
        raise ConfigError("pass exactly one of --state or --run")
    out = _out_dir(args)
    run_config: dict = {}
    if args.run is not None:
        state_path = Path(args.run) / "final_state.json"
        manifest_path = Path(args.run) / "manifest.json"
        if manifest_path.exists():
            run_config = kio.read_manifest(manifest_path).get("config", {})
    else:
        state_path = Path(args.state)
    state = kio.read_state_json(state_path)

    resolution = args.resolution
    if args.half_width is not None:
        grid = PhaseGrid.square(args.half_width, resolution)
    else:
        grid = PhaseGrid.for_dim(state.dim, resolution)
    wmap = wigner(state, grid)

    parity = state.parity_expectation()
    n_mean = state.mean_photons()
    volume = nonclassical_volume(wmap)
    print(f"parity = {parity:.6f}")
    print(f"n_mean = {n_mean:.6f}")

    alpha = args.target_amplitude
    if alpha is None:
        alpha = run_config.get("target_amplitude")
    target_parity = args.target_parity or run_config.get("target_parity")
    fid = None
    if alpha is not None:
        target = cat_state(float(alpha), target_parity or "even", FockBasis(state.dim))
        fid = fidelity(state, target)
        print(f"fidelity = {fid:.6f}")
    else:
        print("fidelity: no target specified")
    print(f"nonclassical volume = {volume:.6f}")

    try:
        size = cat_size(wmap)
        print(f"cat size = {size:.6f}")
    except LobeDetectionError as exc:
        size = None
        print(f"cat size: lobes not detected ({exc})")

    kio.write_wigner_csv(out / "wigner.csv", wmap)
    kio.render_heatmap(wmap, out / "wigner.png", title="Wigner function")
    metrics = {
        "format_version": "kerrcat.analysis.v1",
        "parity": parity,
        "n_mean": n_mean,
        "fidelity": fid,
        "nonclassical_volume": volume,
        "cat_size": size,
        "target_amplitude": None if alpha is None else float(alpha),
        "target_parity": target_parity,
    }
    (out / "analysis.json").write_text(json.dumps(metrics, indent=1) + "\n")
    snapshot = {
        "state": str(state_path), "resolution": resolution,
        "half_width": grid.half_width, "seed": args.seed,
    }
    _finish_manifest(out, "analyze", snapshot, inputs={str(state_path): kio.sha256_of(state_path)})
    return 0


@dataclass(frozen=True)
class _SnapshotSeries:
    """Stored snapshot states of one run, shaped like a trajectory."""

    times: np.ndarray
    states: list

    @property
    def duration(self) -> float:
        return float(self.times[-1])


def _load_run_series(run_dir: Path) -> tuple[_SnapshotSeries, dict]:
    run_dir = Path(run_dir)
    snap_dir = run_dir / "snapshots"
    files = sorted(snap_dir.glob("snap_*.json")) if snap_dir.is_dir() else []
    if len(files) < 2:
        raise ConfigError(
            f"{run_dir} has no stored snapshots; re-run evolve with --snapshots"
        )
    pairs = []
    for f in files:
        doc = json.loads(f.read_text())
        pairs.append((float(doc["meta"]["t"]), kio.read_state_json(f)))
    pairs.sort(key=lambda item: item[0])
    times = np.array([t for t, _ in pairs])
    states = [s for _, s in pairs]
    manifest_path = run_dir / "manifest.json"
    config = kio.read_manifest(manifest_path).get("config", {}) if manifest_path.exists() else {}
    return _SnapshotSeries(times=times, states=states), config


def cmd_compare(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    first, cfg1 = _load_run_series(args.first)
    second, cfg2 = _load_run_series(args.second)

    alpha = args.target_amplitude
    if alpha is None:
        alpha = cfg1.get("target_amplitude")
    if alpha is None:
        raise ConfigError("no target amplitude on record; pass --target-amplitude")
    parity = cfg1.get("target_parity", "even")
    dim = first.states[0].dim
    target = cat_state(float(alpha), parity, FockBasis(dim))

    if args.labels:
        labels = tuple(tok.strip() for tok in args.labels.split(","))
        if len(labels) != 2 or not all(labels):
            raise ConfigError(f"--labels needs two comma-separated names, got {args.labels!r}")
    else:
        labels = (
            f"first(kappa={cfg1.get('kappa', 0):g})",
            f"second(kappa={cfg2.get('kappa', 0):g})",
        )

    grid = PhaseGrid.square(args.half_width, args.resolution)
    report = protocol_report(
        first, second, target,
        grid=grid, sample_count=args.sample_count,
        mark_time=args.mark_time, labels=labels,
    )
    kio.write_comparison_csv(out / "comparison.csv", report)

    mark = report.mark_time
    f1, f2 = report.fidelity_at_mark
    v1, v2 = report.volume_at_mark
    print(f"at t = {mark:.4f}:")
    print(f"  fidelity {labels[0]} = {f1:.6f}, {labels[1]} = {f2:.6f}")
    print(f"  nonclassical volume {labels[0]} = {v1:.6f}, {labels[1]} = {v2:.6f}")
    print(f"fidelity crossings: {len(report.fidelity_crossings)}")
    snapshot = {
        "first": str(args.first), "second": str(args.second),
        "target_amplitude": float(alpha), "target_parity": parity,
        "resolution": args.resolution, "half_width": args.half_width,
        "sample_count": args.sample_count, "mark_time": mark, "seed": args.seed,
    }
    _finish_manifest(out, "compare", snapshot)
    return 0


def _sweep_point(spec: dict) -> dict:
    """Plan a path for one starting detuning and size the endpoint cat."""
    kwargs = {"basis": FockBasis(spec["dim"])} if spec["dim"] else {}
    cfg = PlannerConfig(delta0=spec["delta0"], ds=spec["ds"], **kwargs)
    path = plan_path(cfg)
    beta_f = path.final_drive
    alpha = math.sqrt(beta_f)
    # The endpoint lies on the zero-detuning line where the even cat is the
    # exact ground state, so the adiabatic outcome can be sized directly.
    state = cat_state(alpha, "even", cfg.basis)
    grid = PhaseGrid.square(alpha + 2.5, spec["resolution"])
    size = cat_size(state, grid)
    return {"delta0": spec["delta0"], "beta_f": beta_f, "cat_size": size}


def cmd_sweep(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    delta0s = [float(tok) for tok in args.delta0_list.split(",") if tok.strip()]
    if not delta0s:
        raise ConfigError("--delta0-list is empty")
    if any(d <= 0 for d in delta0s):
        raise ConfigError(f"starting detunings must be positive, got {delta0s}")
    specs = [
        {"delta0": d, "ds": args.ds, "dim": args.dim, "resolution": args.resolution}
        for d in delta0s
    ]
    workers = min(len(specs), os.cpu_count() or 1, MAX_WORKERS)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_sweep_point, specs))
    for res in results:
        print(
            f"delta0 = {res['delta0']:g}: beta_f = {res['beta_f']:.6f}, "
            f"cat size = {res['cat_size']:.6f}"
        )
    kio.write_sweep_csv(
        out / "sweep.csv",
        [r["delta0"] for r in results],
        [r["beta_f"] for r in results],
        [r["cat_size"] for r in results],
    )
    snapshot = {"delta0_list": delta0s, "ds": args.ds, "dim": args.dim,
                "resolution": args.resolution, "seed": args.seed}
    _finish_manifest(out, "sweep", snapshot)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kerrcat",
        description="Plan, simulate, and analyze adiabatic cat-state preparation "
        "in a Kerr-nonlinear resonator.",
        epilog="All energies and rates are in units of the Kerr coefficient (K = 1).",
    )
    parser.add_argument("--version", action="version", version=f"kerrcat {__version__}")
    parser.add_argument("--dim", type=int, default=None,
                        help="Fock basis size (default: sized per command)")
    parser.add_argument("--seed", type=int, default=None,
                        help="reserved; recorded in the manifest (the pipeline is deterministic)")
    parser.add_argument("--out-dir", type=Path, default=None,
                        help="output directory (default: $KERRCAT_OUT_DIR or ./runs)")
    sub = parser.add_subparsers(dest="command", required=True)

    # The same flags are accepted after the subcommand; SUPPRESS keeps an
    # absent duplicate from clobbering a value parsed before it.
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--dim", type=int, default=argparse.SUPPRESS,
                        help="Fock basis size (default: sized per command)")
    shared.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="reserved; recorded in the manifest")
    shared.add_argument("--out-dir", type=Path, default=argparse.SUPPRESS,
                        help="output directory (default: $KERRCAT_OUT_DIR or ./runs)")

    p = sub.add_parser("plan", parents=[shared],
                       help="plan a control path and constant-rate schedule")
    p.add_argument("--config", type=Path, default=None,
                   help="JSON config file; explicit flags take precedence")
    p.add_argument("--delta0", type=float, default=None, help="starting detuning (default 2)")
    p.add_argument("--beta0", type=float, default=None, help="starting drive (default 0)")
    p.add_argument("--ds", type=float, default=None, help="planner step length (default 0.02)")
    p.add_argument("--theta-samples", type=int, default=None,
                   help="candidate headings per step (default 181)")
    p.add_argument("--duration", type=float, default=None,
                   help="protocol duration; default derived from --peak-penalty")
    p.add_argument("--peak-penalty", type=float, default=None,
                   help=f"penalty rate used to derive the duration (default {DEFAULT_PEAK_PENALTY})")
    p.add_argument("--spc", action="store_true",
                   help="emit the single-parameter baseline schedule instead of planning")
    p.add_argument("--spc-beta0", type=float, default=None,
                   help="baseline drive target (default 4.3)")
    p.add_argument("--spc-t-end", type=float, default=None,
                   help="truncate the baseline schedule at this time")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("evolve", parents=[shared], help="integrate a schedule from |0> or |1>")
    p.add_argument("--schedule", type=Path, required=True, help="schedule CSV from plan")
    p.add_argument("--initial", choices=("0", "1"), default="0",
                   help="initial Fock state: 0 (even sector) or 1 (odd sector)")
    p.add_argument("--kappa", type=float, default=0.0, help="single-photon loss rate")
    p.add_argument("--kappa-list", type=str, default=None,
                   help="comma-separated loss rates; runs a parallel sweep")
    p.add_argument("--dt", type=float, default=5e-4, help="integrator step (default 5e-4)")
    p.add_argument("--store-every", type=int, default=50,
                   help="store one sample per this many steps (default 50)")
    p.add_argument("--snapshots", type=int, default=0,
                   help="store N evenly spaced state snapshots (needed for compare)")
    p.add_argument("--target-amplitude", type=float, default=None,
                   help="cat amplitude for the fidelity column (default sqrt of final drive)")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("analyze", parents=[shared], help="phase-space metrics and heatmap for a stored state")
    p.add_argument("--state", type=Path, default=None, help="state JSON file")
    p.add_argument("--run", type=Path, default=None,
                   help="evolve run directory (uses final_state.json and its manifest)")
    p.add_argument("--resolution", type=int, default=256, help="grid points per axis")
    p.add_argument("--half-width", type=float, default=None,
                   help="phase-space half-width (default sized from the state)")
    p.add_argument("--target-amplitude", type=float, default=None,
                   help="cat amplitude for the fidelity line")
    p.add_argument("--target-parity", choices=("even", "odd"), default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", parents=[shared], help="fidelity/negativity traces of two runs vs one target")
    p.add_argument("--first", type=Path, required=True, help="run directory")
    p.add_argument("--second", type=Path, required=True, help="run directory")
    p.add_argument("--labels", type=str, default=None, help="two comma-separated names")
    p.add_argument("--mark-time", type=float, default=None,
                   help="report metrics at this time (default end of common axis)")
    p.add_argument("--target-amplitude", type=float, default=None)
    p.add_argument("--resolution", type=int, default=128)
    p.add_argument("--half-width", type=float, default=5.0)
    p.add_argument("--sample-count", type=int, default=41)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", parents=[shared], help="final drive and cat size over starting detunings")
    p.add_argument("--delta0-list", type=str, required=True,
                   help="comma-separated starting detunings")
    p.add_argument("--ds", type=float, default=0.02, help="planner step length")
    p.add_argument("--resolution", type=int, default=192, help="grid points per axis for sizing")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except KerrcatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
