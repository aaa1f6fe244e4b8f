"""Control-path planning in the (detuning, drive) plane.

The protocol starts deep in the Fock regime (detuning = delta0, drive = 0)
and must reach the cat regime (detuning = 0, drive = beta_f) while keeping
the adiabatic penalty low. The penalty density at a point, for a unit control
direction (d_detuning/ds, d_drive/ds), is

    Q = sum_n |d_detuning/ds * M_n - d_drive/ds * L_n| / (E_n - E_0)^2

where L_n = <n|(ad^2 + a^2)|0> and M_n = <n|ad a|0> are matrix elements
between the sector ground state and its n-th same-parity excited state
(opposite-parity states couple to neither operator and are excluded exactly).
Q * |ds/dt| is the instantaneous adiabatic transition rate.

The planner scans a half circle of candidate steps (detuning never increases,
drive never decreases) and steers each step perpendicular to the coupling
vectors (L_n, M_n): minimizing the step's alignment with the couplings trades
detuning for drive early, crests the penalty ridge near the regime boundary,
and lands on the protected large-drive axis. The walked path is then
converted into a time schedule with a constant penalty rate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .errors import AdiabaticityError, DegenerateGapError, PlannerStuckError
from .fock import FockBasis, _parity_key

#: penalty density above which a path point is rejected outright
PENALTY_HARD_LIMIT = 1.0
#: penalty density above which a warning is emitted
PENALTY_WARN_LIMIT = 0.5


def default_planner_dim(delta0: float, beta0: float = 0.0) -> int:
    """Basis size covering the drive range a path from delta0 can reach."""
    return max(40, math.ceil(8.0 * (beta0 + 2.5 * delta0)))


@dataclass
class PlannerConfig:
    """Planner inputs; defaults reproduce the reference protocol."""

    delta0: float
    beta0: float = 0.0
    ds: float = 0.02
    theta_samples: int = 181
    parity: str = "even"
    basis: FockBasis | None = None
    level_cutoff: int = 8
    gap_floor: float = 1e-8
    max_steps: int = 200_000

    def __post_init__(self):
        if not self.delta0 > 0:
            raise ValueError(f"initial detuning must be positive, got {self.delta0}")
        if self.beta0 < 0:
            raise ValueError(f"initial drive must be non-negative, got {self.beta0}")
        if not self.ds > 0:
            raise ValueError(f"step length must be positive, got {self.ds}")
        if self.theta_samples < 8:
            raise ValueError(f"need at least 8 angle samples, got {self.theta_samples}")
        self.parity = _parity_key(self.parity)
        if self.basis is None:
            self.basis = FockBasis(default_planner_dim(self.delta0, self.beta0))

    @property
    def beta_max(self) -> float:
        """Largest drive the basis supports (inverse of the sizing rule)."""
        return self.basis.dim / 8.0


@dataclass(frozen=True)
class PathPoint:
    """One planned step: controls, penalty density, and arrival heading."""

    delta: float
    beta: float
    penalty: float
    theta: float


@dataclass(frozen=True)
class ControlPath:
    """Planned polyline from (delta0, beta0) to (0, beta_f)."""

    points: tuple[PathPoint, ...]
    ds: float
    total_penalty: float

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValueError("a control path needs at least two points")

    @property
    def deltas(self) -> np.ndarray:
        return np.array([p.delta for p in self.points])

    @property
    def betas(self) -> np.ndarray:
        return np.array([p.beta for p in self.points])

    @property
    def penalties(self) -> np.ndarray:
        return np.array([p.penalty for p in self.points])

    @property
    def thetas(self) -> np.ndarray:
        return np.array([p.theta for p in self.points])

    @property
    def final_drive(self) -> float:
        return self.points[-1].beta

    def arclengths(self) -> np.ndarray:
        """Cumulative arc length; the last segment may be partial."""
        dd = np.diff(self.deltas)
        db = np.diff(self.betas)
        return np.concatenate([[0.0], np.cumsum(np.hypot(dd, db))])


@dataclass(frozen=True)
class Schedule:
    """Time-sampled controls t -> (detuning, drive)."""

    times: np.ndarray
    deltas: np.ndarray
    betas: np.ndarray
    source: str = "custom"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("schedule needs at least two time samples")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("schedule times must increase strictly from 0")
        if len(self.deltas) != len(t) or len(self.betas) != len(t):
            raise ValueError("schedule arrays must share one length")
        if self.source not in ("planned", "spc", "custom"):
            raise ValueError(f"unknown schedule source {self.source!r}")

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def delta_at(self, t) -> np.ndarray:
        return np.interp(t, self.times, self.deltas)

    def beta_at(self, t) -> np.ndarray:
        return np.interp(t, self.times, self.betas)


@lru_cache(maxsize=8)
def _sector_ops(dim: int, parity: str):
    """Parity-block views of the number, Kerr, and drive operators."""
    basis = FockBasis(dim)
    idx = basis.sector_indices(parity)
    return (
        basis.number_diag[idx],
        basis.kerr_diag[idx],
        basis.drive_op[np.ix_(idx, idx)],
    )


def _sector_eigs(delta: float, beta: float, cfg: PlannerConfig):
    """Lowest (cutoff+1) eigenpairs of one parity block at (delta, beta)."""
    n_diag, k_diag, drive = _sector_ops(cfg.basis.dim, cfg.parity)
    block = -beta * drive
    ii = np.arange(len(n_diag))
    block[ii, ii] = k_diag + delta * n_diag
    vals, vecs = np.linalg.eigh(block)
    m = min(cfg.level_cutoff + 1, len(vals))
    return vals[:m], vecs[:, :m], n_diag, drive


def _couplings(delta: float, beta: float, cfg: PlannerConfig):
    """Gaps and (L_n, M_n) couplings from the sector ground state."""
    vals, vecs, n_diag, drive = _sector_eigs(delta, beta, cfg)
    v0 = vecs[:, 0]
    gaps = vals[1:] - vals[0]
    if len(gaps) and gaps.min() < cfg.gap_floor:
        raise DegenerateGapError(
            f"same-parity gap {gaps.min():.3e} below floor {cfg.gap_floor:.1e} "
            f"at (detuning={delta:.4f}, drive={beta:.4f})"
        )
    drive_coup = vecs[:, 1:].T @ (drive @ v0)  # L_n
    number_coup = vecs[:, 1:].T @ (n_diag * v0)  # M_n
    return gaps, drive_coup, number_coup


def _check_point(delta: float, beta: float, cfg: PlannerConfig) -> None:
    if delta < -1e-12 or beta < -1e-12:
        raise ValueError(f"controls out of range: detuning={delta}, drive={beta}")
    if beta > cfg.beta_max + 1e-12:
        raise ValueError(
            f"drive {beta:.3f} exceeds the basis safety bound {cfg.beta_max:.3f}; "
            "use a larger basis"
        )


def penalty_density(delta: float, beta: float, direction, cfg: PlannerConfig) -> float:
    """Adiabatic penalty density Q at a point, for a unit control direction.

    ``direction`` is (d_detuning/ds, d_drive/ds) and must have unit norm.
    The sum runs over the lowest ``cfg.level_cutoff`` same-parity excited
    levels; opposite-parity levels are excluded (their couplings vanish
    identically, which also avoids 0/0 at parity degeneracies).
    """
    d_delta, d_beta = float(direction[0]), float(direction[1])
    if abs(math.hypot(d_delta, d_beta) - 1.0) > 1e-9:
        raise ValueError(f"direction must be a unit vector, got {direction!r}")
    _check_point(delta, beta, cfg)
    gaps, drive_coup, number_coup = _couplings(delta, beta, cfg)
    # Unit-speed derivative of H along the step: d_delta * (ad a) - d_beta * (ad^2 + a^2).
    numer = np.abs(d_delta * number_coup - d_beta * drive_coup)
    return float(np.sum(numer / gaps**2))


def _alignment_score(delta: float, beta: float, theta: float, cfg: PlannerConfig) -> float:
    """Selection objective: alignment of a heading with the coupling vectors.

    Scores sum_n |cos(theta) * L_n + sin(theta) * M_n| / gap_n^2 at the
    stepped-to point. Minimizing it steers the walk perpendicular to the
    (L_n, M_n) coupling vectors, which is what keeps the interior route
    viable: a heading chosen by its own penalty density instead collapses
    onto the detuning axis (at drive 0 the number couplings M_n vanish, so
    the straight-down heading always looks free) and never builds any drive.
    """
    _check_point(delta, beta, cfg)
    gaps, drive_coup, number_coup = _couplings(delta, beta, cfg)
    numer = np.abs(math.cos(theta) * drive_coup + math.sin(theta) * number_coup)
    return float(np.sum(numer / gaps**2))


def descent_step(current: PathPoint, cfg: PlannerConfig) -> PathPoint:
    """Scan the second-quadrant half circle of radius ds and pick a step.

    Candidate headings theta span [pi/2, pi] inclusive (``theta_samples``
    points): detuning can only decrease, drive can only increase. Each
    candidate is scored by its coupling alignment at the stepped-to point
    and ties are broken toward larger theta (steeper detuning descent).
    The returned point records the directional penalty density Q for its
    own heading, which is what time scheduling integrates.
    """
    thetas = np.linspace(math.pi / 2.0, math.pi, cfg.theta_samples)
    best = None
    best_score = math.inf
    for theta in thetas:
        raw_delta = current.delta + cfg.ds * math.cos(theta)
        beta = current.beta + cfg.ds * math.sin(theta)
        delta = max(raw_delta, 0.0)  # terminal steps may overshoot the axis
        if beta > cfg.beta_max:
            continue
        try:
            score = _alignment_score(delta, beta, theta, cfg)
        except DegenerateGapError:
            continue
        if score <= best_score:
            best_score = score
            best = (raw_delta, beta, theta)
    if best is None:
        raise PlannerStuckError(
            f"no admissible step from (detuning={current.delta:.4f}, "
            f"drive={current.beta:.4f})"
        )
    raw_delta, beta, theta = best
    q = penalty_density(max(raw_delta, 0.0), beta, (math.cos(theta), math.sin(theta)), cfg)
    return PathPoint(delta=raw_delta, beta=beta, penalty=q, theta=theta)


def _enforce_penalty_limits(point: PathPoint) -> None:
    if point.penalty >= PENALTY_HARD_LIMIT:
        raise AdiabaticityError(
            f"penalty density {point.penalty:.3f} >= {PENALTY_HARD_LIMIT} at "
            f"(detuning={point.delta:.4f}, drive={point.beta:.4f})"
        )
    if point.penalty >= PENALTY_WARN_LIMIT:
        warnings.warn(
            f"penalty density {point.penalty:.3f} exceeds {PENALTY_WARN_LIMIT}; "
            "the adiabatic approximation is marginal",
            stacklevel=3,
        )


def plan_path(cfg: PlannerConfig) -> ControlPath:
    """Walk the penalty landscape from (delta0, beta0) until detuning hits 0.

    The final step is linearly interpolated so the path lands on detuning = 0
    exactly. The seed point's penalty is backfilled with the first step's
    heading so the trapezoid total is well defined from s = 0.
    """
    points = [PathPoint(cfg.delta0, cfg.beta0, math.nan, math.nan)]
    while points[-1].delta > 0.0:
        if len(points) > cfg.max_steps:
            raise PlannerStuckError(f"planner exceeded {cfg.max_steps} steps")
        step = descent_step(points[-1], cfg)
        if len(points) == 1:
            direction = (math.cos(step.theta), math.sin(step.theta))
            q0 = penalty_density(cfg.delta0, cfg.beta0, direction, cfg)
            points[0] = replace(points[0], penalty=q0)
        if step.delta <= 0.0:
            cur = points[-1]
            frac = cur.delta / (cur.delta - step.delta)
            beta_end = cur.beta + frac * (step.beta - cur.beta)
            direction = (math.cos(step.theta), math.sin(step.theta))
            q_end = penalty_density(0.0, beta_end, direction, cfg)
            step = PathPoint(delta=0.0, beta=beta_end, penalty=q_end, theta=step.theta)
        _enforce_penalty_limits(step)
        points.append(step)

    path = ControlPath(points=tuple(points), ds=cfg.ds, total_penalty=0.0)
    total = float(trapezoid(path.penalties, path.arclengths()))
    return replace(path, total_penalty=total)


def schedule_from_path(path: ControlPath, duration: float, sample_count: int = 2000) -> Schedule:
    """Reparametrize a path in time so the penalty rate is constant.

    With t(s) proportional to the cumulative penalty integral, the product
    Q(s) * ds/dt is flat and equals total_penalty / duration everywhere. The
    penalty is floored at 1e-9 of its maximum so the map stays invertible
    where Q vanishes.
    """
    if not duration > 0:
        raise ValueError(f"duration must be positive, got {duration}")
    if sample_count < 2:
        raise ValueError("need at least two schedule samples")
    s = path.arclengths()
    q = path.penalties.copy()
    q = np.maximum(q, 1e-9 * q.max())
    cum = cumulative_trapezoid(q, s, initial=0.0)
    t_nodes = duration * cum / cum[-1]
    t_grid = np.linspace(0.0, duration, sample_count)
    deltas = np.interp(t_grid, t_nodes, path.deltas)
    betas = np.interp(t_grid, t_nodes, path.betas)
    return Schedule(times=t_grid, deltas=deltas, betas=betas, source="planned")


def time_for_penalty(path: ControlPath, peak_penalty: float) -> float:
    """Protocol duration whose constant penalty rate equals peak_penalty."""
    if not peak_penalty > 0:
        raise ValueError(f"peak penalty must be positive, got {peak_penalty}")
    return path.total_penalty / peak_penalty


def spc_schedule(
    beta0: float,
    duration: float,
    sample_count: int = 2000,
    t_end: float | None = None,
) -> Schedule:
    """Single-parameter baseline: zero detuning, drive beta0*(1 - exp(-(t/T)^4)).

    ``t_end`` extends the sampled window past the nominal duration (the ramp
    formula keeps applying), which comparison runs use to share a time axis.
    """
    if beta0 < 0:
        raise ValueError(f"drive amplitude must be non-negative, got {beta0}")
    if not duration > 0:
        raise ValueError(f"duration must be positive, got {duration}")
    horizon = duration if t_end is None else float(t_end)
    if horizon < duration and t_end is not None and horizon <= 0:
        raise ValueError("t_end must be positive")
    t = np.linspace(0.0, horizon, sample_count)
    betas = beta0 * (1.0 - np.exp(-((t / duration) ** 4)))
    return Schedule(times=t, deltas=np.zeros_like(t), betas=betas, source="spc")


@dataclass(frozen=True)
class AdiabaticityReport:
    """Penalty rate and gap diagnostics evaluated on a schedule."""

    times: np.ndarray
    penalty_rate: np.ndarray
    gaps: np.ndarray
    min_gap: float
    t_min_gap: float

    @property
    def mean_penalty_rate(self) -> float:
        return float(np.mean(self.penalty_rate))


def adiabaticity_report(
    schedule: Schedule,
    basis: FockBasis,
    parity: str = "even",
    level_cutoff: int = 8,
    gap_floor: float = 1e-8,
) -> AdiabaticityReport:
    """Evaluate the instantaneous penalty rate P(t) = |ds/dt| * Q(s(t)).

    Control derivatives come from finite differences of the schedule samples.
    Also reports the minimum same-parity gap and where in time it occurs.
    """
    cfg = PlannerConfig(
        delta0=max(float(np.max(schedule.deltas)), 1e-9),
        basis=basis,
        parity=parity,
        level_cutoff=level_cutoff,
        gap_floor=gap_floor,
    )
    t = schedule.times
    dd = np.gradient(schedule.deltas, t)
    db = np.gradient(schedule.betas, t)
    speed = np.hypot(dd, db)
    rate = np.zeros_like(t)
    gaps = np.zeros_like(t)
    for i in range(len(t)):
        delta = max(float(schedule.deltas[i]), 0.0)
        beta = max(float(schedule.betas[i]), 0.0)
        g, drive_coup, number_coup = _couplings(delta, beta, cfg)
        gaps[i] = g[0]
        if speed[i] > 0:
            numer = np.abs(dd[i] * number_coup - db[i] * drive_coup)
            rate[i] = float(np.sum(numer / g**2))
    i_min = int(np.argmin(gaps))
    return AdiabaticityReport(
        times=t,
        penalty_rate=rate,
        gaps=gaps,
        min_gap=float(gaps[i_min]),
        t_min_gap=float(t[i_min]),
    )
