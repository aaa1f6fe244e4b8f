"""Time evolution under scheduled controls, closed and lossy.

Pure states follow the Schrodinger equation; density matrices follow the
single-photon-loss master equation with jump operator sqrt(kappa) * a.
Both use fixed-step classical 4th-order integration so identical inputs
reproduce identical outputs bit for bit. Accuracy is enforced rather than
assumed: pure runs must conserve the norm (no silent renormalization),
open runs must conserve the trace and stay positive at every stored
sample, and violations raise instead of being patched over.

Controls between schedule samples are interpolated linearly in both
detuning and drive, matching how schedules are emitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import PositivityError, StepSizeError, TraceError
from .fock import FockBasis, HamiltonianParams, QuantumState, build_hamiltonian, eigendecompose
from .planner import Schedule

# Explicit 4th-order stepping is stable for dt * |eigenvalue| up to 2*sqrt(2).
# The guard rejects configurations outside a conservative fraction of that
# region; accuracy within it is enforced by the norm / trace drift checks.
STABILITY_LIMIT = 2.5

NORM_DRIFT_LIMIT = 1e-9  # pure runs: max |norm - 1| over the whole run
STEP_DRIFT_LIMIT = 1e-12  # pure runs: max norm change in any single step
TRACE_DRIFT_LIMIT = 1e-8  # open runs: max |trace - 1| over the whole run
POSITIVITY_FLOOR = -1e-7  # open runs: min eigenvalue at stored samples


@dataclass(frozen=True)
class EvolutionConfig:
    """Integrator settings.

    dt is the fixed step in units of 1/K; kappa is the single-photon loss
    rate (0 for closed evolution); store_every decimates the trajectory
    output (every store_every-th step is kept, plus the final state).
    """

    dt: float = 5e-4
    kappa: float = 0.0
    store_every: int = 50

    def __post_init__(self) -> None:
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.kappa < 0.0:
            raise ValueError(f"loss rate must be nonnegative, got {self.kappa}")
        if int(self.store_every) != self.store_every or self.store_every < 1:
            raise ValueError(f"store_every must be a positive integer, got {self.store_every}")


@dataclass(frozen=True)
class Trajectory:
    """Stored time samples of an evolution run.

    states holds validated snapshots; fidelity is measured against the
    target supplied to the evolve call (the initial state if none was).
    trace is the norm squared for pure runs and the matrix trace for open
    runs, so the same column works for both.
    """

    kind: str
    times: np.ndarray
    states: tuple[QuantumState, ...]
    fidelity: np.ndarray
    parity: np.ndarray
    n_mean: np.ndarray
    trace: np.ndarray
    kappa: float = 0.0
    dt: float = 0.0

    @property
    def final_state(self) -> QuantumState:
        return self.states[-1]

    @property
    def duration(self) -> float:
        return float(self.times[-1])


def _hamiltonian_bound(schedule: Schedule, basis: FockBasis) -> float:
    """Gershgorin row-sum bound on |H(t)| over the whole schedule.

    H is linear in (detuning, drive), so the bound at the componentwise
    maxima of |detuning| and drive dominates every intermediate time.
    """
    dmax = float(np.max(np.abs(schedule.deltas)))
    bmax = float(np.max(schedule.betas))
    diag = np.abs(basis.kerr_diag + 0.0) + dmax * basis.number_diag
    off = bmax * np.sum(np.abs(basis.drive_op), axis=1)
    return float(np.max(diag + off))


def _check_stability(schedule: Schedule, basis: FockBasis, cfg: EvolutionConfig) -> None:
    bound = _hamiltonian_bound(schedule, basis)
    if cfg.kappa > 0.0:
        # superoperator bound: commutator doubles H, dissipator adds ~2*kappa*dim
        product = cfg.dt * (2.0 * bound + 2.0 * cfg.kappa * basis.dim)
        limit = 2.0 * STABILITY_LIMIT
    else:
        product = cfg.dt * bound
        limit = STABILITY_LIMIT
    if product > limit:
        raise StepSizeError(
            f"dt * spectral bound = {product:.3f} exceeds the stability limit "
            f"{limit}; reduce dt below {cfg.dt * limit / product:.2e} or shrink the basis"
        )


def _step_grid(duration: float, dt: float) -> np.ndarray:
    """Uniform step times covering [0, duration] with a short final step."""
    n_full = int(math.floor(duration / dt + 1e-12))
    times = dt * np.arange(n_full + 1)
    if times[-1] < duration - 1e-12 * max(1.0, duration):
        times = np.append(times, duration)
    else:
        times[-1] = duration
    return times


def evolve_schrodinger(
    state: QuantumState,
    schedule: Schedule,
    basis: FockBasis | None = None,
    config: EvolutionConfig | None = None,
    target: QuantumState | None = None,
) -> Trajectory:
    """Integrate d|psi>/dt = -i H(t) |psi> along the schedule.

    The norm is never renormalized: a single step moving it by more than
    1e-12, or a cumulative drift beyond 1e-9, raises StepSizeError with
    the failing time so the caller can shrink dt.
    """
    if state.kind != "pure":
        raise ValueError("evolve_schrodinger needs a pure state; use evolve_lindblad for densities")
    cfg = config or EvolutionConfig()
    if cfg.kappa != 0.0:
        raise ValueError("evolve_schrodinger is closed evolution; kappa must be 0")
    basis = basis or FockBasis(state.dim)
    if basis.dim != state.dim:
        raise ValueError(f"state dim {state.dim} does not match basis dim {basis.dim}")
    _check_stability(schedule, basis, cfg)

    drive_op = basis.drive_op
    diag_n = basis.number_diag.astype(float)
    diag_kerr = basis.kerr_diag.astype(float)
    parity_diag = basis.parity_diag.astype(float)
    target_vec = None if target is None else np.asarray(target.data, dtype=complex)
    if target_vec is None:
        target_vec = np.asarray(state.data, dtype=complex)
    if target_vec.ndim != 1 or target_vec.size != basis.dim:
        raise ValueError("target must be a pure state on the same basis")

    def h_at(t: float) -> np.ndarray:
        h = (-schedule.beta_at(t)) * drive_op
        np.fill_diagonal(h, h.diagonal() + diag_kerr + schedule.delta_at(t) * diag_n)
        return h

    psi = np.asarray(state.data, dtype=complex).copy()
    times = _step_grid(schedule.duration, cfg.dt)

    stored_t: list[float] = []
    snapshots: list[QuantumState] = []
    fid: list[float] = []
    par: list[float] = []
    nbar: list[float] = []
    tr: list[float] = []

    def store(t: float, vec: np.ndarray) -> None:
        snap = QuantumState.pure(vec, tol=10 * NORM_DRIFT_LIMIT)
        stored_t.append(t)
        snapshots.append(snap)
        norm_sq = float(np.vdot(vec, vec).real)
        fid.append(float(abs(np.vdot(target_vec, vec)) ** 2))
        par.append(float(np.vdot(vec, parity_diag * vec).real / norm_sq))
        nbar.append(float(np.vdot(vec, diag_n * vec).real / norm_sq))
        tr.append(norm_sq)

    prev_norm = math.sqrt(float(np.vdot(psi, psi).real))
    store(0.0, psi)
    for i in range(len(times) - 1):
        t0, t1 = float(times[i]), float(times[i + 1])
        dt = t1 - t0
        h0 = h_at(t0)
        hm = h_at(t0 + 0.5 * dt)
        h1 = h_at(t1)
        k1 = -1j * (h0 @ psi)
        k2 = -1j * (hm @ (psi + (0.5 * dt) * k1))
        k3 = -1j * (hm @ (psi + (0.5 * dt) * k2))
        k4 = -1j * (h1 @ (psi + dt * k3))
        psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        norm = math.sqrt(float(np.vdot(psi, psi).real))
        if abs(norm - prev_norm) > STEP_DRIFT_LIMIT:
            raise StepSizeError(
                f"norm moved by {abs(norm - prev_norm):.2e} in one step at t={t1:.4f}; "
                "reduce dt"
            )
        if abs(norm - 1.0) > NORM_DRIFT_LIMIT:
            raise StepSizeError(
                f"norm drifted to {norm:.12f} at t={t1:.4f} (limit {NORM_DRIFT_LIMIT}); reduce dt"
            )
        prev_norm = norm
        if (i + 1) % cfg.store_every == 0 or i == len(times) - 2:
            store(t1, psi)

    return Trajectory(
        kind="pure",
        times=np.array(stored_t),
        states=tuple(snapshots),
        fidelity=np.array(fid),
        parity=np.array(par),
        n_mean=np.array(nbar),
        trace=np.array(tr),
        kappa=0.0,
        dt=cfg.dt,
    )


def evolve_lindblad(
    state: QuantumState,
    schedule: Schedule,
    basis: FockBasis | None = None,
    config: EvolutionConfig | None = None,
    target: QuantumState | None = None,
) -> Trajectory:
    """Integrate the single-photon-loss master equation along the schedule.

    drho/dt = -i[H(t), rho] + kappa (a rho a+ - {a+ a, rho}/2). Trace drift
    beyond 1e-8 raises TraceError; an eigenvalue below -1e-7 at a stored
    sample raises PositivityError. With kappa = 0 the result matches the
    pure-state integrator within integrator tolerance.
    """
    rho0 = state.as_density()
    cfg = config or EvolutionConfig()
    basis = basis or FockBasis(state.dim)
    if basis.dim != state.dim:
        raise ValueError(f"state dim {state.dim} does not match basis dim {basis.dim}")
    _check_stability(schedule, basis, cfg)

    dim = basis.dim
    drive_op = basis.drive_op
    diag_n = basis.number_diag.astype(float)
    diag_kerr = basis.kerr_diag.astype(float)
    parity_diag = basis.parity_diag.astype(float)
    kappa = cfg.kappa
    sqrt_up = np.sqrt(np.arange(1, dim, dtype=float))  # a's superdiagonal
    loss_weight = kappa * np.outer(sqrt_up, sqrt_up)

    target_vec = None if target is None else np.asarray(target.data, dtype=complex)

    def h_at(t: float) -> np.ndarray:
        h = (-schedule.beta_at(t)) * drive_op
        np.fill_diagonal(h, h.diagonal() + diag_kerr + schedule.delta_at(t) * diag_n)
        return h

    def rhs(rho: np.ndarray, h: np.ndarray) -> np.ndarray:
        drho = -1j * (h @ rho - rho @ h)
        if kappa > 0.0:
            drho[:-1, :-1] += loss_weight * rho[1:, 1:]  # a rho a+
            half = (0.5 * kappa) * (diag_n[:, None] * rho)
            drho -= half
            drho -= (0.5 * kappa) * (rho * diag_n[None, :])
        return drho

    rho = np.asarray(rho0, dtype=complex).copy()
    times = _step_grid(schedule.duration, cfg.dt)

    stored_t: list[float] = []
    snapshots: list[QuantumState] = []
    fid: list[float] = []
    par: list[float] = []
    nbar: list[float] = []
    tr: list[float] = []

    def store(t: float, mat: np.ndarray) -> None:
        trace = float(np.trace(mat).real)
        eigmin = float(np.linalg.eigvalsh(mat)[0])
        if eigmin < POSITIVITY_FLOOR:
            raise PositivityError(
                f"density eigenvalue {eigmin:.2e} below {POSITIVITY_FLOOR} at t={t:.4f}"
            )
        snap = QuantumState.density(mat, tol=max(1e-7, 10 * TRACE_DRIFT_LIMIT))
        stored_t.append(t)
        snapshots.append(snap)
        if target_vec is None:
            f = float(np.trace(rho0 @ mat).real)  # overlap with the initial density
        else:
            f = float(np.vdot(target_vec, mat @ target_vec).real)
        fid.append(f)
        par.append(float(np.sum(parity_diag * mat.diagonal().real)) / trace)
        nbar.append(float(np.sum(diag_n * mat.diagonal().real)) / trace)
        tr.append(trace)

    store(0.0, rho)
    for i in range(len(times) - 1):
        t0, t1 = float(times[i]), float(times[i + 1])
        dt = t1 - t0
        h0 = h_at(t0)
        hm = h_at(t0 + 0.5 * dt)
        h1 = h_at(t1)
        k1 = rhs(rho, h0)
        k2 = rhs(rho + (0.5 * dt) * k1, hm)
        k3 = rhs(rho + (0.5 * dt) * k2, hm)
        k4 = rhs(rho + dt * k3, h1)
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        trace = float(np.trace(rho).real)
        if abs(trace - 1.0) > TRACE_DRIFT_LIMIT:
            raise TraceError(
                f"trace drifted to {trace:.12f} at t={t1:.4f} (limit {TRACE_DRIFT_LIMIT}); "
                "reduce dt"
            )
        if (i + 1) % cfg.store_every == 0 or i == len(times) - 2:
            store(t1, rho)

    return Trajectory(
        kind="density",
        times=np.array(stored_t),
        states=tuple(snapshots),
        fidelity=np.array(fid),
        parity=np.array(par),
        n_mean=np.array(nbar),
        trace=np.array(tr),
        kappa=kappa,
        dt=cfg.dt,
    )


@dataclass(frozen=True)
class SpectrumTrace:
    """Continuity-tracked low-lying spectrum along a schedule.

    energies has shape (len(times), n_levels); level k keeps its identity
    by eigenvector overlap from one sample to the next, and parities[k] is
    its (conserved) parity label.
    """

    times: np.ndarray
    energies: np.ndarray
    parities: np.ndarray = field(repr=False)

    @property
    def n_levels(self) -> int:
        return self.energies.shape[1]

    def gap_trace(self, upper: int, lower: int = 0) -> np.ndarray:
        return self.energies[:, upper] - self.energies[:, lower]

    def same_parity_gap_trace(self, reference: int = 0) -> np.ndarray:
        """Gap from a reference level to the next tracked level of its parity."""
        mask = self.parities == self.parities[reference]
        same = np.flatnonzero(mask)
        above = same[same > reference]
        if above.size == 0:
            raise ValueError("no tracked level shares the reference level's parity")
        partner = int(above[0])
        return self.energies[:, partner] - self.energies[:, reference]


def spectrum_along_schedule(
    schedule: Schedule,
    basis: FockBasis,
    level_count: int = 8,
    times: np.ndarray | None = None,
) -> SpectrumTrace:
    """Lowest level_count instantaneous eigenvalues at each schedule sample.

    Levels are matched between consecutive samples by maximum eigenvector
    overlap (assignment over a small buffer of extra levels), so crossings
    between parity sectors do not scramble the traces.
    """
    if level_count > basis.dim:
        raise ValueError(f"level_count {level_count} exceeds basis dim {basis.dim}")
    t_grid = schedule.times if times is None else np.asarray(times, dtype=float)
    n_track = level_count
    n_pool = min(basis.dim, level_count + 4)

    energies = np.empty((len(t_grid), n_track))
    prev_vecs: np.ndarray | None = None
    parities: np.ndarray | None = None

    for i, t in enumerate(t_grid):
        params = HamiltonianParams(
            kerr=1.0, detuning=float(schedule.delta_at(t)), drive=float(schedule.beta_at(t))
        )
        spec = eigendecompose(build_hamiltonian(params, basis))
        pool_e = spec.energies[:n_pool]
        pool_v = spec.states[:, :n_pool]
        pool_p = spec.parities[:n_pool]
        if prev_vecs is None:
            order = np.arange(n_track)
            parities = pool_p[:n_track].copy()
        else:
            overlap = np.abs(prev_vecs.conj().T @ pool_v) ** 2
            rows, cols = linear_sum_assignment(overlap, maximize=True)
            order = np.empty(n_track, dtype=int)
            order[rows] = cols
        energies[i] = pool_e[order]
        prev_vecs = pool_v[:, order]
    assert parities is not None
    return SpectrumTrace(times=np.asarray(t_grid, dtype=float), energies=energies, parities=parities)
