"""Truncated Fock-space core: operators, spectra, and bosonic states.

Everything downstream works in a photon-number basis truncated at ``dim``
levels. The resonator Hamiltonian is

    H = kerr * ad^2 a^2 + detuning * ad a - drive * (ad^2 + a^2)

with ``kerr > 0`` and ``drive >= 0``; it conserves photon-number parity, so
spectra are computed per parity block and carry explicit parity labels.
Energies are in units of the Kerr coefficient throughout (kerr = 1 unless
stated otherwise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.linalg import expm

from .errors import TruncationError

#: relative tolerance used to reject non-Hermitian operator input
HERMITICITY_RTOL = 1e-12

#: energy window (relative to spectral scale) inside which eigenvalues are
#: treated as degenerate and reordered by parity (+ before -)
DEGENERACY_RTOL = 1e-9


@dataclass(frozen=True)
class FockBasis:
    """Photon-number basis |0>, ..., |dim-1>."""

    dim: int

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 2:
            raise ValueError(f"basis dimension must be an integer >= 2, got {self.dim!r}")

    @cached_property
    def annihilation(self) -> np.ndarray:
        a = np.zeros((self.dim, self.dim))
        ns = np.arange(1, self.dim, dtype=float)
        a[np.arange(self.dim - 1), np.arange(1, self.dim)] = np.sqrt(ns)
        return a

    @cached_property
    def creation(self) -> np.ndarray:
        return self.annihilation.T.copy()

    @cached_property
    def number_diag(self) -> np.ndarray:
        return np.arange(self.dim, dtype=float)

    @cached_property
    def number(self) -> np.ndarray:
        return np.diag(self.number_diag)

    @cached_property
    def kerr_diag(self) -> np.ndarray:
        """Diagonal of ad^2 a^2, i.e. n(n-1)."""
        n = self.number_diag
        return n * (n - 1.0)

    @cached_property
    def drive_op(self) -> np.ndarray:
        """ad^2 + a^2 (real symmetric, couples n to n+-2)."""
        d = np.zeros((self.dim, self.dim))
        n = np.arange(self.dim - 2, dtype=float)
        off = np.sqrt((n + 1.0) * (n + 2.0))
        d[np.arange(self.dim - 2), np.arange(2, self.dim)] = off
        d[np.arange(2, self.dim), np.arange(self.dim - 2)] = off
        return d

    @cached_property
    def parity_diag(self) -> np.ndarray:
        """Diagonal of the parity operator exp(i*pi*ad a), i.e. (-1)^n."""
        return np.where(np.arange(self.dim) % 2 == 0, 1.0, -1.0)

    @cached_property
    def parity(self) -> np.ndarray:
        return np.diag(self.parity_diag)

    def sector_indices(self, parity: str) -> np.ndarray:
        """Fock indices belonging to the even or odd parity sector."""
        start = 0 if _parity_key(parity) == "even" else 1
        return np.arange(start, self.dim, 2)

    def fock_state(self, n: int) -> "QuantumState":
        if not 0 <= n < self.dim:
            raise ValueError(f"fock level {n} outside basis of dimension {self.dim}")
        v = np.zeros(self.dim, dtype=complex)
        v[n] = 1.0
        return QuantumState.pure(v)


@dataclass(frozen=True)
class HamiltonianParams:
    """Hamiltonian coefficients (kerr, detuning, drive), kerr units."""

    kerr: float = 1.0
    detuning: float = 0.0
    drive: float = 0.0

    def __post_init__(self):
        if not self.kerr > 0:
            raise ValueError(f"kerr coefficient must be positive, got {self.kerr}")
        if self.drive < 0:
            raise ValueError(f"drive amplitude must be non-negative, got {self.drive}")


def _parity_key(parity) -> str:
    """Normalize a parity label ('even'/'odd' or +-1) to a string key."""
    if parity in ("even", "odd"):
        return parity
    if parity in (1, +1.0):
        return "even"
    if parity in (-1, -1.0):
        return "odd"
    raise ValueError(f"parity must be 'even', 'odd', +1 or -1, got {parity!r}")


class QuantumState:
    """A validated pure state vector or density matrix over a Fock basis."""

    __slots__ = ("kind", "data")

    def __init__(self, kind: str, data: np.ndarray, tol: float = 1e-9):
        if kind not in ("pure", "density"):
            raise ValueError(f"state kind must be 'pure' or 'density', got {kind!r}")
        data = np.asarray(data, dtype=complex)
        if kind == "pure":
            if data.ndim != 1:
                raise ValueError("pure state data must be a vector")
            norm = np.linalg.norm(data)
            if abs(norm - 1.0) > tol:
                raise ValueError(f"pure state norm {norm} deviates from 1 by more than {tol}")
        else:
            if data.ndim != 2 or data.shape[0] != data.shape[1]:
                raise ValueError("density matrix must be square")
            if np.abs(data - data.conj().T).max() > tol:
                raise ValueError("density matrix is not Hermitian within tolerance")
            tr = np.trace(data).real
            if abs(tr - 1.0) > tol:
                raise ValueError(f"density matrix trace {tr} deviates from 1 by more than {tol}")
            lo = np.linalg.eigvalsh(data)[0]
            if lo < -max(tol, 1e-9):
                raise ValueError(f"density matrix has negative eigenvalue {lo}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "data", data)

    def __setattr__(self, name, value):
        raise AttributeError("QuantumState is immutable")

    @classmethod
    def pure(cls, vector, tol: float = 1e-9) -> "QuantumState":
        return cls("pure", vector, tol=tol)

    @classmethod
    def density(cls, matrix, tol: float = 1e-9) -> "QuantumState":
        return cls("density", matrix, tol=tol)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def as_density(self) -> np.ndarray:
        """Density-matrix view of the state (outer product for pure states)."""
        if self.kind == "pure":
            return np.outer(self.data, self.data.conj())
        return self.data

    def expectation(self, op: np.ndarray) -> float:
        """<O> for a Hermitian operator; returns the real part."""
        if self.kind == "pure":
            val = np.vdot(self.data, op @ self.data)
        else:
            val = np.trace(op @ self.data)
        return float(val.real)

    def expectation_diag(self, diag: np.ndarray) -> float:
        """<O> for an operator diagonal in the Fock basis."""
        if self.kind == "pure":
            return float(np.sum(diag * np.abs(self.data) ** 2).real)
        return float(np.sum(diag * np.diag(self.data).real))

    def mean_photons(self) -> float:
        return self.expectation_diag(np.arange(self.dim, dtype=float))

    def parity_expectation(self) -> float:
        basis = FockBasis(self.dim)
        return self.expectation_diag(basis.parity_diag)


@dataclass(frozen=True)
class Spectrum:
    """Eigenpairs sorted by energy, with parity labels.

    ``states[:, k]`` is the k-th eigenvector. Each eigenvector has definite
    photon-number parity (``parities[k]`` is +1 or -1), the gauge fixes the
    largest-magnitude component real and positive, and numerically degenerate
    levels are ordered even-before-odd.
    """

    energies: np.ndarray
    states: np.ndarray
    parities: np.ndarray

    def sector(self, parity) -> tuple[np.ndarray, np.ndarray]:
        """(energies, states) restricted to one parity sector."""
        want = 1 if _parity_key(parity) == "even" else -1
        mask = self.parities == want
        return self.energies[mask], self.states[:, mask]


def build_annihilation(basis: FockBasis) -> np.ndarray:
    """Annihilation operator a with a[m, m+1] = sqrt(m+1)."""
    return basis.annihilation.copy()


def build_hamiltonian(params: HamiltonianParams, basis: FockBasis) -> np.ndarray:
    """Assemble the resonator Hamiltonian as a real symmetric matrix.

    Diagonal entries are kerr*n(n-1) + detuning*n; the drive couples n to
    n+-2 with amplitude -drive*sqrt((n+1)(n+2)). The result is symmetric by
    construction.
    """
    h = -params.drive * basis.drive_op
    idx = np.arange(basis.dim)
    h[idx, idx] = params.kerr * basis.kerr_diag + params.detuning * basis.number_diag
    return h


def analytic_energy(n: int, detuning: float, kerr: float = 1.0) -> float:
    """Drive-free eigenenergy of Fock level n, referenced to level 0.

    With zero drive the Hamiltonian is diagonal and the spectrum is a shifted
    parabola in n: E_n = kerr*(n + detuning/(2 kerr) - 1/2)^2 - E_0-offset.
    Levels n and m are degenerate whenever n + m = 1 - detuning/kerr.
    """
    x = detuning / (2.0 * kerr) - 0.5
    return kerr * ((n + x) ** 2 - x**2)


def _gauge_fix(states: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    out = states.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        i = int(np.argmax(np.abs(col)))
        pivot = col[i]
        if abs(pivot) > 0:
            out[:, k] = col * (np.conj(pivot) / abs(pivot))
    return out


def eigendecompose(h: np.ndarray, basis: FockBasis | None = None) -> Spectrum:
    """Diagonalize a parity-conserving Hermitian Hamiltonian.

    Rejects non-Hermitian input, and input that couples parity sectors
    (the resonator Hamiltonian never does). Each sector is diagonalized
    separately so every eigenvector has exactly definite parity even at
    cross-sector degeneracies.
    """
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("Hamiltonian must be a square matrix")
    dim = h.shape[0]
    if basis is None:
        basis = FockBasis(dim)
    elif basis.dim != dim:
        raise ValueError(f"basis dimension {basis.dim} does not match matrix size {dim}")

    scale = max(np.abs(h).max(), 1e-300)
    if np.abs(h - h.conj().T).max() > HERMITICITY_RTOL * scale:
        raise ValueError("Hamiltonian is not Hermitian within tolerance")

    # Parity commutation check: [H, P] has entries H[i, j]*(p_j - p_i), so it
    # vanishes iff all opposite-parity couplings do.
    p = basis.parity_diag
    cross = np.abs(h * (p[None, :] - p[:, None]))
    if cross.max() > HERMITICITY_RTOL * scale:
        raise ValueError("Hamiltonian does not conserve photon-number parity")

    energies = np.empty(dim)
    parities = np.empty(dim, dtype=int)
    real_input = not np.iscomplexobj(h)
    states = np.zeros((dim, dim), dtype=float if real_input else complex)
    pos = 0
    for parity_name, label in (("even", 1), ("odd", -1)):
        idx = basis.sector_indices(parity_name)
        block = h[np.ix_(idx, idx)]
        if real_input:
            block = block.real
        vals, vecs = np.linalg.eigh(block)
        k = len(idx)
        energies[pos : pos + k] = vals
        parities[pos : pos + k] = label
        states[np.ix_(idx, np.arange(pos, pos + k))] = vecs
        pos += k

    # Merge sectors: ascending energy, even before odd within degeneracies.
    order = np.argsort(energies, kind="stable")
    energies, parities, states = energies[order], parities[order], states[:, order]
    tol = DEGENERACY_RTOL * max(1.0, np.abs(energies).max())
    start = 0
    while start < dim:
        stop = start + 1
        while stop < dim and energies[stop] - energies[start] <= tol:
            stop += 1
        if stop - start > 1:
            sub = np.argsort(-parities[start:stop], kind="stable")
            sl = slice(start, stop)
            energies[sl] = energies[sl][sub]
            parities[sl] = parities[sl][sub]
            states[:, sl] = states[:, sl][:, sub]
        start = stop

    return Spectrum(energies=energies, states=_gauge_fix(states), parities=parities)


def _check_amplitude(alpha: complex, basis: FockBasis, what: str) -> None:
    # |alpha|^2 <= dim/4 keeps the neglected Poisson tail below ~1e-12.
    if abs(alpha) ** 2 > basis.dim / 4.0:
        raise TruncationError(
            f"{what} with |amplitude|^2 = {abs(alpha)**2:.3f} unsafe in a "
            f"{basis.dim}-level basis; need dim >= {math.ceil(4 * abs(alpha) ** 2)}"
        )


def coherent_state(alpha: complex, basis: FockBasis) -> QuantumState:
    """Coherent state |alpha>, truncated and renormalized.

    Amplitudes follow exp(-|alpha|^2/2) * alpha^n / sqrt(n!); construction is
    by the stable running product, normalized after truncation.
    """
    _check_amplitude(alpha, basis, "coherent state")
    amps = np.empty(basis.dim, dtype=complex)
    amps[0] = 1.0
    for n in range(1, basis.dim):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    amps /= np.linalg.norm(amps)
    return QuantumState.pure(amps)


def cat_state(alpha: complex, parity, basis: FockBasis) -> QuantumState:
    """Even or odd Schrodinger cat state N(|alpha> +- |-alpha>).

    Built directly from the parity-projected Poisson amplitudes, so the
    odd cat degenerates smoothly to |1> (and the even cat to |0>) as
    alpha -> 0.
    """
    _check_amplitude(alpha, basis, "cat state")
    key = _parity_key(parity)
    amps = np.zeros(basis.dim, dtype=complex)
    # Common powers of alpha are factored out (they only rescale the norm);
    # for the odd branch this removes the alpha -> 0 singularity.
    if key == "even":
        term = 1.0 + 0.0j
        amps[0] = term
        for n in range(2, basis.dim, 2):
            term = term * alpha * alpha / math.sqrt(n * (n - 1))
            amps[n] = term
    else:
        term = 1.0 + 0.0j
        amps[1] = term
        for n in range(3, basis.dim, 2):
            term = term * alpha * alpha / math.sqrt(n * (n - 1))
            amps[n] = term
    norm = np.linalg.norm(amps)
    return QuantumState.pure(amps / norm)


@lru_cache(maxsize=None)
def _displacement_cached(alpha: complex, dim: int) -> np.ndarray:
    basis = FockBasis(dim)
    gen = alpha * basis.creation - np.conj(alpha) * basis.annihilation
    return expm(gen.astype(complex))


def displacement_operator(alpha: complex, basis: FockBasis) -> np.ndarray:
    """D(alpha) = exp(alpha ad - alpha* a) by scaling-and-squaring expm."""
    return _displacement_cached(complex(alpha), basis.dim).copy()


def displaced_fock(alpha: complex, n: int, basis: FockBasis) -> QuantumState:
    """Displaced Fock state D(alpha)|n>, renormalized after truncation."""
    if not 0 <= n < basis.dim:
        raise ValueError(f"fock level {n} outside basis of dimension {basis.dim}")
    _check_amplitude(alpha, basis, "displaced fock state")
    vec = _displacement_cached(complex(alpha), basis.dim)[:, n]
    norm = np.linalg.norm(vec)
    if abs(norm - 1.0) > 1e-3:
        raise TruncationError(
            f"displaced fock state lost norm {1 - norm:.2e} to truncation; increase dim"
        )
    return QuantumState.pure(vec / norm)
