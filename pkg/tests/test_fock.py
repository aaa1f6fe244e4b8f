"""Fock-space building blocks: operators, states, spectra."""

import math

import numpy as np
import pytest

from kerrcat import (
    FockBasis,
    HamiltonianParams,
    QuantumState,
    analytic_energy,
    build_annihilation,
    build_hamiltonian,
    cat_state,
    coherent_state,
    displaced_fock,
    displacement_operator,
    eigendecompose,
)


@pytest.fixture
def basis():
    return FockBasis(24)


def test_annihilation_matrix_elements(basis):
    a = build_annihilation(basis)
    for m in range(basis.dim - 1):
        assert a[m, m + 1] == pytest.approx(math.sqrt(m + 1))
    assert np.count_nonzero(a) == basis.dim - 1


def test_number_operator_from_ladder(basis):
    a = build_annihilation(basis)
    n = a.conj().T @ a
    assert np.allclose(np.diag(n), np.arange(basis.dim))


def test_basis_dimension_validation():
    with pytest.raises(ValueError):
        FockBasis(1)
    with pytest.raises(ValueError):
        FockBasis(2.5)


def test_hamiltonian_is_hermitian(basis):
    h = build_hamiltonian(HamiltonianParams(detuning=1.3, drive=0.7), basis)
    assert np.allclose(h, h.conj().T)


def test_hamiltonian_diagonal_matches_closed_form(basis):
    # Without a drive the Hamiltonian is diagonal in the number basis.
    for detuning in (0.0, 0.5, -1.0, 2.0):
        h = build_hamiltonian(HamiltonianParams(detuning=detuning), basis)
        assert np.allclose(h, np.diag(np.diag(h)))
        diag = np.diag(h).real
        expected = [analytic_energy(n, detuning) for n in range(basis.dim)]
        assert np.allclose(diag, expected, atol=1e-12)


def test_negative_drive_rejected():
    with pytest.raises(ValueError):
        HamiltonianParams(drive=-0.1)
    with pytest.raises(ValueError):
        HamiltonianParams(kerr=0.0)


def test_coherent_state_moments(basis):
    alpha = 1.3 - 0.4j
    state = coherent_state(alpha, basis)
    assert state.mean_photons() == pytest.approx(abs(alpha) ** 2, abs=1e-9)
    a = build_annihilation(basis)
    mean_a = state.data.conj() @ (a @ state.data)
    assert mean_a == pytest.approx(alpha, abs=1e-9)


def test_cat_state_parity_and_support(basis):
    even = cat_state(1.7, "even", basis)
    odd = cat_state(1.7, "odd", basis)
    assert even.parity_expectation() == pytest.approx(1.0, abs=1e-12)
    assert odd.parity_expectation() == pytest.approx(-1.0, abs=1e-12)
    assert np.allclose(even.data[1::2], 0.0)
    assert np.allclose(odd.data[::2], 0.0)
    # interference factor: <alpha|-alpha> = exp(-2|alpha|^2)
    plus = coherent_state(1.7, basis).data
    minus = coherent_state(-1.7, basis).data
    norm = math.sqrt(2.0 * (1.0 + math.exp(-2.0 * 1.7**2)))
    assert np.allclose(even.data, (plus + minus) / norm, atol=1e-12)


def test_cat_state_small_amplitude_limits(basis):
    # regular limits: even cat -> |0>, odd cat -> |1>
    assert np.allclose(cat_state(0.0, "even", basis).data, basis.fock_state(0).data)
    assert np.allclose(cat_state(0.0, "odd", basis).data, basis.fock_state(1).data)


def test_displacement_operator_unitary(basis):
    d = displacement_operator(0.8 + 0.3j, basis)
    # unitary on the low-photon block; truncation spoils the last columns
    block = (d.conj().T @ d)[:8, :8]
    assert np.allclose(block, np.eye(8), atol=1e-8)


def test_displaced_fock_matches_coherent(basis):
    assert np.allclose(
        displaced_fock(1.1, 0, basis).data,
        coherent_state(1.1, basis).data,
        atol=1e-10,
    )
    shifted = displaced_fock(1.1, 3, basis)
    assert shifted.mean_photons() == pytest.approx(3 + 1.1**2, abs=1e-6)


def test_eigendecompose_sorted_with_parities(basis):
    h = build_hamiltonian(HamiltonianParams(detuning=2.0, drive=1.5), basis)
    spec = eigendecompose(h, basis)
    assert np.all(np.diff(spec.energies) >= -1e-12)
    assert set(np.unique(spec.parities)) <= {-1, 1}
    # eigenvectors diagonalize h
    recon = spec.states.conj().T @ h @ spec.states
    assert np.allclose(np.diag(recon).real, spec.energies, atol=1e-9)


def test_spectrum_sector_split(basis):
    h = build_hamiltonian(HamiltonianParams(detuning=1.0, drive=0.5), basis)
    spec = eigendecompose(h, basis)
    even_e, even_v = spec.sector("even")
    odd_e, odd_v = spec.sector("odd")
    assert len(even_e) + len(odd_e) == basis.dim
    assert even_v.shape[1] == len(even_e)
    # even-sector vectors live on even Fock indices only
    assert np.allclose(even_v[1::2, :], 0.0, atol=1e-10)
    assert np.allclose(odd_v[::2, :], 0.0, atol=1e-10)


def test_analytic_energy_degeneracies():
    assert analytic_energy(0, 0.0) == pytest.approx(analytic_energy(1, 0.0), abs=1e-14)
    assert analytic_energy(0, -1.0) == pytest.approx(analytic_energy(2, -1.0), abs=1e-14)
    assert analytic_energy(3, -7.0) == pytest.approx(analytic_energy(5, -7.0), abs=1e-14)


def test_quantum_state_validation(basis):
    with pytest.raises(ValueError):
        QuantumState.pure(np.array([1.0, 1.0]))  # not normalized
    vec = np.zeros(4)
    vec[0] = 1.0
    state = QuantumState.pure(vec)
    rho = state.as_density()
    assert rho.shape == (4, 4)
    assert rho[0, 0] == pytest.approx(1.0)
    mixed = QuantumState.density(np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex))
    assert mixed.kind == "density"
    assert mixed.mean_photons() == pytest.approx(0.5)
    with pytest.raises(ValueError):
        QuantumState.density(np.diag([0.9, 0.3, 0.0, 0.0]).astype(complex))


def test_sector_indices(basis):
    even = basis.sector_indices("even")
    odd = basis.sector_indices("odd")
    assert np.array_equal(even, np.arange(0, basis.dim, 2))
    assert np.array_equal(odd, np.arange(1, basis.dim, 2))
