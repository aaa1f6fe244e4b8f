"""Phase-space analysis: Wigner maps, negativity, cat sizing, comparisons."""

import math

import numpy as np
import pytest

from kerrcat import (
    FockBasis,
    GridTooSmallError,
    LobeDetectionError,
    PhaseGrid,
    QuantumState,
    cat_state,
    coherent_state,
    fidelity,
    nonclassical_volume,
    protocol_report,
    wigner,
    wigner_point,
)


@pytest.fixture
def basis():
    return FockBasis(20)


def random_state(rng, dim):
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return QuantumState.pure(vec / np.linalg.norm(vec))


def test_phase_grid_validation():
    with pytest.raises(ValueError):
        PhaseGrid((-4.0, 4.0), (-4.0, 4.0), resolution=32)  # too coarse
    with pytest.raises(ValueError):
        PhaseGrid((-4.0, 3.0), (-4.0, 4.0), resolution=64)  # asymmetric
    grid = PhaseGrid.square(5.0, 128)
    assert grid.half_width == pytest.approx(5.0)
    assert grid.points().shape == (128, 128)


def test_wigner_routes_agree(rng):
    # the analytic recurrence and the matrix-exponential reference must
    # agree far below the 1e-8 contract
    state = random_state(rng, 12)
    grid = PhaseGrid.square(6.0, 64)
    fast = wigner(state, grid, method="fast")
    slow = wigner(state, grid, method="displace")
    assert np.max(np.abs(fast.values - slow.values)) < 1e-8


def test_wigner_origin_equals_parity(rng):
    for _ in range(5):
        state = random_state(rng, 24)
        expected = (2.0 / math.pi) * state.parity_expectation()
        assert wigner_point(state, 0.0) == pytest.approx(expected, abs=1e-9)


def test_wigner_integral_is_unit(basis):
    state = cat_state(1.8, "even", basis)
    wmap = wigner(state, PhaseGrid.square(5.0, 192))
    assert wmap.integral() == pytest.approx(1.0, abs=1e-3)


def test_wigner_rejects_unknown_method(basis):
    with pytest.raises(ValueError):
        wigner(basis.fock_state(0), PhaseGrid.square(5.0, 64), method="magic")


def test_grid_too_small_raises_with_suggestion():
    state = coherent_state(2.5, FockBasis(40))
    with pytest.raises(GridTooSmallError) as err:
        wigner(state, PhaseGrid.square(2.0, 64))
    assert "half-width" in str(err.value)


def test_gaussian_states_have_zero_negativity(basis):
    assert nonclassical_volume(basis.fock_state(0)) < 1e-3
    assert nonclassical_volume(coherent_state(1.5, FockBasis(24))) < 1e-3


def test_cat_negativity_converges_under_grid_doubling(basis):
    state = cat_state(2.1, "even", basis)
    coarse = nonclassical_volume(state, PhaseGrid.square(5.0, 128))
    fine = nonclassical_volume(state, PhaseGrid.square(5.0, 256))
    assert coarse > 0.3  # strongly nonclassical
    assert abs(fine - coarse) / fine < 0.01


def test_cat_size_matches_lobe_separation(basis):
    from kerrcat import cat_size

    size = cat_size(cat_state(2.1, "even", basis), PhaseGrid.square(5.0, 256))
    assert size == pytest.approx(2 * 2.1, rel=0.015)


def test_cat_size_needs_two_lobes(basis):
    from kerrcat import cat_size

    with pytest.raises(LobeDetectionError):
        cat_size(basis.fock_state(0), PhaseGrid.square(5.0, 128))
    with pytest.raises(LobeDetectionError):
        cat_size(coherent_state(1.2, basis), PhaseGrid.square(5.0, 128))


def test_wigner_reflection_symmetry(basis):
    # real-amplitude states give W symmetric under p -> -p, and the cat is
    # also symmetric under x -> -x
    wmap = wigner(cat_state(1.9, "even", basis), PhaseGrid.square(5.0, 128))
    assert np.max(np.abs(wmap.values - wmap.values[::-1, :])) < 1e-10
    assert np.max(np.abs(wmap.values - wmap.values[:, ::-1])) < 1e-10


def test_fidelity_bounds_and_identity(basis, rng):
    s1 = random_state(rng, basis.dim)
    s2 = random_state(rng, basis.dim)
    f = fidelity(s1, s2)
    assert 0.0 <= f <= 1.0
    assert fidelity(s1, s1) == pytest.approx(1.0)
    assert fidelity(s1, s2) == pytest.approx(fidelity(s2, s1))


def test_fidelity_linear_in_density(basis):
    even = cat_state(1.5, "even", basis)
    odd = cat_state(1.5, "odd", basis)
    mix = QuantumState.density(0.3 * even.as_density() + 0.7 * odd.as_density())
    f = fidelity(mix, even)
    assert f == pytest.approx(0.3 * fidelity(even, even) + 0.7 * fidelity(odd, even), abs=1e-12)


def test_fidelity_dimension_mismatch(basis):
    with pytest.raises(ValueError):
        fidelity(basis.fock_state(0), FockBasis(8).fock_state(0))


def test_protocol_report_traces_and_mark(basis):
    target = cat_state(1.5, "even", basis)

    class Series:
        def __init__(self, times, states):
            self.times = np.asarray(times)
            self.states = states

        @property
        def duration(self):
            return float(self.times[-1])

    # first run converges to the target, second stays at vacuum
    approach = [basis.fock_state(0), cat_state(1.0, "even", basis), target]
    stay = [basis.fock_state(0)] * 3
    first = Series([0.0, 0.5, 1.0], approach)
    second = Series([0.0, 0.6, 1.2], stay)
    grid = PhaseGrid.square(4.0, 64)
    report = protocol_report(first, second, target, grid=grid, sample_count=11, labels=("a", "b"))
    assert report.times[-1] == pytest.approx(1.0)  # common axis = shorter run
    f_first, f_second = report.fidelity_at_mark
    assert f_first == pytest.approx(1.0, abs=1e-9)
    assert f_second == pytest.approx(fidelity(basis.fock_state(0), target), abs=1e-9)
    assert len(report.fidelity_crossings) == 0
    v_first, v_second = report.volume_at_mark
    assert v_first > v_second


def test_protocol_report_rejects_bad_mark(basis):
    target = cat_state(1.5, "even", basis)

    class Series:
        times = np.array([0.0, 1.0])
        states = [basis.fock_state(0), basis.fock_state(0)]
        duration = 1.0

    with pytest.raises(ValueError):
        protocol_report(Series(), Series(), target, mark_time=2.0, sample_count=5,
                        grid=PhaseGrid.square(4.0, 64))
