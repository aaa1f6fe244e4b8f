"""Shared fixtures: the reference plan and its evolutions are session-scoped
because planning and integration dominate the suite's runtime."""

import math

import numpy as np
import pytest

from kerrcat import (
    EvolutionConfig,
    FockBasis,
    PlannerConfig,
    cat_state,
    evolve_lindblad,
    evolve_schrodinger,
    plan_path,
    schedule_from_path,
)

REFERENCE_DURATION = 2.5


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per criterion, then enforce it."""

    def check(num: int, desc: str, clauses: list[tuple[str, bool]]):
        failed = [name for name, ok in clauses if not ok]
        verdict = "PASS" if not failed else "FAIL"
        line = f"ACCEPTANCE {num:02d} {verdict}: {desc}"
        if failed:
            line += f" (failed: {'; '.join(failed)})"
        request.config._acceptance_lines.append(line)
        assert not failed, line

    return check


@pytest.fixture(scope="session")
def default_path():
    return plan_path(PlannerConfig(delta0=2.0))


@pytest.fixture(scope="session")
def default_schedule(default_path):
    return schedule_from_path(default_path, REFERENCE_DURATION)


@pytest.fixture(scope="session")
def basis40(default_path):
    return FockBasis(40)


@pytest.fixture(scope="session")
def even_target(default_path, basis40):
    return cat_state(math.sqrt(default_path.final_drive), "even", basis40)


@pytest.fixture(scope="session")
def odd_target(default_path, basis40):
    return cat_state(math.sqrt(default_path.final_drive), "odd", basis40)


@pytest.fixture(scope="session")
def tpc_even(default_schedule, basis40, even_target):
    return evolve_schrodinger(
        basis40.fock_state(0), default_schedule, basis40, EvolutionConfig(), even_target
    )


@pytest.fixture(scope="session")
def tpc_odd(default_schedule, basis40, odd_target):
    return evolve_schrodinger(
        basis40.fock_state(1), default_schedule, basis40, EvolutionConfig(), odd_target
    )


@pytest.fixture(scope="session")
def lindblad_zero(default_schedule, basis40, even_target):
    cfg = EvolutionConfig(kappa=0.0)
    return evolve_lindblad(
        basis40.fock_state(0), default_schedule, basis40, cfg, even_target
    )


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260814)
