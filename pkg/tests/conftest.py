"""Shared fixtures and the acceptance-criteria terminal report."""

from fractions import Fraction

import pytest

from lattes_forge import (
    LattesSpec,
    TorusParameter,
    build_rational_map,
    make_marked_point,
    solve_collision,
    solve_gamma_k,
    standard_parameters,
)

GAMMA0 = complex(1.0 / 3.0, 1.0)

# criterion label -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def record_criterion(label: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[label] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for label in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[label]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{verdict}  {label}: {detail}")


@pytest.fixture(scope="session")
def spec_a2():
    return LattesSpec(TorusParameter(GAMMA0), 2, "EvenZero")


@pytest.fixture(scope="session")
def pair_a2():
    return standard_parameters(Fraction(1, 3), Fraction(1), 2)


@pytest.fixture(scope="session")
def base_a2(spec_a2):
    return build_rational_map(spec_a2)


@pytest.fixture(scope="session")
def collision_rows(spec_a2, pair_a2):
    """(k, s_k result, t_k result) for k = 3..6 at the base lattice shape."""
    rows = []
    for k in range(3, 7):
        mx = make_marked_point(spec_a2, pair_a2, k, "X")
        my = make_marked_point(spec_a2, pair_a2, k, "Y")
        rows.append((k, solve_collision(spec_a2, mx), solve_collision(spec_a2, my)))
    return rows


@pytest.fixture(scope="session")
def construction_results(spec_a2, pair_a2):
    return [solve_gamma_k(spec_a2, pair_a2, k) for k in range(3, 7)]
