import numpy as np
import pytest

from fieldroad.coupled import solve_coupled
from fieldroad.grid import build_field_grid
from fieldroad.model import ModelParams, fisher, road_logistic


@pytest.fixture(scope="session")
def kpp_params():
    return ModelParams(D=0.1, Dp=1.0, mu=1.0, nu=1.0, ell=10.0, L=10.0, m=1.0)


@pytest.fixture(scope="session")
def kpp_reactions(kpp_params):
    return fisher(kpp_params), road_logistic(kpp_params)


@pytest.fixture(scope="session")
def kpp_coupled(kpp_params, kpp_reactions):
    """Both outer brackets of the D=0.1, l=L=10 case on a 64x32 grid."""
    f, g = kpp_reactions
    grid = build_field_grid(kpp_params.ell, kpp_params.L, 64, 32)
    lower, upper = solve_coupled(kpp_params, f, g, grid)
    return grid, lower, upper


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


class _Recorder:
    def __init__(self, lines):
        self.lines = lines

    def __call__(self, number: int, passed: bool, detail: str) -> None:
        self.lines.append((number, bool(passed), detail))


@pytest.fixture
def criterion(request):
    return _Recorder(request.config._acceptance_lines)


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = sorted(config._acceptance_lines, key=lambda t: t[0])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in lines:
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
