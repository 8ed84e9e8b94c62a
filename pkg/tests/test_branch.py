import math

import numpy as np
import pandas as pd
import pytest

from backend.calculus.grid import make_grid
from backend.solver.branch import (
    CSV_COLUMNS,
    best_upper_bound,
    branch_on_grid,
    certified_table_bound,
    continue_branch,
    lambda_star_upper_bound,
    minimal_solution,
)
from backend.solver.navier import NavierSolver
from backend.solver.params import ProblemParams
from backend.subsolutions.certificate import touchdown_profile_check
from backend.subsolutions.profiles import lambda_bar
from backend.utils.errors import ConfigurationError, NonConvergence


@pytest.fixture
def nine():
    return ProblemParams.build(N=9)


def test_tiny_lambda_is_nearly_linear(solver_grid):
    params = ProblemParams.build(N=5)
    point = minimal_solution(params, 1e-6, grid=solver_grid)
    linear = NavierSolver(params, solver_grid).solve_function(np.full(solver_grid.size, 1e-6))
    assert point.sup_norm == pytest.approx(linear.sup(), rel=1e-4)
    assert point.iterations <= 5
    assert point.energy_gap >= -1e-12


def test_zero_lambda_returns_the_lifting(solver_grid):
    params = ProblemParams.build(N=5, alpha=0.1, gamma=-0.5)
    point = minimal_solution(params, 0.0, grid=solver_grid)
    lifting = NavierSolver(params, solver_grid).lifting()
    np.testing.assert_allclose(point.u.values, lifting.values, atol=1e-12)


def test_negative_lambda_is_rejected(solver_grid):
    with pytest.raises(ConfigurationError):
        minimal_solution(ProblemParams.build(N=5), -1.0, grid=solver_grid)


def test_no_minimal_solution_beyond_the_certified_bound(nine, solver_grid):
    with pytest.raises(NonConvergence) as excinfo:
        minimal_solution(nine, 300.0, grid=solver_grid)
    assert excinfo.value.lam == 300.0
    assert excinfo.value.reason in {"touchdown", "max_iter"}


def test_warm_start_must_share_the_grid(solver_grid):
    params = ProblemParams.build(N=5)
    point = minimal_solution(params, 1.0, grid=solver_grid)
    with pytest.raises(ConfigurationError):
        minimal_solution(params, 2.0, grid=make_grid(400, 1e-5), start=point.u)


def test_fixed_lambda_grid(solver_grid):
    params = ProblemParams.build(N=5)
    result = branch_on_grid(params, [20.0, 5.0, 10.0, 10.0], grid=solver_grid, with_mu1=True)
    assert [p.lam for p in result.points] == [5.0, 10.0, 20.0]
    assert math.isinf(result.lambda_star_high)
    assert math.isinf(result.relative_width)
    assert result.lambda_star_low == 20.0

    sups = [p.sup_norm for p in result.points]
    mus = [p.mu1 for p in result.points]
    assert sups == sorted(sups)
    assert all(np.diff(mus) <= 0)
    assert all(mu > 0 for mu in mus)
    assert all(p.energy_gap >= -1e-8 for p in result.points)

    profiles = np.array([p.u.values for p in result.points])
    assert np.all(np.diff(profiles, axis=0) >= -1e-8)
    assert result.meta["mode"] == "fixed"


def test_fixed_grid_stops_at_first_failure(solver_grid):
    params = ProblemParams.build(N=5)
    result = branch_on_grid(params, [5.0, 1000.0, 10.0], grid=solver_grid)
    assert [p.lam for p in result.points] == [5.0, 10.0]
    assert result.lambda_star_high == 1000.0


def test_empty_lambda_grid_is_rejected(solver_grid):
    with pytest.raises(ConfigurationError):
        branch_on_grid(ProblemParams.build(N=5), [], grid=solver_grid)


def test_csv_export(tmp_path, solver_grid):
    result = branch_on_grid(ProblemParams.build(N=5), [1.0, 2.0], grid=solver_grid)
    frame = result.to_frame()
    assert list(frame.columns) == CSV_COLUMNS
    assert frame["mu1"].isna().all()

    path = result.to_csv(tmp_path / "out" / "branch.csv")
    loaded = pd.read_csv(path)
    assert list(loaded.columns) == CSV_COLUMNS
    assert loaded["lambda"].tolist() == [1.0, 2.0]


def test_spectral_upper_bound_in_three_dimensions():
    grid = make_grid(2000, 1e-5)
    bound = lambda_star_upper_bound(ProblemParams.build(N=3), grid)
    assert bound == pytest.approx(4.0 * np.pi**4 / 27.0, rel=5e-3)


def test_certified_bound_applies_only_to_the_pure_problem():
    assert certified_table_bound(ProblemParams.build(N=9)) == 249
    assert certified_table_bound(ProblemParams.build(N=9, beta=2.0)) == 498
    assert certified_table_bound(ProblemParams.build(N=9, tau=1.0)) is None
    assert certified_table_bound(ProblemParams.build(N=9, alpha=0.1)) is None
    assert certified_table_bound(ProblemParams.build(N=20)) is None


def test_best_bound_is_the_smaller_one(nine, solver_grid):
    bounds = best_upper_bound(nine, solver_grid)
    assert bounds["certified"] == 249
    assert bounds["best"] == min(bounds["spectral"], 249)


def test_continuation_needs_a_sensible_width(nine, solver_grid):
    with pytest.raises(ConfigurationError):
        continue_branch(nine, rel_width=0.0, grid=solver_grid)


@pytest.mark.slow
def test_pull_in_bracket_in_dimension_nine(nine, solver_grid):
    result = continue_branch(nine, rel_width=1e-2, grid=solver_grid, with_mu1=True)
    assert result.lambda_star_high <= 254.0
    assert result.lambda_star_low >= float(lambda_bar(9))
    assert result.relative_width < 1e-2

    lams = [p.lam for p in result.points]
    sups = [p.sup_norm for p in result.points]
    mus = [p.mu1 for p in result.points]
    assert lams == sorted(lams)
    assert sups == sorted(sups)
    assert all(np.diff(mus) <= 1e-6 * abs(mus[0]))
    assert all(p.energy_gap >= -1e-8 for p in result.points)
    profiles = np.array([p.u.values for p in result.points])
    assert np.all(np.diff(profiles, axis=0) >= -1e-8)

    check = touchdown_profile_check(result, 9, 1.0)
    assert check["lambda"] == result.points[-1].lam
    assert check["constant"] > 0.0


@pytest.mark.slow
def test_branch_quantities_survive_grid_doubling(nine):
    coarse, fine = (continue_branch(nine, rel_width=1e-3, grid=make_grid(M, 1e-5)) for M in (800, 1600))
    for attr in ("energy", "inverse_cubed_mass"):
        a = max(getattr(p, attr) for p in coarse.points)
        b = max(getattr(p, attr) for p in fine.points)
        assert abs(a - b) <= 0.05 * max(abs(a), abs(b)), attr
    assert fine.lambda_star_high == pytest.approx(coarse.lambda_star_high, rel=1e-2)
