import numpy as np
import pytest

from backend.calculus.grid import make_grid
from backend.calculus.operators import discrete_laplacian, radial_operators, to_general_band, to_upper_band
from backend.stability.pencil import SymmetricBand
from backend.utils.errors import ConfigurationError


@pytest.mark.parametrize("N", [2, 3, 9, 30])
def test_laplacian_of_r_squared_is_exact(N):
    grid = make_grid(200, 1e-4)
    ops = radial_operators(grid, N)
    lap = ops.apply_laplacian(grid.nodes**2)
    np.testing.assert_allclose(lap[:-1], 2 * N, rtol=1e-9)
    assert np.isnan(lap[-1])


def test_laplacian_of_constant_vanishes():
    grid = make_grid(100, 1e-3)
    lap = radial_operators(grid, 5).apply_laplacian(np.full(grid.size, 3.0))
    np.testing.assert_allclose(lap[:-1], 0.0, atol=1e-9)


def test_matrix_matches_apply_on_interior_rows():
    grid = make_grid(64, 1e-3)
    ops = radial_operators(grid, 4)
    values = np.cos(grid.nodes)
    via_matrix = discrete_laplacian(grid, 4) @ values
    np.testing.assert_allclose(via_matrix[:-1], ops.apply_laplacian(values)[:-1])
    assert via_matrix[-1] == pytest.approx(values[-1])


def test_stiffness_quadratic_form():
    grid = make_grid(50, 1e-3)
    N = 6
    ops = radial_operators(grid, N)
    f = 1.0 - grid.nodes**2
    g = ops.frame * f
    K = ops.stiffness(include_boundary=True)
    m, h = ops.faces, grid.spacing
    expected = np.sum(m ** (N - 1) * np.diff(f) ** 2 / h)
    assert g @ (K @ g) == pytest.approx(expected, rel=1e-10)


def test_stiffness_is_symmetric():
    grid = make_grid(40, 1e-2)
    K = radial_operators(grid, 7).stiffness()
    assert abs(K - K.T).max() == 0.0
    assert K.shape == (39, 39)


def test_dirichlet_eigenvalue_in_three_dimensions():
    grid = make_grid(2000, 1e-4)
    ops = radial_operators(grid, 3)
    value, _ = SymmetricBand.standard_form(ops.stiffness(), ops.interior_volumes(), 1).lowest()
    assert value == pytest.approx(np.pi**2, rel=1e-3)


def test_operators_are_cached_per_grid():
    grid = make_grid(32, 1e-3)
    assert radial_operators(grid, 5) is radial_operators(grid, 5)


def test_dimension_below_two_is_rejected():
    with pytest.raises(ConfigurationError):
        radial_operators(make_grid(32, 1e-3), 1)


def test_large_dimension_stays_finite_on_fine_grids():
    grid = make_grid(500, 1e-8)
    ops = radial_operators(grid, 40)
    for arr in (ops.volumes, ops.upper, ops.lower, ops.coupling):
        assert np.all(np.isfinite(arr))
        assert np.all(arr > 0)


def test_band_storage():
    grid = make_grid(20, 1e-2)
    L = discrete_laplacian(grid, 3)
    general = to_general_band(L, 1, 1)
    dense = L.toarray()
    assert general[1, 4] == dense[4, 4]
    assert general[0, 5] == dense[4, 5]
    assert general[2, 3] == dense[4, 3]

    K = radial_operators(grid, 3).stiffness()
    upper = to_upper_band(K, 1)
    assert upper[1, 2] == K[2, 2]
    assert upper[0, 3] == K[2, 3]
