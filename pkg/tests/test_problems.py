import numpy as np
import pytest
from scipy.integrate import solve_ivp

from cvqode.problems import (
    IntegrationError,
    IVProblem,
    linear_problem,
    reference_solution,
    riccati_problem,
    rk4_solve,
    stiff_problem,
)
from cvqode.training import make_grid

# y(0.5) of the Riccati problem: RK4 with steps 1e-4 and 5e-5 agree to 4e-15
# and an independent DOP853 solve (rtol 1e-13) agrees to 4e-15.
RICCATI_AT_HALF = -0.42403083598738


def test_linear_problem():
    p = linear_problem()
    assert (p.x0, p.y0, p.domain) == (0.0, 1.0, (-1.0, 1.0))
    assert p.exact(0.0) == 1.0
    assert p.exact(1.0) == pytest.approx(0.36787944, abs=1e-8)
    x = 0.5
    assert abs(-2 * x * p.exact(x) - p.rhs(x, p.exact(x))) <= 1e-14
    assert p.rhs_dy(0.3, 5.0) == -0.6


def test_riccati_problem():
    p = riccati_problem()
    assert p.exact is None
    assert p.rhs(0.0, 0.0) == -1.0
    assert p.rhs(1.0, 0.0) == 0.0
    assert p.rhs_dy(0.0, 0.25) == 0.5


def test_stiff_problem():
    p = stiff_problem()
    assert (p.x0, p.y0, p.domain) == (0.0, 0.5, (0.0, 1.0))
    assert p.exact(0.0) == 0.5
    assert p.exact(1.0) == pytest.approx(0.06766764, abs=1e-8)
    for x in np.linspace(0, 1, 7):
        assert abs(-p.exact(x) * 2 - p.rhs(x, p.exact(x))) <= 1e-14


def test_problem_validation():
    with pytest.raises(ValueError):
        linear_problem(domain=(1.0, -1.0))
    with pytest.raises(ValueError):
        stiff_problem(domain=(0.5, 1.0))


@pytest.mark.parametrize("factory", [linear_problem, stiff_problem])
def test_rk4_matches_analytic(factory):
    p = factory()
    grid = make_grid(p.domain, 20).points
    ref = rk4_solve(p, grid, substeps=100)
    assert ref.method == "rk4"
    assert np.max(np.abs(ref.ys - p.exact(grid))) <= 1e-10


def test_rk4_fourth_order_convergence():
    # a coarse grid keeps the error above round-off for all substep counts
    p = linear_problem()
    grid = np.array([-1.0, 0.0, 1.0])
    steps = np.array([10, 20, 40, 80])
    errors = [np.max(np.abs(rk4_solve(p, grid, k).ys - p.exact(grid))) for k in steps]
    slope = -np.polyfit(np.log(steps), np.log(errors), 1)[0]
    assert slope == pytest.approx(4.0, abs=0.2)
    assert errors[0] / errors[1] == pytest.approx(16, rel=0.1)


def test_riccati_regression_value():
    p = riccati_problem()
    a = rk4_solve(p, [0.0, 0.5], substeps=5000).ys[1]
    b = rk4_solve(p, [0.0, 0.5], substeps=10000).ys[1]
    assert abs(a - b) <= 1e-9
    assert a == pytest.approx(RICCATI_AT_HALF, abs=1e-12)


def test_riccati_against_scipy():
    p = riccati_problem()
    grid = make_grid(p.domain, 20).points
    ours = rk4_solve(p, grid, substeps=100).ys
    f = lambda x, y: [p.rhs(x, y[0])]
    right = solve_ivp(f, (0, 1), [0.0], method="DOP853", rtol=1e-12, atol=1e-14, t_eval=grid[grid >= 0])
    left = solve_ivp(f, (0, -1), [0.0], method="DOP853", rtol=1e-12, atol=1e-14, t_eval=grid[grid < 0][::-1])
    theirs = np.concatenate([left.y[0][::-1], right.y[0]])
    assert np.max(np.abs(ours - theirs)) <= 1e-9


def test_directional_passes_match_one_sided_solves():
    p = linear_problem()
    grid = make_grid(p.domain, 20).points
    full = rk4_solve(p, grid).ys
    right = rk4_solve(p, grid[grid >= 0]).ys
    left = rk4_solve(p, grid[grid < 0]).ys
    np.testing.assert_allclose(full[grid >= 0], right, rtol=0, atol=1e-12)
    np.testing.assert_allclose(full[grid < 0], left, rtol=0, atol=1e-12)
    # even solution, symmetric grid
    np.testing.assert_allclose(full, full[::-1], rtol=0, atol=1e-12)


def test_reference_solution_dispatch():
    grid = make_grid((-1, 1), 5).points
    assert reference_solution(linear_problem(), grid).method == "analytic"
    assert reference_solution(riccati_problem(), grid).method == "rk4"


def test_rk4_input_validation():
    p = linear_problem()
    with pytest.raises(ValueError):
        rk4_solve(p, [0.0, 1.0], substeps=0)
    with pytest.raises(ValueError):
        rk4_solve(p, [1.0, 0.0])


def test_blow_up_reports_position():
    # y' = y^2, y(0) = 1 blows up at x = 1
    p = IVProblem("blowup", lambda x, y: y * y, lambda x, y: 2 * y, 0.0, 1.0, (0.0, 3.0))
    with pytest.raises(IntegrationError) as info:
        rk4_solve(p, [0.0, 3.0], substeps=300)
    assert 0.9 <= info.value.x <= 3.0
