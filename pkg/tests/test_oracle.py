import numpy as np
import pytest

from qcadmm.errors import InvalidArgumentError, NumericalError
from qcadmm.services import oracle_service
from qcadmm.services.objective_service import LeastSquaresL1, QuadraticBox, ScaledQuadratic, build_problem_instance
from qcadmm.services.oracle_service import optimality_residual, solve_reference, verify_optimality


def _equivalent_least_squares(obj: ScaledQuadratic) -> LeastSquaresL1:
    """a||x||^2 + b^T x written as 1/2 ||sqrt(2a) x - y||^2 up to a constant."""
    scale = np.sqrt(2.0 * obj.a)
    return LeastSquaresL1(a_mat=scale * np.eye(obj.dim), y_vec=-obj.b / scale, xi=0.0)


class TestSolveReference:

    def test_two_node(self, two_node_objectives):
        ref = solve_reference(two_node_objectives)
        np.testing.assert_allclose(ref.x_star, [-2.5])
        assert ref.optimality_residual <= 1e-10
        assert not ref.smooth_only

    def test_zero_linear_terms(self):
        objs = [ScaledQuadratic(a=a, b=[0.0, 0.0]) for a in (0.5, 1.0, 2.0)]
        np.testing.assert_array_equal(solve_reference(objs).x_star, [0.0, 0.0])

    def test_one_dimensional_lasso(self):
        # 1/2 (x - 1)^2 + 1/2 (2x + 1)^2 + 0.75 |x| is minimized at -0.05
        objs = [
            LeastSquaresL1(a_mat=[[1.0]], y_vec=[1.0], xi=0.5),
            LeastSquaresL1(a_mat=[[2.0]], y_vec=[-1.0], xi=0.25),
        ]
        ref = solve_reference(objs)
        grid = np.linspace(-1.0, 1.0, 2_000_001)
        values = 0.5 * (grid - 1.0) ** 2 + 0.5 * (2.0 * grid + 1.0) ** 2 + 0.75 * np.abs(grid)
        assert ref.x_star[0] == pytest.approx(grid[np.argmin(values)], abs=1e-5)
        assert ref.x_star[0] == pytest.approx(-0.05, abs=1e-9)

    def test_smooth_only_drops_nonsmooth_parts(self):
        objs = [
            LeastSquaresL1(a_mat=[[1.0]], y_vec=[1.0], xi=0.5),
            LeastSquaresL1(a_mat=[[2.0]], y_vec=[-1.0], xi=0.25),
        ]
        ref = solve_reference(objs, smooth_only=True)
        assert ref.smooth_only
        assert ref.x_star[0] == pytest.approx(-0.2)

    def test_box_clamps_closed_form(self):
        objs = [QuadraticBox(a=1.0, b=[-10.0, 1.0], lo=[-1.0, -1.0], hi=[1.0, 1.0]) for _ in range(3)]
        np.testing.assert_allclose(solve_reference(objs).x_star, [1.0, -0.5])
        np.testing.assert_allclose(solve_reference(objs, smooth_only=True).x_star, [5.0, -0.5])

    def test_box_intersection_used(self):
        objs = [
            QuadraticBox(a=1.0, b=[-10.0], lo=[-3.0], hi=[2.0]),
            QuadraticBox(a=1.0, b=[-10.0], lo=[-1.0], hi=[4.0]),
        ]
        np.testing.assert_allclose(solve_reference(objs).x_star, [2.0])

    def test_empty_box_intersection(self):
        objs = [
            QuadraticBox(a=1.0, b=[0.0], lo=[-1.0], hi=[0.0]),
            QuadraticBox(a=1.0, b=[0.0], lo=[1.0], hi=[2.0]),
        ]
        with pytest.raises(InvalidArgumentError):
            solve_reference(objs)

    def test_closed_form_agrees_with_linear_solve(self):
        objs = build_problem_instance("quadratic", 6, 3, 1)
        closed = solve_reference(objs).x_star
        solved = solve_reference([_equivalent_least_squares(obj) for obj in objs]).x_star
        np.testing.assert_allclose(solved, closed, rtol=1e-8, atol=1e-8)

    def test_closed_form_agrees_with_proximal_gradient(self):
        objs = [QuadraticBox(a=obj.a, b=obj.b, lo=-2.0 * np.ones(3), hi=2.0 * np.ones(3))
                for obj in build_problem_instance("quadratic", 5, 3, 2)]
        closed = solve_reference(objs)
        # swapping one agent for an equivalent least-squares term forces the iterative path
        mixed = [_equivalent_least_squares(objs[0])] + objs[1:]
        iterative = solve_reference(mixed)
        assert iterative.iterations > 0
        np.testing.assert_allclose(iterative.x_star, closed.x_star, rtol=1e-8, atol=1e-8)

    def test_perturbation_increases_objective(self):
        objs = build_problem_instance("lasso", 4, 3, 5)
        ref = solve_reference(objs)
        rng = np.random.default_rng(0)
        for _ in range(50):
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            moved = ref.x_star + 1e-3 * direction
            assert sum(obj.value(moved) for obj in objs) > ref.objective_value + 1e-12

    def test_large_data_meets_scaled_tolerance(self):
        for scenario in ("quadratic_box", "quadratic"):
            ref = solve_reference(build_problem_instance(scenario, 40, 3, 0))
            assert np.all(np.isfinite(ref.x_star))
        ref = solve_reference(build_problem_instance("lasso", 40, 5, 0), smooth_only=True)
        assert ref.iterations == 0

    def test_inaccurate_direct_solve_is_rejected(self, monkeypatch):
        objs = [_equivalent_least_squares(obj) for obj in build_problem_instance("quadratic", 4, 2, 0)]
        monkeypatch.setattr(oracle_service.scipy.linalg, "solve", lambda a, b, **kwargs: np.zeros_like(b))
        with pytest.raises(NumericalError) as info:
            solve_reference(objs)
        assert info.value.residual > 0

    def test_invalid_tolerance(self, two_node_objectives):
        with pytest.raises(InvalidArgumentError):
            solve_reference(two_node_objectives, tol=0.0)

    def test_to_dict(self, two_node_objectives):
        data = solve_reference(two_node_objectives).to_dict()
        assert data["x_star"] == [-2.5]
        assert data["smooth_only"] is False


class TestVerifyOptimality:

    def test_reference_is_optimal(self):
        objs = build_problem_instance("lasso", 4, 2, 3)
        ref = solve_reference(objs)
        assert verify_optimality(objs, ref.x_star)

    def test_perturbed_point_rejected(self, two_node_objectives):
        tol = 1e-10
        x = np.array([-2.5 + 10 * tol])
        assert not verify_optimality(two_node_objectives, x, tol=tol)

    def test_zero_objectives(self):
        objs = [ScaledQuadratic(a=1.0, b=[0.0, 0.0]) for _ in range(3)]
        assert verify_optimality(objs, np.zeros(2))

    def test_residual_rejects_bad_shape(self, two_node_objectives):
        with pytest.raises(InvalidArgumentError):
            optimality_residual(two_node_objectives, np.zeros(2))
