import math

import numpy as np
import pytest

from qcadmm.errors import InvalidArgumentError, QuantizationRequiredError
from qcadmm.services.analysis_service import (
    certify,
    compute_eta,
    compute_tau0,
    compute_tau1,
    consensus_error_bound,
    delta_x_box,
    delta_x_l1,
    error_term_bound,
    g_norm,
    iteration_bound,
    optimal_point,
    recover_beta,
)
from qcadmm.services.graph_service import (
    SpectralData,
    build_matrices,
    random_connected_graph,
    spectral_quantities,
)
from qcadmm.services.objective_service import LeastSquaresL1, QuadraticBox, ScaledQuadratic, build_problem_instance
from qcadmm.services.oracle_service import solve_reference

TWO_NODE_SPEC = SpectralData(2.0, 2.0, 2.0)
TWO_NODE_ETA = math.sqrt(4.0 / 3.0) - 1.0


class TestGNorm:

    def test_zero(self):
        assert g_norm(np.zeros(3), np.zeros(3), 2.5) == 0.0

    def test_z_only(self):
        z = np.array([3.0, 4.0])
        assert g_norm(z, np.zeros(2), 1.0) == pytest.approx(5.0)

    def test_example(self):
        assert g_norm([1.5, 1.5], [1.0, -1.0], 1.0) == pytest.approx(math.sqrt(6.5))

    def test_weighting(self):
        assert g_norm([1.0], [2.0], 4.0) == pytest.approx(math.sqrt(4.0 + 1.0))

    def test_invalid_rho(self):
        with pytest.raises(InvalidArgumentError):
            g_norm([1.0], [1.0], 0.0)


class TestRateConstants:

    def test_two_node_eta(self):
        delta_rate, eta = compute_eta(TWO_NODE_SPEC, 1.0, 1.0, 1.0, 1.5)
        assert delta_rate == pytest.approx(1.0 / 3.0)
        assert eta == pytest.approx(0.154701, abs=1e-6)

    def test_mu_close_to_one(self):
        delta_rate, eta = compute_eta(TWO_NODE_SPEC, 1.0, 1.0, 1.0, 1.0 + 1e-9)
        assert 0 < delta_rate < 1e-8
        assert 0 < eta < 1e-8

    def test_scaling_moduli_changes_second_term(self):
        spec = SpectralData(3.0, 2.5, 1.2)
        c, rho, mu = 4.0, 1.0, 1.5
        delta_rate, _ = compute_eta(spec, c, c, rho, mu)
        first = (mu - 1) * 1.2 ** 2 / (mu * 3.0 ** 2)
        second = 4 * rho * c * 1.2 ** 2 / (rho ** 2 * 3.0 ** 2 * 1.2 ** 2 + mu * c ** 2)
        assert delta_rate == pytest.approx(min(first, second))

    @pytest.mark.parametrize("args", [
        (1.0, 1.0, 1.0, 1.0),
        (1.0, 1.0, 0.0, 1.5),
        (2.0, 1.0, 1.0, 1.5),
        (0.0, 1.0, 1.0, 1.5),
    ])
    def test_invalid_arguments(self, args):
        m_g, big_m_g, rho, mu = args
        with pytest.raises(InvalidArgumentError):
            compute_eta(TWO_NODE_SPEC, m_g, big_m_g, rho, mu)

    def test_eta_does_not_depend_on_dimension(self):
        g = random_connected_graph(7, 12, 1)
        one = [ScaledQuadratic(a=0.5 + i, b=[float(i)]) for i in range(7)]
        three = [ScaledQuadratic(a=0.5 + i, b=[float(i), 1.0, -1.0]) for i in range(7)]
        assert certify(g, one, 1.0, 1.0).eta == certify(g, three, 1.0, 1.0).eta


class TestErrorTermBounds:

    def test_tau0_two_node(self):
        assert compute_tau0(1.0, 1.0, 1, TWO_NODE_SPEC) == pytest.approx(math.sqrt(8) / 4)

    def test_tau0_zero_delta(self):
        assert compute_tau0(0.0, 1.0, 3, TWO_NODE_SPEC) == 0.0

    def test_tau0_linear_in_delta(self):
        assert compute_tau0(2.0, 1.3, 2, TWO_NODE_SPEC) == pytest.approx(2 * compute_tau0(1.0, 1.3, 2, TWO_NODE_SPEC))

    def test_tau1_example(self):
        tau1 = compute_tau1(math.sqrt(2) / 3, 1.0, 1, 1.0, TWO_NODE_SPEC)
        assert tau1 == pytest.approx((math.sqrt(2) / 6 + 0.25) * math.sqrt(8))
        assert tau1 == pytest.approx(1.3738, abs=1e-4)

    def test_tau1_reduces_to_tau0(self):
        spec = SpectralData(3.0, 2.5, 1.2)
        assert compute_tau1(0.0, 0.7, 3, 1.0, spec) == pytest.approx(compute_tau0(0.7, 1.0, 3, spec))

    def test_tau1_linear(self):
        spec = SpectralData(3.0, 2.5, 1.2)
        base = compute_tau1(0.4, 0.7, 3, 2.0, spec)
        assert compute_tau1(1.2, 2.1, 3, 2.0, spec) == pytest.approx(3 * base)

    def test_network_error_bound_matches_tau0_on_one_edge(self):
        assert error_term_bound(1.0, 1.0, 1, 1) == pytest.approx(compute_tau0(1.0, 1.0, 1, TWO_NODE_SPEC))

    def test_network_error_bound_dominates_tau0(self):
        for seed in range(10):
            g = random_connected_graph(10, 20, seed)
            spec = spectral_quantities(build_matrices(g))
            assert error_term_bound(1.0, 1.0, 20, 2) >= compute_tau0(1.0, 1.0, 2, spec)

    def test_network_error_bound_is_attained(self, path_graph):
        # every agent off the lattice by delta/2
        m = build_matrices(path_graph)
        e = 0.5 * np.ones((3, 1))
        measured = g_norm(0.5 * m.m_plus.T @ e, 0.5 * (m.m_minus.T @ e), 1.0)
        assert measured == pytest.approx(error_term_bound(1.0, 1.0, 2, 1))
        assert measured > compute_tau0(1.0, 1.0, 1, spectral_quantities(m))


class TestBounds:

    def test_consensus_bound_example(self):
        assert consensus_error_bound(1.0, 1, 2.0, 1, 1.0) == 1.5

    def test_consensus_bound_zero_delta(self):
        assert consensus_error_bound(1.0, 5, 2.0, 3, 0.0) == 0.0

    def test_consensus_bound_monotone(self):
        base = consensus_error_bound(1.0, 10, 4.0, 2, 1.0)
        assert consensus_error_bound(1.0, 11, 4.0, 2, 1.0) > base
        assert consensus_error_bound(1.1, 10, 4.0, 2, 1.0) > base

    def test_iteration_bound_example(self):
        omega, iterations = iteration_bound(0.154701, 1.0, 1.0, 1, TWO_NODE_SPEC, 2.5495, 0.70711)
        assert omega == pytest.approx(168.4, abs=0.1)
        assert iterations == 36

    def test_iteration_bound_requires_quantization(self):
        with pytest.raises(QuantizationRequiredError):
            iteration_bound(0.15, 0.0, 1.0, 1, TWO_NODE_SPEC, 1.0, 0.0)

    def test_iteration_bound_is_at_least_one_step(self):
        omega, iterations = iteration_bound(50.0, 1.0, 1.0, 1, TWO_NODE_SPEC, 0.0, 0.0)
        assert omega == 0.0
        assert iterations == 1

        # log(omega) is negative here; the count is clamped, not rounded to zero
        omega, iterations = iteration_bound(50.0, 1e6, 1.0, 1, TWO_NODE_SPEC, 0.0, 1.0)
        assert 0.0 < omega < 1.0
        assert iterations == 1

    def test_iteration_bound_shrinks(self):
        omega, _ = iteration_bound(TWO_NODE_ETA, 1.0, 1.0, 1, TWO_NODE_SPEC, 2.5, 0.7)
        omega_zero_start, _ = iteration_bound(TWO_NODE_ETA, 1.0, 1.0, 1, TWO_NODE_SPEC, 0.0, 0.7)
        omega_coarse, _ = iteration_bound(TWO_NODE_ETA, 2.0, 1.0, 1, TWO_NODE_SPEC, 2.5, 0.7)
        assert 0 < omega_zero_start < omega
        assert omega_coarse < omega

    def test_delta_x_l1(self):
        assert delta_x_l1([1.0, 1.0], 1.0, 1.0, 1, 1) == pytest.approx(math.sqrt(2) / 3)
        assert delta_x_l1([0.0, 0.0], 1.0, 1.0, 1, 1) == 0.0
        assert delta_x_l1([1.0, 2.0], 1.0, 1.0, 1, 4) == pytest.approx(2 * delta_x_l1([1.0, 2.0], 1.0, 1.0, 1, 1))

    def test_delta_x_box(self):
        assert delta_x_box([0.0], [1.0], 1.0, [1], 2.0, [1.0], 1) == pytest.approx(22.0 / 3.0)
        assert delta_x_box([0.0, 0.0], [0.0, 0.0], 1.0, [1, 2], 0.0, [1.0, 1.0], 2) == 0.0

    def test_delta_x_box_is_additive(self):
        first = delta_x_box([0.5], [1.0], 1.0, [2], 3.0, [1.0], 2)
        second = delta_x_box([1.5], [2.0], 1.0, [1], 3.0, [0.5], 2)
        both = delta_x_box([0.5, 1.5], [1.0, 2.0], 1.0, [2, 1], 3.0, [1.0, 0.5], 2)
        assert both == pytest.approx(first + second)

    def test_delta_x_box_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            delta_x_box([0.0], [1.0, 1.0], 1.0, [1], 1.0, [1.0], 1)


class TestOptimalPoint:

    def test_two_node(self, two_node_graph, two_node_objectives):
        opt = optimal_point(two_node_graph, two_node_objectives, [-2.5])
        np.testing.assert_allclose(opt.alpha_star, [[1.0], [-1.0]])
        np.testing.assert_allclose(opt.z_star, [[-2.5], [-2.5]])
        np.testing.assert_allclose(opt.beta_star, [[0.5], [-0.5]])

    def test_dual_sums_to_zero(self, small_quadratic):
        g, objs = small_quadratic
        opt = optimal_point(g, objs, solve_reference(objs).x_star)
        assert np.linalg.norm(opt.alpha_star.sum(axis=0)) <= 1e-9 * (1 + np.linalg.norm(opt.alpha_star))
        m = build_matrices(g)
        np.testing.assert_allclose(m.m_minus @ opt.beta_star, opt.alpha_star, atol=1e-9)

    def test_identical_objectives(self, path_graph):
        objs = [ScaledQuadratic(a=1.0, b=[2.0, -1.0]) for _ in range(3)]
        opt = optimal_point(path_graph, objs, solve_reference(objs).x_star)
        np.testing.assert_allclose(opt.alpha_star, np.zeros((3, 2)), atol=1e-12)

    def test_wrong_length(self, two_node_graph, two_node_objectives):
        with pytest.raises(InvalidArgumentError):
            optimal_point(two_node_graph, two_node_objectives, [1.0, 2.0])


class TestRecoverBeta:

    def test_zero(self, path_graph):
        np.testing.assert_array_equal(recover_beta(np.zeros((3, 2)), build_matrices(path_graph)), np.zeros((4, 2)))

    def test_two_node(self, two_node_graph):
        beta = recover_beta([1.0, -1.0], build_matrices(two_node_graph))
        np.testing.assert_allclose(beta, [[0.5], [-0.5]])

    def test_round_trip(self):
        g = random_connected_graph(8, 13, 2)
        m = build_matrices(g)
        rng = np.random.default_rng(0)
        beta = m.m_minus.T @ rng.normal(size=(8, 3))
        np.testing.assert_allclose(recover_beta(m.m_minus @ beta, m), beta, atol=1e-10)
        alpha = rng.normal(size=(8, 3))
        alpha -= alpha.mean(axis=0)
        np.testing.assert_allclose(m.m_minus @ recover_beta(alpha, m), alpha, atol=1e-10)

    def test_outside_range(self, two_node_graph):
        with pytest.raises(InvalidArgumentError):
            recover_beta([1.0, 1.0], build_matrices(two_node_graph))


class TestCertify:

    def test_two_node(self, two_node_graph, two_node_objectives, two_node_init):
        x0, alpha0 = two_node_init
        cert = certify(two_node_graph, two_node_objectives, 1.0, 1.0, x0=x0, alpha0=alpha0)
        assert cert.smooth
        assert cert.delta_rate == pytest.approx(1.0 / 3.0)
        assert cert.eta == pytest.approx(TWO_NODE_ETA)
        assert cert.rate == pytest.approx(1.0 / (1.0 + TWO_NODE_ETA))
        assert cert.tau0 == pytest.approx(math.sqrt(8) / 4)
        assert cert.error_term_bound == pytest.approx(cert.tau0)
        assert cert.tau == pytest.approx(cert.tau0)
        assert cert.u0_distance == pytest.approx(math.sqrt(4.5))
        assert cert.consensus_error_bound == 1.5
        assert cert.omega == pytest.approx(146.3, abs=0.1)
        assert cert.iteration_bound == 35

    def test_zero_delta_has_no_iteration_bound(self, small_quadratic):
        g, objs = small_quadratic
        cert = certify(g, objs, 1.0, 0.0)
        assert cert.iteration_bound is None
        assert cert.omega is None
        assert cert.consensus_error_bound == 0.0

    def test_tau_covers_network_error(self, small_quadratic):
        g, objs = small_quadratic
        cert = certify(g, objs, 1.0, 1.0)
        assert cert.tau == pytest.approx(max(cert.tau0, cert.error_term_bound))

    def test_lasso_general_case(self):
        g = random_connected_graph(6, 9, 1)
        objs = build_problem_instance("lasso", 6, 2, 1)
        cert = certify(g, objs, 1.0, 1.0)
        assert not cert.smooth
        expected = delta_x_l1([obj.xi for obj in objs], min(obj.m_g for obj in objs), 1.0, int(g.degrees.min()), 2)
        assert cert.delta_x == pytest.approx(expected)
        assert cert.tau1 == pytest.approx(compute_tau1(cert.delta_x, 1.0, 2, 1.0, cert.spectral))
        assert cert.tau >= cert.tau1
        assert cert.iteration_bound >= 1

    def test_box_general_case(self):
        g = random_connected_graph(5, 7, 2)
        objs = build_problem_instance("quadratic_box", 5, 2, 2)
        cert = certify(g, objs, 1.0, 1.0)
        assert not cert.smooth
        assert cert.delta_x > 0
        assert cert.tau >= cert.tau1

    def test_mixed_families_rejected(self, two_node_graph):
        objs = [
            QuadraticBox(a=1.0, b=[0.0], lo=[-1.0], hi=[1.0]),
            LeastSquaresL1(a_mat=[[1.0]], y_vec=[0.0], xi=1.0),
        ]
        with pytest.raises(InvalidArgumentError):
            certify(two_node_graph, objs, 1.0, 1.0)

    def test_to_dict(self, two_node_graph, two_node_objectives):
        data = certify(two_node_graph, two_node_objectives, 1.0, 1.0).to_dict()
        assert data["iteration_bound"] == certify(two_node_graph, two_node_objectives, 1.0, 1.0).iteration_bound
        assert set(data["spectral"]) == {"sigma_max_m_plus", "sigma_max_m_minus", "sigma_min_nonzero_m_minus"}
