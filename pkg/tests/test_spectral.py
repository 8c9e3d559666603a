"""Spectral core: operator builder, damping couplings, norms."""

import numpy as np
import pytest

from wavedecay.errors import DegenerateInputError, InvalidArgumentError
from wavedecay.spectral import (
    SineCollocation,
    StatePair,
    build_damping,
    build_dirichlet_operator,
    constant_profile,
    energy,
    graph_norms,
    interval_profile,
    lambda_ratio,
    mode_state,
    random_state,
)


def gauss_legendre_coupling(op, profile, panels=256, nodes=16):
    """Independent quadrature oracle for the coupling entries."""
    if profile.kind == "constant":
        lo, hi = 0.0, op.domain_length
    else:
        lo, hi = profile.interval
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    m = np.zeros((op.n_modes, op.n_modes))
    for a, b in zip(edges[:-1], edges[1:]):
        x = 0.5 * (a + b) + 0.5 * (b - a) * xg
        w = 0.5 * (b - a) * wg
        basis = op.eigenfunctions(x)
        aval = profile.evaluate(x)
        m += basis.T @ (basis * (aval * w)[:, None])
    return m


class TestDirichletOperator:
    def test_single_mode_unit_interval_pi(self):
        op = build_dirichlet_operator(1, np.pi)
        assert op.eigenvalues[0] == pytest.approx(1.0, rel=1e-15)

    def test_three_modes_unit_length(self):
        op = build_dirichlet_operator(3, 1.0)
        expected = np.array([np.pi ** 2, 4 * np.pi ** 2, 9 * np.pi ** 2])
        np.testing.assert_allclose(op.eigenvalues, expected, rtol=1e-15)

    def test_k_squared_scaling(self):
        op = build_dirichlet_operator(64, 1.0)
        assert op.eigenvalues[-1] / op.eigenvalues[0] == pytest.approx(4096.0, rel=1e-13)

    @pytest.mark.parametrize("n,L", [(0, 1.0), (-3, 1.0), (4, 0.0), (4, -2.0)])
    def test_invalid_arguments(self, n, L):
        with pytest.raises(InvalidArgumentError):
            build_dirichlet_operator(n, L)


class TestDamping:
    def test_constant_one_is_identity(self):
        op = build_dirichlet_operator(12, 1.7)
        damp = build_damping(op, constant_profile(1.0))
        np.testing.assert_allclose(damp.coupling, np.eye(12), atol=1e-14)

    def test_constant_zero_is_zero(self):
        op = build_dirichlet_operator(8, 1.0)
        damp = build_damping(op, constant_profile(0.0))
        assert np.all(damp.coupling == 0.0)

    def test_full_interval_equals_identity_and_quadrature(self):
        op = build_dirichlet_operator(16, 1.0)
        profile = interval_profile(0.0, 1.0, 1.0)
        damp = build_damping(op, profile)
        np.testing.assert_allclose(damp.coupling, np.eye(16), atol=1e-12)
        oracle = gauss_legendre_coupling(op, profile)
        assert np.max(np.abs(damp.coupling - oracle)) <= 1e-10

    def test_partial_interval_matches_quadrature(self):
        op = build_dirichlet_operator(24, np.pi)
        profile = interval_profile(0.3, 2.0, 0.8)
        damp = build_damping(op, profile)
        oracle = gauss_legendre_coupling(op, profile)
        assert np.max(np.abs(damp.coupling - oracle)) <= 1e-10

    def test_builtin_quadrature_route_agrees(self):
        op = build_dirichlet_operator(10, 1.0)
        profile = interval_profile(0.25, 0.75, 1.3)
        closed = build_damping(op, profile).coupling
        quad = build_damping(op, profile, quadrature_points=4096).coupling
        assert np.max(np.abs(closed - quad)) <= 1e-10

    def test_symmetric_positive_semidefinite(self):
        op = build_dirichlet_operator(32, 1.0)
        damp = build_damping(op, interval_profile(0.3, 0.7, 1.0))
        m = damp.coupling
        assert np.max(np.abs(m - m.T)) <= 1e-12
        eigs = np.linalg.eigvalsh(m)
        assert eigs.min() >= -1e-10 * np.abs(eigs).max()

    def test_disjoint_intervals_add(self):
        op = build_dirichlet_operator(10, 1.0)
        m1 = build_damping(op, interval_profile(0.1, 0.3, 1.0)).coupling
        m2 = build_damping(op, interval_profile(0.5, 0.9, 1.0)).coupling
        lo = build_damping(op, interval_profile(0.1, 0.3, 1.0)).coupling
        # union of disjoint supports: couple each then sum
        both = m1 + m2
        # quadrature over the union
        oracle = (gauss_legendre_coupling(op, interval_profile(0.1, 0.3, 1.0))
                  + gauss_legendre_coupling(op, interval_profile(0.5, 0.9, 1.0)))
        np.testing.assert_allclose(both, oracle, atol=1e-11)
        np.testing.assert_allclose(lo, m1, atol=0)

    def test_interval_outside_domain_rejected(self):
        op = build_dirichlet_operator(4, 1.0)
        with pytest.raises(InvalidArgumentError):
            build_damping(op, interval_profile(0.5, 1.5, 1.0))
        with pytest.raises(InvalidArgumentError):
            build_damping(op, interval_profile(-0.1, 0.5, 1.0))


class TestEnergyAndNorms:
    def test_unit_velocity_mode(self):
        op = build_dirichlet_operator(4, np.pi)
        state = mode_state(op, 1, position=0.0, velocity=1.0)
        assert energy(state, op) == pytest.approx(0.5, rel=1e-15)

    def test_unit_position_mode_lambda_one(self):
        op = build_dirichlet_operator(4, np.pi)
        state = mode_state(op, 1, position=1.0)
        assert energy(state, op) == pytest.approx(0.5, rel=1e-15)

    def test_energy_matches_physical_space_quadrature(self):
        op = build_dirichlet_operator(16, np.pi)
        rng = np.random.default_rng(7)
        state = random_state(op, rng)
        # brute force in physical space: E = 1/2 int (u_t^2 + u_x^2)
        xg, wg = np.polynomial.legendre.leggauss(20)
        panels = np.linspace(0.0, np.pi, 129)
        total = 0.0
        k = np.arange(1, 17)
        for a, b in zip(panels[:-1], panels[1:]):
            x = 0.5 * (a + b) + 0.5 * (b - a) * xg
            w = 0.5 * (b - a) * wg
            ut = op.eigenfunctions(x) @ state.w1
            dbasis = np.sqrt(2 / np.pi) * (k * np.cos(np.outer(x, k)))
            ux = dbasis @ state.w0
            total += np.sum(w * (ut ** 2 + ux ** 2))
        assert energy(state, op) == pytest.approx(0.5 * total, rel=1e-12)

    def test_dimension_mismatch_raises(self):
        op = build_dirichlet_operator(4, 1.0)
        state = StatePair(np.ones(3), np.zeros(3))
        with pytest.raises(InvalidArgumentError):
            energy(state, op)

    def test_energy_is_half_vx(self):
        op = build_dirichlet_operator(12, 2.0)
        state = random_state(op, np.random.default_rng(3))
        assert energy(state, op) == pytest.approx(0.5 * graph_norms(state, op).vx, rel=1e-14)

    def test_weak_norm_interlacing(self):
        op = build_dirichlet_operator(20, 1.3)
        for seed in range(5):
            state = random_state(op, np.random.default_rng(seed))
            norms = graph_norms(state, op)
            assert norms.weak * op.eigenvalues[0] <= norms.vx * (1 + 1e-12)

    def test_norms_scale_quadratically(self):
        op = build_dirichlet_operator(8, 1.0)
        state = random_state(op, np.random.default_rng(11))
        n1 = graph_norms(state, op)
        n2 = graph_norms(state.scaled(-3.0), op)
        assert n2.vx == pytest.approx(9 * n1.vx, rel=1e-13)
        assert n2.da_v == pytest.approx(9 * n1.da_v, rel=1e-13)
        assert n2.weak == pytest.approx(9 * n1.weak, rel=1e-13)


class TestLambdaRatio:
    def test_pure_position_mode(self):
        op = build_dirichlet_operator(6, 1.0)
        for k in (1, 3, 6):
            state = mode_state(op, k, position=1.0)
            assert lambda_ratio(state, op) == pytest.approx(op.eigenvalues[k - 1], rel=1e-13)

    def test_pure_velocity_mode(self):
        op = build_dirichlet_operator(6, 1.0)
        state = mode_state(op, 4, position=0.0, velocity=2.5)
        assert lambda_ratio(state, op) == pytest.approx(op.eigenvalues[3], rel=1e-13)

    def test_two_mode_mixture_bounded_by_modes(self):
        op = build_dirichlet_operator(8, 1.0)
        w0 = np.zeros(8)
        w0[1] = 0.7
        w0[5] = 0.2
        state = StatePair(w0, np.zeros(8))
        lam = lambda_ratio(state, op)
        assert op.eigenvalues[1] <= lam <= op.eigenvalues[5]
        # weighted mean of the two eigenvalues, weights lam_k w0_k^2
        lam2, lam6 = op.eigenvalues[1], op.eigenvalues[5]
        a, b = lam2 * 0.7 ** 2, lam6 * 0.2 ** 2
        assert lam == pytest.approx((lam2 * a + lam6 * b) / (a + b), rel=1e-13)

    def test_zero_state_rejected(self):
        op = build_dirichlet_operator(3, 1.0)
        with pytest.raises(DegenerateInputError):
            lambda_ratio(StatePair(np.zeros(3), np.zeros(3)), op)

    def test_scaling_invariance_and_spectrum_bounds(self):
        op = build_dirichlet_operator(16, 1.0)
        for seed in range(6):
            state = random_state(op, np.random.default_rng(seed))
            lam = lambda_ratio(state, op)
            assert lam == pytest.approx(lambda_ratio(state.scaled(0.03), op), rel=1e-12)
            assert op.eigenvalues[0] * (1 - 1e-12) <= lam <= op.eigenvalues[-1] * (1 + 1e-12)


class TestSineCollocation:
    def test_round_trip_is_identity(self):
        op = build_dirichlet_operator(12, np.pi)
        coll = SineCollocation(op)
        rng = np.random.default_rng(5)
        c = rng.standard_normal(12)
        np.testing.assert_allclose(coll.to_modes(coll.to_grid(c)), c, atol=1e-13)

    def test_projection_matches_exact_integral(self):
        # project a(x)*u for constant a: collocation equals a*coeffs exactly
        op = build_dirichlet_operator(8, 1.0)
        coll = SineCollocation(op)
        c = np.random.default_rng(9).standard_normal(8)
        vals = 0.37 * coll.to_grid(c)
        np.testing.assert_allclose(coll.to_modes(vals), 0.37 * c, atol=1e-13)
