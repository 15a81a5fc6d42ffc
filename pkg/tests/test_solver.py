"""ADMM building blocks and full solves of the reduced dual."""

import numpy as np
import pytest

from spectral_sdp import (
    InvalidInputError,
    NumericalError,
    ProblemSpec,
    SelectionPattern,
    assemble_problem,
    compute_partition,
    init_state,
    psd_project,
    residuals,
    solve,
    synthesize_uniform,
    update_S_blocks,
    update_c,
    update_multipliers,
)
from spectral_sdp.oracles import finite_perturbation_check
from spectral_sdp.solver import bordered_matrix

from conftest import (
    lagrangian_block,
    lagrangian_c,
    random_complex,
    random_hermitian,
    random_pattern,
    random_spike_spectrum,
)


def _full_pattern(n):
    return SelectionPattern(indices=tuple(range(n)), ambient=n)


def _spec_for(pattern, y=None, **kw):
    y = np.zeros(pattern.m, dtype=complex) if y is None else np.asarray(y, complex)
    return ProblemSpec(y=y, partition=compute_partition(pattern), **kw)


def _random_state(rng, spec):
    state = init_state(spec)
    m = spec.m
    state.Z = random_hermitian(rng, m + 1)
    state.S = random_hermitian(rng, m)
    state.c = random_complex(rng, m)
    state.Lambda = random_hermitian(rng, m + 1)
    state.mu = random_complex(rng, spec.partition.p)
    state.mu[list(spec.partition.positive_lags).index(0)] = rng.standard_normal()
    return state


class TestInitState:
    def test_smallest_problem(self):
        spec = _spec_for(SelectionPattern(indices=(0,), ambient=4))
        state = init_state(spec)
        assert np.array_equal(state.Z, np.eye(2))
        assert np.array_equal(state.S, np.zeros((1, 1)))

    def test_invariants_at_start(self):
        spec = _spec_for(_full_pattern(5))
        state = init_state(spec)
        assert np.linalg.eigvalsh(state.Z).min() >= -1e-10
        assert np.array_equal(state.S, state.S.conj().T)
        assert not state.c.any() and not state.Lambda.any() and not state.mu.any()


class TestUpdateC:
    def test_zero_state_scales_conjugate_data(self):
        rng = np.random.default_rng(0)
        pat = _full_pattern(4)
        y = random_complex(rng, 4)
        spec = _spec_for(pat, y=y, rho=2.0)
        state = init_state(spec)
        state.Z[:, -1] = 0  # clear the border
        assert np.allclose(update_c(state, spec), y.conj() / 4.0)

    def test_zero_data_shrinks_border(self):
        rng = np.random.default_rng(1)
        pat = _full_pattern(3)
        spec = _spec_for(pat, tau=3.0, rho=1.0)
        state = init_state(spec)
        z = random_complex(rng, 3)
        state.Z[:3, 3] = z
        assert np.allclose(update_c(state, spec), (2.0 / 5.0) * z)

    def test_is_the_block_minimizer(self):
        rng = np.random.default_rng(2)
        for trial in range(20):
            m = int(rng.integers(1, 6))
            pat = _full_pattern(m)
            y = random_complex(rng, m)
            spec = _spec_for(pat, y=y, tau=float(rng.random()), rho=0.5 + rng.random())
            state = _random_state(rng, spec)
            c_star = update_c(state, spec)
            z = state.Z[:m, m]
            lam = state.Lambda[:m, m]
            obj = lambda c: lagrangian_c(c, spec.y, z, lam, spec.rho, spec.tau)
            assert finite_perturbation_check(obj, c_star, directions=100, step=1e-3, seed=trial)


class TestUpdateSBlocks:
    def test_singleton_diagonal_block_from_zeros(self):
        spec = _spec_for(SelectionPattern(indices=(0,), ambient=2))
        state = init_state(spec)
        state.Z = np.zeros((2, 2), dtype=complex)
        s = update_S_blocks(state, spec)
        assert np.isclose(s[0, 0], 0.5)

    def test_feasible_input_is_fixed_point(self):
        rng = np.random.default_rng(3)
        pat = SelectionPattern(indices=(0, 1, 3), ambient=5)
        spec = _spec_for(pat)
        part = spec.partition
        state = init_state(spec)
        # Build a Hermitian Z0 whose block sums hit the constraint exactly.
        z0 = random_hermitian(rng, 3)
        for k in part.positive_lags:
            pairs = part.blocks[k]
            total = sum(z0[i - 1, j - 1] for i, j in pairs)
            target = 1.0 if k == 0 else 0.0
            correction = (target - total) / len(pairs)
            for i, j in pairs:
                z0[i - 1, j - 1] += correction
                if i != j:
                    z0[j - 1, i - 1] += np.conj(correction)
                else:
                    z0[i - 1, j - 1] = z0[i - 1, j - 1].real
        state.Z[:3, :3] = z0
        s = update_S_blocks(state, spec)
        assert np.allclose(s, z0, atol=1e-12)

    def test_blocks_are_exact_minimizers(self):
        rng = np.random.default_rng(4)
        for trial in range(20):
            pat = random_pattern(rng, int(rng.integers(3, 10)), admissible=True)
            spec = _spec_for(pat, rho=0.5 + rng.random())
            state = _random_state(rng, spec)
            s = update_S_blocks(state, spec)
            part = spec.partition
            m = pat.m
            z0 = state.Z[:m, :m]
            lam0 = state.Lambda[:m, :m]
            for pos, k in enumerate(part.positive_lags):
                pairs = part.blocks[k]
                rows = [i - 1 for i, _ in pairs]
                cols = [j - 1 for _, j in pairs]
                s_block = s[rows, cols]
                obj = lambda v: lagrangian_block(
                    v,
                    z0[rows, cols],
                    lam0[rows, cols],
                    state.mu[pos],
                    1.0 if k == 0 else 0.0,
                    spec.rho,
                )
                assert finite_perturbation_check(
                    obj, s_block, directions=50, step=1e-3, seed=trial, tol=1e-9
                )

    def test_output_is_hermitian(self):
        rng = np.random.default_rng(5)
        pat = random_pattern(rng, 12, admissible=True)
        spec = _spec_for(pat)
        state = _random_state(rng, spec)
        s = update_S_blocks(state, spec)
        assert np.allclose(s, s.conj().T, atol=1e-12)


class TestPsdProject:
    def test_identity_unchanged(self):
        assert np.allclose(psd_project(np.eye(4)), np.eye(4))

    def test_clips_negative_eigenvalue(self):
        out = psd_project(np.diag([1.0, -1.0]))
        assert np.allclose(out, np.diag([1.0, 0.0]))

    def test_never_beaten_by_sampled_psd_candidates(self):
        rng = np.random.default_rng(6)
        for _ in range(4):
            m = int(rng.integers(2, 9))
            y = random_hermitian(rng, m)
            z_star = psd_project(y)
            base = np.linalg.norm(z_star - y)
            for _ in range(2500):
                w = z_star + rng.exponential(0.3) * random_hermitian(rng, m)
                vals, vecs = np.linalg.eigh(0.5 * (w + w.conj().T))
                cand = (vecs * np.maximum(vals, 0)) @ vecs.conj().T
                assert np.linalg.norm(cand - y) >= base - 1e-10


class TestUpdateMultipliers:
    def test_no_op_at_consistent_state(self):
        rng = np.random.default_rng(7)
        pat = SelectionPattern(indices=(0, 2), ambient=4)
        spec = _spec_for(pat)
        state = _random_state(rng, spec)
        state.S = update_S_blocks(state, spec)
        state.Z = bordered_matrix(state.S, state.c)
        lam, _ = update_multipliers(state, spec)
        assert np.allclose(lam, state.Lambda)

    def test_mu_frozen_when_block_sums_feasible(self):
        spec = _spec_for(SelectionPattern(indices=(0, 1), ambient=3))
        state = init_state(spec)
        state.S = np.eye(2, dtype=complex) / 2.0
        _, mu = update_multipliers(state, spec)
        assert np.allclose(mu, state.mu)

    def test_one_step_from_zeros(self):
        spec = _spec_for(_full_pattern(3), rho=1.0)
        state = init_state(spec)
        lam, _ = update_multipliers(state, spec)
        expected = np.eye(4, dtype=complex)
        expected[3, 3] = 0.0
        assert np.allclose(lam, expected)


class TestResiduals:
    def test_initial_constraint_residual_is_one(self):
        spec = _spec_for(_full_pattern(4), y=np.ones(4))
        state = init_state(spec)
        _, constraint, _ = residuals(state, spec)
        assert np.isclose(constraint, 1.0)

    def test_nonnegative(self):
        rng = np.random.default_rng(8)
        pat = random_pattern(rng, 8, admissible=True)
        spec = _spec_for(pat)
        state = _random_state(rng, spec)
        state.z_prev = random_hermitian(rng, pat.m + 1)
        assert all(r >= 0 for r in residuals(state, spec))

    def test_small_at_convergence(self):
        spec = _spec_for(_full_pattern(6), y=np.ones(6), rho=5.0)
        report = solve(spec)
        assert report.converged
        assert max(report.final_residuals) < 1e-6


class TestSolve:
    def test_zero_data_gives_zero_dual(self):
        spec = _spec_for(_full_pattern(5), rho=2.0)
        report = solve(spec)
        assert report.converged
        assert np.linalg.norm(report.c_star) < 1e-6
        assert abs(report.dual_objective) < 1e-6

    def test_single_observation_analytic_optimum(self):
        # With one kept sample the constraint forces S = [1] and |c| <= 1,
        # so the maximizer of Re(y0 c) is conj(y0)/|y0| with value |y0|.
        y0 = 1.2 - 0.9j
        spec = _spec_for(
            SelectionPattern(indices=(0,), ambient=8), y=[y0], rho=1.0
        )
        report = solve(spec)
        assert report.converged
        assert np.isclose(report.c_star[0], np.conj(y0) / abs(y0), atol=1e-6)
        assert np.isclose(report.dual_objective, abs(y0), atol=1e-6)
        assert np.isclose(report.S_star[0, 0], 1.0, atol=1e-6)

    def test_full_observation_objective_matches_atomic_mass(self):
        rng = np.random.default_rng(9)
        n = 32
        spec_sig = random_spike_spectrum(rng, 2, min_sep=4 / (n - 1))
        y = synthesize_uniform(spec_sig, 1.0, n)
        prob = _spec_for(_full_pattern(n), y=y, rho=20.0)
        report = solve(prob)
        assert report.converged
        assert abs(report.dual_objective - np.abs(spec_sig.amps).sum()) < 1e-4

    def test_weak_duality_under_subsampling(self):
        rng = np.random.default_rng(10)
        n = 24
        for _ in range(3):
            spec_sig = random_spike_spectrum(rng, 2, min_sep=0.15)
            y_raw = synthesize_uniform(spec_sig, 1.0, n)
            pat = random_pattern(rng, n, admissible=True)
            y = y_raw[list(pat.indices)]
            prob = _spec_for(pat, y=y, rho=10.0)
            report = solve(prob)
            assert report.dual_objective <= np.abs(spec_sig.amps).sum() + 1e-6

    def test_manual_cycle_matches_solve(self):
        rng = np.random.default_rng(11)
        pat = random_pattern(rng, 10, admissible=True)
        y = random_complex(rng, pat.m)
        prob = _spec_for(pat, y=y, max_iter=60, tol_primal=0.0, tol_dual=0.0)
        state = init_state(prob)
        for _ in range(60):
            state.c = update_c(state, prob)
            state.S = update_S_blocks(state, prob)
            assert np.allclose(state.S, state.S.conj().T, atol=1e-12)
            b = bordered_matrix(state.S, state.c)
            state.z_prev = state.Z
            state.Z = psd_project(b - state.Lambda / prob.rho)
            assert np.linalg.eigvalsh(state.Z).min() >= -1e-10
            state.Lambda, state.mu = update_multipliers(state, prob)
        report = solve(prob)
        assert report.iterations == 60 and not report.converged
        assert np.allclose(report.c_star, state.c, atol=1e-12)

    def test_residuals_trend_downward(self):
        rng = np.random.default_rng(12)
        n = 16
        spec_sig = random_spike_spectrum(rng, 2, min_sep=0.2)
        y = synthesize_uniform(spec_sig, 1.0, n)
        history = {}
        prob = _spec_for(_full_pattern(n), y=y, rho=5.0)
        solve(prob, progress=lambda it, res: history.update({it: res[0]}), progress_every=10)
        for k in (10, 50, 100):
            if 10 * k in history and k in history:
                assert history[10 * k] < history[k]

    def test_nonconvergence_is_reported_not_raised(self):
        spec = _spec_for(_full_pattern(8), y=np.ones(8), max_iter=5)
        report = solve(spec)
        assert not report.converged and report.iterations == 5

    def test_overflow_raises_numerical_error(self):
        spec = _spec_for(SelectionPattern(indices=(0,), ambient=2), y=[1e200])
        with pytest.raises(NumericalError):
            solve(spec)


class TestAssembleProblem:
    def test_partition_size(self):
        rng = np.random.default_rng(13)
        pat = random_pattern(rng, 20, admissible=True)
        prob, used, k0 = assemble_problem(np.zeros(pat.m), pat)
        assert k0 == 0 and used is pat
        total = sum(len(b) for b in prob.partition.blocks.values())
        assert total == pat.m * (pat.m + 1) // 2

    def test_auto_normalize_shifts(self):
        pat = SelectionPattern(indices=(2, 5), ambient=8)
        with pytest.raises(InvalidInputError):
            assemble_problem(np.zeros(2), pat)
        prob, used, k0 = assemble_problem(np.zeros(2), pat, auto_normalize=True)
        assert used.indices == (0, 3) and k0 == 2

    def test_noise_rule_sets_tau(self):
        pat = SelectionPattern(indices=tuple(range(16)), ambient=16)
        sigma = 0.25
        prob, _, _ = assemble_problem(
            np.zeros(16), pat, sigma=sigma, gamma=1.5
        )
        assert np.isclose(prob.tau, 1.5 * sigma * np.sqrt(16 * np.log(16)))

    def test_explicit_tau_wins(self):
        pat = SelectionPattern(indices=tuple(range(4)), ambient=4)
        prob, _, _ = assemble_problem(np.zeros(4), pat, tau=0.7, sigma=9.9)
        assert prob.tau == 0.7
