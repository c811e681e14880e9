import itertools
import os
import tempfile

import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from divergences.exceptions import ConjugateDomainError
from estimator.exact_solver import empirical_chain, exact_ratio, tabular_exact_solve
from estimator.exceptions import EmptyBatchError, NumericalDivergenceError, UnsupportedStatesError
from estimator.objective_engine import (
    Batch, gradients, inner_maximized_objective, objective_chi2, objective_general, sample_batch
)
from estimator.readouts import (
    estimate_pagerank, estimate_policy_value, save_tau_table, save_trace, self_normalized
)
from estimator.saddle import GenDiceConfig, NetworkFunction, SaddleParams, TabularFunction, initial_saddle
from estimator.training_engine import matched_steps, train
from markov.exceptions import InvalidParameterError, ShapeMismatchError
from markov.stationary_engine import induced_chain, stationary_oracle
from markov.structures import Distribution, MarkovChain, Policy, TabularMDP, TransitionDataset
from mlp.mlp_engine import mlp_init

DOUBLY_STOCHASTIC = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])


def three_state_dataset():
    """ Eight records whose frequencies are exactly p = (1/2, 1/4, 1/4) and P above. """
    return TransitionDataset(
        n_states=3,
        n_actions=1,
        states=[0, 0, 0, 0, 1, 1, 2, 2],
        actions=[0] * 8,
        rewards=[0.0] * 8,
        next_states=[0, 0, 1, 1, 1, 2, 0, 2],
        initial_states=[0],
    )


def random_chain(rng, n_states):
    transition = rng.dirichlet(np.ones(n_states), size=n_states)
    return MarkovChain(transition, Distribution(rng.dirichlet(np.ones(n_states))))


def random_tabular_saddle(rng, n_pairs, head='square'):
    return SaddleParams(
        TabularFunction(rng.uniform(0.5, 1.5, size=n_pairs), head),
        TabularFunction(rng.normal(scale=0.5, size=n_pairs)),
        float(rng.normal()),
    )


def random_batch(rng, n_pairs, size):
    return Batch(
        rng.integers(0, n_pairs, size=size),
        rng.integers(0, n_pairs, size=size),
        rng.integers(0, n_pairs, size=size),
    )


def flat(arrays):
    return np.concatenate([np.ravel(array) for array in arrays])


class ObjectiveTest(SimpleTestCase):
    def setUp(self):
        self.cfg = GenDiceConfig.from_settings(lam=2.0, gamma=0.9)
        self.saddle = initial_saddle(self.cfg, 3, 1)
        self.batch = Batch([0, 1, 2], [1, 2, 0], [0])

    def test_unit_ratio_zero_dual(self):
        self.assertEqual(objective_chi2(self.saddle, self.batch, self.cfg), 0.0)

    def test_unit_ratio_unit_multiplier(self):
        self.saddle.u = 1.0
        self.assertAlmostEqual(objective_chi2(self.saddle, self.batch, self.cfg), -1.0, places=14)

    def test_general_objective_specialises_to_chi_squared(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            saddle = random_tabular_saddle(rng, 6)
            batch = random_batch(rng, 6, 8)
            self.assertEqual(objective_general(saddle, batch, self.cfg), objective_chi2(saddle, batch, self.cfg))

    def test_kl_objective_at_the_origin(self):
        cfg = self.cfg.with_changes(divergence='kl')
        self.assertAlmostEqual(objective_general(initial_saddle(cfg, 3, 1), self.batch, cfg), -np.exp(-1.0))

    def test_js_dual_outside_conjugate_domain(self):
        cfg = self.cfg.with_changes(divergence='js')
        saddle = SaddleParams(TabularFunction.constant(3, 1.0, 'square'), TabularFunction(np.full(3, 0.7)))
        with self.assertRaises(ConjugateDomainError):
            objective_general(saddle, self.batch, cfg)

    def test_empty_batch(self):
        with self.assertRaises(EmptyBatchError):
            Batch([], [], [0])

    def test_next_pairs_must_match_records(self):
        with self.assertRaises(ShapeMismatchError):
            Batch([0, 1, 2], [1, 2], [0])

    def test_penalty_requires_positive_lambda(self):
        with self.assertRaises(InvalidParameterError):
            GenDiceConfig.from_settings(lam=0.0)
        self.assertEqual(GenDiceConfig.from_settings(lam=0.0, normalization='none').penalty, 0.0)


class GradientTest(SimpleTestCase):
    def setUp(self):
        self.cfg = GenDiceConfig.from_settings(lam=1.5, gamma=0.8)

    def test_multiplier_gradient_at_unit_ratio(self):
        saddle = initial_saddle(self.cfg, 3, 1)
        _, grad_u, _ = gradients(saddle, Batch([0, 1, 2], [1, 2, 0], [0]), self.cfg)
        self.assertEqual(grad_u, 0.0)

    def test_full_batch_is_mean_of_per_record_gradients(self):
        rng = np.random.default_rng(1)
        saddle = random_tabular_saddle(rng, 5)
        batch = random_batch(rng, 5, 7)
        full = flat(gradients(saddle, batch, self.cfg)[0]), gradients(saddle, batch, self.cfg)[1]
        singles = [
            gradients(saddle, Batch([pair], [following], batch.initial_pairs), self.cfg)
            for pair, following in zip(batch.pairs, batch.next_pairs)
        ]
        np.testing.assert_allclose(np.mean([flat(g[0]) for g in singles], axis=0), full[0], atol=1e-13)
        self.assertAlmostEqual(np.mean([g[1] for g in singles]), full[1], places=14)
        np.testing.assert_allclose(
            np.mean([flat(g[2]) for g in singles], axis=0), flat(gradients(saddle, batch, self.cfg)[2]), atol=1e-13
        )

    def test_minibatch_gradient_is_unbiased(self):
        rng = np.random.default_rng(2)
        saddle = random_tabular_saddle(rng, 6)
        pairs, next_pairs = rng.integers(0, 6, size=10), rng.integers(0, 6, size=10)
        initial = [0, 3]
        expected = gradients(saddle, Batch(pairs, next_pairs, initial), self.cfg)
        minibatches = [
            gradients(saddle, Batch(pairs[[i, j]], next_pairs[[i, j]], initial), self.cfg)
            for i, j in itertools.product(range(10), repeat=2)
        ]
        for part in (0, 2):
            np.testing.assert_allclose(
                np.mean([flat(g[part]) for g in minibatches], axis=0), flat(expected[part]), atol=1e-13
            )
        self.assertAlmostEqual(np.mean([g[1] for g in minibatches]), expected[1], places=13)

    def test_network_gradients_match_finite_differences(self):
        rng = np.random.default_rng(3)
        h = 1e-5
        for trial in range(50):
            cfg = self.cfg.with_changes(gamma=float(rng.uniform(0.5, 1.0)), lam=float(rng.uniform(0.1, 5.0)))
            saddle = SaddleParams(
                NetworkFunction(mlp_init((5, 4, 1), 'square', seed=trial), 3, 2),
                NetworkFunction(mlp_init((5, 4, 1), 'identity', seed=100 + trial), 3, 2),
                float(rng.normal()),
            )
            batch = random_batch(rng, 6, 6)
            grad_tau, grad_u, grad_f = gradients(saddle, batch, cfg)

            worst = 0.0
            for function, analytic in ((saddle.tau, grad_tau), (saddle.f, grad_f)):
                for array, grad in zip(function.arrays(), analytic):
                    for index in np.ndindex(array.shape):
                        original = array[index]
                        array[index] = original + h
                        plus = objective_chi2(saddle, batch, cfg)
                        array[index] = original - h
                        minus = objective_chi2(saddle, batch, cfg)
                        array[index] = original
                        numeric = (plus - minus) / (2 * h)
                        worst = max(worst, abs(numeric - grad[index]) / max(abs(numeric), abs(grad[index]), 1e-3))

            u = saddle.u
            saddle.u = u + h
            plus = objective_chi2(saddle, batch, cfg)
            saddle.u = u - h
            minus = objective_chi2(saddle, batch, cfg)
            saddle.u = u
            numeric = (plus - minus) / (2 * h)
            worst = max(worst, abs(numeric - grad_u) / max(abs(numeric), abs(grad_u), 1e-3))
            self.assertLess(worst, 1e-4)

    def test_self_normalised_tau_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        cfg = self.cfg.with_changes(normalization='self')
        saddle = random_tabular_saddle(rng, 4)
        batch = random_batch(rng, 4, 9)
        grad_tau = gradients(saddle, batch, cfg)[0][0]
        logits = saddle.tau.logits
        for index in range(4):
            original = logits[index]
            logits[index] = original + 1e-6
            plus = objective_chi2(saddle, batch, cfg)
            logits[index] = original - 1e-6
            minus = objective_chi2(saddle, batch, cfg)
            logits[index] = original
            self.assertAlmostEqual((plus - minus) / 2e-6, grad_tau[index], places=7)


    def test_data_normaliser_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(10)
        cfg = self.cfg.with_changes(normalization='self')
        saddle = random_tabular_saddle(rng, 5)
        pairs = rng.integers(0, 5, size=6)
        batch = Batch(pairs, rng.integers(0, 5, size=6), [1], normalizer_pairs=rng.integers(0, 5, size=12))
        grad_tau = gradients(saddle, batch, cfg)[0][0]
        logits = saddle.tau.logits
        for index in range(5):
            original = logits[index]
            logits[index] = original + 1e-6
            plus = objective_chi2(saddle, batch, cfg)
            logits[index] = original - 1e-6
            minus = objective_chi2(saddle, batch, cfg)
            logits[index] = original
            self.assertAlmostEqual((plus - minus) / 2e-6, grad_tau[index], places=7)

    def test_data_normaliser_divides_by_the_record_mean(self):
        cfg = self.cfg.with_changes(normalization='self', gamma=1.0)
        saddle = SaddleParams(TabularFunction([1.0, 2.0, 3.0]), TabularFunction([0.5, -0.5, 1.0]))
        batch = Batch([0], [1], [0], normalizer_pairs=[1, 2])
        # tau(0) / mean(tau(1), tau(2)) = 0.4; f(1) - phi*(f(0)) = -0.5 - 0.5625.
        self.assertAlmostEqual(objective_chi2(saddle, batch, cfg), 0.4 * -1.0625, places=12)


class InnerMaximizedObjectiveTest(SimpleTestCase):
    def test_midpoint_convexity(self):
        rng = np.random.default_rng(5)
        for trial in range(100):
            chain = random_chain(rng, 5)
            p = rng.dirichlet(np.ones(5))
            gamma = (0.9, 1.0)[trial % 2]
            first, second = rng.uniform(0.1, 3.0, size=5), rng.uniform(0.1, 3.0, size=5)
            midpoint = inner_maximized_objective((first + second) / 2, chain, p, gamma, chain.mu0, 1.0)
            average = (inner_maximized_objective(first, chain, p, gamma, chain.mu0, 1.0)
                       + inner_maximized_objective(second, chain, p, gamma, chain.mu0, 1.0)) / 2
            self.assertLessEqual(midpoint, average + 1e-10)

    def test_rescaled_solutions_are_degenerate_without_penalty(self):
        chain = MarkovChain(DOUBLY_STOCHASTIC, Distribution.uniform(3))
        p = Distribution([0.5, 0.25, 0.25])
        tau = tabular_exact_solve(chain, p)
        for scale in (0.0, 0.5, 1.0, 2.0):
            self.assertAlmostEqual(inner_maximized_objective(scale * tau, chain, p, 1.0, chain.mu0, 0.0), 0.0, places=12)

    def test_penalty_singles_out_the_normalised_ratio(self):
        chain = MarkovChain(DOUBLY_STOCHASTIC, Distribution.uniform(3))
        p = Distribution([0.5, 0.25, 0.25])
        tau = tabular_exact_solve(chain, p)
        self.assertAlmostEqual(inner_maximized_objective(tau, chain, p, 1.0, chain.mu0, 1.0), 0.0, places=12)
        for scale in (0.0, 0.5, 2.0):
            self.assertGreater(inner_maximized_objective(scale * tau, chain, p, 1.0, chain.mu0, 1.0), 0.1)

    def test_mass_where_data_has_none_is_infinite(self):
        chain = MarkovChain(DOUBLY_STOCHASTIC, Distribution.uniform(3))
        self.assertEqual(inner_maximized_objective([1.0, 1.0, 1.0], chain, [0.5, 0.5, 0.0], 1.0, chain.mu0, 1.0),
                         np.inf)


class ExactSolveTest(SimpleTestCase):
    def test_stationary_data_gives_unit_ratio(self):
        chain = MarkovChain(DOUBLY_STOCHASTIC, Distribution.uniform(3))
        np.testing.assert_allclose(tabular_exact_solve(chain, Distribution.uniform(3)), 1.0, atol=1e-10)

    def test_matches_oracle_ratio_on_five_state_chains(self):
        rng = np.random.default_rng(6)
        for gamma in (0.9, 1.0):
            chain = random_chain(rng, 5)
            p = Distribution(rng.dirichlet(5 * np.ones(5)))
            mu = stationary_oracle(chain, gamma=gamma, tol=1e-13).probs
            tau = tabular_exact_solve(chain, p, gamma=gamma)
            np.testing.assert_allclose(tau, mu / p.probs, atol=1e-8)
            self.assertAlmostEqual(np.dot(p.probs, tau), 1.0, places=10)

    def test_oracle_equivalence_on_many_chains(self):
        rng = np.random.default_rng(7)
        for trial in range(100):
            n_states = int(rng.integers(2, 21))
            gamma = (0.9, 1.0)[trial % 2]
            chain = random_chain(rng, n_states)
            p = Distribution(rng.dirichlet(np.ones(n_states)) * 0.9 + 0.1 / n_states)
            mu = stationary_oracle(chain, gamma=gamma, tol=1e-13).probs
            tau = tabular_exact_solve(chain, p, gamma=gamma)
            self.assertLessEqual(np.abs(tau - mu / p.probs).max(), 1e-6)

    def test_fixed_point_residual(self):
        rng = np.random.default_rng(8)
        for gamma in (0.5, 0.9, 1.0):
            chain = random_chain(rng, 5)
            p = rng.dirichlet(np.ones(5)) * 0.5 + 0.1
            tau = tabular_exact_solve(chain, Distribution(p), gamma=gamma)
            left = p * tau
            right = (1.0 - gamma) * chain.mu0.probs + gamma * chain.dense().T.dot(p * tau)
            np.testing.assert_allclose(left, right, atol=1e-8)

    def test_unsupported_states_are_listed(self):
        chain = MarkovChain(DOUBLY_STOCHASTIC, Distribution.uniform(3))
        with self.assertRaises(UnsupportedStatesError) as context:
            tabular_exact_solve(chain, Distribution([0.5, 0.5, 0.0]))
        self.assertEqual(context.exception.indices, [2])

    def test_unsupported_states_may_be_allowed(self):
        chain = MarkovChain(DOUBLY_STOCHASTIC, Distribution.uniform(3))
        tau = tabular_exact_solve(chain, Distribution([0.5, 0.5, 0.0]), require_support=False)
        self.assertEqual(tau[2], 0.0)
        self.assertAlmostEqual(np.dot([0.5, 0.5, 0.0], tau), 1.0, places=10)

    def test_empirical_chain_recovers_transitions(self):
        chain = empirical_chain(three_state_dataset(), Policy.uniform(3, 1))
        np.testing.assert_allclose(chain.dense(), DOUBLY_STOCHASTIC)

    def test_empirical_chain_self_loops_unvisited_pairs(self):
        dataset = TransitionDataset(2, 2, [0, 1], [0, 0], [0.0, 0.0], [1, 0], [0])
        chain = empirical_chain(dataset, Policy([[1.0, 0.0], [0.5, 0.5]]))
        np.testing.assert_allclose(chain.dense()[0], [0.0, 0.0, 0.5, 0.5])
        np.testing.assert_allclose(chain.dense()[1], [0.0, 1.0, 0.0, 0.0])
        np.testing.assert_allclose(chain.mu0.probs, [1.0, 0.0, 0.0, 0.0])

    def test_exact_ratio_from_records(self):
        np.testing.assert_allclose(
            exact_ratio(three_state_dataset(), Policy.uniform(3, 1)), [2 / 3.0, 4 / 3.0, 4 / 3.0], atol=1e-10
        )


class TrainTest(SimpleTestCase):
    def setUp(self):
        self.dataset = three_state_dataset()
        self.policy = Policy.uniform(3, 1)
        self.cfg = GenDiceConfig.from_settings(
            lr_tau=0.05, lr_f=0.05, lr_u=0.05, steps=20000, full_batch=True, gamma=1.0
        )

    def test_zero_steps_returns_initial_params(self):
        result = train(self.cfg.with_changes(steps=0), self.dataset, self.policy)
        np.testing.assert_array_equal(result.tau_table(3), np.ones(3))
        self.assertEqual(result.saddle.u, 0.0)
        self.assertEqual(len(result.trace), 0)

    def test_ratio_is_invariant_to_lambda(self):
        expected = np.array([2 / 3.0, 4 / 3.0, 4 / 3.0])
        ratios = []
        for lam in (0.1, 1.0, 5.0):
            tau = train(self.cfg.with_changes(lam=lam), self.dataset, self.policy).tau_table(3)
            self.assertLess(np.abs(tau - expected).max(), 1e-2)
            ratios.append(tau)
        for first, second in itertools.combinations(ratios, 2):
            self.assertLess(np.abs(first - second).max(), 5e-2)

    def test_tail_average_is_the_mean_of_the_last_iterates(self):
        cfg = self.cfg.with_changes(full_batch=False, batch_size=8, steps=10, seed=2, lr_tau=0.2, lr_f=0.2, lr_u=0.2)
        averaged = train(cfg.with_changes(tail_average=0.3), self.dataset, self.policy)
        iterates = [train(cfg.with_changes(steps=steps), self.dataset, self.policy).saddle for steps in (8, 9, 10)]
        np.testing.assert_allclose(averaged.saddle.tau.logits, np.mean([s.tau.logits for s in iterates], axis=0),
                                   rtol=1e-12)
        np.testing.assert_allclose(averaged.saddle.f.logits, np.mean([s.f.logits for s in iterates], axis=0),
                                   rtol=1e-12, atol=1e-15)
        self.assertAlmostEqual(averaged.saddle.u, np.mean([s.u for s in iterates]), places=12)
        pd.testing.assert_frame_equal(averaged.trace, train(cfg, self.dataset, self.policy).trace)

    def test_tail_average_range(self):
        with self.assertRaises(InvalidParameterError):
            self.cfg.with_changes(tail_average=1.0)
        result = train(self.cfg.with_changes(steps=0, tail_average=0.5), self.dataset, self.policy)
        np.testing.assert_array_equal(result.tau_table(3), np.ones(3))

    def test_matched_steps_charge_a_pass_over_the_records(self):
        cfg = self.cfg.with_changes(full_batch=False, batch_size=100, steps=1000, normalization='self')
        self.assertEqual(matched_steps(cfg, 900), 100)
        self.assertEqual(matched_steps(cfg.with_changes(steps=3), 900), 1)
        self.assertEqual(matched_steps(cfg.with_changes(full_batch=True), 900), 1000)

    def test_data_normalised_training_runs(self):
        cfg = self.cfg.with_changes(full_batch=False, batch_size=4, steps=200, normalization='self',
                                    self_normalizer='data')
        result = train(cfg, self.dataset, self.policy)
        self.assertTrue(np.isfinite(result.trace['J']).all())
        self.assertTrue((result.tau_table(3) > 0).all())

    def test_same_seed_same_trace(self):
        cfg = self.cfg.with_changes(full_batch=False, batch_size=16, steps=50, seed=4)
        first = train(cfg, self.dataset, self.policy).trace
        second = train(cfg, self.dataset, self.policy).trace
        pd.testing.assert_frame_equal(first, second)

    def test_divergence_aborts_with_step(self):
        cfg = self.cfg.with_changes(divergence='kl', divergence_bound=1e-3, steps=5)
        with self.assertRaises(NumericalDivergenceError) as context:
            train(cfg, self.dataset, self.policy)
        self.assertEqual(context.exception.step, 0)

    def test_network_training_runs(self):
        cfg = self.cfg.with_changes(
            parameterization='network', hidden_sizes=(8,), steps=20, full_batch=False, batch_size=32,
            optimizer='adaptive', lr_tau=0.001, lr_f=0.001, lr_u=0.001,
        )
        result = train(cfg, self.dataset, self.policy)
        self.assertTrue(np.isfinite(result.trace['J']).all())
        self.assertTrue((result.tau_table(3) >= 0).all())
        self.assertEqual(result.saddle.meta['optimizer'], 'adaptive')

    def test_initial_sampler_is_used(self):
        calls = []

        def sampler(size, rng):
            calls.append(size)
            return np.zeros(size, dtype=np.int64)
        train(self.cfg.with_changes(steps=3, full_batch=False, batch_size=4), self.dataset, self.policy, sampler)
        self.assertEqual(calls, [4, 4, 4])

    def test_sample_batch_completes_actions_from_policy(self):
        dataset = TransitionDataset(2, 2, [0, 1], [1, 0], [0.0, 0.0], [1, 0], [1])
        policy = Policy([[0.0, 1.0], [1.0, 0.0]])
        batch = sample_batch(dataset, policy, 4, np.random.default_rng(0), full=True)
        np.testing.assert_array_equal(batch.pairs, [1, 2])
        np.testing.assert_array_equal(batch.next_pairs, [2, 1])
        np.testing.assert_array_equal(batch.initial_pairs, [2])


class ReadoutsTest(SimpleTestCase):
    def test_self_normalized(self):
        tau = np.array([0.5, 1.5, 1.0])
        np.testing.assert_allclose(self_normalized(tau), tau)
        np.testing.assert_allclose(self_normalized(7.0 * tau), self_normalized(tau))
        with self.assertRaises(InvalidParameterError):
            self_normalized(np.zeros(3))

    def test_self_normalized_pair_table_uses_record_mean(self):
        dataset = three_state_dataset()
        normalised = self_normalized(np.array([2.0, 1.0, 1.0]), dataset)
        self.assertAlmostEqual(np.dot(dataset.empirical_distribution().probs, normalised), 1.0)

    def test_unit_ratio_gives_mean_reward(self):
        dataset = TransitionDataset(2, 1, [0, 1, 1], [0, 0, 0], [1.0, 2.0, 6.0], [1, 1, 0], [0])
        self.assertAlmostEqual(estimate_policy_value(np.ones(2), dataset), 3.0)

    def test_zero_rewards(self):
        self.assertEqual(estimate_policy_value(np.array([0.3, 2.0, 1.1]), three_state_dataset()), 0.0)

    def test_exact_ratio_recovers_policy_value(self):
        rng = np.random.default_rng(9)
        mdp = TabularMDP(3, 2, rng.dirichlet(np.ones(3), size=(3, 2)), rng.random((3, 2)), Distribution.uniform(3))
        policy = Policy(rng.dirichlet(np.ones(2), size=3))
        counts = np.array([3, 1, 2, 2, 1, 1])
        pairs = np.repeat(np.arange(6), counts)
        dataset = TransitionDataset(
            3, 2, pairs // 2, pairs % 2, mdp.reward.ravel()[pairs], np.zeros(pairs.size, dtype=int), [0]
        )
        chain = induced_chain(mdp, policy)
        tau = tabular_exact_solve(chain, dataset.empirical_distribution(), gamma=1.0)
        truth = stationary_oracle(chain, gamma=1.0, tol=1e-13).probs.dot(mdp.reward.ravel())
        self.assertAlmostEqual(estimate_policy_value(tau, dataset), truth, places=8)

    def test_pagerank_readout(self):
        dataset = three_state_dataset()
        np.testing.assert_allclose(estimate_pagerank(np.ones(3), dataset).probs, [0.5, 0.25, 0.25])
        estimate = estimate_pagerank(exact_ratio(dataset, Policy.uniform(3, 1)), dataset)
        np.testing.assert_allclose(estimate.probs, np.full(3, 1 / 3.0), atol=1e-8)
        self.assertAlmostEqual(estimate.probs.sum(), 1.0)

    def test_csv_exports(self):
        with tempfile.TemporaryDirectory() as directory:
            trace_path = os.path.join(directory, 'trace.csv')
            save_trace(pd.DataFrame({'step': [0, 1], 'J': [0.5, 0.25]}), trace_path)
            self.assertEqual(list(pd.read_csv(trace_path).columns), ['step', 'J'])

            tau_path = os.path.join(directory, 'tau.csv')
            save_tau_table(np.arange(6, dtype=float), 3, 2, tau_path)
            frame = pd.read_csv(tau_path)
            self.assertEqual(list(frame.columns), ['state', 'action', 'tau'])
            self.assertEqual(frame.loc[3].tolist(), [1, 1, 3.0])
