import numpy as np
from django.test import SimpleTestCase

from markov.exceptions import InvalidDistributionError, InvalidParameterError, StationaryConvergenceError
from markov.policy_engine import greedy_policy, mix_policies, q_learning, value_iteration
from markov.sampling_engine import sample_trajectories
from markov.stationary_engine import apply_T, induced_chain, policy_value, state_chain, stationary_oracle
from markov.structures import Distribution, MarkovChain, Policy, TabularMDP, TransitionDataset


def random_chain(rng, n_states, gamma=1.0):
    transition = rng.dirichlet(np.ones(n_states), size=n_states)
    return MarkovChain(transition, Distribution(rng.dirichlet(np.ones(n_states))), gamma)


def random_mdp(rng, n_states, n_actions, gamma=0.9):
    transition = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    return TabularMDP(
        n_states=n_states,
        n_actions=n_actions,
        transition=transition,
        reward=rng.random((n_states, n_actions)),
        mu0=Distribution(rng.dirichlet(np.ones(n_states))),
        gamma=gamma,
    )


def eigenvector_stationary(transition):
    values, vectors = np.linalg.eig(np.asarray(transition).T)
    vector = np.real(vectors[:, np.argmin(np.abs(values - 1.0))])
    return vector / vector.sum()


class StructuresTest(SimpleTestCase):
    def test_distribution_must_sum_to_one(self):
        with self.assertRaises(InvalidDistributionError):
            Distribution([0.5, 0.4])

    def test_chain_rejects_non_stochastic_rows(self):
        with self.assertRaises(InvalidDistributionError):
            MarkovChain([[0.5, 0.6], [0.5, 0.5]], Distribution.uniform(2))

    def test_dataset_rejects_out_of_range_indices(self):
        with self.assertRaises(InvalidParameterError):
            TransitionDataset(2, 1, [0, 2], [0, 0], [0.0, 0.0], [1, 0], [0])

    def test_empirical_distribution_sums_to_one(self):
        dataset = TransitionDataset(3, 2, [0, 1, 1, 2], [1, 0, 0, 1], [0.0] * 4, [1, 1, 2, 0], [0])
        p_hat = dataset.empirical_distribution()
        self.assertAlmostEqual(p_hat.probs.sum(), 1.0)
        self.assertAlmostEqual(p_hat.probs[1 * 2 + 0], 0.5)

    def test_structures_are_read_only(self):
        policy = Policy.uniform(2, 2)
        with self.assertRaises(ValueError):
            policy.probs[0, 0] = 1.0


class StationaryOracleTest(SimpleTestCase):
    def test_uniform_two_state_chain(self):
        chain = MarkovChain(np.full((2, 2), 0.5), Distribution.point_mass(2, 0))
        np.testing.assert_allclose(stationary_oracle(chain).probs, [0.5, 0.5], atol=1e-12)

    def test_three_state_chain_matches_eigenvector(self):
        transition = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
        chain = MarkovChain(transition, Distribution.point_mass(3, 0))
        np.testing.assert_allclose(stationary_oracle(chain).probs, eigenvector_stationary(transition), atol=1e-9)

    def test_zero_discount_returns_restart_distribution(self):
        chain = random_chain(np.random.default_rng(1), 4)
        mu0 = Distribution([0.1, 0.2, 0.3, 0.4])
        self.assertIs(stationary_oracle(chain, gamma=0.0, mu0_term=mu0), mu0)

    def test_periodic_chain_uses_averaged_iterates(self):
        chain = MarkovChain([[0.0, 1.0], [1.0, 0.0]], Distribution.point_mass(2, 0))
        np.testing.assert_allclose(stationary_oracle(chain, max_iter=1000).probs, [0.5, 0.5], atol=1e-10)

    def test_non_convergence_names_residual(self):
        chain = MarkovChain([[0.0, 1.0], [1.0, 0.0]], Distribution.point_mass(2, 0))
        with self.assertRaises(StationaryConvergenceError) as context:
            stationary_oracle(chain, max_iter=1)
        self.assertGreater(context.exception.residual, 0.0)

    def test_fixed_point_for_generated_chains(self):
        rng = np.random.default_rng(7)
        for gamma in (0.5, 0.9, 1.0):
            for _ in range(20):
                chain = random_chain(rng, int(rng.integers(2, 10)), gamma)
                mu = stationary_oracle(chain)
                image = apply_T(mu, chain, gamma, chain.mu0)
                self.assertLessEqual(np.abs(image.probs - mu.probs).sum(), 1e-6)

    def test_discounted_solve_matches_truncated_series(self):
        rng = np.random.default_rng(11)
        gamma, horizon = 0.9, 200
        for _ in range(10):
            chain = random_chain(rng, int(rng.integers(2, 11)), gamma)
            occupancy = np.zeros(chain.n_states)
            d_t = chain.mu0.probs.copy()
            for t in range(horizon + 1):
                occupancy += (1.0 - gamma) * gamma ** t * d_t
                d_t = chain.transition.T @ d_t
            solved = stationary_oracle(chain).probs
            self.assertLessEqual(np.abs(solved - occupancy).sum(), gamma ** (horizon + 1))

    def test_apply_T_matches_direct_summation(self):
        rng = np.random.default_rng(3)
        chain = random_chain(rng, 3)
        mu = Distribution(rng.dirichlet(np.ones(3)))
        mu0 = Distribution(rng.dirichlet(np.ones(3)))
        gamma = 0.7
        expected = [
            (1 - gamma) * mu0.probs[u] + gamma * sum(chain.transition[v, u] * mu.probs[v] for v in range(3))
            for u in range(3)
        ]
        np.testing.assert_allclose(apply_T(mu, chain, gamma, mu0).probs, expected, atol=1e-15)

    def test_apply_T_with_zero_discount(self):
        chain = random_chain(np.random.default_rng(5), 3)
        mu0 = Distribution([0.2, 0.3, 0.5])
        np.testing.assert_array_equal(apply_T(Distribution.uniform(3), chain, 0.0, mu0).probs, mu0.probs)


class InducedChainTest(SimpleTestCase):
    def test_single_state_single_action(self):
        mdp = TabularMDP(1, 1, [[[1.0]]], [[0.0]], Distribution([1.0]))
        np.testing.assert_array_equal(induced_chain(mdp, Policy([[1.0]])).dense(), [[1.0]])

    def test_uniform_policy_by_enumeration(self):
        mdp = random_mdp(np.random.default_rng(2), 2, 2)
        tensor = mdp.transition_tensor()
        dense = induced_chain(mdp, Policy.uniform(2, 2)).dense()
        for s in range(2):
            for a in range(2):
                for s_next in range(2):
                    for a_next in range(2):
                        self.assertAlmostEqual(dense[s * 2 + a, s_next * 2 + a_next], tensor[s, a, s_next] / 2)

    def test_row_stochastic_for_random_mdps(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            n_states, n_actions = int(rng.integers(1, 6)), int(rng.integers(1, 4))
            mdp = random_mdp(rng, n_states, n_actions)
            policy = Policy(rng.dirichlet(np.ones(n_actions), size=n_states))
            sums = np.asarray(induced_chain(mdp, policy).transition.sum(axis=1)).ravel()
            np.testing.assert_allclose(sums, 1.0, atol=1e-12)

    def test_state_chain_marginalises_actions(self):
        rng = np.random.default_rng(17)
        mdp = random_mdp(rng, 4, 3, gamma=0.8)
        policy = Policy(rng.dirichlet(np.ones(3), size=4))
        pairs = stationary_oracle(induced_chain(mdp, policy)).probs.reshape(4, 3)
        states = stationary_oracle(state_chain(mdp, policy)).probs
        np.testing.assert_allclose(pairs.sum(axis=1), states, atol=1e-12)
        np.testing.assert_allclose(pairs, states[:, None] * policy.probs, atol=1e-12)

    def test_policy_value_of_constant_reward(self):
        rng = np.random.default_rng(19)
        mdp = random_mdp(rng, 3, 2)
        constant = TabularMDP(3, 2, mdp.transition, np.ones((3, 2)), mdp.mu0, 1.0)
        self.assertAlmostEqual(policy_value(constant, Policy.uniform(3, 2)), 1.0)


class MixPoliciesTest(SimpleTestCase):
    target = Policy([[0.9, 0.1], [0.2, 0.8]])
    base = Policy([[0.5, 0.5], [1.0, 0.0]])

    def test_endpoints(self):
        np.testing.assert_array_equal(mix_policies(self.target, self.base, 0.0).probs, self.target.probs)
        np.testing.assert_array_equal(mix_policies(self.target, self.base, 1.0).probs, self.base.probs)

    def test_hand_computed_mixture(self):
        mixed = mix_policies(self.target, self.base, 0.33)
        np.testing.assert_allclose(mixed.probs, 0.67 * self.target.probs + 0.33 * self.base.probs, atol=1e-15)

    def test_alpha_outside_unit_interval(self):
        with self.assertRaises(InvalidParameterError):
            mix_policies(self.target, self.base, 1.5)


class SampleTrajectoriesTest(SimpleTestCase):
    def test_deterministic_dynamics_are_followed(self):
        tensor = np.zeros((3, 1, 3))
        tensor[0, 0, 1] = tensor[1, 0, 2] = tensor[2, 0, 0] = 1.0
        mdp = TabularMDP(3, 1, tensor, np.zeros((3, 1)), Distribution.point_mass(3, 0))
        dataset = sample_trajectories(mdp, Policy.uniform(3, 1), 2, 5, seed=0)
        self.assertEqual(len(dataset), 10)
        np.testing.assert_array_equal(dataset.next_states, (dataset.states + 1) % 3)
        np.testing.assert_array_equal(dataset.states[:5], [0, 1, 2, 0, 1])

    def test_next_state_frequencies_within_binomial_bounds(self):
        tensor = np.array([[[0.3, 0.7]], [[0.6, 0.4]]])
        mdp = TabularMDP(2, 1, tensor, np.zeros((2, 1)), Distribution.uniform(2))
        dataset = sample_trajectories(mdp, Policy.uniform(2, 1), 4, 5000, seed=42)
        for state in range(2):
            mask = dataset.states == state
            count = mask.sum()
            p = tensor[state, 0, 1]
            frequency = (dataset.next_states[mask] == 1).mean()
            self.assertLessEqual(abs(frequency - p), 3 * np.sqrt(p * (1 - p) / count))

    def test_same_seed_gives_identical_dataset(self):
        mdp = random_mdp(np.random.default_rng(23), 4, 2)
        first = sample_trajectories(mdp, Policy.uniform(4, 2), 3, 50, seed=9)
        second = sample_trajectories(mdp, Policy.uniform(4, 2), 3, 50, seed=9)
        self.assertTrue(first.to_frame().equals(second.to_frame()))
        np.testing.assert_array_equal(first.initial_states, second.initial_states)

    def test_horizon_must_be_positive(self):
        mdp = random_mdp(np.random.default_rng(29), 2, 2)
        with self.assertRaises(InvalidParameterError):
            sample_trajectories(mdp, Policy.uniform(2, 2), 1, 0, seed=0)


class QLearningTest(SimpleTestCase):
    def test_single_state_reward_one(self):
        mdp = TabularMDP(1, 1, [[[1.0]]], [[1.0]], Distribution([1.0]), gamma=0.0)
        q_table, policy = q_learning(mdp, iterations=5, seed=0)
        self.assertAlmostEqual(q_table[0, 0], 1.0, places=6)
        np.testing.assert_array_equal(policy.probs, [[1.0]])

    def test_zero_iterations(self):
        mdp = random_mdp(np.random.default_rng(31), 3, 4)
        q_table, policy = q_learning(mdp, iterations=0, seed=0)
        np.testing.assert_array_equal(q_table, np.zeros((3, 4)))
        np.testing.assert_allclose(policy.probs, 0.25)

    def test_greedy_policy_matches_value_iteration(self):
        # Action 1 moves right, action 0 stays; only staying in state 1 pays.
        tensor = np.zeros((2, 2, 2))
        tensor[0, 0, 0] = tensor[0, 1, 1] = tensor[1, 0, 1] = tensor[1, 1, 0] = 1.0
        reward = np.array([[0.0, 0.0], [1.0, 0.0]])
        mdp = TabularMDP(2, 2, tensor, reward, Distribution.uniform(2), gamma=0.9)
        q_table, policy = q_learning(mdp, iterations=300, seed=1)
        _, optimal_q = value_iteration(mdp)
        np.testing.assert_array_equal(policy.probs.argmax(axis=1), optimal_q.argmax(axis=1))
        np.testing.assert_array_equal(optimal_q.argmax(axis=1), [1, 0])

    def test_greedy_policy_splits_ties(self):
        policy = greedy_policy([[1.0, 1.0, 0.0]], softening=0.3)
        np.testing.assert_allclose(policy.probs, [[0.45, 0.45, 0.1]])
