import numpy as np
from django.test import SimpleTestCase

from baselines.exceptions import ZeroBehaviorProbabilityError
from baselines.importance_sampling_engine import step_weights, wis_estimate
from baselines.model_based_engine import behavior_clone, fit_model, model_based_stationary, model_based_value
from markov.exceptions import InvalidParameterError
from markov.sampling_engine import sample_trajectories
from markov.stationary_engine import policy_value, stationary_oracle
from markov.structures import Distribution, MarkovChain, Policy, TabularMDP, TransitionDataset


def toy_dataset():
    return TransitionDataset(2, 2, [0, 0, 1], [0, 0, 1], [1.0, 3.0, 2.0], [1, 0, 1], [0])


def exhaustive_dataset(mdp, scale=4):
    """ Records whose transition frequencies equal P exactly for P in multiples of 1 / scale. """
    tensor = mdp.transition_tensor()
    states, actions, next_states = [], [], []
    for s, a, s_next in np.ndindex(tensor.shape):
        repeats = int(round(tensor[s, a, s_next] * scale))
        states += [s] * repeats
        actions += [a] * repeats
        next_states += [s_next] * repeats
    rewards = mdp.reward[states, actions]
    return TransitionDataset(mdp.n_states, mdp.n_actions, states, actions, rewards, next_states, [0])


def quarter_mdp(gamma=1.0):
    transition = np.array([
        [[0.25, 0.75, 0.0], [0.5, 0.0, 0.5]],
        [[0.0, 0.5, 0.5], [1.0, 0.0, 0.0]],
        [[0.25, 0.25, 0.5], [0.0, 0.75, 0.25]],
    ])
    reward = np.array([[1.0, 0.0], [0.5, 2.0], [0.0, 1.5]])
    return TabularMDP(3, 2, transition, reward, Distribution.uniform(3), gamma)


class FitModelTest(SimpleTestCase):
    def test_hand_counted_toy(self):
        model = fit_model(toy_dataset())
        tensor = model.transition_tensor()
        np.testing.assert_allclose(tensor[0, 0], [0.5, 0.5])
        np.testing.assert_allclose(tensor[1, 1], [0.0, 1.0])
        self.assertAlmostEqual(model.reward[0, 0], 2.0)
        self.assertAlmostEqual(model.reward[1, 1], 2.0)
        np.testing.assert_array_equal(model.visits, [[2, 0], [0, 1]])

    def test_unvisited_rows_are_uniform_and_flagged(self):
        model = fit_model(toy_dataset(), smoothing=0.0)
        np.testing.assert_array_equal(model.unvisited, [[False, True], [True, False]])
        np.testing.assert_allclose(model.transition_tensor()[0, 1], [0.5, 0.5])

    def test_smoothing(self):
        tensor = fit_model(toy_dataset(), smoothing=1.0).transition_tensor()
        np.testing.assert_allclose(tensor[0, 0], [0.5, 0.5])
        np.testing.assert_allclose(tensor[1, 1], [1 / 3.0, 2 / 3.0])

    def test_deterministic_chain_recovered(self):
        transition = np.roll(np.eye(4), 1, axis=1)[:, None, :]
        mdp = TabularMDP(4, 1, transition, np.zeros((4, 1)), Distribution.point_mass(4, 0))
        dataset = sample_trajectories(mdp, Policy.uniform(4, 1), 5, 40, seed=0)
        np.testing.assert_array_equal(fit_model(dataset).transition_tensor(), mdp.transition_tensor())


class ModelBasedValueTest(SimpleTestCase):
    def test_exhaustive_data_recovers_true_value(self):
        mdp = quarter_mdp()
        policy = Policy([[0.3, 0.7], [0.5, 0.5], [1.0, 0.0]])
        value = model_based_value(fit_model(exhaustive_dataset(mdp)), policy, 1.0, mdp.mu0)
        self.assertAlmostEqual(value, policy_value(mdp, policy), places=8)

    def test_single_state_unit_reward(self):
        dataset = TransitionDataset(1, 1, [0, 0], [0, 0], [1.0, 1.0], [0, 0], [0])
        self.assertAlmostEqual(
            model_based_value(fit_model(dataset), Policy.uniform(1, 1), 1.0, Distribution.uniform(1)), 1.0
        )

    def test_matches_independent_pipeline(self):
        rng = np.random.default_rng(0)
        mdp = TabularMDP(4, 2, rng.dirichlet(np.ones(4), size=(4, 2)), rng.random((4, 2)),
                         Distribution(rng.dirichlet(np.ones(4))))
        policy = Policy(rng.dirichlet(np.ones(2), size=4))
        dataset = sample_trajectories(mdp, Policy.uniform(4, 2), 10, 30, seed=1)
        gamma = 0.9

        counts = np.zeros((4, 2, 4))
        np.add.at(counts, (dataset.states, dataset.actions, dataset.next_states), 1.0)
        reward_sums = np.zeros((4, 2))
        np.add.at(reward_sums, (dataset.states, dataset.actions), dataset.rewards)
        visits = counts.sum(axis=2)
        transition = np.where(visits[..., None] > 0, counts / np.maximum(visits, 1)[..., None], 0.25)
        reward = np.where(visits > 0, reward_sums / np.maximum(visits, 1), 0.0)
        pair_chain = np.einsum('sat,tb->satb', transition, policy.probs).reshape(8, 8)
        mu0 = (mdp.mu0.probs[:, None] * policy.probs).ravel()
        mu = np.linalg.solve(np.eye(8) - gamma * pair_chain.T, (1 - gamma) * mu0)
        expected = mu.dot(reward.ravel())

        value = model_based_value(fit_model(dataset), policy, gamma, mdp.mu0)
        self.assertAlmostEqual(value, expected, places=12)

    def test_invariant_to_record_order(self):
        mdp = quarter_mdp()
        dataset = sample_trajectories(mdp, Policy.uniform(3, 2), 4, 25, seed=2)
        order = np.random.default_rng(3).permutation(len(dataset))
        shuffled = TransitionDataset(3, 2, dataset.states[order], dataset.actions[order], dataset.rewards[order],
                                     dataset.next_states[order], dataset.initial_states)
        policy = Policy.uniform(3, 2)
        self.assertAlmostEqual(
            model_based_value(fit_model(dataset), policy, 1.0, mdp.mu0),
            model_based_value(fit_model(shuffled), policy, 1.0, mdp.mu0),
            places=12,
        )

    def test_stationary_readout_for_walks(self):
        transition = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
        dataset = TransitionDataset(3, 1, [0, 0, 0, 0, 1, 1, 2, 2], [0] * 8, [0.0] * 8,
                                    [0, 0, 1, 1, 1, 2, 0, 2], [0])
        estimate = model_based_stationary(fit_model(dataset), Policy.uniform(3, 1), 1.0, Distribution.uniform(3))
        truth = stationary_oracle(MarkovChain(transition, Distribution.uniform(3)))
        np.testing.assert_allclose(estimate.probs, truth.probs, atol=1e-8)


class BehaviorCloneTest(SimpleTestCase):
    def test_single_record(self):
        policy = behavior_clone(TransitionDataset(2, 3, [0], [1], [0.0], [1], [0]))
        np.testing.assert_array_equal(policy.probs[0], [0.0, 1.0, 0.0])
        np.testing.assert_allclose(policy.probs[1], np.full(3, 1 / 3.0))

    def test_converges_to_logging_policy(self):
        rng = np.random.default_rng(4)
        mdp = TabularMDP(4, 3, rng.dirichlet(np.ones(4), size=(4, 3)), np.zeros((4, 3)), Distribution.uniform(4))
        behavior = Policy(rng.dirichlet(np.ones(3), size=4))
        dataset = sample_trajectories(mdp, behavior, 50, 200, seed=5)
        cloned = behavior_clone(dataset)
        visits = dataset.state_counts
        for state in range(4):
            sigma = np.sqrt(behavior.probs[state] * (1 - behavior.probs[state]) / visits[state])
            # 4 sigma per entry keeps the family of checks at a low false-alarm rate.
            self.assertTrue((np.abs(cloned.probs[state] - behavior.probs[state]) <= 4 * sigma + 1e-12).all())


class WisEstimateTest(SimpleTestCase):
    def setUp(self):
        self.dataset = TransitionDataset(
            2, 2,
            states=[0, 1, 0, 1],
            actions=[0, 1, 1, 0],
            rewards=[1.0, 0.0, 0.0, 2.0],
            next_states=[1, 0, 1, 0],
            initial_states=[0, 0],
            episodes=[0, 0, 1, 1],
            steps=[0, 1, 0, 1],
        )
        self.target = Policy([[0.8, 0.2], [0.5, 0.5]])
        self.behavior = Policy.uniform(2, 2)

    def test_identical_policies_average_rewards(self):
        self.assertAlmostEqual(wis_estimate(self.dataset, self.behavior, self.behavior), 0.75)

    def test_hand_enumeration(self):
        self.assertAlmostEqual(wis_estimate(self.dataset, self.target, self.behavior, gamma=1.0), 0.6)
        self.assertAlmostEqual(wis_estimate(self.dataset, self.target, self.behavior, gamma=0.5), 1.0 / 1.5)

    def test_zero_discount_uses_first_step_only(self):
        self.assertAlmostEqual(wis_estimate(self.dataset, self.target, self.behavior, gamma=0.0), 0.8)

    def test_discounted_weighting_by_hand(self):
        # Weighted step rewards are 0.8 then 0.4.
        self.assertAlmostEqual(
            wis_estimate(self.dataset, self.target, self.behavior, gamma=0.5, weighting='discounted'), 0.5
        )
        self.assertAlmostEqual(
            wis_estimate(self.dataset, self.target, self.behavior, gamma=0.9, weighting='discounted'), 0.116
        )
        self.assertAlmostEqual(
            wis_estimate(self.dataset, self.target, self.behavior, gamma=1.0, weighting='discounted'), 0.6
        )

    def test_unknown_weighting(self):
        with self.assertRaises(InvalidParameterError):
            wis_estimate(self.dataset, self.target, self.behavior, weighting='uniform')

    def test_weights_sum_to_one_per_step(self):
        weights = step_weights(self.dataset.trajectories(), self.target, self.behavior)
        np.testing.assert_allclose(weights.sum(axis=0), 1.0)

    def test_zero_behavior_probability_names_the_record(self):
        behavior = Policy([[1.0, 0.0], [0.5, 0.5]])
        with self.assertRaises(ZeroBehaviorProbabilityError) as context:
            wis_estimate(self.dataset, self.target, behavior)
        self.assertEqual((context.exception.episode, context.exception.step), (1, 0))
