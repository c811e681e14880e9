import os
import tempfile

import numpy as np
import pandas as pd
from django.test import SimpleTestCase
from scipy.sparse import csgraph

from environments.exceptions import EdgeListFormatError
from environments.graph_engine import (
    Graph, generate_ba, load_edge_list, pagerank_chain, random_walk_dataset, save_edge_list, save_vertex_map
)
from environments.taxi_engine import PICKUP_DROPOFF, decode_state, encode_state, taxi_mdp
from markov.exceptions import InvalidParameterError
from markov.stationary_engine import state_chain, stationary_oracle
from markov.structures import Distribution, MarkovChain, Policy


class GenerateBaTest(SimpleTestCase):
    def test_small_graph_edge_count(self):
        graph = generate_ba(100, 4, seed=0)
        self.assertEqual(graph.n_edges, 5 * 4 // 2 + 4 * 95)
        self.assertLess(abs(graph.n_edges - 400) / 400.0, 0.05)

    def test_large_graph_edge_count(self):
        graph = generate_ba(500, 4, seed=0)
        self.assertLess(abs(graph.n_edges - 2000) / 2000.0, 0.05)

    def test_single_new_vertex_attaches_to_every_seed_vertex(self):
        graph = generate_ba(5, 4, m0=4, seed=3)
        new_vertex_neighbours = {int(u if v == 4 else v) for u, v in graph.edges if 4 in (u, v)}
        self.assertEqual(new_vertex_neighbours, {0, 1, 2, 3})
        self.assertEqual(graph.n_edges, 6 + 4)

    def test_no_duplicate_edges(self):
        graph = generate_ba(200, 4, seed=5)
        pairs = {tuple(sorted(edge)) for edge in graph.edges.tolist()}
        self.assertEqual(len(pairs), graph.n_edges)

    def test_degree_distribution_is_heavy_tailed(self):
        degrees = generate_ba(200, 4, seed=1).in_degrees()
        self.assertGreaterEqual(degrees.max(), 3 * np.median(degrees))

    def test_deterministic_per_seed(self):
        np.testing.assert_array_equal(generate_ba(60, 3, seed=8).edges, generate_ba(60, 3, seed=8).edges)

    def test_weights_are_positive(self):
        graph = generate_ba(50, 2, seed=2, weighted=True)
        self.assertTrue((graph.weights > 0).all())

    def test_parameter_violations(self):
        for n, m, m0 in ((10, 0, 3), (10, 4, 3), (5, 4, 5)):
            with self.assertRaises(InvalidParameterError):
                generate_ba(n, m, m0=m0)


class EdgeListTest(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.directory.cleanup()

    def write(self, text):
        path = os.path.join(self.directory.name, 'graph.txt')
        with open(path, 'w') as edge_file:
            edge_file.write(text)
        return path

    def test_two_vertex_file(self):
        graph = load_edge_list(self.write('0 1\n1 0\n'))
        self.assertEqual((graph.n_vertices, graph.n_edges), (2, 2))

    def test_ids_are_remapped_and_comments_skipped(self):
        graph = load_edge_list(self.write('# citations\n31336 1061127\n\n1061127 1106406\n'))
        self.assertEqual(graph.vertex_ids, ('31336', '1061127', '1106406'))
        np.testing.assert_array_equal(graph.edges, [[0, 1], [1, 2]])

    def test_round_trip_preserves_edges(self):
        original = load_edge_list(self.write('a b 0.5\nb c 2.0\nc a 1.25\na c 3.0\n'))
        path = os.path.join(self.directory.name, 'copy.txt')
        save_edge_list(original, path)
        copy = load_edge_list(path)

        def edge_multiset(graph):
            return sorted(
                (graph.vertex_ids[src], graph.vertex_ids[dst], weight)
                for (src, dst), weight in zip(graph.edges.tolist(), graph.weights.tolist())
            )
        self.assertEqual(edge_multiset(original), edge_multiset(copy))

    def test_malformed_line_reports_line_number(self):
        with self.assertRaises(EdgeListFormatError) as context:
            load_edge_list(self.write('0 1\n1\n'))
        self.assertEqual(context.exception.line_number, 2)

    def test_empty_file(self):
        with self.assertRaises(EdgeListFormatError):
            load_edge_list(self.write('# nothing here\n'))

    def test_vertex_map_csv(self):
        graph = load_edge_list(self.write('10 20\n20 30\n'))
        path = os.path.join(self.directory.name, 'map.csv')
        save_vertex_map(graph, path)
        frame = pd.read_csv(path, dtype=str)
        self.assertEqual(list(frame.columns), ['original_id', 'dense_id'])
        self.assertEqual(frame['original_id'].tolist(), ['10', '20', '30'])


class PagerankChainTest(SimpleTestCase):
    def test_three_cycle_by_hand(self):
        chain = pagerank_chain(Graph(3, [[0, 1], [1, 2], [2, 0]]), 0.1)
        expected = np.full((3, 3), 0.1 / 3)
        expected[0, 1] += 0.9
        expected[1, 2] += 0.9
        expected[2, 0] += 0.9
        np.testing.assert_allclose(chain.dense(), expected, atol=1e-15)

    def test_heavy_teleport_approaches_uniform(self):
        graph = generate_ba(30, 2, seed=4)
        chain = pagerank_chain(graph, 0.99)
        self.assertTrue((chain.dense() >= 0.99 / 30).all())

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            n = int(rng.integers(2, 30))
            edges = rng.integers(0, n, size=(3 * n, 2))
            chain = pagerank_chain(Graph(n, np.unique(edges, axis=0)), 0.15)
            np.testing.assert_allclose(chain.dense().sum(axis=1), 1.0, atol=1e-12)

    def test_dangling_vertex_gets_uniform_row(self):
        chain = pagerank_chain(Graph(3, [[0, 1], [1, 0]]), 0.2)
        np.testing.assert_allclose(chain.dense()[2], np.full(3, 1 / 3.0))

    def test_weighted_rows(self):
        graph = Graph(2, [[0, 1], [0, 0]], weights=[3.0, 1.0])
        chain = pagerank_chain(graph, 0.0)
        np.testing.assert_allclose(chain.dense()[0], [0.25, 0.75])

    def test_teleport_makes_oracle_converge(self):
        chain = pagerank_chain(generate_ba(100, 4, seed=6), 0.1)
        mu = stationary_oracle(chain)
        self.assertTrue((mu.probs > 0).all())

    def test_eta_range(self):
        with self.assertRaises(InvalidParameterError):
            pagerank_chain(Graph(2, [[0, 1]]), 1.0)


class RandomWalkDatasetTest(SimpleTestCase):
    def test_cycle_is_enumerated(self):
        transition = np.roll(np.eye(4), 1, axis=1)
        chain = MarkovChain(transition, Distribution.point_mass(4, 2))
        dataset = random_walk_dataset(chain, 6, seed=0)
        np.testing.assert_array_equal(dataset.states, [2, 3, 0, 1, 2, 3])
        np.testing.assert_array_equal(dataset.next_states, [3, 0, 1, 2, 3, 0])
        np.testing.assert_array_equal(dataset.initial_states, [2])

    def test_conditional_frequencies_within_binomial_bounds(self):
        chain = pagerank_chain(generate_ba(10, 2, seed=1), 0.3)
        dataset = random_walk_dataset(chain, 10000, seed=4)
        transition = chain.dense()
        for state in range(10):
            mask = dataset.states == state
            count = mask.sum()
            if count < 50:
                continue
            frequencies = np.bincount(dataset.next_states[mask], minlength=10) / float(count)
            # 4 sigma per entry keeps the family of 100 checks at a low false-alarm rate.
            bound = 4 * np.sqrt(transition[state] * (1 - transition[state]) / count)
            self.assertTrue((np.abs(frequencies - transition[state]) <= bound + 1e-12).all())

    def test_same_seed_gives_identical_walk(self):
        chain = pagerank_chain(generate_ba(20, 2, seed=2), 0.1)
        first, second = random_walk_dataset(chain, 500, seed=3), random_walk_dataset(chain, 500, seed=3)
        np.testing.assert_array_equal(first.states, second.states)
        np.testing.assert_array_equal(first.next_states, second.next_states)


class TaxiMdpTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super(TaxiMdpTest, cls).setUpClass()
        cls.mdp = taxi_mdp(grid=5)

    def test_state_count(self):
        self.assertEqual(self.mdp.n_states, 2000)
        self.assertEqual(self.mdp.n_actions, 5)

    def test_rows_are_stochastic(self):
        sums = np.asarray(self.mdp.transition.sum(axis=1)).ravel()
        np.testing.assert_allclose(sums, 1.0, atol=1e-12)

    def test_every_state_reachable_under_uniform_policy(self):
        chain = state_chain(self.mdp, Policy.uniform(self.mdp.n_states, self.mdp.n_actions))
        start = int(np.flatnonzero(self.mdp.mu0.probs)[0])
        reached = csgraph.breadth_first_order(chain.transition, start, directed=True, return_predecessors=False)
        self.assertEqual(len(reached), 2000)

    def test_pickup_then_dropoff_pays(self):
        tensor_row = self.mdp.transition[encode_state(0, 0b0001, 0) * 5 + PICKUP_DROPOFF].toarray().ravel()
        outcomes = [decode_state(state) for state in np.flatnonzero(tensor_row)]
        self.assertTrue(all(status == 1 for _, _, status in outcomes))

        at_destination = encode_state(24, 0, 1)
        self.assertEqual(self.mdp.reward[at_destination, PICKUP_DROPOFF], 1.0)
        self.assertEqual(self.mdp.reward[encode_state(12, 0, 1), PICKUP_DROPOFF], 0.0)

    def test_passengers_ride_to_the_opposite_corner(self):
        # Corner 1 is cell 4; its passenger rides to corner 2, cell 20.
        self.assertEqual(self.mdp.reward[encode_state(20, 0, 2), PICKUP_DROPOFF], 1.0)
        self.assertEqual(self.mdp.reward[encode_state(24, 0, 2), PICKUP_DROPOFF], 0.0)

    def test_fixed_destination_for_every_passenger(self):
        mdp = taxi_mdp(grid=2, destination=1)
        for status in range(1, 5):
            self.assertEqual(mdp.reward[encode_state(1, 0, status), PICKUP_DROPOFF], 1.0)
            self.assertEqual(mdp.reward[encode_state(3, 0, status), PICKUP_DROPOFF], 0.0)
        with self.assertRaises(InvalidParameterError):
            taxi_mdp(grid=2, destination=4)

    def test_walls_clamp(self):
        row = self.mdp.transition[encode_state(0, 0b1111, 0) * 5 + 0].toarray().ravel()
        np.testing.assert_allclose(row[encode_state(0, 0b1111, 0)], 1.0)

    def test_stationary_distribution_exists_for_uniform_policy(self):
        chain = state_chain(self.mdp, Policy.uniform(self.mdp.n_states, self.mdp.n_actions))
        mu = stationary_oracle(chain, gamma=1.0)
        self.assertAlmostEqual(mu.probs.sum(), 1.0)
