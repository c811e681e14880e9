import math

import numpy as np
from django.test import SimpleTestCase

from divergences.divergence_engine import (
    DIVERGENCES, chi_squared, eval_divergence, get_divergence, js, kl
)
from divergences.exceptions import AbsoluteContinuityError, ConjugateDomainError
from markov.exceptions import InvalidParameterError

# Dense y-grids bracketing the conjugate maximiser for ratios r in [0.05, 10].
CONJUGATE_GRIDS = {
    'chi2': np.linspace(-3.0, 20.0, 46001),
    'kl': np.linspace(-6.0, 4.0, 20001),
    'js': np.linspace(-5.0, math.log(2.0) - 1e-9, 11001),
}


class ChiSquaredTest(SimpleTestCase):
    def test_values_at_the_origin(self):
        divergence = chi_squared()
        self.assertEqual(divergence.phi(1.0), 0.0)
        self.assertEqual(divergence.phi_star(0.0), 0.0)
        self.assertEqual(divergence.phi_star(2.0), 3.0)

    def test_closed_form_dual_by_hand(self):
        divergence = chi_squared()
        self.assertEqual(divergence.closed_form_dual(3.0), 4.0)
        self.assertEqual(3.0 * 4.0 - divergence.phi_star(4.0), divergence.phi(3.0))

    def test_closed_form_dual_is_optimal(self):
        divergence = chi_squared()
        ratios = np.random.default_rng(0).uniform(1e-6, 10.0, size=1000)
        duals = divergence.closed_form_dual(ratios)
        np.testing.assert_allclose(ratios * duals - divergence.phi_star(duals), divergence.phi(ratios), atol=1e-10)


class KlAndJsTest(SimpleTestCase):
    def test_kl_phi_at_one(self):
        self.assertEqual(kl().phi(1.0), 0.0)

    def test_kl_conjugate_by_grid_search(self):
        divergence = kl()
        grid = CONJUGATE_GRIDS['kl']
        best = np.max(2.0 * grid - divergence.phi_star(grid))
        self.assertAlmostEqual(best, 2.0 * math.log(2.0), places=5)

    def test_js_domain_violation(self):
        with self.assertRaises(ConjugateDomainError):
            js().phi_star(1.0)

    def test_js_dual_head_stays_in_domain(self):
        self.assertEqual(js().dual_head, 'log2_minus_softplus')
        self.assertEqual(chi_squared().dual_head, 'identity')

    def test_unknown_name(self):
        with self.assertRaises(InvalidParameterError):
            get_divergence('hellinger')


class DivergencePropertiesTest(SimpleTestCase):
    def test_phi_vanishes_at_one(self):
        for name in DIVERGENCES:
            self.assertEqual(get_divergence(name).phi(1.0), 0.0, name)

    def test_phi_is_convex(self):
        rng = np.random.default_rng(1)
        x1, x2 = rng.uniform(0.0, 10.0, size=(2, 1000))
        t = rng.random(1000)
        for name in DIVERGENCES:
            phi = get_divergence(name).phi
            self.assertTrue(np.all(phi(t * x1 + (1 - t) * x2) <= t * phi(x1) + (1 - t) * phi(x2) + 1e-12), name)

    def test_conjugate_recovers_phi_on_a_grid(self):
        rng = np.random.default_rng(2)
        for name, grid in CONJUGATE_GRIDS.items():
            divergence = get_divergence(name)
            conjugate = divergence.phi_star(grid)
            for r in rng.uniform(0.05, 10.0, size=20):
                self.assertAlmostEqual(np.max(r * grid - conjugate), float(divergence.phi(r)), delta=1e-4, msg=name)

    def test_closed_form_duals_attain_phi(self):
        ratios = np.random.default_rng(3).uniform(0.05, 10.0, size=1000)
        for name in DIVERGENCES:
            divergence = get_divergence(name)
            duals = divergence.closed_form_dual(ratios)
            np.testing.assert_allclose(ratios * duals - divergence.phi_star(duals), divergence.phi(ratios),
                                       rtol=1e-9, atol=1e-10)


class EvalDivergenceTest(SimpleTestCase):
    def test_equal_distributions(self):
        for name in DIVERGENCES:
            self.assertEqual(eval_divergence(get_divergence(name), [0.2, 0.8], [0.2, 0.8]), 0.0)

    def test_chi_squared_by_hand(self):
        self.assertAlmostEqual(eval_divergence(chi_squared(), [0.7, 0.3], [0.5, 0.5]), 0.16, places=15)

    def test_kl_by_direct_summation(self):
        expected = 0.7 * math.log(1.4) + 0.3 * math.log(0.6)
        self.assertAlmostEqual(eval_divergence(kl(), [0.7, 0.3], [0.5, 0.5]), expected, places=15)

    def test_zero_over_zero_contributes_nothing(self):
        self.assertAlmostEqual(eval_divergence(kl(), [0.5, 0.5, 0.0], [0.5, 0.5, 0.0]), 0.0)

    def test_absolute_continuity(self):
        self.assertEqual(eval_divergence(kl(), [0.5, 0.5], [1.0, 0.0]), math.inf)
        with self.assertRaises(AbsoluteContinuityError) as context:
            eval_divergence(kl(), [0.5, 0.5], [1.0, 0.0], strict=True)
        self.assertEqual(context.exception.indices, [1])

    def test_non_negative_and_zero_only_on_equality(self):
        rng = np.random.default_rng(4)
        for name in DIVERGENCES:
            divergence = get_divergence(name)
            for _ in range(1000):
                q, p = rng.dirichlet(np.ones(5), size=2)
                self.assertGreater(eval_divergence(divergence, q, p), 0.0)
                self.assertEqual(eval_divergence(divergence, q, q), 0.0)
