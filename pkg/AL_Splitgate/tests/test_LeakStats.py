## Test Framework
import unittest
## Testing utilities
from AL_Splitgate import tests
## Test Target
from AL_Splitgate import LeakStats, Metrics, Errors
## Third Party
import numpy as np
## Builtin
import collections
import itertools

def brute_force_p(sample, m0 = 0.0)-> float:
    """ Two-tailed p by enumerating signs over the ranks of a tie-free sample """
    d = [value - m0 for value in sample if value != m0]
    order = sorted(range(len(d)), key = lambda i: abs(d[i]))
    ranks = [0] * len(d)
    for rank, i in enumerate(order, start = 1): ranks[i] = rank
    wplus = sum(rank for rank, value in zip(ranks, d) if value > 0)
    mean = len(d) * (len(d) + 1) / 4
    extreme = sum(1 for signs in itertools.product((0, 1), repeat = len(d))
                  if abs(sum(rank for rank, sign in zip(ranks, signs) if sign) - mean) >= abs(wplus - mean))
    return extreme / 2 ** len(d)

class WilcoxonCase(unittest.TestCase):
    def test_examples(self):
        for case in tests.DATA['WILCOXON']:
            with self.subTest(sample = case['sample'], m0 = case['m0']):
                self.assertAlmostEqual(LeakStats.wilcoxon_one_sample(case['sample'], case['m0']), case['p'], places = 12)

    def test_exact_sweep(self):
        rng = np.random.default_rng(500)
        for i in range(500):
            n = int(rng.integers(1, 11))
            sample = rng.normal(0.3, 1.0, size = n).tolist()
            with self.subTest(i = i, n = n):
                self.assertLessEqual(abs(LeakStats.wilcoxon_one_sample(sample, method = "exact") - brute_force_p(sample)), 1e-12)

    def test_normal_approximation(self):
        rng = np.random.default_rng(12)
        for n in (10, 11, 12):
            for i in range(30):
                sample = rng.normal(0.5, 1.0, size = n).tolist()
                with self.subTest(n = n, i = i):
                    exact = LeakStats.wilcoxon_one_sample(sample, method = "exact")
                    approx = LeakStats.wilcoxon_one_sample(sample, method = "approx")
                    self.assertLessEqual(abs(exact - approx), 0.02)

    def test_large_sample(self):
        """ Far-off locations give tiny but positive p-values """
        p = LeakStats.wilcoxon_one_sample(np.linspace(1, 2, 1000), m0 = 0.0)
        self.assertGreater(p, 0.0)
        self.assertLess(p, 1e-100)

    def test_empty(self):
        with self.assertRaises(Errors.EmptySample):
            LeakStats.wilcoxon_one_sample([])

class EmpiricalCase(unittest.TestCase):
    def test_median(self):
        samples = np.linspace(-1, 1, 10001)
        self.assertEqual(LeakStats.empirical_p(samples, 0.0), 1.0)

    def test_beyond(self):
        samples = np.linspace(-0.01, 0.01, 10000)
        self.assertEqual(LeakStats.empirical_p(samples, 0.5), 2 / 10001)
        self.assertEqual(LeakStats.empirical_p(samples, -0.5), 2 / 10001)

    def test_empty(self):
        with self.assertRaises(Errors.EmptySample):
            LeakStats.empirical_p([], 0.0)

class NullCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.null = LeakStats.sample_null_mcc(4000, 4, 10000, 7)
        return super().setUpClass()

    def test_centered(self):
        samples = np.asarray(self.null.samples)
        self.assertEqual(samples.size, 10000)
        self.assertLess(abs(samples.mean()), 0.005)
        self.assertLess(np.quantile(np.abs(samples), 0.99), 0.05)
        self.assertEqual(sum(self.null.class_counts), 10000 * 4000)

    def test_flags_extreme(self):
        report = LeakStats.leakage_probe(0.2, self.null)
        self.assertLess(report.wilcoxon_p, 0.05)
        self.assertLess(report.empirical_p, 0.05)
        self.assertEqual(report.empirical_p, 2 / 10001)
        self.assertTrue(report.flagged)

    def test_median_not_flagged(self):
        report = LeakStats.leakage_probe(float(np.median(self.null.samples)), self.null)
        self.assertEqual(report.empirical_p, 1.0)
        self.assertFalse(report.flagged)

    def test_persistence(self):
        data = self.null.to_dict()
        self.assertEqual(LeakStats.NullDistribution.from_dict(data), self.null)
        self.assertNotIn("samples", self.null.to_dict(include_samples = False))
        with self.assertRaises(ValueError):
            LeakStats.NullDistribution.from_dict(self.null.to_dict(include_samples = False))

class SamplingCase(unittest.TestCase):
    def test_deterministic(self):
        first = LeakStats.sample_null_mcc(100, 3, 1, 11)
        self.assertEqual(first.samples, LeakStats.sample_null_mcc(100, 3, 1, 11).samples)
        self.assertEqual(len(first.samples), 1)

    def test_chunking(self):
        """ Iterations are independent of how many are drawn """
        short = LeakStats.sample_null_mcc(20, 2, 300, 5)
        long = LeakStats.sample_null_mcc(20, 2, 600, 5)
        self.assertEqual(short.samples, long.samples[:300])

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(3)
        truth = rng.integers(0, 3, size = (50, 17))
        pred = rng.integers(0, 3, size = (50, 17))
        batch = LeakStats.mcc_batch(truth, pred, 3)
        for row in range(50):
            with self.subTest(row = row):
                self.assertAlmostEqual(batch[row], Metrics.mcc_multiclass(Metrics.confusion_matrix(truth[row], pred[row], 3)), places = 12)

    def test_enumeration(self):
        """ n_test = 4, k = 2: frequencies match all 16 x 16 label/prediction pairs """
        exact = collections.Counter()
        for truth in itertools.product((0, 1), repeat = 4):
            for pred in itertools.product((0, 1), repeat = 4):
                exact[round(Metrics.mcc_multiclass(Metrics.confusion_matrix(truth, pred, 2)), 9)] += 1 / 256
        null = LeakStats.sample_null_mcc(4, 2, 20000, 13)
        observed = collections.Counter(round(value, 9) for value in null.samples)
        self.assertEqual(set(observed) - set(exact), set())
        for value, frequency in exact.items():
            with self.subTest(value = value):
                self.assertLess(abs(observed[value] / 20000 - frequency), 0.02)

    def test_bad_dimensions(self):
        for n_test, k, iters in [(10, 1, 5), (2, 3, 5), (10, 2, 0)]:
            with self.subTest(n_test = n_test, k = k, iters = iters), self.assertRaises(Errors.BadDimensions):
                LeakStats.sample_null_mcc(n_test, k, iters, 0)

class ProbeCase(unittest.TestCase):
    def test_compare_runs(self):
        null = LeakStats.sample_null_mcc(200, 2, 500, 3)
        self.assertAlmostEqual(LeakStats.compare_runs_to_null([0.9] * 6, null), 0.03125)

    def test_invalid(self):
        null = LeakStats.sample_null_mcc(20, 2, 50, 3)
        with self.assertRaises(ValueError):
            LeakStats.leakage_probe(0.1, null, alpha = 1.5)
        with self.assertRaises(ValueError):
            LeakStats.leakage_probe(0.1, null, mode = "randomize_everything")

    def test_report(self):
        null = LeakStats.sample_null_mcc(20, 2, 50, 3)
        report = LeakStats.leakage_probe(0.1, null, mode = "randomize_before_split")
        self.assertEqual(report.to_dict()["mode"], "randomize_before_split")
        self.assertEqual(report.flagged, min(report.wilcoxon_p, report.empirical_p) < 0.05)

if __name__ == "__main__":
    unittest.main()
