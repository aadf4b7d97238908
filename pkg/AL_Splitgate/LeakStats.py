""" AL_Splitgate.LeakStats

    The random-label leakage probe: a Monte-Carlo null distribution of MCC for independent random
    labels and predictions, the one-sample two-tailed Wilcoxon signed-rank test, and an empirical
    percentile p-value.

    The null distribution is the Wilcoxon sample and the observed MCC its hypothesized location.
    Zero differences are dropped (classical Wilcoxon, not Pratt), so results can differ from Pratt's
    variant on data with exact ties at the observed value.
"""
## This Module
from AL_Splitgate import Config
from AL_Splitgate.Errors import BadDimensions, EmptySample
from AL_Splitgate.Random import derive_seed, uniform_labels
## Third Party
import numpy as np
from scipy import stats
## Builtin
import concurrent.futures
import dataclasses
import itertools
import logging
import typing

__all__ = ["NullDistribution", "ProbeReport", "sample_null_mcc", "mcc_batch",
           "wilcoxon_one_sample", "empirical_p", "leakage_probe", "compare_runs_to_null"]

logger = logging.getLogger(__name__)

ProbeMode = typing.Literal["randomize_before_split","randomize_train_only"]

## Largest reduced sample size tested by exact sign enumeration
EXACT_MAX_N = 12
## Iterations simulated per vectorized chunk
CHUNK = 256

@dataclasses.dataclass
class NullDistribution():
    """ Monte-Carlo MCC samples under no association

    Attributes:
        samples: MCC of each iteration
        iters: number of iterations
        n_test: simulated test-set size
        k: number of classes
        class_counts: per-class counts of the simulated truth labels, summed over iterations
        seed: iteration i draws from derive_seed(seed, i)
    """
    samples: list[float]
    iters: int
    n_test: int
    k: int
    class_counts: list[int]
    seed: int

    def summary(self)-> dict[str, float]:
        values = np.asarray(self.samples)
        return {"mean": float(values.mean()), "std": float(values.std()),
                "median": float(np.median(values)),
                "q01": float(np.quantile(values, 0.01)), "q99": float(np.quantile(values, 0.99)),
                "abs_q99": float(np.quantile(np.abs(values), 0.99))}

    def to_dict(self, include_samples: bool = True)-> dict:
        out = {"iters": self.iters, "n_test": self.n_test, "k": self.k, "class_counts": list(self.class_counts),
               "seed": self.seed, "summary": self.summary()}
        if include_samples: out["samples"] = [float(value) for value in self.samples]
        return out

    @classmethod
    def from_dict(cls, data: dict)-> "NullDistribution":
        if "samples" not in data: raise ValueError("NullDistribution document has no samples")
        return cls(list(data["samples"]), data["iters"], data["n_test"], data["k"], list(data["class_counts"]), data["seed"])

def mcc_batch(truth: np.ndarray, pred: np.ndarray, k: int)-> np.ndarray:
    """ Generalized MCC for every row of (m, n) truth/pred label arrays """
    m, n = truth.shape
    offsets = (np.arange(m, dtype = np.int64) * k * k)[:, None]
    counts = np.bincount((offsets + truth * k + pred).ravel(), minlength = m * k * k).reshape(m, k, k).astype(np.float64)
    t = counts.sum(axis = 2)
    p = counts.sum(axis = 1)
    correct = np.trace(counts, axis1 = 1, axis2 = 2)
    numerator = correct * n - (t * p).sum(axis = 1)
    denominator = (n * n - (p * p).sum(axis = 1)) * (n * n - (t * t).sum(axis = 1))
    out = np.zeros(m, dtype = np.float64)
    positive = denominator > 0
    out[positive] = numerator[positive] / np.sqrt(denominator[positive])
    return np.clip(out, -1.0, 1.0)

def _null_chunk(seed: int, start: int, stop: int, n_test: int, k: int)-> tuple[np.ndarray, np.ndarray]:
    labels = uniform_labels([derive_seed(seed, i) for i in range(start, stop)], 2 * n_test, k)
    truth, pred = labels[:, :n_test], labels[:, n_test:]
    return mcc_batch(truth, pred, k), np.bincount(truth.ravel(), minlength = k)

def sample_null_mcc(n_test: int, k: int, iters: int, seed: int)-> NullDistribution:
    """ Simulates iters pairs of independent uniform truth/prediction label vectors and records their MCC.

        Iteration i uses the generator seeded by derive_seed(seed, i): n_test truth labels are drawn
        first, then n_test predictions. Chunks run in parallel and are merged in iteration order.
    """
    if k < 2 or n_test < k or iters < 1:
        raise BadDimensions(f"Need n_test >= k >= 2 and iters >= 1: n_test={n_test} k={k} iters={iters}",
                            n_test = n_test, k = k, iters = iters)
    bounds = [(start, min(start + CHUNK, iters)) for start in range(0, iters, CHUNK)]
    with concurrent.futures.ThreadPoolExecutor(max_workers = Config.max_workers()) as executor:
        results = list(executor.map(lambda bound: _null_chunk(seed, *bound, n_test, k), bounds))
    samples = np.concatenate([mccs for mccs, _ in results])
    class_counts = np.sum([counts for _, counts in results], axis = 0)
    logger.info("null distribution n_test=%d k=%d iters=%d seed=%d mean=%.6f", n_test, k, iters, seed, samples.mean())
    return NullDistribution(samples.tolist(), iters, n_test, k, [int(v) for v in class_counts], seed)

def _exact_two_tailed(ranks: np.ndarray, wplus: float)-> float:
    """ Two-tailed p by enumerating all 2^n sign assignments of the (possibly tied) ranks """
    n = ranks.size
    signs = np.array(list(itertools.product((0, 1), repeat = n)), dtype = np.float64)
    totals = signs @ ranks
    mean = ranks.sum() / 2
    observed = abs(wplus - mean)
    ## tolerance guards the half-integer tied-rank sums against float noise
    extreme = np.abs(totals - mean) >= observed - 1e-9
    return float(extreme.sum() / totals.size)

def wilcoxon_one_sample(sample: typing.Sequence[float], m0: float = 0.0,
                        method: typing.Literal["auto","exact","approx"] = "auto")-> float:
    """ Two-tailed one-sample Wilcoxon signed-rank p-value for location m0.

        d_i = x_i - m0; zeros are dropped; |d| is ranked with average ranks for ties and W+ is the
        rank-sum of the positive differences.
        exact: enumeration of all 2^n sign assignments (auto uses it when n <= 12).
        approx: z = (W+ - n(n+1)/4 -/+ 0.5) / sigma, the continuity correction moving toward 0 and never
            past it, with sigma^2 = n(n+1)(2n+1)/24 - sum(t^3 - t)/48 over tie groups.
        Returns 1.0 when every difference is zero. Never returns 0.
    """
    values = np.asarray(sample, dtype = np.float64)
    if values.size == 0: raise EmptySample("Wilcoxon sample is empty")
    d = values - m0
    d = d[d != 0]
    n = d.size
    if n == 0: return 1.0
    ranks = stats.rankdata(np.abs(d), method = "average")
    wplus = float(ranks[d > 0].sum())

    if method == "exact" or (method == "auto" and n <= EXACT_MAX_N):
        return min(1.0, _exact_two_tailed(ranks, wplus))

    mean = n * (n + 1) / 4
    _, ties = np.unique(np.abs(d), return_counts = True)
    variance = n * (n + 1) * (2 * n + 1) / 24 - float(((ties ** 3) - ties).sum()) / 48
    deviation = wplus - mean
    corrected = np.sign(deviation) * max(abs(deviation) - 0.5, 0.0)
    if variance <= 0: return 1.0
    z = corrected / np.sqrt(variance)
    p = 2 * stats.norm.sf(abs(z))
    return float(min(1.0, max(p, np.finfo(np.float64).tiny)))

def empirical_p(samples: typing.Sequence[float], observed: float)-> float:
    """ Two-tailed percentile p-value with the plus-one rule on each tail.

        p = min(1, 2 min((#{x <= observed} + 1) / (N + 1), (#{x >= observed} + 1) / (N + 1)))
    """
    values = np.asarray(samples, dtype = np.float64)
    if values.size == 0: raise EmptySample("Null sample is empty")
    below = int((values <= observed).sum())
    above = int((values >= observed).sum())
    total = values.size + 1
    return min(1.0, 2 * min((below + 1) / total, (above + 1) / total))

@dataclasses.dataclass
class ProbeReport():
    """ Verdict of the random-label leakage probe

    Attributes:
        observed_mcc: MCC of the random-label model against the original test labels
        wilcoxon_p: one-sample Wilcoxon p of the null samples against observed_mcc
        empirical_p: percentile p of observed_mcc within the null samples
        alpha: significance level
        flagged: min(wilcoxon_p, empirical_p) < alpha
        mode: how the random labels were produced
    """
    observed_mcc: float
    wilcoxon_p: float
    empirical_p: float
    alpha: float
    flagged: bool
    mode: ProbeMode = "randomize_train_only"

    def to_dict(self)-> dict:
        return dataclasses.asdict(self)

def leakage_probe(observed_mcc: float, null: NullDistribution, alpha: float = 0.05,
                  mode: ProbeMode = "randomize_train_only")-> ProbeReport:
    """ Compares an observed random-label MCC with the null distribution (two-tailed; no direction asserted) """
    if not 0 < alpha < 1: raise ValueError(f"alpha must be in (0, 1): {alpha}")
    if mode not in ("randomize_before_split","randomize_train_only"): raise ValueError(f"Unknown probe mode: {mode}")
    wp = wilcoxon_one_sample(null.samples, m0 = observed_mcc)
    ep = empirical_p(null.samples, observed_mcc)
    report = ProbeReport(float(observed_mcc), wp, ep, alpha, min(wp, ep) < alpha, mode)
    logger.info("probe observed=%.6f wilcoxon_p=%.6g empirical_p=%.6g flagged=%s", observed_mcc, wp, ep, report.flagged)
    return report

def compare_runs_to_null(run_mccs: typing.Sequence[float], null: NullDistribution)-> float:
    """ Wilcoxon p of a set of run MCCs (e.g. cross-validation folds) against the null median """
    return wilcoxon_one_sample(run_mccs, m0 = float(np.median(null.samples)))
