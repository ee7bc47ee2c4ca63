"""Monte Carlo estimation and statistical comparison harness.

Every acceptance-style comparison routes through this module so the tolerances
and thresholds live in one place: Kolmogorov-Smirnov at significance 0.01
(c = 1.6276), chi-square at 0.01, and k-sigma bands built from the reported
standard errors.  KS-based checks run once with a fixed seed -- no resampling
until green.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import chi2 as _chi2

from .analytic import LinearParams
from .randgen import RngStream, _as_generator
from .simulate import sample_marginal

__all__ = [
    "Estimate",
    "KSResult",
    "Chi2Result",
    "CheckRecord",
    "estimate",
    "variance_estimate",
    "ks_one_sample",
    "ks_two_sample",
    "chi2_state_test",
    "KS_COEFF_001",
]

# asymptotic Kolmogorov critical coefficient at significance 0.01:
# c(a) = sqrt(-ln(a/2)/2)
KS_COEFF_001 = math.sqrt(-math.log(0.005) / 2.0)


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo point estimate with its standard error and 95% interval."""

    value: float
    stderr: float
    n: int

    @property
    def ci95(self) -> tuple[float, float]:
        return (self.value - 1.96 * self.stderr, self.value + 1.96 * self.stderr)

    @classmethod
    def from_samples(cls, x: np.ndarray) -> "Estimate":
        x = np.asarray(x, dtype=float)
        n = x.size
        return cls(float(x.mean()), float(x.std(ddof=1) / math.sqrt(n)), n)


class KSResult(NamedTuple):
    statistic: float
    threshold: float
    passed: bool
    n: int


class Chi2Result(NamedTuple):
    statistic: float
    dof: int
    pvalue: float
    passed: bool


@dataclass(frozen=True)
class CheckRecord:
    """One validation check in the JSON report format."""

    test_id: str
    statistic: float
    threshold: float
    passed: bool
    seed: int
    n: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "test_id": self.test_id,
                "statistic": self.statistic,
                "threshold": self.threshold,
                "pass": bool(self.passed),
                "seed": self.seed,
                "n": self.n,
            }
        )


def variance_estimate(x: np.ndarray) -> Estimate:
    """Unbiased sample variance with its delta-method standard error."""
    x = np.asarray(x, dtype=float)
    n = x.size
    s2 = float(x.var(ddof=1))
    m = x.mean()
    m4 = float(((x - m) ** 4).mean())
    var_of_s2 = (m4 - s2**2 * (n - 3) / (n - 1)) / n
    return Estimate(s2, math.sqrt(max(var_of_s2, 0.0)), n)


def estimate(
    quantity: str,
    t: float,
    params: LinearParams,
    n_paths: int,
    rng: RngStream | np.random.Generator,
    m0: int = 1,
):
    """Simulate the linear model and estimate a time-t functional.

    ``quantity`` is ``mean_at``, ``var_at``, ``extinction_at``, or
    ``state_dist_at`` (the last returns a list of :class:`Estimate`, one per
    state up to the largest observed).
    """
    if n_paths < 100:
        raise ValueError("n_paths must be at least 100")
    gen = _as_generator(rng)
    states = sample_marginal(params, m0, t, n_paths, gen)
    if quantity == "mean_at":
        return Estimate.from_samples(states.astype(float))
    if quantity == "var_at":
        return variance_estimate(states.astype(float))
    if quantity == "extinction_at":
        return Estimate.from_samples((states == 0).astype(float))
    if quantity == "state_dist_at":
        top = int(states.max())
        out = []
        for k in range(top + 1):
            out.append(Estimate.from_samples((states == k).astype(float)))
        return out
    raise ValueError(f"unknown quantity {quantity!r}")


def ks_one_sample(samples, cdf, significance: float = 0.01) -> KSResult:
    """One-sample Kolmogorov-Smirnov test of ``samples`` against ``cdf``.

    ``cdf`` must accept a sorted array.  The pass threshold is the asymptotic
    critical value c(significance)/sqrt(n) (1.63/sqrt(n) at 0.01).
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    f = np.asarray(cdf(x), dtype=float)
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    d = float(np.max(np.maximum(ecdf_hi - f, f - ecdf_lo)))
    if significance == 0.01:
        coeff = KS_COEFF_001
    else:
        coeff = math.sqrt(-math.log(significance / 2.0) / 2.0)
    thr = coeff / math.sqrt(n)
    return KSResult(d, thr, d < thr, n)


def ks_two_sample(a, b, significance: float = 0.01) -> KSResult:
    """Two-sample Kolmogorov-Smirnov test at the given significance."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    m, n = a.size, b.size
    if m == 0 or n == 0:
        raise ValueError("empty sample")
    allv = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, allv, side="right") / m
    cdf_b = np.searchsorted(b, allv, side="right") / n
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    if significance == 0.01:
        coeff = KS_COEFF_001
    else:
        coeff = math.sqrt(-math.log(significance / 2.0) / 2.0)
    thr = coeff * math.sqrt((m + n) / (m * n))
    return KSResult(d, thr, d < thr, min(m, n))


def chi2_state_test(
    observed_states, probs, significance: float = 0.01, min_expected: float = 5.0
) -> Chi2Result:
    """Chi-square goodness of fit of observed state counts to ``probs``.

    ``probs`` covers states 0..len(probs)-1; observations beyond are folded
    into the top cell together with the leftover probability mass, and cells
    with expected count below ``min_expected`` are merged upward.
    """
    states = np.asarray(observed_states)
    n = states.size
    k = len(probs)
    counts = np.bincount(np.minimum(states, k), minlength=k + 1).astype(float)
    p = np.concatenate([np.asarray(probs, dtype=float), [max(0.0, 1.0 - float(np.sum(probs)))]])
    exp = n * p
    # merge small expected cells from the top down
    while len(exp) > 2 and exp[-1] < min_expected:
        exp[-2] += exp[-1]
        counts[-2] += counts[-1]
        exp = exp[:-1]
        counts = counts[:-1]
    mask = exp > 0
    stat = float(np.sum((counts[mask] - exp[mask]) ** 2 / exp[mask]))
    dof = int(mask.sum()) - 1
    pval = float(_chi2.sf(stat, dof))
    return Chi2Result(stat, dof, pval, pval > significance)
