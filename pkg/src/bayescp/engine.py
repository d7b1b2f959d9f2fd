"""Log-domain forward recursion over segment counts.

The table entry lp_hat[i, k] stores log of S(i, k) * p(y_{1:i} | k segments),
the count-weighted prefix evidence.  Weighting by the count S(i, k) absorbs
the conditional-prior ratios that would otherwise appear inside the
recursion, leaving the clean convolution

    p_hat(y_{1:i} | k) = sum_{j < i} p_hat(y_{1:j} | k-1) * p_hat(y_{j+1:i} | 1)

with p_hat(y_{a:b} | 1) = S(b-a+1, 1) * (window evidence).  Every inner sum
is evaluated by shifting out the dominating term before exponentiating, so
the table never overflows or underflows even for long sequences: entries are
finite or -inf, never NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, ModelError
from .model import ObservedSequence, SegmentEvidence
from .segprior import NEG_INF, SegPrior

__all__ = [
    "log_sum_exp",
    "ForwardTable",
    "forward",
    "log_posterior_num_segments",
    "log_marginal_evidence",
]


def log_sum_exp(terms) -> float:
    """log(sum(exp(terms))), shifted by the maximum for stability.

    Accepts -inf entries (zero contributions); an all-(-inf) input returns
    -inf.  An empty input is a domain error.
    """
    arr = np.asarray(terms, dtype=float)
    if arr.size == 0:
        raise DomainError("log_sum_exp of an empty collection")
    c = arr.max()
    if c == NEG_INF:
        return NEG_INF
    return float(c + np.log(np.exp(arr - c).sum()))


@dataclass(frozen=True)
class ForwardTable:
    """Count-weighted prefix evidences plus the services that built them.

    ``lp_hat[i, k]`` is valid for 1 <= i <= n, 1 <= k <= k_max (row and
    column 0 are -inf padding).  The evidence service and prior are retained
    because sampling, MAP search and marginal queries reuse them.
    """

    n: int
    k_max: int
    lp_hat: np.ndarray
    evidence: SegmentEvidence
    prior: SegPrior

    def __post_init__(self):
        self.lp_hat.flags.writeable = False


def forward(seq: ObservedSequence, theta, prior: SegPrior) -> ForwardTable:
    """Fill lp_hat for all prefixes and segment counts in O(n^2 k_max).

    ``theta`` may be a single Hyperparams (applied to every track), a
    sequence of per-track Hyperparams, or None to use the ones attached to
    the sequence.
    """
    n = seq.n
    if prior.n != n:
        raise ModelError(f"prior built for n={prior.n}, sequence has n={n}")
    k_max = prior.k_max
    ev = SegmentEvidence(seq, theta)
    lo, hi = prior.min_len, prior.max_len

    lp = np.full((n + 1, k_max + 1), NEG_INF)
    for i in range(1, n + 1):
        e = ev.ending_at(i)  # e[a-1] = log evidence of window [a, i]
        if lo <= i <= hi:
            lp[i, 1] = e[0]
        for k in range(2, min(k_max, i) + 1):
            j_lo = max(k - 1, i - hi)
            j_hi = i - lo
            if j_hi < j_lo:
                continue
            terms = lp[j_lo : j_hi + 1, k - 1] + e[j_lo : j_hi + 1]
            c = terms.max()
            if c == NEG_INF:
                continue
            lp[i, k] = c + np.log(np.exp(terms - c).sum())
    return ForwardTable(n, k_max, lp, ev, prior)


def log_posterior_num_segments(table: ForwardTable, prior: SegPrior) -> np.ndarray:
    """Normalized log p(k | y) for k = 1..k_max (index k-1).

    p(y | k) is recovered from the table by dividing out the count S(n, k);
    counts of zero leave the corresponding k at -inf.  If every k is
    infeasible the model has no support on the data and that is an error.
    """
    n = table.n
    raw = np.full(prior.k_max, NEG_INF)
    for k in range(1, prior.k_max + 1):
        log_s = prior.log_counts[n, k]
        if log_s > NEG_INF:
            raw[k - 1] = table.lp_hat[n, k] - log_s
    if np.all(raw == NEG_INF):
        raise ModelError("no feasible segment count for this sequence and prior")
    # uniform p(k) contributes a constant that cancels in the normalization
    return raw - log_sum_exp(raw)


def log_marginal_evidence(table: ForwardTable, prior: SegPrior) -> float:
    """log p(y) = log sum_k p(k) p(y | k)."""
    n = table.n
    terms = []
    for k in range(1, prior.k_max + 1):
        log_s = prior.log_counts[n, k]
        if log_s > NEG_INF:
            terms.append(-math.log(prior.k_max) + table.lp_hat[n, k] - log_s)
    if not terms:
        raise ModelError("no feasible segment count for this sequence and prior")
    return log_sum_exp(terms)
