"""Posterior queries on top of the forward table.

Backward sampling draws exact, mutually independent segmentations: the
segment count comes from p(k | y), then changepoints are drawn right to left
from conditionals proportional to products of count-weighted prefix
evidences.  The MAP segmentation replaces those sums with maxima and a
backtrace.  Changepoint marginals come either from sample frequencies (the
general route) or, for the iid model, exactly from a second forward pass
over the reversed sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import ForwardTable, log_marginal_evidence, log_posterior_num_segments
from .model import Hyperparams, ModelVariant, ObservedSequence, posterior_update
from .segprior import NEG_INF, SegPrior, log_prior_segmentation

__all__ = [
    "Segmentation",
    "SampleSet",
    "sample_segmentations",
    "map_segmentation",
    "changepoint_marginals",
    "exact_changepoint_marginals",
    "posterior_position_summary",
]


@dataclass(frozen=True)
class Segmentation:
    """Ordered changepoints c_1 < ... < c_k; the last one is the sequence end.

    A changepoint is the last position of its segment, so segment i covers
    (c_{i-1}, c_i] with c_0 = 0, and k equals the number of segments.
    """

    changepoints: tuple[int, ...]

    def __post_init__(self):
        cps = tuple(int(c) for c in self.changepoints)
        if not cps or cps[0] < 1 or any(b <= a for a, b in zip(cps, cps[1:])):
            raise ValueError(f"changepoints must be strictly increasing and >= 1: {cps}")
        object.__setattr__(self, "changepoints", cps)

    @property
    def k(self) -> int:
        return len(self.changepoints)

    def segments(self) -> list[tuple[int, int]]:
        """(start, end) pairs, 1-indexed inclusive."""
        out = []
        prev = 0
        for c in self.changepoints:
            out.append((prev + 1, c))
            prev = c
        return out


@dataclass(frozen=True)
class SampleSet:
    """Independent posterior draws, reproducible from the stored seed."""

    samples: tuple[Segmentation, ...]
    seed: int
    n: int

    def __len__(self) -> int:
        return len(self.samples)

    def segment_counts(self) -> np.ndarray:
        return np.array([s.k for s in self.samples])


def sample_segmentations(table: ForwardTable, prior: SegPrior, count: int, seed: int) -> SampleSet:
    """Draw ``count`` exact independent segmentations from p(A | y).

    Each sample consumes one row of a pre-drawn uniform matrix, so sample i
    has its own deterministic stream: results are reproducible and the loop
    could be split across workers without changing the output.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    lp_k = log_posterior_num_segments(table, prior)
    cdf_k = np.cumsum(np.exp(lp_k))
    uniforms = np.random.default_rng(seed).random((count, prior.k_max))
    ending_cache: dict[int, np.ndarray] = {}
    samples = []
    for row in uniforms:
        k = int(np.searchsorted(cdf_k, row[0] * cdf_k[-1], side="right"))
        k = min(k, prior.k_max - 1) + 1
        cps = [table.n]
        for t in range(k, 1, -1):
            i = cps[-1]
            j = _draw_previous(table, prior, ending_cache, i, t, row[k - t + 1])
            cps.append(j)
        samples.append(Segmentation(tuple(reversed(cps))))
    return SampleSet(tuple(samples), seed, table.n)


def _draw_previous(table: ForwardTable, prior: SegPrior,
                   cache: dict[int, np.ndarray], i: int, t: int, u: float) -> int:
    """Draw the changepoint before position i given t segments end at i."""
    j_lo = max(t - 1, i - prior.max_len)
    j_hi = i - prior.min_len
    e = cache.get(i)
    if e is None:
        e = table.evidence.ending_at(i)
        cache[i] = e
    w = table.lp_hat[j_lo : j_hi + 1, t - 1] + e[j_lo : j_hi + 1]
    c = w.max()
    p = np.exp(w - c)
    cdf = np.cumsum(p)
    idx = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return j_lo + min(idx, w.size - 1)


def map_segmentation(table: ForwardTable, prior: SegPrior) -> tuple[Segmentation, float]:
    """Exact argmax of p(A | y) with its log posterior probability.

    Runs the max-product analogue of the forward recursion and backtraces.
    Ties break toward the smallest changepoint position at each step, then
    toward the smallest segment count.
    """
    n, k_max = table.n, prior.k_max
    ev = table.evidence
    lo, hi = prior.min_len, prior.max_len

    best = np.full((n + 1, k_max + 1), NEG_INF)
    back = np.zeros((n + 1, k_max + 1), dtype=np.int64)
    for i in range(1, n + 1):
        e = ev.ending_at(i)
        if lo <= i <= hi:
            best[i, 1] = e[0]
        for k in range(2, min(k_max, i) + 1):
            j_lo = max(k - 1, i - hi)
            j_hi = i - lo
            if j_hi < j_lo:
                continue
            vals = best[j_lo : j_hi + 1, k - 1] + e[j_lo : j_hi + 1]
            am = int(np.argmax(vals))
            if vals[am] > NEG_INF:
                best[i, k] = vals[am]
                back[i, k] = j_lo + am

    scores = np.full(k_max + 1, NEG_INF)
    for k in range(1, k_max + 1):
        log_s = prior.log_counts[n, k]
        if log_s > NEG_INF and best[n, k] > NEG_INF:
            scores[k] = best[n, k] - log_s
    k_star = int(np.argmax(scores))
    if scores[k_star] == NEG_INF:
        from .exceptions import ModelError

        raise ModelError("no feasible segmentation under the given prior")

    cps = [n]
    for k in range(k_star, 1, -1):
        cps.append(int(back[cps[-1], k]))
    seg = Segmentation(tuple(reversed(cps)))
    score = (
        log_prior_segmentation(prior, seg.changepoints)
        + float(best[n, k_star])
        - log_marginal_evidence(table, prior)
    )
    return seg, score


def changepoint_marginals(samples: SampleSet, n: int) -> np.ndarray:
    """Fraction of samples placing a changepoint at each internal position.

    Returns an array over positions 1..n-1; the final position is always a
    changepoint by convention and is excluded.
    """
    if samples.n != n:
        raise ValueError(f"sample set is for n={samples.n}, not n={n}")
    counts = np.zeros(n - 1) if n > 1 else np.zeros(0)
    for seg in samples.samples:
        for c in seg.changepoints[:-1]:
            counts[c - 1] += 1.0
    return counts / len(samples)


def exact_changepoint_marginals(seq: ObservedSequence, theta, prior: SegPrior) -> np.ndarray:
    """Exact P(changepoint at j | y) for j = 1..n-1 (iid model only).

    A changepoint at j splits the sequence into independent halves, so the
    joint mass factors into count-weighted prefix evidences of the two sides.
    The suffix quantities come from a forward pass over the reversed
    sequence, which is valid because iid window evidence only depends on the
    multiset of observed values in the window.
    """
    from .engine import forward

    for th in _theta_tuple(seq, theta):
        if th.variant is not ModelVariant.IID_NORMAL:
            raise ValueError("exact marginals require the iid-normal variant")
    n = seq.n
    fwd = forward(seq, theta, prior)
    rev_seq = ObservedSequence(tuple(t[::-1] for t in seq.tracks), seq.thetas)
    rev = forward(rev_seq, theta, prior)
    log_py = log_marginal_evidence(fwd, prior)
    log_kmax = np.log(prior.k_max)

    out = np.zeros(n - 1) if n > 1 else np.zeros(0)
    for j in range(1, n):
        terms = []
        for total in range(2, prior.k_max + 1):
            log_s = prior.log_counts[n, total]
            if log_s == NEG_INF:
                continue
            for k in range(1, total):
                t1 = fwd.lp_hat[j, k]
                t2 = rev.lp_hat[n - j, total - k]
                if t1 > NEG_INF and t2 > NEG_INF:
                    terms.append(-log_kmax - log_s + t1 + t2)
        if terms:
            arr = np.asarray(terms)
            c = arr.max()
            out[j - 1] = np.exp(c + np.log(np.exp(arr - c).sum()) - log_py)
    return out


def _theta_tuple(seq: ObservedSequence, theta):
    if theta is None:
        return seq.thetas or ()
    if isinstance(theta, Hyperparams):
        return (theta,)
    return tuple(theta)


def posterior_position_summary(samples: SampleSet, seq: ObservedSequence,
                               theta: Hyperparams, track: int = 0):
    """Per-position posterior means of the hidden segment parameters.

    For each sample, every position inherits the updated parameters of the
    segment containing it; averaging over samples gives the mean of the
    resulting parameter mixture.  Returns ``(mu_mean, sigma_sq_mean)`` arrays
    of length n; a position's variance summary is NaN when any mixture
    component has too few degrees of freedom (nu_n <= 2) for a finite mean.
    """
    from .model import SegmentEvidence

    if theta.variant is not ModelVariant.IID_NORMAL:
        raise ValueError("position summaries require the iid-normal variant")
    n = seq.n
    if samples.n != n:
        raise ValueError(f"sample set is for n={samples.n}, not n={n}")
    ev = SegmentEvidence(seq, theta)
    mu_acc = np.zeros(n)
    var_acc = np.zeros(n)
    for seg in samples.samples:
        for a, b in seg.segments():
            post = posterior_update(theta, ev.stats(track, a, b))
            mu_acc[a - 1 : b] += post.mu_n
            var_acc[a - 1 : b] += post.sigma_sq_mean()
    count = float(len(samples))
    return mu_acc / count, var_acc / count
