"""Prior over segmentations: uniform segment count, uniform placement.

The number of segments k is uniform on {1, .., k_max}; given k, every
feasible segmentation is equally likely.  Without length constraints the
number of ways to cut i positions into k segments is the binomial
C(i-1, k-1); with a per-segment length interval [l, u] it is the composition
count S(i, k) defined by

    S(i, 1) = 1 if l <= i <= u else 0
    S(i, k) = sum_{j < i} S(j, k-1) * S(i - j, 1)

Counts are kept in log space throughout (-inf marks a zero count), because
they grow binomially and because the recursion downstream consumes them as
log weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .exceptions import ConfigError, DomainError

NEG_INF = float("-inf")


def log_binom(n, k):
    """log C(n, k) via log-gamma; scalar or array arguments."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    out = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SegPrior:
    """Log segmentation-count tables for a sequence of length n.

    ``log_counts[i, k]`` = log S(i, k) for 1 <= i <= n, 1 <= k <= k_max
    (row/column 0 unused, held at -inf); ``log_s1[i]`` = log S(i, 1), the
    feasibility indicator of a single segment of length i.
    """

    n: int
    k_max: int
    min_len: int
    max_len: int
    log_counts: np.ndarray
    log_s1: np.ndarray

    def __post_init__(self):
        self.log_counts.flags.writeable = False
        self.log_s1.flags.writeable = False

    @property
    def bounded(self) -> bool:
        return self.min_len > 1 or self.max_len < self.n


def build_seg_prior(n: int, k_max: int, bounds=None) -> SegPrior:
    """Build the S(i, k) table, in log space, for 1 <= i <= n, 1 <= k <= k_max.

    ``bounds`` is an optional (min_len, max_len) pair; a None max_len means
    unbounded (i.e. n).
    """
    if not (1 <= k_max <= n):
        raise ConfigError(f"k_max must satisfy 1 <= k_max <= n, got k_max={k_max}, n={n}")
    if bounds is None:
        lo, hi = 1, n
    else:
        lo = int(bounds[0])
        hi = n if bounds[1] is None else int(bounds[1])
        if not (1 <= lo <= hi <= n):
            raise ConfigError(f"length bounds must satisfy 1 <= l <= u <= n, got [{lo}, {hi}]")

    log_s1 = np.full(n + 1, NEG_INF)
    lengths = np.arange(n + 1)
    log_s1[(lengths >= lo) & (lengths <= hi)] = 0.0
    log_s1[0] = NEG_INF

    if lo == 1 and hi == n:
        # unconstrained counts are binomials; fill directly
        log_counts = np.full((n + 1, k_max + 1), NEG_INF)
        i = np.arange(1, n + 1, dtype=float)
        for k in range(1, k_max + 1):
            feasible = i >= k
            col = np.full(n, NEG_INF)
            col[feasible] = log_binom(i[feasible] - 1, k - 1)
            log_counts[1:, k] = col
    else:
        log_counts = _log_counts_by_recursion(n, k_max, lo, hi)

    return SegPrior(n, k_max, lo, hi, log_counts, log_s1)


def _log_counts_by_recursion(n: int, k_max: int, lo: int, hi: int) -> np.ndarray:
    """Log-space composition-count recursion under length bounds [lo, hi]."""
    log_counts = np.full((n + 1, k_max + 1), NEG_INF)
    for i in range(lo, min(hi, n) + 1):
        log_counts[i, 1] = 0.0
    for k in range(2, k_max + 1):
        prev = log_counts[:, k - 1]
        for i in range(k, n + 1):
            j_lo = max(1, i - hi)
            j_hi = i - lo
            if j_hi < j_lo:
                continue
            terms = prev[j_lo : j_hi + 1]
            c = terms.max()
            if c == NEG_INF:
                continue
            log_counts[i, k] = c + np.log(np.exp(terms - c).sum())
    return log_counts


def log_prior_num_segments(prior: SegPrior, k: int) -> float:
    """log p(k) under the uniform count prior: -log k_max."""
    if not (1 <= k <= prior.k_max):
        raise DomainError(f"k={k} outside 1..{prior.k_max}")
    return -np.log(prior.k_max)


def log_prior_segmentation(prior: SegPrior, changepoints) -> float:
    """log p(A) = log p(k) + log p(A|k), or -inf if A is infeasible.

    ``changepoints`` must be strictly increasing and end at n; feasibility
    means k <= k_max and every segment length inside [min_len, max_len].
    """
    cps = list(changepoints)
    if not cps or cps[-1] != prior.n or any(b <= a for a, b in zip(cps, cps[1:])) or cps[0] < 1:
        raise ValueError(f"not a valid segmentation of 1..{prior.n}: {cps}")
    k = len(cps)
    if k > prior.k_max:
        return NEG_INF
    prev = 0
    for c in cps:
        length = c - prev
        if not (prior.min_len <= length <= prior.max_len):
            return NEG_INF
        prev = c
    return -np.log(prior.k_max) - prior.log_counts[prior.n, k]
