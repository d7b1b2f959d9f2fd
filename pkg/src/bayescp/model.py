"""Conjugate segment models: priors, sufficient statistics, window evidence.

Within one segment the observations are Gaussian with hidden mean and
variance drawn from a normal-inverse-chi-squared prior

    mu     | sigma2  ~  N(mu0, sigma2 / k0)
    sigma2           ~  Inv-chi2(nu0, sigma0_sq)

which makes the marginal likelihood of any window available in closed form.
The AR(1) variant replaces the segment mean with an autoregression
coefficient on the previous observation (the first observation of a run is
pure innovation); the same Bayesian-linear-model algebra applies with a
different design, so both variants share one evidence kernel shape.

Missing values are NaN.  Under missing-at-random they drop out of every
sufficient statistic, and a window with no observed values has log-evidence
exactly 0.0 (probability one), which is what lets the segmentation recursion
run unchanged over gaps.

:class:`SegmentEvidence` serves the log evidence of arbitrary windows from
prefix arrays in O(1) per query (O(i) for the vector of all windows ending
at i), which is what keeps the forward recursion at O(n^2 k_max) total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import gammaln

from .exceptions import DegenerateVarianceError, InsufficientDataError, WindowError

LOG_PI = math.log(math.pi)


class ModelVariant(Enum):
    """Within-segment observation model."""

    IID_NORMAL = "iid"
    AR1 = "ar1"


@dataclass(frozen=True)
class Hyperparams:
    """Normal-inverse-chi-squared prior constants for one observation track.

    ``mu0`` is the prior location (read as the prior autoregression
    coefficient under the AR(1) variant), ``k0`` the pseudo-count tying the
    hidden location to ``mu0``, and ``(nu0, sigma0_sq)`` the degrees of
    freedom and scale of the variance prior.  All of ``k0``, ``nu0`` and
    ``sigma0_sq`` must be strictly positive.
    """

    mu0: float
    k0: float
    nu0: float
    sigma0_sq: float
    variant: ModelVariant = ModelVariant.IID_NORMAL

    def __post_init__(self):
        ok = (
            math.isfinite(self.mu0)
            and self.k0 > 0
            and self.nu0 > 0
            and self.sigma0_sq > 0
        )
        if not ok:
            raise ValueError(
                "hyperparameters require finite mu0 and positive k0, nu0, "
                f"sigma0_sq; got {self}"
            )


@dataclass(frozen=True)
class ObservedSequence:
    """A sequence of length n with one or more replica tracks.

    Each track is a length-n float array with NaN marking missing positions.
    ``thetas`` optionally attaches one :class:`Hyperparams` per track; when
    present it is the default prior used by evidence queries.
    """

    tracks: tuple[np.ndarray, ...]
    thetas: tuple[Hyperparams, ...] | None = None

    def __post_init__(self):
        if not self.tracks:
            raise ValueError("a sequence needs at least one track")
        tracks = tuple(np.array(t, dtype=float) for t in self.tracks)
        n = tracks[0].size
        if n < 1:
            raise ValueError("a sequence needs at least one position")
        if any(t.ndim != 1 or t.size != n for t in tracks):
            raise ValueError("all tracks must be 1-d arrays of identical length")
        for t in tracks:
            t.flags.writeable = False
        object.__setattr__(self, "tracks", tracks)
        if self.thetas is not None:
            thetas = tuple(self.thetas)
            if len(thetas) != len(tracks):
                raise ValueError("need exactly one Hyperparams per track")
            object.__setattr__(self, "thetas", thetas)

    @property
    def n(self) -> int:
        return self.tracks[0].size

    @property
    def n_tracks(self) -> int:
        return len(self.tracks)

    @classmethod
    def from_values(cls, values, theta: Hyperparams | None = None) -> "ObservedSequence":
        """Single-track sequence from a 1-d array-like (NaN = missing)."""
        return cls((np.asarray(values, dtype=float),), None if theta is None else (theta,))


@dataclass(frozen=True)
class SufficientStats:
    """Window statistics sufficient for the evidence kernels.

    ``m`` counts observed values, ``s1``/``s2`` are their sum and sum of
    squares.  For the AR(1) variant, ``sxx``/``sxy`` accumulate the squared
    regressor and cross product over adjacent in-window pairs in which both
    endpoints are observed; every observed value still appears as a response
    through ``s2``, with a zero regressor when its predecessor is missing or
    outside the window.
    """

    m: int
    s1: float
    s2: float
    sxx: float = 0.0
    sxy: float = 0.0


@dataclass(frozen=True)
class PosteriorParams:
    """Updated normal-inverse-chi-squared parameters for one segment."""

    mu_n: float
    k_n: float
    nu_n: float
    nu_sigma_sq_n: float

    def sigma_sq_mean(self) -> float:
        """Posterior mean of the segment variance; NaN when nu_n <= 2."""
        if self.nu_n <= 2:
            return math.nan
        return self.nu_sigma_sq_n / (self.nu_n - 2.0)


def window_stats(values, a: int, b: int,
                 variant: ModelVariant = ModelVariant.IID_NORMAL) -> SufficientStats:
    """Sufficient statistics of window [a, b] (1-indexed, inclusive) by direct scan.

    This is the plain-summation path; :class:`SegmentEvidence` computes the
    same quantities from prefix arrays and is tested against this function.
    """
    v = np.asarray(values, dtype=float)
    if not (1 <= a <= b <= v.size):
        raise WindowError(f"window [{a}, {b}] invalid for length {v.size}")
    w = v[a - 1 : b]
    obs = ~np.isnan(w)
    m = int(obs.sum())
    s1 = float(w[obs].sum())
    s2 = float((w[obs] ** 2).sum())
    if variant is ModelVariant.AR1 and w.size > 1:
        x, y = w[:-1], w[1:]
        pair = ~np.isnan(x) & ~np.isnan(y)
        sxx = float((x[pair] ** 2).sum())
        sxy = float((x[pair] * y[pair]).sum())
        return SufficientStats(m, s1, s2, sxx, sxy)
    return SufficientStats(m, s1, s2)


def default_hyperparams(values, variant: ModelVariant = ModelVariant.IID_NORMAL) -> Hyperparams:
    """Data-dependent prior: location at the data mean, scale at the sample
    variance, with weak pseudo-counts k0 = 0.01 and nu0 = 3.
    """
    v = np.asarray(values, dtype=float)
    obs = v[~np.isnan(v)]
    if obs.size < 2:
        raise InsufficientDataError(
            f"need at least 2 observed values to derive a prior, got {obs.size}"
        )
    var = float(np.var(obs, ddof=1))
    if var == 0.0:
        raise DegenerateVarianceError(
            "sample variance is zero; a proper scale prior needs spread in the data"
        )
    return Hyperparams(float(np.mean(obs)), 0.01, 3.0, var, variant)


def posterior_update(theta: Hyperparams, stats: SufficientStats) -> PosteriorParams:
    """Conjugate update of the prior by one window's statistics.

    With m observed values of mean ybar the family is closed:
    k_n = k0 + m, nu_n = nu0 + m, mu_n the precision-weighted mean, and
    nu_n*sigma_n^2 = nu0*sigma0^2 + sum (y - ybar)^2 + k0 m / (k0 + m) (ybar - mu0)^2.
    """
    if theta.variant is not ModelVariant.IID_NORMAL:
        raise ValueError("posterior_update applies to the iid-normal variant")
    m = stats.m
    k_n = theta.k0 + m
    nu_n = theta.nu0 + m
    mu_n = (theta.k0 * theta.mu0 + stats.s1) / k_n
    q = stats.s2 + theta.k0 * theta.mu0**2 - k_n * mu_n**2
    nu_sigma_sq_n = theta.nu0 * theta.sigma0_sq + max(q, 0.0)
    return PosteriorParams(mu_n, k_n, nu_n, nu_sigma_sq_n)


def iid_log_evidence(theta: Hyperparams, m, s1, s2):
    """Log marginal likelihood of a window under one iid-normal segment.

    Closed form of the double integral over (mu, sigma2) against the
    normal-inverse-chi-squared prior:

        -(m/2) log pi + (1/2) log(k0/k_n) + logGamma(nu_n/2) - logGamma(nu0/2)
        + (nu0/2) log(nu0 sigma0^2) - (nu_n/2) log(nu_n sigma_n^2)

    Statistics may be scalars or equal-shaped arrays; m = 0 gives exactly 0.0.
    """
    m = np.asarray(m, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    k_n = theta.k0 + m
    nu_n = theta.nu0 + m
    q = s2 + theta.k0 * theta.mu0**2 - (theta.k0 * theta.mu0 + s1) ** 2 / k_n
    q = np.maximum(q, 0.0)
    nu_sig = theta.nu0 * theta.sigma0_sq + q
    out = (
        -0.5 * m * LOG_PI
        + 0.5 * (math.log(theta.k0) - np.log(k_n))
        + gammaln(0.5 * nu_n)
        - gammaln(0.5 * theta.nu0)
        + 0.5 * theta.nu0 * math.log(theta.nu0 * theta.sigma0_sq)
        - 0.5 * nu_n * np.log(nu_sig)
    )
    return out if out.ndim else float(out)


def ar1_log_evidence(theta: Hyperparams, m, syy, sxx, sxy):
    """Log marginal likelihood of a window under one AR(1) segment.

    The observed values are regression responses (the first of a run, and any
    value after a gap, has regressor zero, i.e. enters as pure innovation);
    the coefficient and innovation variance are integrated out against
    N(mu0, sigma2/k0) x Inv-chi2(nu0, sigma0_sq).
    """
    m = np.asarray(m, dtype=float)
    syy = np.asarray(syy, dtype=float)
    sxx = np.asarray(sxx, dtype=float)
    sxy = np.asarray(sxy, dtype=float)
    k_n = theta.k0 + sxx
    nu_n = theta.nu0 + m
    q = syy + theta.k0 * theta.mu0**2 - (theta.k0 * theta.mu0 + sxy) ** 2 / k_n
    q = np.maximum(q, 0.0)
    nu_sig = theta.nu0 * theta.sigma0_sq + q
    out = (
        -0.5 * m * LOG_PI
        + 0.5 * (math.log(theta.k0) - np.log(k_n))
        + gammaln(0.5 * nu_n)
        - gammaln(0.5 * theta.nu0)
        + 0.5 * theta.nu0 * math.log(theta.nu0 * theta.sigma0_sq)
        - 0.5 * nu_n * np.log(nu_sig)
    )
    return out if out.ndim else float(out)


def segment_log_evidence(theta: Hyperparams, stats: SufficientStats) -> float:
    """Log evidence of one window from its sufficient statistics."""
    if theta.variant is ModelVariant.AR1:
        return ar1_log_evidence(theta, stats.m, stats.s2, stats.sxx, stats.sxy)
    return iid_log_evidence(theta, stats.m, stats.s1, stats.s2)


def segment_log_evidence_ar1(theta: Hyperparams, values) -> float:
    """Log evidence of one contiguous AR(1) window given its raw values.

    An empty window returns 0.0.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return 0.0
    stats = window_stats(v, 1, v.size, ModelVariant.AR1)
    return ar1_log_evidence(theta, stats.m, stats.s2, stats.sxx, stats.sxy)


def segment_log_evidence_multi(seq: ObservedSequence, a: int, b: int,
                               thetas=None) -> float:
    """Log evidence of window [a, b] across all replica tracks.

    Tracks are conditionally independent given the segmentation, so the
    window evidence is the sum of per-track evidences, each under its own
    prior.
    """
    thetas = _resolve_thetas(seq, thetas)
    total = 0.0
    for values, th in zip(seq.tracks, thetas):
        stats = window_stats(values, a, b, th.variant)
        total += segment_log_evidence(th, stats)
    return total


def _resolve_thetas(seq: ObservedSequence, thetas) -> tuple[Hyperparams, ...]:
    if thetas is None:
        if seq.thetas is None:
            raise ValueError("no hyperparameters: pass theta(s) or attach them to the sequence")
        return seq.thetas
    if isinstance(thetas, Hyperparams):
        return (thetas,) * seq.n_tracks
    thetas = tuple(thetas)
    if len(thetas) != seq.n_tracks:
        raise ValueError("need exactly one Hyperparams per track")
    return thetas


class _TrackEvidence:
    """Prefix arrays and integer-indexed lookup tables for one track."""

    def __init__(self, values: np.ndarray, theta: Hyperparams):
        self.theta = theta
        n = values.size
        obs = ~np.isnan(values)
        filled = np.where(obs, values, 0.0)
        self.count = np.zeros(n + 1, dtype=np.int64)
        self.count[1:] = np.cumsum(obs)
        self.sum1 = np.zeros(n + 1)
        self.sum1[1:] = np.cumsum(filled)
        self.sum2 = np.zeros(n + 1)
        self.sum2[1:] = np.cumsum(filled**2)
        if theta.variant is ModelVariant.AR1:
            # pair statistics indexed by the pair's right endpoint
            pair = np.zeros(n, dtype=bool)
            if n > 1:
                pair[1:] = obs[1:] & obs[:-1]
            px = np.where(pair, np.roll(filled, 1), 0.0)
            py = np.where(pair, filled, 0.0)
            self.pair_xx = np.zeros(n + 1)
            self.pair_xx[1:] = np.cumsum(px**2)
            self.pair_xy = np.zeros(n + 1)
            self.pair_xy[1:] = np.cumsum(px * py)
        # everything below depends on the window only through the integer
        # count m, so precompute it once for m = 0..n
        ms = np.arange(n + 1, dtype=float)
        nu_n = theta.nu0 + ms
        self._base = (
            -0.5 * ms * LOG_PI
            + gammaln(0.5 * nu_n)
            - gammaln(0.5 * theta.nu0)
            + 0.5 * theta.nu0 * math.log(theta.nu0 * theta.sigma0_sq)
        )
        self._half_nu_n = 0.5 * nu_n
        if theta.variant is ModelVariant.IID_NORMAL:
            self._base = self._base + 0.5 * (math.log(theta.k0) - np.log(theta.k0 + ms))

    def log_evidence(self, a, b):
        """Vectorized log evidence for windows [a_i, b_i]."""
        th = self.theta
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        m = self.count[b] - self.count[a - 1]
        s2 = self.sum2[b] - self.sum2[a - 1]
        if th.variant is ModelVariant.AR1:
            sxx = self.pair_xx[b] - self.pair_xx[a]
            sxy = self.pair_xy[b] - self.pair_xy[a]
            k_n = th.k0 + sxx
            q = s2 + th.k0 * th.mu0**2 - (th.k0 * th.mu0 + sxy) ** 2 / k_n
            extra = 0.5 * (math.log(th.k0) - np.log(k_n))
        else:
            s1 = self.sum1[b] - self.sum1[a - 1]
            k_n = th.k0 + m
            q = s2 + th.k0 * th.mu0**2 - (th.k0 * th.mu0 + s1) ** 2 / k_n
            extra = 0.0
        q = np.maximum(q, 0.0)
        nu_sig = th.nu0 * th.sigma0_sq + q
        return self._base[m] + extra - self._half_nu_n[m] * np.log(nu_sig)

    def stats(self, a: int, b: int) -> SufficientStats:
        m = int(self.count[b] - self.count[a - 1])
        s1 = float(self.sum1[b] - self.sum1[a - 1])
        s2 = float(self.sum2[b] - self.sum2[a - 1])
        if self.theta.variant is ModelVariant.AR1:
            return SufficientStats(
                m, s1, s2,
                float(self.pair_xx[b] - self.pair_xx[a]),
                float(self.pair_xy[b] - self.pair_xy[a]),
            )
        return SufficientStats(m, s1, s2)

    def stats_arrays(self, a, b):
        """(m, s1, s2, sxx, sxy) arrays for windows [a_i, b_i]."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        m = self.count[b] - self.count[a - 1]
        s1 = self.sum1[b] - self.sum1[a - 1]
        s2 = self.sum2[b] - self.sum2[a - 1]
        if self.theta.variant is ModelVariant.AR1:
            sxx = self.pair_xx[b] - self.pair_xx[a]
            sxy = self.pair_xy[b] - self.pair_xy[a]
        else:
            sxx = np.zeros_like(s1)
            sxy = np.zeros_like(s1)
        return m, s1, s2, sxx, sxy


class SegmentEvidence:
    """O(1) log-evidence service for arbitrary windows of a sequence.

    Sums per-track evidences, so replicas are handled transparently.  All
    arrays are built once at construction; instances are immutable and safe
    to share across threads.
    """

    def __init__(self, seq: ObservedSequence, theta=None):
        self.seq = seq
        self.n = seq.n
        self.thetas = _resolve_thetas(seq, theta)
        self._tracks = [
            _TrackEvidence(values, th) for values, th in zip(seq.tracks, self.thetas)
        ]

    def window(self, a: int, b: int) -> float:
        """Log evidence of the single window [a, b] (1-indexed, inclusive)."""
        if not (1 <= a <= b <= self.n):
            raise WindowError(f"window [{a}, {b}] invalid for length {self.n}")
        return float(sum(t.log_evidence(a, b) for t in self._tracks))

    def ending_at(self, i: int) -> np.ndarray:
        """Log evidence of every window ending at i: entry a-1 holds [a, i]."""
        if not (1 <= i <= self.n):
            raise WindowError(f"position {i} outside 1..{self.n}")
        starts = np.arange(1, i + 1)
        out = self._tracks[0].log_evidence(starts, i)
        for t in self._tracks[1:]:
            out = out + t.log_evidence(starts, i)
        return out

    def sum_over_segments(self, changepoints) -> float:
        """Sum of window log evidences over the segments a segmentation induces."""
        total = 0.0
        prev = 0
        for c in changepoints:
            total += self.window(prev + 1, c)
            prev = c
        return total

    def stats(self, track: int, a: int, b: int) -> SufficientStats:
        """Sufficient statistics of [a, b] on one track, from the prefix arrays."""
        if not (1 <= a <= b <= self.n):
            raise WindowError(f"window [{a}, {b}] invalid for length {self.n}")
        return self._tracks[track].stats(a, b)

    def stats_arrays(self, track: int, a, b):
        return self._tracks[track].stats_arrays(a, b)
