"""Brute-force reference implementations.

Two independent routes to the quantities the fast paths compute:

* :func:`quadrature_evidence` evaluates the single-segment marginal
  likelihood by nested adaptive quadrature of the defining double integral,
  never touching the closed-form kernel.
* :func:`enumerate_posterior` sums the posterior over every segmentation of
  a small instance directly, using only direct-scan window evidence and the
  count tables.

Both are deliberately slow and guarded against large instances; they exist
so that every fast result in the package can be checked against an
implementation that shares no code path with it.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import gammaln

from .exceptions import OracleNumericsError, OracleScaleError
from .model import (
    Hyperparams,
    ModelVariant,
    ObservedSequence,
    segment_log_evidence_multi,
    window_stats,
)
from .segprior import NEG_INF, SegPrior

MAX_ENUM_N = 14
MAX_ENUM_K = 4
MAX_QUAD_LEN = 50


def _log_inv_chi2(v: float, nu0: float, s0sq: float) -> float:
    """Log density of the scaled inverse chi-squared distribution at v."""
    return (
        0.5 * nu0 * math.log(0.5 * nu0)
        - gammaln(0.5 * nu0)
        + 0.5 * nu0 * math.log(s0sq)
        - (0.5 * nu0 + 1.0) * math.log(v)
        - 0.5 * nu0 * s0sq / v
    )


def quadrature_evidence(theta: Hyperparams, values,
                        variant: ModelVariant | None = None) -> float:
    """Window log evidence by nested adaptive quadrature.

    Integrates the likelihood times the prior over (location, log variance);
    the log-variance substitution keeps the inner scale integral on the whole
    real line where adaptive rules behave.  Informed centers are used only to
    place integration bounds, never to form the value.
    """
    v = np.asarray(values, dtype=float)
    if v.size > MAX_QUAD_LEN:
        raise OracleScaleError(f"window of {v.size} values exceeds quadrature guard {MAX_QUAD_LEN}")
    if variant is None:
        variant = theta.variant

    if variant is ModelVariant.AR1:
        y, x = _ar1_design(v)
    else:
        y = v[~np.isnan(v)]
        x = np.ones_like(y)
    m = y.size
    if m == 0:
        return 0.0

    mu0, k0, nu0, s0sq = theta.mu0, theta.k0, theta.nu0, theta.sigma0_sq
    sxx = float((x * x).sum())
    sxy = float((x * y).sum())
    syy = float((y * y).sum())

    def log_integrand(loc: float, t: float) -> float:
        var = math.exp(t)
        rss = syy - 2.0 * loc * sxy + loc * loc * sxx
        log_lik = -0.5 * m * math.log(2.0 * math.pi * var) - 0.5 * rss / var
        log_loc_prior = (
            -0.5 * math.log(2.0 * math.pi * var / k0)
            - 0.5 * k0 * (loc - mu0) ** 2 / var
        )
        return log_lik + log_loc_prior + _log_inv_chi2(var, nu0, s0sq) + t

    # bounds only: posterior-ish center and residual scale
    loc_hat = (k0 * mu0 + sxy) / (k0 + sxx)
    q = max(syy + k0 * mu0**2 - (k0 * mu0 + sxy) ** 2 / (k0 + sxx), 0.0)
    t_hat = math.log((nu0 * s0sq + q) / (nu0 + m + 2.0))
    shift = log_integrand(loc_hat, t_hat)

    def inner(t: float) -> float:
        sd = math.sqrt(math.exp(t) / (k0 + sxx))
        lo, hi = loc_hat - 45.0 * sd, loc_hat + 45.0 * sd
        val, err = quad(
            lambda loc: math.exp(log_integrand(loc, t) - shift),
            lo, hi, points=[loc_hat], limit=200, epsabs=1e-300, epsrel=1e-11,
        )
        return val

    t_lo = t_hat - 80.0
    t_hi = t_hat + 80.0 + 160.0 / nu0
    with warnings.catch_warnings():
        # the requested tolerances sit near machine precision; accuracy is
        # checked below from the reported absolute error instead
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(inner, t_lo, t_hi, points=[t_hat], limit=300,
                        epsabs=1e-300, epsrel=1e-10)
    if not (val > 0.0) or not math.isfinite(val) or err > 1e-7 * val:
        raise OracleNumericsError(
            f"quadrature did not converge: value={val!r}, abserr={err!r}"
        )
    return math.log(val) + shift


def _ar1_design(v: np.ndarray):
    """Responses and regressors of the within-window autoregression.

    Every observed value is a response; its regressor is the previous value
    when that is observed and inside the window, otherwise zero (the value
    enters as pure innovation).
    """
    obs = ~np.isnan(v)
    y = v[obs]
    x = np.zeros(v.size)
    if v.size > 1:
        valid = obs[1:] & obs[:-1]
        x[1:][valid] = v[:-1][valid]
    return y, x[obs]


@dataclass(frozen=True)
class EnumeratedPosterior:
    """Exact posterior of a small instance by direct summation.

    Segmentations are listed for every count k <= k_max (length-infeasible
    ones carry -inf joint mass); all log arrays align with that list.
    """

    n: int
    k_max: int
    segmentations: tuple[tuple[int, ...], ...]
    log_joint: np.ndarray
    log_posterior: np.ndarray
    log_evidence: float
    log_posterior_k: np.ndarray
    cp_marginals: np.ndarray

    @property
    def map_index(self) -> int:
        return int(np.argmax(self.log_posterior))

    @property
    def map_changepoints(self) -> tuple[int, ...]:
        return self.segmentations[self.map_index]


def enumerate_posterior(seq: ObservedSequence, theta, prior: SegPrior) -> EnumeratedPosterior:
    """All-segmentations posterior for n <= 14, k_max <= 4."""
    n = seq.n
    if n > MAX_ENUM_N or prior.k_max > MAX_ENUM_K:
        raise OracleScaleError(
            f"instance n={n}, k_max={prior.k_max} exceeds enumeration guard "
            f"(n <= {MAX_ENUM_N}, k_max <= {MAX_ENUM_K})"
        )
    thetas = theta

    segmentations: list[tuple[int, ...]] = []
    log_joint: list[float] = []
    log_pk = -math.log(prior.k_max)
    for k in range(1, prior.k_max + 1):
        log_s = prior.log_counts[n, k]
        for cuts in itertools.combinations(range(1, n), k - 1):
            cps = cuts + (n,)
            segmentations.append(cps)
            if log_s == NEG_INF or not _lengths_ok(cps, prior):
                log_joint.append(NEG_INF)
                continue
            total = log_pk - log_s
            prev = 0
            for c in cps:
                total += segment_log_evidence_multi(seq, prev + 1, c, thetas)
                prev = c
            log_joint.append(total)

    joint = np.asarray(log_joint)
    c = joint.max()
    if c == NEG_INF:
        raise OracleScaleError("no feasible segmentation under the given prior")
    log_evidence = c + math.log(np.exp(joint - c).sum())
    log_post = joint - log_evidence

    log_posterior_k = np.full(prior.k_max, NEG_INF)
    cp_mass = np.zeros(n - 1) if n > 1 else np.zeros(0)
    for cps, lp in zip(segmentations, log_post):
        if lp == NEG_INF:
            continue
        k = len(cps)
        log_posterior_k[k - 1] = np.logaddexp(log_posterior_k[k - 1], lp)
        for cpt in cps[:-1]:
            cp_mass[cpt - 1] += math.exp(lp)

    return EnumeratedPosterior(
        n=n,
        k_max=prior.k_max,
        segmentations=tuple(segmentations),
        log_joint=joint,
        log_posterior=log_post,
        log_evidence=float(log_evidence),
        log_posterior_k=log_posterior_k,
        cp_marginals=cp_mass,
    )


def _lengths_ok(cps, prior: SegPrior) -> bool:
    prev = 0
    for c in cps:
        if not (prior.min_len <= c - prev <= prior.max_len):
            return False
        prev = c
    return True


def enumeration_prior_marginals(prior: SegPrior) -> np.ndarray:
    """Changepoint marginals of the prior alone (uniform-evidence case)."""
    n = prior.n
    if n > MAX_ENUM_N or prior.k_max > MAX_ENUM_K:
        raise OracleScaleError("instance exceeds enumeration guard")
    mass = np.zeros(n - 1) if n > 1 else np.zeros(0)
    total = 0.0
    log_pk = -math.log(prior.k_max)
    for k in range(1, prior.k_max + 1):
        log_s = prior.log_counts[n, k]
        if log_s == NEG_INF:
            continue
        for cuts in itertools.combinations(range(1, n), k - 1):
            cps = cuts + (n,)
            if not _lengths_ok(cps, prior):
                continue
            p = math.exp(log_pk - log_s)
            total += p
            for cpt in cuts:
                mass[cpt - 1] += p
    return mass / total
