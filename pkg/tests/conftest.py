"""Shared helpers for randomized instance generation."""

import math

import numpy as np
import pytest

from bayescp.model import Hyperparams, ModelVariant, ObservedSequence
from bayescp.segprior import NEG_INF, build_seg_prior


def random_theta(rng, variant=ModelVariant.IID_NORMAL, loc_scale=2.0) -> Hyperparams:
    return Hyperparams(
        float(rng.normal(0, loc_scale)),
        float(math.exp(rng.normal(-1.0, 1.2))),
        float(math.exp(rng.normal(0.6, 0.6))),
        float(math.exp(rng.normal(-0.3, 0.8))),
        variant,
    )


def random_values(rng, n, missing_prob=0.0):
    """Piecewise-shifted noise with optional missing positions."""
    v = rng.normal(0, 1, size=n)
    if n >= 4 and rng.random() < 0.8:
        cut = int(rng.integers(1, n))
        v[cut:] += rng.normal(0, 2)
    if missing_prob > 0:
        mask = rng.random(n) < missing_prob
        if mask.all():
            mask[rng.integers(0, n)] = False
        v[mask] = np.nan
    return v


def random_instance(rng, n_lo=4, n_hi=12, k_hi=4, allow_bounds=True, missing_prob=0.3):
    """(sequence, theta, prior) with a feasible prior, suitable for enumeration."""
    while True:
        n = int(rng.integers(n_lo, n_hi + 1))
        k_max = int(rng.integers(1, k_hi + 1))
        if k_max > n:
            continue
        bounds = None
        if allow_bounds and rng.random() < 0.5:
            lo = int(rng.integers(1, 3))
            hi = int(rng.integers(lo, n + 1))
            bounds = (lo, hi)
        try:
            prior = build_seg_prior(n, k_max, bounds)
        except Exception:
            continue
        if np.all(prior.log_counts[n, 1:] == NEG_INF):
            continue  # nothing feasible at all
        miss = missing_prob if rng.random() < 0.5 else 0.0
        seq = ObservedSequence.from_values(random_values(rng, n, miss))
        return seq, random_theta(rng, loc_scale=1.0), prior


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
