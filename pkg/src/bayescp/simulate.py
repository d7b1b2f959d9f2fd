"""Generative sampling from the hierarchical model, plus canned study designs.

The full generative chain is: draw the number of segments (or fix it), place
the changepoints uniformly, draw each segment's mean and variance from the
conjugate prior, then draw the observations.  Two fixed designs are bundled
because they recur in tests and demos: a single mean shift halfway through
the sequence, and a three-level sequence with an unobserved stretch spanning
the weaker of its two changepoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import ConfigError
from .inference import Segmentation
from .model import Hyperparams, ObservedSequence

__all__ = [
    "Scenario",
    "SimSpec",
    "SimResult",
    "simulate",
    "single_shift_spec",
    "gap_study_spec",
    "collapse_gaps",
]


class Scenario(Enum):
    HIERARCHICAL = "hierarchical"
    SINGLE_CP = "single-cp"
    GAP_STUDY = "gap-study"


@dataclass(frozen=True)
class SimSpec:
    """What to generate.

    HIERARCHICAL draws from the full model and needs ``theta`` plus either a
    fixed segment count ``k`` or a ``k_max`` to draw it uniformly from.
    SINGLE_CP produces N(0, cp_sigma^2) then N(cp_mu, cp_sigma^2) with the
    cut at n // 2.  GAP_STUDY is the fixed three-level design (length 350
    including a 100-position unobserved stretch at 101..200); its ``n`` and
    ``gaps`` are implied.  ``gaps`` marks inclusive position ranges missing
    after generation.
    """

    n: int
    scenario: Scenario = Scenario.HIERARCHICAL
    theta: Hyperparams | None = None
    k: int | None = None
    k_max: int | None = None
    gaps: tuple[tuple[int, int], ...] = field(default=())
    seed: int = 0
    cp_mu: float = 2.0
    cp_sigma: float = 1.0


@dataclass(frozen=True)
class SimResult:
    sequence: ObservedSequence
    truth: Segmentation
    segment_params: tuple[tuple[float, float], ...]  # (mu, sigma_sq) per segment


def single_shift_spec(mu: float, sigma: float = 1.0, n: int = 400, seed: int = 0) -> SimSpec:
    """Mean shift of size mu at position n // 2, noise scale sigma."""
    return SimSpec(n=n, scenario=Scenario.SINGLE_CP, cp_mu=mu, cp_sigma=sigma, seed=seed)


def gap_study_spec(seed: int = 0) -> SimSpec:
    """Three-level design with its weak changepoint buried in a gap."""
    return SimSpec(n=350, scenario=Scenario.GAP_STUDY, seed=seed)


def simulate(spec: SimSpec) -> SimResult:
    """Generate a sequence with its true segmentation and segment parameters."""
    rng = np.random.default_rng(spec.seed)
    if spec.scenario is Scenario.SINGLE_CP:
        return _simulate_single_shift(spec, rng)
    if spec.scenario is Scenario.GAP_STUDY:
        return _simulate_gap_study(spec, rng)
    return _simulate_hierarchical(spec, rng)


def _simulate_hierarchical(spec: SimSpec, rng: np.random.Generator) -> SimResult:
    if spec.theta is None:
        raise ConfigError("hierarchical simulation needs hyperparameters")
    n = spec.n
    if n < 1:
        raise ConfigError(f"invalid sequence length {n}")
    if spec.k is not None:
        k = spec.k
    elif spec.k_max is not None:
        k = int(rng.integers(1, spec.k_max + 1))
    else:
        raise ConfigError("give either a fixed segment count k or k_max")
    if not (1 <= k <= n):
        raise ConfigError(f"cannot place {k} segments in {n} positions")

    cuts = np.sort(rng.choice(n - 1, size=k - 1, replace=False) + 1) if k > 1 else np.array([], dtype=int)
    cps = tuple(int(c) for c in cuts) + (n,)
    th = spec.theta
    values = np.empty(n)
    params = []
    prev = 0
    for c in cps:
        sigma_sq = th.nu0 * th.sigma0_sq / rng.chisquare(th.nu0)
        mu = rng.normal(th.mu0, math.sqrt(sigma_sq / th.k0))
        values[prev:c] = rng.normal(mu, math.sqrt(sigma_sq), size=c - prev)
        params.append((float(mu), float(sigma_sq)))
        prev = c
    values = _apply_gaps(values, spec.gaps, n)
    return SimResult(ObservedSequence.from_values(values), Segmentation(cps), tuple(params))


def _simulate_single_shift(spec: SimSpec, rng: np.random.Generator) -> SimResult:
    n = spec.n
    if n < 2:
        raise ConfigError("single-shift design needs n >= 2")
    cut = n // 2
    sigma_sq = spec.cp_sigma**2
    values = np.empty(n)
    values[:cut] = rng.normal(0.0, spec.cp_sigma, size=cut)
    values[cut:] = rng.normal(spec.cp_mu, spec.cp_sigma, size=n - cut)
    values = _apply_gaps(values, spec.gaps, n)
    return SimResult(
        ObservedSequence.from_values(values),
        Segmentation((cut, n)),
        ((0.0, sigma_sq), (spec.cp_mu, sigma_sq)),
    )


_GAP_LEVELS = ((1, 100, -1.0), (101, 150, -0.6), (151, 250, 1.0))
_GAP_RANGE = (101, 200)


def _simulate_gap_study(spec: SimSpec, rng: np.random.Generator) -> SimResult:
    """Three segments over 250 positions, then a 100-position gap inserted
    after position 100, pushing the later data to positions 201..350."""
    raw = np.empty(250)
    for a, b, mu in _GAP_LEVELS:
        raw[a - 1 : b] = rng.normal(mu, 1.0, size=b - a + 1)
    gap_lo, gap_hi = _GAP_RANGE
    gap_len = gap_hi - gap_lo + 1
    values = np.full(250 + gap_len, np.nan)
    values[: gap_lo - 1] = raw[: gap_lo - 1]
    values[gap_hi:] = raw[gap_lo - 1 :]
    truth = Segmentation((100, 250 + gap_len - 100, 250 + gap_len))
    params = tuple((mu, 1.0) for _, _, mu in _GAP_LEVELS)
    return SimResult(ObservedSequence.from_values(values), truth, params)


def _apply_gaps(values: np.ndarray, gaps, n: int) -> np.ndarray:
    covered = np.zeros(n, dtype=bool)
    for a, b in gaps:
        if not (1 <= a <= b <= n):
            raise ConfigError(f"gap [{a}, {b}] outside 1..{n}")
        if covered[a - 1 : b].any():
            raise ConfigError("gaps must not overlap")
        covered[a - 1 : b] = True
        values[a - 1 : b] = np.nan
    return values


def collapse_gaps(result: SimResult) -> SimResult:
    """Drop all-missing positions and renumber; the no-gap twin of a gapped draw.

    True changepoints falling inside a dropped stretch map to the last kept
    position before it.
    """
    tracks = result.sequence.tracks
    keep = ~np.all(np.isnan(np.vstack(tracks)), axis=0)
    if keep.all():
        return result
    new_index = np.cumsum(keep)  # position -> rank among kept positions
    new_tracks = tuple(t[keep] for t in tracks)
    cps = []
    for c in result.truth.changepoints:
        cps.append(int(new_index[c - 1]))
    cps = tuple(dict.fromkeys(cps))  # collapse duplicates, keep order
    return SimResult(
        ObservedSequence(new_tracks, result.sequence.thetas),
        Segmentation(cps),
        result.segment_params,
    )
