"""Segmentation-count prior: tables, feasibility, normalization."""

import itertools
import math

import numpy as np
import pytest

from bayescp.exceptions import ConfigError, DomainError
from bayescp.segprior import (
    NEG_INF,
    _log_counts_by_recursion,
    build_seg_prior as build,
    log_binom,
    log_prior_num_segments,
    log_prior_segmentation,
)


def enumerate_feasible(n, k, lo, hi):
    out = []
    for cuts in itertools.combinations(range(1, n), k - 1):
        cps = cuts + (n,)
        prev = 0
        if all(lo <= c - prev_ <= hi for prev_, c in zip((0,) + cuts, cps)):
            out.append(cps)
    return out


class TestBuild:
    def test_unconstrained_binomials(self):
        prior = build(5, 3)
        assert prior.log_counts[5, 2] == pytest.approx(math.log(4.0), abs=1e-12)

    def test_bounded_example(self):
        prior = build(5, 3, (2, 3))
        # segment-length pairs (2,3) and (3,2)
        assert prior.log_counts[5, 2] == pytest.approx(math.log(2.0), abs=1e-12)
        assert len(enumerate_feasible(5, 2, 2, 3)) == 2

    def test_single_segment_infeasible(self):
        prior = build(3, 2, (1, 2))
        assert prior.log_counts[3, 1] == NEG_INF

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            build(5, 6)
        with pytest.raises(ConfigError):
            build(5, 2, (0, 3))
        with pytest.raises(ConfigError):
            build(5, 2, (3, 2))

    def test_counts_match_enumeration(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 11))
            k = int(rng.integers(1, min(4, n) + 1))
            lo = int(rng.integers(1, 3))
            hi = int(rng.integers(lo, n + 1))
            prior = build(n, k, (lo, hi))
            want = len(enumerate_feasible(n, k, lo, hi))
            got = prior.log_counts[n, k]
            if want == 0:
                assert got == NEG_INF
            else:
                assert got == pytest.approx(math.log(want), abs=1e-9)

    def test_recursion_agrees_with_binomials_when_unbounded(self):
        n, k_max = 200, 20
        table = _log_counts_by_recursion(n, k_max, 1, n)
        for k in range(1, k_max + 1):
            i = np.arange(k, n + 1, dtype=float)
            want = log_binom(i - 1, k - 1)
            got = table[k:, k]
            assert np.max(np.abs(got - want)) < 1e-9

    def test_zero_outside_feasible_range(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 30))
            k_max = int(rng.integers(1, min(6, n) + 1))
            lo = int(rng.integers(1, min(3, n) + 1))
            hi = int(rng.integers(lo, n + 1))
            try:
                prior = build(n, k_max, (lo, hi))
            except ConfigError:
                continue
            for k in range(1, k_max + 1):
                for i in range(1, n + 1):
                    if k * lo > i or k * hi < i:
                        assert prior.log_counts[i, k] == NEG_INF


class TestCountPrior:
    def test_uniform_value(self):
        prior = build(20, 10)
        for k in (1, 5, 10):
            assert log_prior_num_segments(prior, k) == pytest.approx(-math.log(10.0))

    def test_single_count(self):
        prior = build(4, 1)
        assert log_prior_num_segments(prior, 1) == 0.0

    def test_normalizes(self):
        prior = build(20, 7)
        total = sum(math.exp(log_prior_num_segments(prior, k)) for k in range(1, 8))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_out_of_range(self):
        prior = build(20, 7)
        with pytest.raises(DomainError):
            log_prior_num_segments(prior, 0)
        with pytest.raises(DomainError):
            log_prior_num_segments(prior, 8)


class TestSegmentationPrior:
    def test_unbounded_example(self):
        prior = build(4, 2)
        got = log_prior_segmentation(prior, (2, 4))
        assert got == pytest.approx(-math.log(2.0) - math.log(3.0), abs=1e-12)

    def test_infeasible_length(self):
        prior = build(10, 3, (2, 8))
        assert log_prior_segmentation(prior, (1, 10)) == NEG_INF

    def test_invalid_segmentation(self):
        prior = build(6, 2)
        with pytest.raises(ValueError):
            log_prior_segmentation(prior, (3, 5))  # does not end at n
        with pytest.raises(ValueError):
            log_prior_segmentation(prior, (4, 2, 6))

    @pytest.mark.parametrize("bounds", [None, (2, 4)])
    def test_sums_to_count_prior_mass(self, bounds):
        n, k_max = 6, 3
        prior = build(n, k_max, bounds)
        lo, hi = prior.min_len, prior.max_len
        total = 0.0
        per_k = np.zeros(k_max)
        for k in range(1, k_max + 1):
            for cps in enumerate_feasible(n, k, lo, hi):
                p = math.exp(log_prior_segmentation(prior, cps))
                total += p
                per_k[k - 1] += p
        # each feasible k carries exactly p(k) = 1/k_max of mass
        for k in range(1, k_max + 1):
            if prior.log_counts[n, k] > NEG_INF:
                assert per_k[k - 1] == pytest.approx(1.0 / k_max, abs=1e-12)
        feasible = sum(prior.log_counts[n, k] > NEG_INF for k in range(1, k_max + 1))
        assert total == pytest.approx(feasible / k_max, abs=1e-12)
