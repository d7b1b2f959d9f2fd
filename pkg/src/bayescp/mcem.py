"""Monte Carlo EM for the prior constants.

Direct maximization of the marginal likelihood would re-run the forward
recursion for every objective evaluation, and its gradient is awkward.
Treating the segmentation as missing data instead gives an EM scheme whose
E-step expectation is approximated by exact posterior samples (which the
backward sampler provides cheaply), and whose M-step objective collapses to
a sum of closed-form window evidences over the sampled segments — no
recursion inside the optimizer at all.

The M-step runs a derivative-free simplex search over
(mu0, log k0, log nu0, log sigma0_sq), so positivity constraints hold by
construction.  Convergence of the overall loop is not guaranteed (the
objective is a Monte Carlo estimate), but the per-iteration trace of the
exact total log evidence is recorded so drift is visible.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .engine import forward, log_marginal_evidence
from .inference import sample_segmentations
from .model import Hyperparams, ModelVariant, ObservedSequence, SegmentEvidence, ar1_log_evidence, iid_log_evidence, segment_log_evidence
from .segprior import build_seg_prior

__all__ = ["McemConfig", "McemResult", "mcem_fit", "m_step_objective"]


@dataclass(frozen=True)
class McemConfig:
    """Knobs for :func:`mcem_fit`.

    ``k_max`` of None means min(20, n) per sequence.  ``stop_tol`` adds an
    optional early exit when the relative change of the total log evidence
    between iterations falls below it.
    """

    iterations: int = 10
    samples_per_seq: int = 100
    k_max: int | None = None
    bounds: tuple[int, int] | None = None
    opt_tol: float = 1e-8
    max_opt_evals: int = 500
    stop_tol: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1 or self.samples_per_seq < 1:
            raise ValueError("iterations and samples_per_seq must be >= 1")


@dataclass(frozen=True)
class McemResult:
    theta: Hyperparams
    trace: tuple[float, ...]          # total log evidence at init and after each iteration
    objective_se: tuple[float, ...]   # Monte Carlo standard error of the E-step objective
    status: str                       # "ok" or "optimizer_warning"
    iterations_run: int


def m_step_objective(theta: Hyperparams, stats_list) -> float:
    """Sum of window log evidences over sampled segments.

    The segmentation prior does not depend on the prior constants, so it is
    dropped; what remains is exactly the quantity the M-step maximizes.
    """
    if not stats_list:
        raise ValueError("need at least one segment's statistics")
    return float(sum(segment_log_evidence(theta, s) for s in stats_list))


def mcem_fit(sequences, theta_init: Hyperparams, cfg: McemConfig = McemConfig()) -> McemResult:
    """Fit the prior constants to one or more training sequences.

    Per iteration: run the forward recursion under the current constants,
    draw ``samples_per_seq`` segmentations per sequence, then maximize the
    summed segment evidence over the constants.  Returns the final constants
    together with the exact log-evidence trace (one entry for the initial
    value and one after each iteration).
    """
    seqs = list(sequences)
    if not seqs:
        raise ValueError("need at least one training sequence")
    variant = theta_init.variant

    priors = [
        build_seg_prior(s.n, cfg.k_max or min(20, s.n), cfg.bounds) for s in seqs
    ]
    theta = theta_init
    trace: list[float] = []
    ses: list[float] = []
    status = "ok"
    iterations_run = 0

    for it in range(cfg.iterations):
        segments, sample_ids, weights, evidence = _e_step(seqs, priors, theta, cfg, it)
        if not trace:
            trace.append(evidence)
        elif cfg.stop_tol is not None:
            rel = abs(evidence - trace[-1]) / max(1.0, abs(trace[-1]))
            trace.append(evidence)
            if rel < cfg.stop_tol:
                iterations_run = it
                break
        else:
            trace.append(evidence)

        theta, ok = _m_step(theta, segments, weights, variant, cfg)
        if not ok:
            status = "optimizer_warning"
        ses.append(_objective_se(theta, segments, sample_ids, variant))
        iterations_run = it + 1
    else:
        pass

    # evidence at the final constants
    trace.append(sum(
        log_marginal_evidence(forward(s, theta, p), p) for s, p in zip(seqs, priors)
    ))
    return McemResult(theta, tuple(trace), tuple(ses), status, iterations_run)


def _e_step(seqs, priors, theta, cfg: McemConfig, iteration: int):
    """Sample segmentations under the current constants.

    Returns unique segment windows as stacked statistic arrays with
    multiplicities, per-window sample identifiers for dispersion estimates,
    and the exact total log evidence at the current constants.
    """
    window_weight: dict[tuple[int, int, int], int] = {}
    window_samples: list[tuple[int, tuple[int, int, int]]] = []
    evidence = 0.0
    sample_base = 0
    stats_by_seq = {}
    for si, (seq, prior) in enumerate(zip(seqs, priors)):
        table = forward(seq, theta, prior)
        evidence += log_marginal_evidence(table, prior)
        draws = sample_segmentations(
            table, prior, cfg.samples_per_seq, _derive_seed(cfg.seed, iteration, si)
        )
        stats_by_seq[si] = table.evidence
        for di, seg in enumerate(draws.samples):
            sid = sample_base + di
            for a, b in seg.segments():
                key = (si, a, b)
                window_weight[key] = window_weight.get(key, 0) + 1
                window_samples.append((sid, key))
        sample_base += cfg.samples_per_seq

    keys = list(window_weight)
    weights = np.array([window_weight[k] for k in keys], dtype=float)
    m = np.empty(len(keys), dtype=np.int64)
    s1 = np.empty(len(keys))
    s2 = np.empty(len(keys))
    sxx = np.empty(len(keys))
    sxy = np.empty(len(keys))
    key_index = {k: i for i, k in enumerate(keys)}
    for k, i in key_index.items():
        si, a, b = k
        st = stats_by_seq[si].stats(0, a, b)
        m[i], s1[i], s2[i], sxx[i], sxy[i] = st.m, st.s1, st.s2, st.sxx, st.sxy
    sample_ids = np.array([(sid, key_index[k]) for sid, k in window_samples], dtype=np.int64)
    return (m, s1, s2, sxx, sxy), sample_ids, weights, evidence


def _derive_seed(seed: int, iteration: int, seq_index: int) -> int:
    return int(np.random.SeedSequence([seed, iteration, seq_index]).generate_state(1)[0])


def _encode(theta: Hyperparams) -> np.ndarray:
    return np.array([
        theta.mu0, math.log(theta.k0), math.log(theta.nu0), math.log(theta.sigma0_sq)
    ])


def _decode(x: np.ndarray, variant: ModelVariant) -> Hyperparams:
    return Hyperparams(float(x[0]), math.exp(x[1]), math.exp(x[2]), math.exp(x[3]), variant)


def _segment_evidences(theta, segments, variant):
    m, s1, s2, sxx, sxy = segments
    if variant is ModelVariant.AR1:
        return ar1_log_evidence(theta, m, s2, sxx, sxy)
    return iid_log_evidence(theta, m, s1, s2)


def _m_step(theta, segments, weights, variant, cfg: McemConfig):
    def neg_objective(x):
        th = _decode(x, variant)
        vals = _segment_evidences(th, segments, variant)
        return -float(np.dot(weights, vals))

    with np.errstate(over="ignore", invalid="ignore"):
        res = minimize(
            neg_objective,
            _encode(theta),
            method="Nelder-Mead",
            options={
                "maxfev": cfg.max_opt_evals,
                "fatol": cfg.opt_tol,
                "xatol": cfg.opt_tol,
            },
        )
    if not res.success:
        warnings.warn(f"M-step simplex search stopped early: {res.message}", RuntimeWarning)
    return _decode(res.x, variant), bool(res.success)


def _objective_se(theta, segments, sample_ids, variant) -> float:
    """Standard error of the mean per-sample complete-data log evidence."""
    vals = _segment_evidences(theta, segments, variant)
    n_samples = int(sample_ids[:, 0].max()) + 1
    per_sample = np.zeros(n_samples)
    np.add.at(per_sample, sample_ids[:, 0], vals[sample_ids[:, 1]])
    if n_samples < 2:
        return 0.0
    return float(np.std(per_sample, ddof=1) / math.sqrt(n_samples))
