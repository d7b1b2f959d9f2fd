"""Command-line surface.

Subcommands: ``segment`` (full posterior analysis of one sequence), ``mcem``
(hyperparameter fitting on training sequences), ``simulate`` (draw data plus
a truth sidecar), and ``marginals`` (sampling-based changepoint
probabilities).  Outputs are machine-readable JSON (or flat CSV) written
atomically; identical configuration and seed produce byte-identical files.

Exit codes: 0 ok, 2 configuration error, 3 ingest error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import io as seqio
from .engine import forward, log_marginal_evidence, log_posterior_num_segments
from .exceptions import ConfigError, IngestError, ModelError, OracleNumericsError
from .inference import changepoint_marginals, map_segmentation, posterior_position_summary, sample_segmentations
from .mcem import McemConfig, mcem_fit
from .model import Hyperparams, ModelVariant, ObservedSequence, default_hyperparams
from .segprior import build_seg_prior
from .simulate import Scenario, SimSpec, simulate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INGEST = 3
EXIT_NUMERIC = 4

# training sets smaller than this fall back to the data-dependent default prior
MIN_MCEM_OBSERVATIONS = 30


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bayescp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_model_flags(sp, with_data=True):
        if with_data:
            sp.add_argument("--data", action="append", required=True,
                            help="input CSV (repeat with --concat to join files)")
            sp.add_argument("--concat", action="store_true",
                            help="concatenate multiple --data files into one sequence")
        sp.add_argument("--theta", default="auto",
                        help="'auto', 'mcem', or explicit 'mu0,k0,nu0,sigma0sq'")
        sp.add_argument("--train", action="append", default=[],
                        help="training CSVs for --theta mcem")
        sp.add_argument("--kmax", type=int, default=None,
                        help="maximum number of segments (default min(20, n))")
        sp.add_argument("--min-len", type=int, default=None, help="minimum segment length")
        sp.add_argument("--max-len", type=int, default=None, help="maximum segment length")
        sp.add_argument("--model", choices=["iid", "ar1"], default="iid")
        sp.add_argument("--samples", type=int, default=100, help="posterior samples to draw")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--center", action="store_true",
                        help="subtract each track's observed mean (ar1 model only)")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--format", choices=["json", "csv"], default="json")

    sp = sub.add_parser("segment", help="posterior analysis of one sequence")
    add_model_flags(sp)

    sp = sub.add_parser("mcem", help="fit hyperparameters on training sequences")
    sp.add_argument("--train", action="append", required=True)
    sp.add_argument("--kmax", type=int, default=None)
    sp.add_argument("--min-len", type=int, default=None)
    sp.add_argument("--max-len", type=int, default=None)
    sp.add_argument("--model", choices=["iid", "ar1"], default="iid")
    sp.add_argument("--iterations", type=int, default=10)
    sp.add_argument("--samples", type=int, default=100, help="posterior samples per sequence per iteration")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--center", action="store_true")
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=["json"], default="json")

    sp = sub.add_parser("simulate", help="draw data from the generative model")
    sp.add_argument("--scenario", choices=[s.value for s in Scenario], default="hierarchical")
    sp.add_argument("--n", type=int, default=400)
    sp.add_argument("--k", type=int, default=None, help="fixed segment count (hierarchical)")
    sp.add_argument("--kmax", type=int, default=None, help="draw the count uniformly from 1..kmax")
    sp.add_argument("--theta", default=None, help="'mu0,k0,nu0,sigma0sq' (hierarchical)")
    sp.add_argument("--mu", type=float, default=2.0, help="mean shift (single-cp)")
    sp.add_argument("--sigma", type=float, default=1.0, help="noise scale (single-cp)")
    sp.add_argument("--gap", action="append", default=[], metavar="START:END",
                    help="mark positions START..END missing (repeatable)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="output CSV; truth goes to OUT.truth.json")

    sp = sub.add_parser("marginals", help="sampling-based changepoint probabilities")
    add_model_flags(sp)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "segment":
            doc, csv_rows = cmd_segment(args)
        elif args.command == "mcem":
            doc, csv_rows = cmd_mcem(args), None
        elif args.command == "simulate":
            return cmd_simulate(args)
        elif args.command == "marginals":
            doc, csv_rows = cmd_marginals(args)
        else:  # pragma: no cover
            raise ConfigError(f"unknown command {args.command}")
    except IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModelError, OracleNumericsError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    if getattr(args, "format", "json") == "csv" and csv_rows is not None:
        text = "\n".join(",".join(str(c) for c in row) for row in csv_rows) + "\n"
    else:
        text = json.dumps(_sanitize(doc), indent=2, sort_keys=True) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def entrypoint() -> None:  # console script
    sys.exit(main())


# ---------------------------------------------------------------------------


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".bayescp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sanitize(obj):
    """Replace non-finite floats with explicit string tokens (NaN -> null
    stays reserved for undefined variance summaries, handled upstream)."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
    return obj


def _parse_theta_values(text: str, variant: ModelVariant) -> Hyperparams:
    parts = text.split(",")
    if len(parts) != 4:
        raise ConfigError(f"--theta needs 4 comma-separated numbers, got {text!r}")
    try:
        mu0, k0, nu0, s0 = (float(x) for x in parts)
    except ValueError:
        raise ConfigError(f"--theta values must be numeric, got {text!r}")
    try:
        return Hyperparams(mu0, k0, nu0, s0, variant)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _load_data(args) -> ObservedSequence:
    paths = args.data
    if len(paths) > 1 and not args.concat:
        raise ConfigError("multiple --data files require --concat")
    seqs = [seqio.read_sequence_csv(p) for p in paths]
    seq = seqs[0] if len(seqs) == 1 else seqio.concat_sequences(seqs)
    return _center(seq, args)


def _center(seq: ObservedSequence, args) -> ObservedSequence:
    if not getattr(args, "center", False):
        return seq
    if args.model != "ar1":
        raise ConfigError("--center only applies to --model ar1")
    tracks = []
    for t in seq.tracks:
        obs = ~np.isnan(t)
        tracks.append(t - t[obs].mean())
    return ObservedSequence(tuple(tracks))


def _resolve_thetas(args, seq: ObservedSequence) -> tuple[list[Hyperparams], dict | None]:
    """Per-track hyperparameters plus, for --theta mcem, the fit document."""
    variant = ModelVariant.AR1 if args.model == "ar1" else ModelVariant.IID_NORMAL
    spec = args.theta
    if spec == "auto":
        return [default_hyperparams(t, variant) for t in seq.tracks], None
    if spec == "mcem":
        if not args.train:
            raise ConfigError("--theta mcem requires at least one --train file")
        fit_doc = _fit_mcem(args, variant)
        th = Hyperparams(
            fit_doc["theta"]["mu0"], fit_doc["theta"]["k0"],
            fit_doc["theta"]["nu0"], fit_doc["theta"]["sigma0_sq"], variant,
        )
        return [th] * seq.n_tracks, fit_doc
    return [_parse_theta_values(spec, variant)] * seq.n_tracks, None


def _fit_mcem(args, variant: ModelVariant) -> dict:
    train = [_center(seqio.read_sequence_csv(p), args) for p in args.train]
    total_obs = sum(int((~np.isnan(t)).sum()) for s in train for t in s.tracks)
    if len(train) == 1 and total_obs < MIN_MCEM_OBSERVATIONS:
        # too little data for EM to be meaningful; fall back to the
        # data-dependent default prior
        print("warning: single short training sequence, using default prior",
              file=sys.stderr)
        th = default_hyperparams(train[0].tracks[0], variant)
        return {
            "command": "mcem",
            "theta": _theta_dict(th),
            "trace": [],
            "objective_se": [],
            "status": "default_fallback",
            "iterations_run": 0,
            "seed": args.seed,
            "samples": getattr(args, "samples", 100),
        }
    init = default_hyperparams(train[0].tracks[0], variant)
    cfg = McemConfig(
        iterations=getattr(args, "iterations", 10),
        samples_per_seq=getattr(args, "samples", 100),
        k_max=args.kmax,
        bounds=_bounds(args),
        seed=args.seed,
    )
    res = mcem_fit(train, init, cfg)
    return {
        "command": "mcem",
        "theta": _theta_dict(res.theta),
        "trace": list(res.trace),
        "objective_se": list(res.objective_se),
        "status": res.status,
        "iterations_run": res.iterations_run,
        "seed": args.seed,
        "samples": cfg.samples_per_seq,
    }


def _theta_dict(th: Hyperparams) -> dict:
    return {"mu0": th.mu0, "k0": th.k0, "nu0": th.nu0, "sigma0_sq": th.sigma0_sq}


def _bounds(args):
    lo, hi = getattr(args, "min_len", None), getattr(args, "max_len", None)
    if lo is None and hi is None:
        return None
    return (lo or 1, hi)


def _build_prior(args, n: int):
    lo = args.min_len or 1
    hi = args.max_len or n
    kmax = args.kmax or min(20, n)
    bounds = None if (lo == 1 and hi == n) else (lo, hi)
    return build_seg_prior(n, kmax, bounds)


def cmd_segment(args):
    seq = _load_data(args)
    thetas, fit_doc = _resolve_thetas(args, seq)
    prior = _build_prior(args, seq.n)
    table = forward(seq, thetas, prior)

    log_ev = log_marginal_evidence(table, prior)
    pk = np.exp(log_posterior_num_segments(table, prior))
    map_seg, map_score = map_segmentation(table, prior)
    draws = sample_segmentations(table, prior, args.samples, args.seed)
    marg = changepoint_marginals(draws, seq.n)
    if args.model == "iid":
        mu_mean, var_mean = posterior_position_summary(draws, seq, thetas[0])
        summary = {
            "mu_mean": [float(x) for x in mu_mean],
            "sigma_sq_mean": [None if math.isnan(x) else float(x) for x in var_mean],
        }
    else:
        summary = None

    _assert_numerics(log_ev, pk, marg)
    doc = {
        "command": "segment",
        "n": seq.n,
        "k_max": prior.k_max,
        "min_len": prior.min_len,
        "max_len": prior.max_len,
        "model": args.model,
        "seed": args.seed,
        "samples": args.samples,
        "theta": [_theta_dict(t) for t in thetas],
        "log_marginal_evidence": float(log_ev),
        "posterior_num_segments": [float(x) for x in pk],
        "map": {
            "changepoints": list(map_seg.changepoints),
            "k": map_seg.k,
            "log_posterior": float(map_score),
        },
        "sampled_segmentations": [list(s.changepoints) for s in draws.samples],
        "changepoint_marginals": [float(x) for x in marg],
        "position_summary": summary,
    }
    if fit_doc is not None:
        doc["mcem_fit"] = fit_doc

    rows = [("position", "cp_marginal", "mu_mean", "sigma_sq_mean")]
    for i in range(seq.n):
        rows.append((
            i + 1,
            repr(float(marg[i])) if i < seq.n - 1 else "",
            repr(summary["mu_mean"][i]) if summary else "",
            "" if summary is None or summary["sigma_sq_mean"][i] is None
            else repr(summary["sigma_sq_mean"][i]),
        ))
    return doc, rows


def cmd_mcem(args) -> dict:
    variant = ModelVariant.AR1 if args.model == "ar1" else ModelVariant.IID_NORMAL
    return _fit_mcem(args, variant)


def cmd_simulate(args) -> int:
    try:
        theta = None
        if args.theta:
            theta = _parse_theta_values(args.theta, ModelVariant.IID_NORMAL)
        gaps = []
        for g in args.gap:
            try:
                a, b = g.split(":")
                gaps.append((int(a), int(b)))
            except ValueError:
                raise ConfigError(f"--gap expects START:END, got {g!r}")
        spec = SimSpec(
            n=args.n,
            scenario=Scenario(args.scenario),
            theta=theta,
            k=args.k,
            k_max=args.kmax,
            gaps=tuple(gaps),
            seed=args.seed,
            cp_mu=args.mu,
            cp_sigma=args.sigma,
        )
        result = simulate(spec)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    seqio.write_sequence_csv(args.out, result.sequence)
    truth = {
        "command": "simulate",
        "n": result.sequence.n,
        "scenario": args.scenario,
        "seed": args.seed,
        "changepoints": list(result.truth.changepoints),
        "segments": [
            {"start": a, "end": b, "mu": mu, "sigma_sq": s2}
            for (a, b), (mu, s2) in zip(result.truth.segments(), result.segment_params)
        ],
    }
    _emit(json.dumps(_sanitize(truth), indent=2, sort_keys=True) + "\n",
          args.out + ".truth.json")
    return EXIT_OK


def cmd_marginals(args):
    seq = _load_data(args)
    thetas, _ = _resolve_thetas(args, seq)
    prior = _build_prior(args, seq.n)
    table = forward(seq, thetas, prior)
    draws = sample_segmentations(table, prior, args.samples, args.seed)
    marg = changepoint_marginals(draws, seq.n)
    _assert_numerics(marg)
    doc = {
        "command": "marginals",
        "n": seq.n,
        "samples": args.samples,
        "seed": args.seed,
        "marginals": [float(x) for x in marg],
    }
    rows = [("position", "probability")]
    rows += [(i + 1, repr(float(p))) for i, p in enumerate(marg)]
    return doc, rows


def _assert_numerics(*arrays) -> None:
    for a in arrays:
        arr = np.atleast_1d(np.asarray(a, dtype=float))
        if np.isnan(arr).any():
            raise ModelError("numerical failure: NaN in results")


if __name__ == "__main__":  # pragma: no cover
    entrypoint()
