"""Published JSON schemas for the documents the command line emits.

Log-domain fields are numbers, or the explicit tokens "-inf" / "inf" / "nan"
when not finite; probabilities are plain numbers in [0, 1]; undefined
variance summaries are null.
"""

LOG_VALUE = {
    "oneOf": [
        {"type": "number"},
        {"type": "string", "enum": ["-inf", "inf", "nan"]},
    ]
}

PROBABILITY = {"type": "number", "minimum": 0.0, "maximum": 1.0}

THETA = {
    "type": "object",
    "required": ["mu0", "k0", "nu0", "sigma0_sq"],
    "properties": {
        "mu0": {"type": "number"},
        "k0": {"type": "number", "exclusiveMinimum": 0},
        "nu0": {"type": "number", "exclusiveMinimum": 0},
        "sigma0_sq": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

SEGMENTATION = {
    "type": "array",
    "items": {"type": "integer", "minimum": 1},
}

SEGMENT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": [
        "command", "n", "k_max", "model", "seed", "samples", "theta",
        "log_marginal_evidence", "posterior_num_segments", "map",
        "sampled_segmentations", "changepoint_marginals", "position_summary",
    ],
    "properties": {
        "command": {"const": "segment"},
        "n": {"type": "integer", "minimum": 1},
        "k_max": {"type": "integer", "minimum": 1},
        "model": {"enum": ["iid", "ar1"]},
        "min_len": {"type": "integer", "minimum": 1},
        "max_len": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "samples": {"type": "integer", "minimum": 1},
        "theta": {"type": "array", "items": THETA, "minItems": 1},
        "log_marginal_evidence": LOG_VALUE,
        "posterior_num_segments": {"type": "array", "items": PROBABILITY},
        "map": {
            "type": "object",
            "required": ["changepoints", "k", "log_posterior"],
            "properties": {
                "changepoints": SEGMENTATION,
                "k": {"type": "integer", "minimum": 1},
                "log_posterior": LOG_VALUE,
            },
        },
        "sampled_segmentations": {"type": "array", "items": SEGMENTATION},
        "changepoint_marginals": {"type": "array", "items": PROBABILITY},
        "position_summary": {
            "oneOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "required": ["mu_mean", "sigma_sq_mean"],
                    "properties": {
                        "mu_mean": {"type": "array", "items": {"type": "number"}},
                        "sigma_sq_mean": {
                            "type": "array",
                            "items": {"type": ["number", "null"]},
                        },
                    },
                },
            ]
        },
    },
}

MCEM_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["command", "theta", "trace", "status", "iterations_run"],
    "properties": {
        "command": {"const": "mcem"},
        "theta": THETA,
        "trace": {"type": "array", "items": LOG_VALUE},
        "objective_se": {"type": "array", "items": {"type": "number"}},
        "status": {"enum": ["ok", "optimizer_warning", "default_fallback"]},
        "iterations_run": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer"},
        "samples": {"type": "integer", "minimum": 1},
    },
}

MARGINALS_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["command", "n", "samples", "seed", "marginals"],
    "properties": {
        "command": {"const": "marginals"},
        "n": {"type": "integer", "minimum": 1},
        "samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "marginals": {"type": "array", "items": PROBABILITY},
    },
}

TRUTH_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["command", "n", "scenario", "seed", "changepoints", "segments"],
    "properties": {
        "command": {"const": "simulate"},
        "n": {"type": "integer", "minimum": 1},
        "scenario": {"type": "string"},
        "seed": {"type": "integer"},
        "changepoints": SEGMENTATION,
        "segments": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["start", "end", "mu", "sigma_sq"],
                "properties": {
                    "start": {"type": "integer", "minimum": 1},
                    "end": {"type": "integer", "minimum": 1},
                    "mu": {"type": "number"},
                    "sigma_sq": {"type": "number"},
                },
            },
        },
    },
}
