"""Variational truncation operators, Muckenhoupt weights and the experiment
harness on the discrete torus.

Signals are 1-d complex128 numpy arrays sampled on x_j = j/n, weights are
1-d float64 arrays of the same length. Experiment configs and reports are
plain dicts; they pass through the strict C++ JSON parser, so unknown keys
and inconsistent grids raise ValueError. Report doubles arrive as decimal
strings (the serialization is canonical so digests reproduce bit for bit);
convert with float() where needed.
"""

from __future__ import annotations

import json
from typing import Any, Dict, Union

from ._vclab import (
    ap_constant,
    apply_operator,
    clears_variation_threshold,
    dft,
    doubling_exponent,
    dyadic_sharp,
    family_member,
    idft,
    lepingle_ratio,
    lp_overlap_bound,
    maximal,
    partial_sum,
    power_weight,
    report_digest,
    report_to_csv,
    variation_norm,
    variational_partial_sums,
    variational_truncation,
    weighted_lp_norm,
)
from . import _vclab

ConfigLike = Union[str, Dict[str, Any]]


def _config_json(config: ConfigLike) -> str:
    if isinstance(config, str):
        return config
    return json.dumps(config)


def normalize_config(config: ConfigLike) -> Dict[str, Any]:
    """Round-trip a config through the strict parser, filling defaults."""
    return json.loads(_vclab.normalize_config(_config_json(config)))


def config_digest(config: ConfigLike) -> int:
    return _vclab.config_digest(_config_json(config))


def estimate_norm_ratio(config: ConfigLike) -> Dict[str, Any]:
    """Norm-ratio report of the configured operator over seeded trials."""
    return json.loads(_vclab.estimate_norm_ratio_json(_config_json(config)))


def sweep_r(config: ConfigLike) -> Dict[str, Any]:
    """Grid of per-(r, a) maxima and fitted growth slopes over n_grid."""
    return json.loads(_vclab.sweep_r_json(_config_json(config)))


def decomposition_report(config: ConfigLike) -> Dict[str, Any]:
    """Seeded decomposition instances with their certificate monitors."""
    return json.loads(_vclab.decomposition_report_json(_config_json(config)))


__all__ = [
    "ap_constant",
    "apply_operator",
    "clears_variation_threshold",
    "config_digest",
    "decomposition_report",
    "dft",
    "doubling_exponent",
    "dyadic_sharp",
    "estimate_norm_ratio",
    "family_member",
    "idft",
    "lepingle_ratio",
    "lp_overlap_bound",
    "maximal",
    "normalize_config",
    "partial_sum",
    "power_weight",
    "report_digest",
    "report_to_csv",
    "sweep_r",
    "variation_norm",
    "variational_partial_sums",
    "variational_truncation",
    "weighted_lp_norm",
]
