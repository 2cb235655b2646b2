import itertools
import json
import math

import numpy as np
import pytest

import vclab


def tone(n, k):
    x = np.arange(n) / n
    return np.exp(2j * np.pi * k * x)


def brute_variation(a, r, include_initial):
    best = 0.0
    idx = range(len(a))
    for m in range(1, len(a) + 1):
        for sub in itertools.combinations(idx, m):
            jumps = [abs(a[j] - a[i]) for i, j in zip(sub, sub[1:])]
            if include_initial:
                jumps.append(abs(a[sub[0]]))
            if not jumps:
                continue
            if math.isinf(r):
                best = max(best, max(jumps))
            else:
                best = max(best, sum(j**r for j in jumps) ** (1.0 / r))
    return best


def test_dft_roundtrip():
    rng = np.random.default_rng(11)
    f = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    back = vclab.idft(vclab.dft(f))
    assert np.allclose(back, f, atol=1e-12)


def test_variation_norm_matches_bruteforce():
    rng = np.random.default_rng(12)
    a = rng.standard_normal(7) + 1j * rng.standard_normal(7)
    for r in (1.0, 2.5, math.inf):
        for init in (False, True):
            got = vclab.variation_norm(a, r, include_initial=init)
            want = brute_variation(list(a), r, init)
            assert got == pytest.approx(want, abs=1e-12)


def test_carleson_sup_dominates_partial_sum():
    f = vclab.family_member("random_trig", 256, seed=13)
    sup_field = vclab.apply_operator("carleson-sup", f, math.inf)
    ps_field = vclab.apply_operator("partial-sum", f, 3.0)
    assert np.all(sup_field >= ps_field - 1e-12)


def test_variation_monotone_in_exponent():
    f = vclab.family_member("dirichlet", 256, seed=14)
    lo = vclab.variational_partial_sums(f, 2.5)
    hi = vclab.variational_partial_sums(f, 4.0)
    assert np.all(lo >= hi - 1e-12)


def test_ap_constant_normalized_and_monotone():
    ones = np.ones(256)
    assert vclab.ap_constant(ones, 2.0) == pytest.approx(1.0, abs=1e-9)
    w = vclab.power_weight(256, 0.5)
    a2 = vclab.ap_constant(w, 2.0)
    a3 = vclab.ap_constant(w, 3.0)
    assert a2 >= a3 >= 1.0
    assert vclab.doubling_exponent(ones) == pytest.approx(1.0, abs=1e-9)


def test_weighted_norm_and_maximal_on_constants():
    n = 128
    ones_f = np.ones(n, dtype=complex)
    ones_w = np.ones(n)
    assert vclab.weighted_lp_norm(ones_f, 2.0, ones_w) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(vclab.maximal(ones_f), 1.0, atol=1e-12)
    assert np.allclose(vclab.dyadic_sharp(ones_f), 0.0, atol=1e-12)


def test_lepingle_pure_tone_is_exact():
    n = 64
    ratio, degenerate = vclab.lepingle_ratio(tone(n, 4), r=3.0, p=2.0, w=np.ones(n))
    assert not degenerate
    assert ratio == 1.0


def test_sweep_report_reproducible():
    cfg = {
        "n_grid": [64, 128],
        "r_grid": [2.5, 3.0],
        "op": "svar",
        "family": "random_trig",
        "trials": 2,
        "seed": 7,
        "p": 2.0,
        "q": 1.5,
    }
    rep1 = vclab.sweep_r(cfg)
    rep2 = vclab.sweep_r(cfg)
    assert rep1 == rep2
    assert len(rep1["cells"]) == 2
    for cell in rep1["cells"]:
        # report doubles arrive as canonical decimal strings
        assert len(cell["max_ratios"]) == 2
        assert all(float(v) > 0.0 for v in cell["max_ratios"])
    full = vclab.normalize_config(cfg)
    assert vclab.config_digest(full) == rep1["config"]


def test_norm_ratio_report_has_trials():
    cfg = {"n": 128, "op": "svar", "family": "lacunary_pm", "trials": 3, "seed": 5}
    rep = vclab.estimate_norm_ratio(cfg)
    assert len(rep["ratios"]) == 3
    assert float(rep["max_ratio"]) >= float(rep["median_ratio"]) > 0.0
    csv = vclab.report_to_csv(json.dumps(rep))
    assert "ratio" in csv.splitlines()[0]


def test_strict_config_rejects_unknown_keys():
    with pytest.raises(ValueError):
        vclab.normalize_config({"n": 64, "bogus": 1})
