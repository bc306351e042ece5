"""Acceptance checks; each records a line in the session summary."""

import contextlib
import io
import itertools
import os
import re

import numpy as np
import pytest
from hypothesis import given, settings

import criteria
from abs_polar.bec import construct_bec, gamma_metric
from abs_polar.channels import make_awgn
from abs_polar.cli import main
from abs_polar.construction import CodeSpec, PermutationSpec, abs_construct, standard_construct
from abs_polar.decoder import (
    BIT_POOL_FACTOR,
    FAMILIES,
    POOL_HIGH_WATER,
    ml_decode_bruteforce,
    scl_decode_abs,
    scl_decode_db,
    scl_decode_standard,
)
from abs_polar.encoder import encode, generator_matrix
from abs_polar.sim import SimConfig, run_fer
from oracles import (
    EXAMPLE_INFO,
    EXAMPLE_SWAPS,
    TABLE_ABS,
    TABLE_ABS_UNMATCHED,
    TABLE_STANDARD,
    abs_generator,
)
from strategies import code_specs

EXAMPLE = CodeSpec(16, 8, PermutationSpec(16, EXAMPLE_SWAPS), EXAMPLE_INFO)
SMALL_STANDARD = CodeSpec(8, 4, PermutationSpec.standard(8), (4, 6, 7, 8))
TABLE_TOL = 1e-6
ML_TOL = 1e-9


@pytest.fixture(scope="module")
def bec_report():
    """Rows and fitted exponents from one full ``bec-analyze --eps 0.5`` run."""
    buffer = io.StringIO()
    with contextlib.redirect_stdout(buffer):
        assert main(["bec-analyze", "--eps", "0.5"]) == 0
    rows, fits = {}, {}
    for line in buffer.getvalue().splitlines():
        found = re.match(r"# regression family=(\w+) mu=([\d.]+)", line)
        if found:
            fits[found[1]] = float(found[2])
        elif not line.startswith(("#", "family")):
            family, n, fraction, _ = line.split(",")
            rows[family, int(n)] = float(fraction)
    return rows, fits


TABLE_CASES = [("standard", n, v) for n, v in TABLE_STANDARD.items()] + [
    pytest.param("abs", n, v, marks=pytest.mark.xfail(
        strict=True, reason="published value not reproduced; see decision ledger"))
    if n in TABLE_ABS_UNMATCHED else ("abs", n, v)
    for n, v in TABLE_ABS.items()
]


@pytest.mark.parametrize("family,n,published", TABLE_CASES)
def test_criterion_1_unpolarized_fractions(bec_report, family, n, published):
    rows, _ = bec_report
    computed = rows[family, n]
    ok = abs(computed - published) <= TABLE_TOL
    criteria.record(1, ok, "" if ok else f"{family} n={n}: {computed:.8f} vs {published:.8f}")
    assert ok


@pytest.mark.parametrize("family,expected", [("standard", 3.65), ("abs", 3.37)])
def test_criterion_2_scaling_exponents(bec_report, family, expected):
    _, fits = bec_report
    ok = abs(fits[family] - expected) <= 0.05
    criteria.record(2, ok, "" if ok else f"{family} mu={fits[family]:.4f}")
    assert ok


def _encoder_agrees(spec, rng):
    g = abs_generator(spec.n, spec.perms.swap_sets)
    if not np.array_equal(generator_matrix(spec), g):
        return False
    info = np.array(spec.info_set, dtype=np.int64) - 1
    if spec.n <= 16:
        messages = itertools.product((0, 1), repeat=spec.k)
    else:
        messages = rng.integers(0, 2, (1000, spec.k))
    return all(np.array_equal(encode(spec, m), np.asarray(m, dtype=np.int64) @ g[info] % 2)
               for m in messages)


def test_criterion_3_example_encoder_matches_generator():
    ok = _encoder_agrees(EXAMPLE, np.random.default_rng(3))
    criteria.record(3, ok, "" if ok else "example code")
    assert ok


@settings(max_examples=20)
@given(code_specs(min_log_n=2, max_log_n=6))
def test_criterion_3_random_encoders_match_generator(spec):
    ok = _encoder_agrees(spec, np.random.default_rng(3))
    criteria.record(3, ok, "" if ok else f"n={spec.n} k={spec.k}")
    assert ok


@pytest.mark.parametrize("spec,decoder", [(SMALL_STANDARD, scl_decode_standard),
                                          (EXAMPLE, scl_decode_abs)],
                         ids=["standard-8-4", "abs-16-8"])
def test_criterion_4_full_list_is_maximum_likelihood(spec, decoder):
    rng = np.random.default_rng(4)
    p = 0.05
    worst = 0.0
    for _ in range(1000):
        received = encode(spec, rng.integers(0, 2, spec.k)) ^ (rng.random(spec.n) < p)
        pairs = np.where(received[:, None] == np.array([0, 1]), 1 - p, p)
        _, ml_lik = ml_decode_bruteforce(spec, pairs)
        result = decoder(spec, pairs, 1 << spec.k)
        lik = np.prod(np.where(result.codeword == 1, pairs[:, 1], pairs[:, 0]))
        worst = max(worst, abs(lik - ml_lik) / ml_lik)
    ok = worst <= ML_TOL
    criteria.record(4, ok, f"n={spec.n}: relative gap {worst:.2e}")
    assert ok


def test_criterion_5_decoder_families_agree():
    built = construct_bec(16, 0.5, "standard")
    order = np.argsort(-(1 - built.erasure_probs), kind="stable")
    spec = CodeSpec(16, 8, PermutationSpec.standard(16), tuple(sorted(order[:8] + 1)))
    rng = np.random.default_rng(5)
    mismatches = 0
    for _ in range(1000):
        codeword = encode(spec, rng.integers(0, 2, 8))
        # Unit-variance AWGN: continuous LLRs make exact ties vanishingly rare.
        llrs = 2.0 * ((1.0 - 2.0 * codeword) + rng.standard_normal(16))
        results = [decode(spec, llrs, 4) for decode in
                   (scl_decode_standard, scl_decode_db, scl_decode_abs)]
        same = all(np.array_equal(r.codeword, results[0].codeword)
                   and abs(r.score - results[0].score) <= ML_TOL for r in results)
        mismatches += not same
    ok = mismatches == 0
    criteria.record(5, ok, f"{mismatches} of 1000 trials disagree")
    assert ok


@pytest.mark.parametrize("eps", [round(0.1 * i, 1) for i in range(1, 10)])
def test_criterion_6_swaps_never_hurt_polarization(eps):
    for m in range(4, 13):
        gamma_abs = gamma_metric(construct_bec(1 << m, eps, "abs").erasure_probs)
        gamma_std = gamma_metric(construct_bec(1 << m, eps, "standard").erasure_probs)
        ok = gamma_abs <= gamma_std
        criteria.record(6, ok, "" if ok else f"eps={eps} n={1 << m}")
        assert ok


def test_criterion_7_pool_bounds_held():
    # Runs after the decoding checks above; any overflow would have raised there.
    for family in FAMILIES:
        peaks = POOL_HIGH_WATER[family]
        assert peaks["prob"] > 0, f"{family} decoder never ran"
        ok = peaks["prob"] <= 1 and peaks["bit"] <= BIT_POOL_FACTOR[family]
        criteria.record(7, ok, f"{family}: {peaks['prob']:.0f}L probabilities, "
                               f"{peaks['bit']:.0f}L bits")
        assert ok


def _crossing_db(points, target=1e-3):
    """Eb/N0 where log FER crosses the target, by linear interpolation."""
    for (s0, f0), (s1, f1) in zip(points, points[1:]):
        if f0 >= target >= f1 and f1 > 0:
            t = (np.log(f0) - np.log(target)) / (np.log(f0) - np.log(f1))
            return s0 + t * (s1 - s0)
    return None


@pytest.mark.extended
def test_criterion_8_crc_aided_fer_gap():
    trials = int(os.environ.get("ABS_POLAR_EXTENDED_TRIALS", 200_000))
    channel = make_awgn(2.0, 0.5, 64)
    codes = {"abs": abs_construct(256, 128, channel, 2000),
             "standard": standard_construct(256, 128, channel, 2000)}
    sweep = [1.5, 1.75, 2.0, 2.25, 2.5]
    crossing = {}
    for family, spec in codes.items():
        points = []
        for ebn0 in sweep:
            cfg = SimConfig(spec, f"awgn:{ebn0}", 32, 8, trials, None, seed=8, workers=0)
            points.append((ebn0, run_fer(cfg).fer))
        crossing[family] = _crossing_db(points)
    ok = None not in crossing.values() and crossing["standard"] - crossing["abs"] >= 0.1
    criteria.record(8, ok, f"crossings at FER 1e-3: {crossing}")
    assert ok
