"""Acceptance suite. Each test is one numbered criterion; the terminal
summary prints one PASS/FAIL line per criterion."""

import contextlib
import itertools
import json
import time
from collections import Counter
from fractions import Fraction
from io import StringIO

import numpy as np
import pytest

from partialfair.adversary import STRATEGY_NAMES, StrategyFactory
from partialfair.analysis import (
    alpha_exact,
    bound_formulas,
    binomial_sigma,
    compare_real_ideal,
    exact_summary_distribution,
    run_batch,
    sd_noise,
    simulate_ideal_dealer,
    statistical_distance,
    subset_value_distribution,
)
from partialfair.cli import main
from partialfair.dealer import DOMAIN, RANGE, build_value_table, dealer_preprocess, run_dealer_protocol
from partialfair.dealerless import SHAREGEN, run_mpc
from partialfair.functionality import ProtocolConfig, xor_functionality
from partialfair.sharing import (
    eval_polys,
    reconstruct_with_respect_to,
    shamir_reconstruct,
    shamir_share,
    share_rows_with_respect_to,
    share_with_respect_to,
    xor_reconstruct,
    xor_share,
)

XOR4 = xor_functionality(4)
XOR5 = xor_functionality(5)


def xor4(r=4, corrupt=(1, 2), p=1, seed=0):
    return ProtocolConfig(XOR4, 2, p, r, frozenset(corrupt), seed)


# -- 1 ---------------------------------------------------------------------


def test_01_honest_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    configs = [xor4(r=4, corrupt=()), ProtocolConfig(XOR5, 3, 1, 4, frozenset(), 2)]
    wrong = 0
    for config in configs:
        for trial in range(1000):
            xs = tuple(int(v) for v in rng.integers(0, 2, config.m))
            want = sum(xs) % 2
            for runner in (run_dealer_protocol, run_mpc):
                res = runner(config, xs, trial=trial, record=False)
                wrong += res.honest_output != want or res.termination != "normal"
    elapsed = time.perf_counter() - start
    print(f"[1] wrong outputs: {wrong} of 4000 runs in {elapsed:.1f}s")
    assert wrong == 0
    assert elapsed < 10


# -- 2 ---------------------------------------------------------------------


class Tape:
    def __init__(self, data):
        self.data = np.ascontiguousarray(data, dtype=np.uint8).tobytes()
        self.pos = 0

    def bytes(self, n):
        out = self.data[self.pos:self.pos + n]
        assert len(out) == n
        self.pos += n
        return out


def _privacy_views_uniform(alpha, m):
    """Enumerate all randomness for every one-byte secret and check that
    every coalition of alpha - 1 parties sees the same (uniform) view
    distribution, for Shamir and for sharing with respect to each party."""
    n_rand = 256 ** (alpha - 1)
    secrets = np.repeat(np.arange(256, dtype=np.uint8), n_rand)
    randomness = np.tile(
        np.array(list(itertools.product(range(256), repeat=alpha - 1)), dtype=np.uint8).reshape(n_rand, alpha - 1),
        (256, 1),
    )
    ok = True
    # Shamir with threshold alpha: coefficients are the randomness
    coeffs = randomness.T.reshape(alpha - 1, -1, 1)
    shamir = eval_polys(secrets.reshape(-1, 1), coeffs, range(1, m + 1))[:, :, 0]
    views = {("shamir",): shamir}
    # construction: mask first, then alpha - 2 coefficient bytes
    for j in range(1, m + 1):
        tape = Tape(np.concatenate([randomness[:, 0], randomness[:, 1:].T.reshape(-1)]))
        mask, values = share_rows_with_respect_to(secrets.reshape(-1, 1), alpha, m, tape)
        held = values[:, :, 0].copy()
        held[j - 1] = mask[:, 0]
        views[("construction", j)] = held
    for key, held in views.items():
        for coalition in itertools.combinations(range(m), alpha - 1):
            code = np.zeros(secrets.size, dtype=np.int64)
            for q in coalition:
                code = code * 256 + held[q]
            counts = np.bincount(secrets.astype(np.int64) * n_rand + code, minlength=256 * n_rand)
            ok &= bool((counts == 1).all())
    return ok


def test_02_sharing_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    failures = 0
    for _ in range(10_000):
        secret = rng.bytes(int(rng.integers(1, 17)))
        m = int(rng.integers(2, 12))
        k = int(rng.integers(2, m + 1))
        shares = xor_share(secret, m, rng)
        failures += xor_reconstruct(shares) != secret
        shares = shamir_share(secret, k, m, rng)
        pick = sorted(rng.choice(m, size=k, replace=False))
        failures += shamir_reconstruct([shares[i] for i in pick], k) != secret
        j = int(rng.integers(1, m + 1))
        masking, comps = share_with_respect_to(secret, j, k, m, rng)
        pick = sorted(rng.choice(m - 1, size=k - 1, replace=False))
        failures += reconstruct_with_respect_to(masking, [comps[i] for i in pick], k) != secret
    private = _privacy_views_uniform(2, 3) and _privacy_views_uniform(3, 4)
    elapsed = time.perf_counter() - start
    print(f"[2] round-trip failures: {failures} of 30000; privacy exact: {private}; {elapsed:.1f}s")
    assert failures == 0 and private
    assert elapsed < 30


# -- 3 ---------------------------------------------------------------------


def test_03_values_from_special_round_equal_output():
    violations = 0
    rng_inputs = np.random.default_rng(3)
    for seed in range(10_000):
        variant = DOMAIN if seed % 2 == 0 else RANGE
        config = xor4(r=6, p=2, seed=seed)
        xs = [int(v) for v in rng_inputs.integers(0, 2, 4)]
        table, _ = dealer_preprocess(config, xs, np.random.default_rng(seed), variant)
        violations += int((table.values[table.special_round - 1:] != table.w).sum())
    print(f"[3] violations: {violations}")
    assert violations == 0


# -- 4 ---------------------------------------------------------------------


def test_04_premature_termination_semantics():
    k, r = 3, 8
    config = xor4(r=r, seed=4)
    xs = (1, 0, 1, 1)
    factory = StrategyFactory("fixed_round_aborter", {"k": k, "subset": "1,2"})
    outs = Counter()
    for trial in range(100_000):
        res = run_dealer_protocol(config, xs, factory(), trial=trial, record=False)
        if res.termination == "premature" and k - 1 < res.special_round:
            outs[res.honest_output] += 1
    n = sum(outs.values())
    oracle = subset_value_distribution(XOR4, xs, (3, 4))
    tv = float(statistical_distance({z: Fraction(c, n) for z, c in outs.items()}, oracle))
    print(f"[4] conditioned sample {n}, TV to oracle {tv:.4f}")
    assert tv <= 0.02


# -- 5 ---------------------------------------------------------------------


def test_05_guessing_bound():
    start = time.perf_counter()
    config = xor4(r=16, seed=5)
    xs = (1, 0, 1, 1)
    alpha = alpha_exact(XOR4, config, {1, 2}, xs)
    assert alpha == Fraction(1, 2)
    n = 100_000
    batch = run_batch(run_dealer_protocol, config, xs, StrategyFactory("threshold_guesser"), n)
    q = batch.hit_rate
    bound = 1 / (alpha * config.r)
    sigma = binomial_sigma(q, n)
    elapsed = time.perf_counter() - start
    print(f"[5] alpha {alpha}; guess rate {q:.5f} vs bound {float(bound)} + 3*{sigma:.5f}; {elapsed:.1f}s")
    assert q <= bound + 3 * sigma
    assert elapsed < 60


# -- 6 ---------------------------------------------------------------------


def test_06_real_versus_ideal():
    config = xor4(r=4, seed=6)
    xs = (1, 0, 1, 1)
    bound = bound_formulas(2, 2, 4, 2, 4).sd_bound_deterministic
    factories = [StrategyFactory("honest")] + [
        StrategyFactory("fixed_round_aborter", {"k": k, "subset": "1,2"}) for k in range(1, 5)
    ]
    for factory in factories:
        real = exact_summary_distribution(config, xs, factory, "real")
        ideal = exact_summary_distribution(config, xs, factory, "ideal")
        off_event = [s for s in set(real) | set(ideal) if s[0] != "at" and real.get(s, 0) != ideal.get(s, 0)]
        sd = statistical_distance(real, ideal)
        report = {"adversary": factory.name, "params": factory.params, "sd": str(sd), "bound": str(bound), "vacuous": bound >= 1}
        print("[6] exact", json.dumps(report, sort_keys=True))
        assert not off_event
        assert sd <= bound
        if factory.name == "honest":
            assert sd == 0

    mc_config = xor4(r=64, seed=7)
    rep = compare_real_ideal(mc_config, xs, StrategyFactory("threshold_guesser"), 20_000)
    print("[6] monte carlo", rep.to_json())
    check = next(c for c in rep.checks if c.name == "sd_vs_guessing_bound")
    assert check.bound == pytest.approx(1 / 32)
    assert check.passed and rep.passed


# -- 7 ---------------------------------------------------------------------


def test_07_range_variant(capsys):
    config = xor4(r=4, p=2, seed=8)
    per_set = Counter()
    per_round = Counter()
    cells = Counter()
    for seed in range(20_000):
        table = build_value_table(config, (0, 1, 1, 0), (), np.random.default_rng(seed), RANGE)
        pre = table.special_round - 1
        for i in range(pre):
            for col, J in enumerate(table.sets):
                hit = bool(table.uniform_branch[i, col])
                per_set[J, hit] += 1
                per_round[i + 1, hit] += 1
                cells[hit] += 1
    ok = True
    for counter, keys in ((per_set, {J for J, _ in per_set}), (per_round, {i for i, _ in per_round})):
        for key in keys:
            n = counter[key, True] + counter[key, False]
            f = counter[key, True] / n
            ok &= abs(f - 0.25) <= 3 * binomial_sigma(0.25, n)
    overall = cells[True] / (cells[True] + cells[False])

    factory = StrategyFactory("fixed_round_aborter", {"k": 2, "subset": "1,2"})
    bottoms = before = 0
    for trial in range(40_000):
        res = simulate_ideal_dealer(config, (0, 1, 1, 0), factory(), RANGE, trial=trial, record=False)
        if res.termination_class == "before":
            before += 1
            bottoms += res.bottom
    f_bottom = bottoms / before
    bottom_ok = abs(f_bottom - 0.25) <= 3 * binomial_sigma(0.25, before)

    capsys.readouterr()
    assert main(["bounds", "--m", "4", "--t", "2", "--d", "2", "--g", "2", "--p", "2", "--variant", "range"]) == 0
    rec = json.loads(capsys.readouterr().out)
    with capsys.disabled():
        print(f"\n[7] uniform branch {overall:.4f}; bottom {f_bottom:.4f} of {before}; r {rec['r']}, bound {rec['sd_bound']}")
    assert ok and bottom_ok
    assert rec["r"] == 16384 and Fraction(rec["sd_bound"]) == Fraction(1, 2)


# -- 8 ---------------------------------------------------------------------

HYBRID_TRIALS = 100_000
HYBRID_ADVERSARIES = {
    "honest": {},
    "fixed_round_aborter": {"k": "2", "subset": "1,2"},
    "scheduled_aborter": {"schedule": "1:1; 3:2"},
    "threshold_guesser": {},
    "setup_aborter": {"victims": "1"},
    "garbage_reconstructor": {"k": "2", "subset": "1", "garblers": "2"},
    "random_aborter": {"prob": "0.3"},
}
_HYBRID_CACHE: dict = {}


def _hybrid_batches(name):
    if name not in _HYBRID_CACHE:
        config = xor4(r=4, seed=9)
        xs = (1, 0, 1, 1)
        factory = StrategyFactory(name, HYBRID_ADVERSARIES[name])
        dealer = run_batch(run_dealer_protocol, config, xs, factory, HYBRID_TRIALS, keep_calls=True)
        mpc = run_batch(run_mpc, config, xs, factory, HYBRID_TRIALS, keep_calls=True)
        _HYBRID_CACHE[name] = (dealer, mpc)
    return _HYBRID_CACHE[name]


def test_08_adversary_list_is_complete():
    assert set(HYBRID_ADVERSARIES) == set(STRATEGY_NAMES)


@pytest.mark.slow
@pytest.mark.parametrize("name", list(HYBRID_ADVERSARIES))
def test_08_hybrid_equivalence(name):
    dealer, mpc = _hybrid_batches(name)
    tv = float(statistical_distance(dealer.summaries, mpc.summaries))
    print(f"[8] {name}: TV {tv:.4f} (noise scale {sd_noise(dealer.summaries, mpc.summaries):.4f})")
    assert tv <= 0.02


# -- 9 ---------------------------------------------------------------------


def test_09_round_formulas():
    rng = np.random.default_rng(10)
    checked = 0
    while checked < 20:
        m = int(rng.integers(2, 9))
        ts = [t for t in range(1, m) if 2 * t >= m and 3 * t < 2 * m]
        if not ts:
            continue
        t = int(rng.choice(ts))
        p, d, g = int(rng.integers(1, 6)), int(rng.integers(2, 5)), int(rng.integers(2, 9))
        for variant in ("domain", "range"):
            args = ["bounds", "--m", str(m), "--t", str(t), "--d", str(d), "--g", str(g), "--p", str(p), "--variant", variant]
            buf = StringIO()
            with contextlib.redirect_stdout(buf):
                assert main(args) == 0
            rec = json.loads(buf.getvalue())
            assert rec["rounds_domain"] == p * d ** (m * 2**t)
            assert rec["rounds_range"] == (2 * p) ** (2**t + 1) * g ** (2**t)
            assert rec["r"] == (rec["rounds_range"] if variant == "range" else rec["rounds_domain"])
        checked += 1
    print(f"[9] {checked} parameter tuples reproduced exactly")


# -- 10 --------------------------------------------------------------------


def _sweep_params(corrupt):
    c = ",".join(map(str, corrupt))
    first, last = corrupt[0], corrupt[-1]
    return {
        "fixed_round_aborter": [{"k": k, "subset": c} for k in (1, 2, 4)] + [{"k": 3, "subset": str(first)}],
        "scheduled_aborter": [{"schedule": f"1:{first}; 2:{last}"}, {"schedule": f"2:{first}; 3:" + ",".join(map(str, corrupt[1:]))}],
        "threshold_guesser": [{}, {"predicate": "always"}],
        "setup_aborter": [{"victims": str(first)}, {"victims": c}, {"victims": c, "after_packages": "false"}],
        "garbage_reconstructor": [
            {"k": 2, "subset": str(first), "garblers": str(last)},
            {"k": 1, "subset": str(first), "garblers": str(last)},
            {"k": 3, "subset": ",".join(map(str, corrupt[:-1])), "garblers": str(last)},
        ],
        "random_aborter": [{"prob": "0.3"}],
    }


def _sweep_calls():
    """Trusted fallback calls from an adversarial sweep over both engines."""
    calls = []
    configs = [
        (xor4(r=4, seed=11), (1, 0, 1, 1)),
        (ProtocolConfig(XOR5, 3, 1, 4, frozenset({1, 2, 3}), 12), (1, 0, 1, 1, 0)),
    ]
    for config, xs in configs:
        for name, options in _sweep_params(sorted(config.corrupt)).items():
            for opts in options:
                factory = StrategyFactory(name, opts)
                for runner in (run_dealer_protocol, run_mpc):
                    calls.extend(run_batch(runner, config, xs, factory, 300, keep_calls=True).hybrid_calls)
    for dealer, mpc in _HYBRID_CACHE.values():
        calls.extend(dealer.hybrid_calls)
        calls.extend(mpc.hybrid_calls)
    return [c for c in calls if c.kind != SHAREGEN]


def test_10_honest_majority_invariant():
    calls = _sweep_calls()
    violations = [c for c in calls if not c.honest_majority]
    kinds = Counter(c.kind for c in calls)
    print(f"[10] fallback calls checked: {dict(sorted(kinds.items()))}; violations {len(violations)}")
    assert kinds["fair_mpc"] and kinds["reconstruction"] and kinds["dealer_premature"]
    assert not violations
