import itertools
from collections import Counter

import numpy as np
import pytest

from partialfair.adversary import ABORT, AdversaryStrategy, fixed_round_aborter, make_strategy
from partialfair.analysis import subset_value_distribution
from partialfair.dealer import (
    RANGE,
    PartyStatus,
    build_value_table,
    dealer_preprocess,
    peek_values,
    premature_terminate,
    run_dealer_protocol,
)
from partialfair.errors import HarnessError, ParameterError
from partialfair.functionality import ProtocolConfig, evaluate, noisy_xor_functionality
from partialfair.transcript import NORMAL, PREMATURE, Transcript, is_rushing_ordered


def test_honest_runs_output_f(xor4_config):
    for trial, xs in enumerate(itertools.product((0, 1), repeat=4)):
        res = run_dealer_protocol(xor4_config, xs, trial=trial)
        assert res.termination == NORMAL
        assert res.honest_output == sum(xs) % 2
        assert is_rushing_ordered(res.transcript)


def test_same_seed_same_transcript(xor4_config):
    a = run_dealer_protocol(xor4_config, (1, 0, 1, 1), make_strategy("threshold_guesser"), trial=5)
    b = run_dealer_protocol(xor4_config, (1, 0, 1, 1), make_strategy("threshold_guesser"), trial=5)
    assert a.transcript.dumps() == b.transcript.dumps()
    assert Transcript.loads(a.transcript.dumps()).dumps() == a.transcript.dumps()


def test_case_two_values_equal_w(xor4_config):
    for seed in range(200):
        table = build_value_table(xor4_config, (1, 0, 0, 1), (), np.random.default_rng(seed))
        assert (table.values[table.special_round - 1:] == table.w).all()


def test_special_round_uniform(xor4_config):
    cfg = xor4_config.evolve(r=5)
    n = 5000
    counts = Counter(
        build_value_table(cfg, (0, 0, 0, 0), (), np.random.default_rng(s)).special_round for s in range(n)
    )
    assert set(counts) == set(range(1, 6))
    sigma = (0.2 * 0.8 / n) ** 0.5
    assert all(abs(c / n - 0.2) <= 4 * sigma for c in counts.values())


def test_case_one_distribution_matches_oracle():
    spec = noisy_xor_functionality(4)
    cfg = ProtocolConfig(spec, 2, 1, 64, frozenset({1, 2}), 0)
    xs = (1, 1, 0, 1)
    J = (1, 3)
    seen = Counter()
    for seed in range(300):
        table = build_value_table(cfg, xs, (), np.random.default_rng(seed))
        col = table.column(J)
        seen.update(table.values[: table.special_round - 1, col].tolist())
    n = sum(seen.values())
    want = subset_value_distribution(spec, xs, J)
    for z, pz in want.items():
        sigma = (float(pz) * (1 - float(pz)) / n) ** 0.5
        assert abs(seen[z] / n - float(pz)) <= 4 * sigma


def test_premature_after_special_round_returns_w(xor4_config):
    cfg = xor4_config.evolve(r=8)
    for seed in range(40):
        table = build_value_table(cfg, (1, 0, 1, 0), (), np.random.default_rng(seed))
        k = table.special_round + 1
        if k > cfg.r:
            continue
        status = PartyStatus(4)
        status.aborted.update({1, 2})
        assert premature_terminate(cfg, table, status, k) == table.w


def test_premature_before_special_round_reads_previous_round(xor4_config):
    cfg = xor4_config.evolve(r=8)
    for seed in range(40):
        table = build_value_table(cfg, (1, 0, 1, 0), (), np.random.default_rng(seed))
        if table.special_round < 3:
            continue
        status = PartyStatus(4)
        status.aborted.update({1, 2})
        assert premature_terminate(cfg, table, status, 2) == table.value(1, (3, 4))


def test_round_one_termination_recollects(xor4_config):
    res = run_dealer_protocol(xor4_config, (1, 1, 0, 0), fixed_round_aborter(1, (1, 2)), trial=3)
    assert res.termination == PREMATURE and res.termination_round == 1
    assert res.transcript.select("recollect")
    # honest parties' true inputs plus uniform substitutes: output is uniform,
    # but the recollected corrupt inputs never include the aborted ones
    assert res.aborted == {1, 2}


def test_input_aborts_are_substituted(xor4_config):
    strat = AdversaryStrategy(inputs={1: ABORT})
    outs = Counter(run_dealer_protocol(xor4_config, (0, 0, 0, 0), strat, trial=k).honest_output for k in range(400))
    assert set(outs) == {0, 1}
    res = run_dealer_protocol(xor4_config, (0, 0, 0, 0), AdversaryStrategy(inputs={1: ABORT}), trial=0)
    assert res.initial_aborts == {1}
    assert all((1,) != J[:1] for J in res.table.sets)


def test_too_many_input_aborts_terminate_at_once(xor4_config):
    strat = AdversaryStrategy(inputs={1: ABORT, 2: 7})
    res = run_dealer_protocol(xor4_config, (0, 0, 0, 0), strat)
    assert res.termination == PREMATURE and res.termination_round == 1 and res.special_round is None


def test_preprocess_threshold(xor4_config):
    rng = np.random.default_rng(0)
    pre = dealer_preprocess(xor4_config, [ABORT, ABORT, 0, 1], rng)
    assert type(pre).__name__ == "PrematureAtOne"
    table, status = dealer_preprocess(xor4_config, [ABORT, 1, 0, 1], rng)
    assert status.initial_aborts == {1}


def test_scope_errors(xor4_config):
    with pytest.raises(ParameterError):
        run_dealer_protocol(xor4_config, (0, 0, 0, 0), fixed_round_aborter(1, (3,)))

    class Rogue(AdversaryStrategy):
        def on_peek(self, i, peeked):
            return (4,)

    with pytest.raises(HarnessError):
        run_dealer_protocol(xor4_config, (0, 0, 0, 0), Rogue())

    class Twice(AdversaryStrategy):
        def on_peek(self, i, peeked):
            return (1,)

    with pytest.raises(HarnessError):
        run_dealer_protocol(xor4_config.evolve(r=3), (0, 0, 0, 0), Twice())


def test_peek_only_sees_corrupt_sets(xor4_config):
    table = build_value_table(xor4_config, (0, 1, 0, 1), (), np.random.default_rng(2))
    assert set(peek_values(table, 1, {1, 2})) == {(1, 2)}
    assert peek_values(table, 1, {1}) == {}


def test_range_variant_branch_frequency(xor4_config):
    cfg = xor4_config.evolve(r=40, p=2)
    chosen = total = 0
    for seed in range(300):
        table = build_value_table(cfg, (0, 1, 1, 0), (), np.random.default_rng(seed), RANGE)
        pre = table.special_round - 1
        chosen += int(table.uniform_branch[:pre].sum())
        total += pre * len(table.sets)
        assert not table.uniform_branch[pre:].any()
    q = chosen / total
    assert abs(q - 0.25) <= 4 * (0.25 * 0.75 / total) ** 0.5


def test_rejects_bad_inputs(xor4_config):
    with pytest.raises(ParameterError):
        run_dealer_protocol(xor4_config, (0, 0, 2, 0))
    with pytest.raises(ParameterError):
        run_dealer_protocol(xor4_config, (0, 0, 0, 0), variant="other")


def test_matched_streams_are_independent(xor4_config):
    # drawing adversary randomness must not shift the dealer's table
    a = run_dealer_protocol(xor4_config, (1, 0, 0, 0), make_strategy("random_aborter", prob=0.5), trial=9)
    b = run_dealer_protocol(xor4_config, (1, 0, 0, 0), None, trial=9)
    assert a.special_round == b.special_round
    assert evaluate(xor4_config.functionality, (1, 0, 0, 0)) == b.honest_output
