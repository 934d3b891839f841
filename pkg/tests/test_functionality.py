import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partialfair.errors import CapacityError, DomainError, ParameterError
from partialfair.functionality import (
    BUILTINS,
    FunctionalitySpec,
    ProtocolConfig,
    dumps,
    evaluate,
    loads,
    majority_functionality,
    noisy_xor_functionality,
    qualifying_sets,
    rounds_for_domain,
    rounds_for_range,
    xor_functionality,
)


def test_xor_table_matches_brute_force(xor4):
    for xs in itertools.product((0, 1), repeat=4):
        assert evaluate(xor4, xs) == sum(xs) % 2


def test_majority_ties_go_to_zero():
    maj = majority_functionality(4)
    assert evaluate(maj, (1, 1, 0, 0)) == 0
    assert evaluate(maj, (1, 1, 1, 0)) == 1


def test_randomized_evaluation_uses_coins():
    f = noisy_xor_functionality(4)
    assert f.coin_bits == 2
    outs = [evaluate(f, (1, 0, 0, 0), format(c, "02b")) for c in range(4)]
    assert sorted(outs) == [0, 1, 1, 1]
    assert f.distribution((1, 0, 0, 0)) == {1: Fraction(3, 4), 0: Fraction(1, 4)}
    with pytest.raises(ParameterError):
        evaluate(f, (1, 0, 0, 0))


def test_vectorised_evaluation_agrees(xor4):
    f = noisy_xor_functionality(4)
    rng = np.random.default_rng(0)
    xs = rng.integers(0, 2, size=(200, 4))
    coins = rng.integers(0, 4, size=200)
    got = f.evaluate_indices(f.index_array(xs), coins)
    want = [f.evaluate_index(f.index(x), int(c)) for x, c in zip(xs.tolist(), coins)]
    assert got.tolist() == want
    assert xor4.evaluate_indices(xor4.index_array(xs)).tolist() == (xs.sum(axis=1) % 2).tolist()


def test_domain_errors(xor4):
    with pytest.raises(DomainError):
        evaluate(xor4, (0, 1, 2, 0))
    with pytest.raises(DomainError):
        evaluate(xor4, (0, 1, 0))


def test_capacity_cap():
    with pytest.raises(CapacityError):
        FunctionalitySpec.from_function(11, 2, 1, lambda *xs: 0)


def test_text_round_trip():
    for make in BUILTINS.values():
        spec = make(4) if make is not BUILTINS["coin"] else make(2)
        again = loads(dumps(spec))
        assert again.table == spec.table and again.kind == spec.kind


def test_text_rejects_short_table():
    with pytest.raises(ParameterError):
        loads("2 1 1 deterministic\n0\n1\n1\n")
    with pytest.raises(ParameterError):
        loads("2 1 1 randomized\n0:1/2\n0:1\n1:1\n0:1\n")


def test_qualifying_sets_xor4():
    assert qualifying_sets(4, 2) == ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))
    assert qualifying_sets(4, 2, frozenset({1})) == ((2, 3), (2, 4), (3, 4))


@given(m=st.integers(2, 9), data=st.data())
def test_qualifying_sets_sizes(m, data):
    ts = [t for t in range(1, m) if 2 * t >= m and 3 * t < 2 * m]
    if not ts:
        return
    t = data.draw(st.sampled_from(ts))
    sets = qualifying_sets(m, t)
    want = sum(math.comb(m, k) for k in range(m - t, t + 1))
    assert len(sets) == want
    assert all(m - t <= len(J) <= t for J in sets)
    assert list(sets) == sorted(sets)


def test_config_invariants(xor4):
    with pytest.raises(ParameterError):
        ProtocolConfig(xor4, t=3, p=1, r=4, corrupt=frozenset())
    with pytest.raises(ParameterError):
        ProtocolConfig(xor4, t=2, p=1, r=4, corrupt=frozenset({1, 2, 3}))
    with pytest.raises(ParameterError):
        ProtocolConfig(xor4, t=2, p=Fraction(1, 2), r=4, corrupt=frozenset())
    cfg = ProtocolConfig(xor4, t=2, p=1, r=4, corrupt=frozenset({1}))
    assert cfg.honest == (2, 3, 4) and cfg.threshold == 2


def test_round_formulas_examples():
    assert rounds_for_domain(1, 2, 2, 4, 2) == 65536
    assert rounds_for_range(2, 2, 2) == 16384
    assert rounds_for_domain(1, 2, 2, 4, 2, deterministic=False) == 64**4


@settings(max_examples=50)
@given(p=st.integers(1, 5), d=st.integers(2, 4), g=st.integers(2, 8), m=st.integers(2, 8), data=st.data())
def test_round_formulas_big_integers(p, d, g, m, data):
    ts = [t for t in range(1, m) if 2 * t >= m and 3 * t < 2 * m]
    if not ts:
        return
    t = data.draw(st.sampled_from(ts))
    assert rounds_for_domain(p, d, g, m, t) == p * d ** (m * 2**t)
    assert rounds_for_range(p, g, t) == (2 * p) ** (2**t + 1) * g ** (2**t)


def test_xor_builtin_name():
    assert xor_functionality(5).name == "xor5"
