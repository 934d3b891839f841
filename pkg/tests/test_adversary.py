import pickle

import numpy as np
import pytest

from partialfair.adversary import (
    ABORT,
    STRATEGY_NAMES,
    AdversaryStrategy,
    StrategyFactory,
    ThresholdGuesser,
    bind_strategy,
    consistent_predicate,
    make_strategy,
)
from partialfair.dealer import run_dealer_protocol
from partialfair.dealerless import run_mpc
from partialfair.errors import ParameterError

PARAMS = {
    "honest": {},
    "fixed_round_aborter": {"k": "2", "subset": "1,2"},
    "scheduled_aborter": {"schedule": "1:1; 3:2"},
    "threshold_guesser": {"predicate": "consistent"},
    "setup_aborter": {"victims": "1"},
    "garbage_reconstructor": {"k": "2", "subset": "1", "garblers": "2"},
    "random_aborter": {"prob": "0.4"},
}


def test_registry_covers_every_name():
    assert set(PARAMS) == set(STRATEGY_NAMES)
    for name, params in PARAMS.items():
        assert isinstance(make_strategy(name, **params), AdversaryStrategy)


def test_registry_errors():
    with pytest.raises(ParameterError):
        make_strategy("nope")
    with pytest.raises(ParameterError):
        make_strategy("fixed_round_aborter", k=1)
    with pytest.raises(ParameterError):
        make_strategy("random_aborter", prob="2")
    with pytest.raises(ParameterError):
        make_strategy("threshold_guesser", predicate="psychic")


@pytest.mark.parametrize("name", STRATEGY_NAMES)
@pytest.mark.parametrize("runner", [run_dealer_protocol, run_mpc], ids=["dealer", "dealerless"])
def test_replay_determinism(xor4_config, name, runner):
    factory = StrategyFactory(name, PARAMS[name])
    for trial in range(5):
        a = runner(xor4_config, (1, 1, 0, 1), factory(), trial=trial)
        b = runner(xor4_config, (1, 1, 0, 1), factory(), trial=trial)
        assert a.transcript.dumps() == b.transcript.dumps()


def test_factory_pickles():
    f = StrategyFactory("fixed_round_aborter", PARAMS["fixed_round_aborter"])
    assert pickle.loads(pickle.dumps(f)) == f
    assert pickle.loads(pickle.dumps(ABORT)) is ABORT


def test_schedule_scope_checked(xor4_config):
    strat = make_strategy("scheduled_aborter", schedule="1:3")
    with pytest.raises(ParameterError):
        bind_strategy(strat, xor4_config, (0, 0, 0, 0), None, "dealer", "domain")


def test_context_knows_honest_inputs(xor4_config):
    strat = bind_strategy(None, xor4_config, (1, 0, 1, 1), None, "dealer", "domain")
    assert strat.ctx.aux == {3: 1, 4: 1}
    assert strat.ctx.true_inputs() == (1, 0, 1, 1)
    assert strat.provide_inputs() == {1: 1, 2: 0}


def test_lazy_rng(xor4_config):
    calls = []

    def source():
        calls.append(1)
        return np.random.default_rng(0)

    strat = bind_strategy(None, xor4_config, (0, 0, 0, 0), source, "dealer", "domain")
    assert not calls
    strat.ctx.rng.random()
    strat.ctx.rng.random()
    assert calls == [1]


def test_consistent_predicate(xor4_config):
    strat = bind_strategy(None, xor4_config, (1, 0, 0, 0), None, "dealer", "domain")
    ctx = strat.ctx
    assert consistent_predicate(1, {(1, 2): 1}, ctx)
    assert not consistent_predicate(1, {(1, 2): 0}, ctx)
    assert not consistent_predicate(1, {}, ctx)


def test_guesser_fires_once(xor4_config):
    g = bind_strategy(ThresholdGuesser("always"), xor4_config, (0, 0, 0, 0), None, "dealer", "domain")
    assert g.on_peek(1, {(1, 2): 0}) == (1, 2)
    assert g.on_peek(2, {(1, 2): 0}) == ()
    g.bind(g.ctx)
    assert g.fired_round is None


def test_guesser_hits_special_round_when_always_firing(xor4_config):
    # fires in round 1 and hits exactly when i* = 1
    hits = sum(
        run_dealer_protocol(xor4_config, (0, 0, 0, 0), ThresholdGuesser("always"), trial=k).hit_special_round
        for k in range(400)
    )
    assert abs(hits / 400 - 0.25) < 0.1


def test_setup_aborter_in_dealer_engine_aborts_inputs(xor4_config):
    strat = make_strategy("setup_aborter", victims="2")
    res = run_dealer_protocol(xor4_config, (0, 0, 0, 0), strat)
    assert res.initial_aborts == {2}
