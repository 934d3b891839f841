"""Rushing adversary interface and the built-in strategies.

A strategy controls the fixed corrupt set ``B`` of an execution. The engines
call its hooks in protocol order and validate every answer; acting for a
party outside ``B`` (or for one that already aborted) is a
:class:`~partialfair.errors.HarnessError`.

Hooks and their meaning:

* ``provide_inputs()`` – inputs (or :data:`ABORT`) submitted for ``B``.
* ``on_packages(packages)`` – dealer-free setup only: ``None`` to continue or
  the index of a corrupt party to abort as.
* ``on_peek(i, peeked)`` – parties aborting in round ``i`` after seeing the
  values of fully-corrupt sets.
* ``on_broadcast(i, view)`` – dealer-free rounds: message (or ``None`` for
  silence) per active corrupt party. The default derives the peeked values
  from the view and defers to ``on_peek``.
* ``late_aborts(i)`` / ``reprovide_inputs(active)`` – behaviour during
  premature termination.
* ``on_reconstruction_input(i, view)`` / ``on_final_broadcast(view)`` – the
  signed inner shares handed to reconstruction (dealer-free only).

Strategies own per-execution state, so build a fresh one per execution
(every registry entry is a factory).
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .functionality import ProtocolConfig


class _Abort:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ABORT"

    def __reduce__(self):
        return (_Abort, ())


ABORT = _Abort()


@dataclass
class AdversaryContext:
    """Execution context of a bound strategy. ``rng`` may be given as a
    zero-argument callable, in which case the generator is created on first
    use."""

    config: ProtocolConfig
    corrupt_inputs: dict[int, int]
    aux: dict[int, int]
    rng_source: object
    engine: str
    variant: str = "domain"

    @property
    def rng(self) -> np.random.Generator:
        if callable(self.rng_source):
            self.rng_source = self.rng_source()
        return self.rng_source

    @property
    def corrupt(self) -> frozenset:
        return self.config.corrupt

    def true_inputs(self) -> tuple[int, ...]:
        """Best knowledge of all inputs: own inputs plus the auxiliary ones."""
        merged = {**self.aux, **self.corrupt_inputs}
        return tuple(merged[j] for j in range(1, self.config.m + 1))


class AdversaryStrategy:
    """Follows the protocol: true inputs, no aborts, verbatim messages."""

    name = "honest"

    def __init__(self, inputs: Mapping[int, int] | None = None):
        self._input_override = dict(inputs or {})
        self.ctx: AdversaryContext | None = None

    def bind(self, ctx: AdversaryContext) -> None:
        self.ctx = ctx
        self.reset()

    def reset(self) -> None:
        """Clear per-execution state."""

    @property
    def config(self) -> ProtocolConfig:
        return self.ctx.config

    # -- setup --

    def submitted_input(self, j: int):
        return self._input_override.get(j, self.ctx.corrupt_inputs[j])

    def provide_inputs(self) -> dict:
        return {j: self.submitted_input(j) for j in sorted(self.ctx.corrupt)}

    def on_packages(self, packages) -> int | None:
        return None

    # -- interaction rounds --

    def on_peek(self, i: int, peeked: Mapping[tuple, int]) -> Iterable[int]:
        return ()

    def on_broadcast(self, i: int, view) -> dict:
        aborts = set(self.on_peek(i, view.peek(i)))
        return {j: (None if j in aborts else view.own_message(j, i)) for j in view.active_corrupt}

    # -- premature termination --

    def late_aborts(self, i: int) -> Iterable[int]:
        return ()

    def reprovide_inputs(self, active: Iterable[int]) -> dict:
        return {j: self.submitted_input(j) for j in active}

    def on_reconstruction_input(self, i: int, view) -> dict:
        late = set(self.late_aborts(i))
        return {
            j: (None if j in late else view.inner_shares(j, i - 1))
            for j in view.active_corrupt
        }

    def on_final_broadcast(self, view) -> dict:
        r = self.config.r
        return {j: view.inner_shares(j, r) for j in view.active_corrupt}

    def __repr__(self):
        return f"{type(self).__name__}()"


HonestStrategy = AdversaryStrategy


def honest_strategy() -> AdversaryStrategy:
    return AdversaryStrategy()


class ScheduledAborter(AdversaryStrategy):
    """Aborts ``schedule[k]`` in round ``k`` (after peeking)."""

    name = "scheduled_aborter"

    def __init__(self, schedule: Mapping[int, Iterable[int]], inputs=None):
        super().__init__(inputs)
        self.schedule = {int(k): tuple(sorted(set(v))) for k, v in schedule.items()}
        if any(k < 1 for k in self.schedule):
            raise ParameterError("abort rounds start at 1")

    def bind(self, ctx):
        stray = {j for v in self.schedule.values() for j in v} - set(ctx.corrupt)
        if stray:
            raise ParameterError(f"schedule names honest parties {sorted(stray)}")
        super().bind(ctx)

    def on_peek(self, i, peeked):
        return self.schedule.get(i, ())

    def __repr__(self):
        return f"ScheduledAborter({self.schedule})"


def fixed_round_aborter(k: int, subset: Iterable[int]) -> ScheduledAborter:
    s = ScheduledAborter({k: subset})
    s.name = "fixed_round_aborter"
    return s


def scheduled_aborter(schedule: Mapping[int, Iterable[int]]) -> ScheduledAborter:
    return ScheduledAborter(schedule)


Predicate = Callable[[int, Mapping[tuple, int], AdversaryContext], bool]


def consistent_predicate(i: int, peeked: Mapping[tuple, int], ctx: AdversaryContext) -> bool:
    """Fire when every peeked value equals one output that is possible on the
    true inputs (which the adversary knows through ``aux``)."""
    values = set(peeked.values())
    if len(values) != 1:
        return False
    spec = ctx.config.functionality
    return next(iter(values)) in spec.support(ctx.true_inputs())


PREDICATES: dict[str, Predicate] = {
    "consistent": consistent_predicate,
    "always": lambda i, peeked, ctx: True,
    "never": lambda i, peeked, ctx: False,
}


class ThresholdGuesser(AdversaryStrategy):
    """Tries to hit the special round: aborts ``m - t`` corrupt parties the
    first time the predicate fires, and never again."""

    name = "threshold_guesser"

    def __init__(self, predicate: str | Predicate = "consistent", abort_count: int | None = None):
        super().__init__()
        if isinstance(predicate, str):
            try:
                predicate = PREDICATES[predicate]
            except KeyError:
                raise ParameterError(f"unknown predicate {predicate!r}") from None
        self.predicate = predicate
        self.abort_count = abort_count
        self.fired_round: int | None = None

    def reset(self):
        self.fired_round = None

    def on_peek(self, i, peeked):
        if self.fired_round is not None:
            return ()
        if not self.predicate(i, peeked, self.ctx):
            return ()
        self.fired_round = i
        count = self.abort_count if self.abort_count is not None else self.config.threshold
        return tuple(sorted(self.ctx.corrupt))[:count]


def threshold_guesser(config=None, predicate: str | Predicate = "consistent", abort_count=None):
    return ThresholdGuesser(predicate, abort_count)


class SetupAborter(AdversaryStrategy):
    """Makes ``victims`` drop out during setup.

    Dealer-free engine: the packages are received and then one victim per
    share-generation attempt is named in ``abort_j``. Dealer engine (or
    ``after_packages=False``): the victims abort at input submission.
    """

    name = "setup_aborter"

    def __init__(self, victims: Iterable[int], after_packages: bool = True):
        super().__init__()
        self.victims = tuple(sorted(set(victims)))
        self.after_packages = after_packages

    def reset(self):
        self._pending = list(self.victims)

    def provide_inputs(self):
        inputs = super().provide_inputs()
        if self.ctx.engine != "dealerless" or not self.after_packages:
            for j in self.victims:
                inputs[j] = ABORT
        return inputs

    def on_packages(self, packages):
        if self.after_packages and self._pending:
            return self._pending.pop(0)
        return None


class GarbageReconstructor(ScheduledAborter):
    """Aborts ``subset`` in round ``k``; ``garblers`` then spoil the premature
    termination step (garbage to Reconstruction, abort in the dealer model)."""

    name = "garbage_reconstructor"

    def __init__(self, k: int, subset: Iterable[int], garblers: Iterable[int]):
        super().__init__({k: subset})
        self.garblers = tuple(sorted(set(garblers)))

    def late_aborts(self, i):
        return self.garblers

    def reprovide_inputs(self, active):
        return {j: (ABORT if j in self.garblers else self.submitted_input(j)) for j in active}

    def on_reconstruction_input(self, i, view):
        out = {}
        for j in view.active_corrupt:
            shares = view.inner_shares(j, i - 1)
            if j in self.garblers:
                # flip one byte of every share: the signatures no longer verify
                shares = {J: bytes([blob[0] ^ 0xFF]) + blob[1:] for J, blob in shares.items()}
            out[j] = shares
        return out


class RandomAborter(AdversaryStrategy):
    """Each round, with probability ``prob``, aborts ``m - t`` active corrupt
    parties (drawn from the adversary's own stream)."""

    name = "random_aborter"

    def __init__(self, prob: float = 0.1):
        super().__init__()
        if not 0 <= prob <= 1:
            raise ParameterError("prob must lie in [0, 1]")
        self.prob = prob

    def reset(self):
        self._done = False

    def on_peek(self, i, peeked):
        if self._done or self.ctx.rng.random() >= self.prob:
            return ()
        self._done = True
        return tuple(sorted(self.ctx.corrupt))[: self.config.threshold]


def _parse_indices(value) -> tuple[int, ...]:
    if isinstance(value, str):
        return tuple(int(v) for v in value.replace(",", " ").split())
    if isinstance(value, int):
        return (value,)
    return tuple(int(v) for v in value)


def _parse_schedule(value) -> dict[int, tuple[int, ...]]:
    if isinstance(value, Mapping):
        return {int(k): _parse_indices(v) for k, v in value.items()}
    # "4:1; 100:3,4"
    out = {}
    for part in str(value).split(";"):
        if part.strip():
            k, _, who = part.partition(":")
            out[int(k)] = _parse_indices(who)
    return out


def make_strategy(name: str, **params) -> AdversaryStrategy:
    """Build a built-in strategy from (possibly string-valued) parameters."""
    try:
        if name == "honest":
            return AdversaryStrategy()
        if name == "fixed_round_aborter":
            return fixed_round_aborter(int(params["k"]), _parse_indices(params["subset"]))
        if name == "scheduled_aborter":
            return scheduled_aborter(_parse_schedule(params["schedule"]))
        if name == "threshold_guesser":
            count = params.get("abort_count")
            return threshold_guesser(
                predicate=params.get("predicate", "consistent"),
                abort_count=None if count is None else int(count),
            )
        if name == "setup_aborter":
            after = params.get("after_packages", True)
            if isinstance(after, str):
                after = after.lower() in ("1", "true", "yes")
            return SetupAborter(_parse_indices(params["victims"]), bool(after))
        if name == "garbage_reconstructor":
            return GarbageReconstructor(
                int(params["k"]), _parse_indices(params["subset"]), _parse_indices(params["garblers"])
            )
        if name == "random_aborter":
            return RandomAborter(float(params.get("prob", 0.1)))
    except KeyError as exc:
        raise ParameterError(f"strategy {name!r} needs parameter {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ParameterError(f"bad parameter for strategy {name!r}: {exc}") from None
    raise ParameterError(f"unknown strategy {name!r}")


STRATEGY_NAMES = (
    "honest",
    "fixed_round_aborter",
    "scheduled_aborter",
    "threshold_guesser",
    "setup_aborter",
    "garbage_reconstructor",
    "random_aborter",
)


@dataclass
class StrategyFactory:
    """Picklable zero-argument factory for a built-in strategy."""

    name: str
    params: dict = field(default_factory=dict)

    def __call__(self) -> AdversaryStrategy:
        return make_strategy(self.name, **self.params)


def bind_strategy(strategy, config: ProtocolConfig, inputs, rng, engine: str, variant: str):
    """Attach a fresh execution context to ``strategy`` (``None`` means honest).

    The auxiliary input is the honest parties' true inputs, i.e. the
    worst case in which the adversary knows everything but the randomness.
    """
    if strategy is None:
        strategy = AdversaryStrategy()
    corrupt = {j: inputs[j - 1] for j in sorted(config.corrupt)}
    aux = {j: inputs[j - 1] for j in config.honest}
    strategy.bind(AdversaryContext(config, corrupt, aux, rng, engine, variant))
    return strategy
