"""Protocol with a trusted on-line dealer, in its domain and range variants.

The dealer fixes a secret special round ``i*``. In every round ``i`` and for
every qualifying set ``J`` it holds a value ``sigma[i, J]``: before ``i*`` the
functionality evaluated on the inputs of ``J`` and fresh uniform inputs for
everyone else, from ``i*`` on the real output ``w``. Each round the coalition
sees the values of its fully corrupt sets and may abort parties; once
``m - t`` parties are gone the survivors receive ``sigma[i-1, survivors]``.
"""

from __future__ import annotations

import functools
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .adversary import ABORT, bind_strategy
from .errors import HarnessError, ParameterError
from .functionality import FunctionalitySpec, ProtocolConfig
from .seeding import Streams, trial_streams
from .transcript import (
    NORMAL,
    PREMATURE,
    ExecutionResult,
    HybridCall,
    Transcript,
    actor,
    encode_set,
    encode_value,
)

DOMAIN = "domain"
RANGE = "range"
VARIANTS = (DOMAIN, RANGE)


def check_variant(variant: str) -> str:
    if variant not in VARIANTS:
        raise ParameterError(f"variant must be one of {VARIANTS}, got {variant!r}")
    return variant


def uniform_branch_probability(p) -> Fraction:
    """Probability ``1/(2p)`` of the uniform draw in the range variant."""
    return 1 / (2 * Fraction(p))


def _branch_fraction(p) -> tuple[int, int]:
    q = uniform_branch_probability(p)
    if q.denominator >= 2**62:
        raise ParameterError("p has too large a denominator")
    return q.numerator, q.denominator


@functools.lru_cache(maxsize=256)
def _membership(m: int, sets: tuple) -> np.ndarray:
    member = np.zeros((len(sets), m), dtype=bool)
    for k, J in enumerate(sets):
        member[k, [j - 1 for j in J]] = True
    member.setflags(write=False)
    return member


def is_valid_input(x, spec: FunctionalitySpec) -> bool:
    return (
        not isinstance(x, bool)
        and isinstance(x, (int, np.integer))
        and 0 <= x < spec.domain_size
    )


@dataclass(eq=False)
class RoundValueTable:
    """All values the dealer may hand out. Row ``i - 1`` of ``values`` holds
    round ``i``; columns follow ``sets``."""

    special_round: int
    sets: tuple
    values: np.ndarray
    final_output: int
    effective_inputs: tuple
    uniform_branch: np.ndarray = None

    def __post_init__(self):
        self._col = {J: k for k, J in enumerate(self.sets)}
        if self.uniform_branch is None:
            self.uniform_branch = np.zeros(self.values.shape, dtype=bool)

    @property
    def r(self) -> int:
        return self.values.shape[0]

    @property
    def w(self) -> int:
        return self.final_output

    def column(self, J: Iterable[int]) -> int:
        key = tuple(sorted(J))
        try:
            return self._col[key]
        except KeyError:
            raise ParameterError(f"{key} is not a qualifying set") from None

    def value(self, i: int, J: Iterable[int]) -> int:
        if not 1 <= i <= self.r:
            raise ParameterError(f"round {i} outside [1, {self.r}]")
        return int(self.values[i - 1, self.column(J)])

    def round_values(self, i: int) -> dict[tuple, int]:
        return dict(zip(self.sets, self.values[i - 1].tolist()))


def build_value_table(
    config: ProtocolConfig,
    effective_inputs: Sequence[int],
    initial_aborts: Iterable[int],
    rng: np.random.Generator,
    variant: str = DOMAIN,
) -> RoundValueTable:
    """Draw ``i*``, ``w`` and every round value from ``rng``.

    Draw order: ``i*``, the coins of ``w``, the substitute inputs for all
    pre-``i*`` (round, set) pairs, their coins, then (range variant) the
    branch selectors and uniform values. Both engines call this with the
    same stream, so matched seeds give identical tables.
    """
    check_variant(variant)
    spec = config.functionality
    m, r = config.m, config.r
    sets = config.sets(initial_aborts)
    x = tuple(int(v) for v in effective_inputs)
    i_star = int(rng.integers(1, r + 1))
    coin = spec.draw_coins(rng)
    w = spec.evaluate_index(spec.index(x), 0 if coin is None else int(coin))

    n_sets = len(sets)
    values = np.full((r, n_sets), w, dtype=np.int64)
    branch = np.zeros((r, n_sets), dtype=bool)
    pre = i_star - 1
    if pre and n_sets:
        member = _membership(m, sets)
        subs = rng.integers(0, spec.domain_size, size=(pre, n_sets, m))
        ys = np.where(member, np.asarray(x, dtype=np.int64), subs)
        vals = spec.evaluate_indices(spec.index_array(ys), spec.draw_coins(rng, (pre, n_sets)))
        if variant == RANGE:
            num, den = _branch_fraction(config.p)
            chosen = rng.integers(0, den, size=(pre, n_sets)) < num
            uniform = rng.integers(0, spec.range_size, size=(pre, n_sets))
            vals = np.where(chosen, uniform, vals)
            branch[:pre] = chosen
        values[:pre] = vals
    return RoundValueTable(i_star, sets, values, int(w), x, branch)


def case_one_value(spec: FunctionalitySpec, inputs: Sequence[int], J: Iterable[int], rng) -> int:
    """``f`` on the inputs of ``J`` and fresh uniform inputs elsewhere."""
    members = set(J)
    ys = [
        int(inputs[j - 1]) if j in members else int(rng.integers(0, spec.domain_size))
        for j in range(1, spec.party_count + 1)
    ]
    return spec.sample(ys, rng)


def range_variant_value(config: ProtocolConfig, inputs: Sequence[int], J: Iterable[int], rng) -> int:
    """Pre-``i*`` value of the range variant: uniform over the range with
    probability ``1/(2p)``, otherwise :func:`case_one_value`."""
    spec = config.functionality
    num, den = _branch_fraction(config.p)
    if int(rng.integers(0, den)) < num:
        return int(rng.integers(0, spec.range_size))
    return case_one_value(spec, inputs, J, rng)


@dataclass
class PartyStatus:
    m: int
    initial_aborts: frozenset = frozenset()
    aborted: set = field(default_factory=set)

    def __post_init__(self):
        self.initial_aborts = frozenset(self.initial_aborts)
        self.aborted = set(self.aborted) | self.initial_aborts

    @property
    def active(self) -> tuple[int, ...]:
        return tuple(j for j in range(1, self.m + 1) if j not in self.aborted)

    def active_count(self, group: Iterable[int]) -> int:
        return sum(1 for j in group if j not in self.aborted)


@dataclass
class PrematureAtOne:
    """Signal from preprocessing: too many parties dropped out at input time."""

    status: PartyStatus


def substitute_inputs(
    spec: FunctionalitySpec, submitted: Sequence, rng: np.random.Generator
) -> tuple[tuple[int, ...], frozenset]:
    """Replace aborted or malformed inputs by uniform ones, ascending index."""
    out, dropped = [], set()
    for j, x in enumerate(submitted, start=1):
        if x is ABORT or not is_valid_input(x, spec):
            dropped.add(j)
            out.append(int(rng.integers(0, spec.domain_size)))
        else:
            out.append(int(x))
    return tuple(out), frozenset(dropped)


def dealer_preprocess(
    config: ProtocolConfig,
    submitted: Sequence,
    rng: np.random.Generator,
    variant: str = DOMAIN,
    substitution_rng: np.random.Generator | None = None,
):
    """Returns ``(table, status)`` or :class:`PrematureAtOne`.

    ``submitted`` lists one input or :data:`ABORT` per party; malformed
    values count as aborts.
    """
    if len(submitted) != config.m:
        raise ParameterError(f"expected {config.m} submissions")
    sub_rng = rng if substitution_rng is None else substitution_rng
    effective, dropped = substitute_inputs(config.functionality, submitted, sub_rng)
    status = PartyStatus(config.m, dropped)
    if len(dropped) >= config.threshold:
        return PrematureAtOne(status)
    return build_value_table(config, effective, dropped, rng, variant), status


def peek_values(table: RoundValueTable, i: int, corrupt: Iterable[int], status=None) -> dict[tuple, int]:
    """Values of round ``i`` for the qualifying sets inside the coalition."""
    coalition = set(corrupt)
    if status is not None:
        coalition -= status.initial_aborts
    row = table.values[i - 1]
    return {J: int(row[k]) for k, J in enumerate(table.sets) if coalition.issuperset(J)}


def _checked_aborts(status: PartyStatus, aborts, corrupt) -> list[int]:
    try:
        who = sorted(set(int(j) for j in aborts))
    except (TypeError, ValueError):
        raise HarnessError(f"abort list must hold party indices, got {aborts!r}") from None
    for j in who:
        if j not in corrupt:
            raise HarnessError(f"adversary tried to abort honest or unknown party {j}")
        if j in status.aborted:
            raise HarnessError(f"party {j} already aborted")
    return who


def process_abort_phase(
    status: PartyStatus,
    aborts: Iterable[int],
    corrupt: Iterable[int],
    threshold: int,
    round_index: int = 0,
    transcript: Transcript | None = None,
    phase: str = "abort",
) -> bool:
    """Apply ``aborts`` in ascending order; True means premature termination."""
    corrupt = frozenset(corrupt)
    for j in _checked_aborts(status, aborts, corrupt):
        status.aborted.add(j)
        if transcript is not None:
            transcript.add(round_index, phase, actor(j))
    return len(status.aborted) >= threshold


def recollected_inputs(
    spec: FunctionalitySpec,
    status: PartyStatus,
    true_inputs: Sequence[int],
    corrupt: frozenset,
    corrupt_answers: Mapping,
) -> list:
    """Inputs for the round-one fallback: honest parties resend their own,
    active corrupt parties answer (or abort), aborted parties contribute
    nothing. Parties dropping out here join ``D``."""
    if not set(corrupt_answers) <= set(status.active) & corrupt:
        raise HarnessError("re-collection answered for parties outside the active coalition")
    xs = []
    for j in range(1, status.m + 1):
        if j in status.aborted:
            xs.append(ABORT)
        elif j in corrupt:
            x = corrupt_answers.get(j, ABORT)
            if x is ABORT or not is_valid_input(x, spec):
                status.aborted.add(j)
                x = ABORT
            xs.append(x)
        else:
            xs.append(int(true_inputs[j - 1]))
    return xs


def premature_terminate(
    config: ProtocolConfig,
    table: RoundValueTable | None,
    status: PartyStatus,
    i: int,
    late_aborts: Iterable[int] = (),
    recollected: Sequence | None = None,
    rng: np.random.Generator | None = None,
    transcript: Transcript | None = None,
) -> int:
    """Honest output ``w'`` after premature termination in round ``i``.

    ``i = 1``: ``recollected`` lists the re-submitted inputs (``ABORT`` for
    dropouts), which are substituted uniformly from ``rng`` and evaluated.
    ``i > 1``: late aborts are applied, then ``sigma[i-1, [m] \\ D]``.
    """
    process_abort_phase(status, late_aborts, config.corrupt, config.threshold, i, transcript, "late_abort")
    if i == 1:
        if recollected is None or rng is None:
            raise ParameterError("round-one termination needs re-collected inputs and randomness")
        xs, _ = substitute_inputs(config.functionality, recollected, rng)
        return config.functionality.sample(xs, rng)
    if table is None:
        raise ParameterError("termination after round one needs the value table")
    return table.value(i - 1, status.active)


def _hybrid(kind: str, i: int, status: PartyStatus, config: ProtocolConfig, out: int) -> HybridCall:
    return HybridCall(
        kind,
        i,
        status.active_count(config.honest),
        status.active_count(config.corrupt),
        out,
    )


def run_dealer_protocol(
    config: ProtocolConfig,
    inputs: Sequence[int],
    adversary=None,
    variant: str = DOMAIN,
    *,
    trial: int = 0,
    record: bool = True,
    streams: Streams | None = None,
) -> ExecutionResult:
    """One execution with the trusted dealer.

    ``inputs`` are the true inputs of all ``m`` parties; the strategy
    decides what the corrupt ones submit. ``None`` means an honest
    adversary.
    """
    check_variant(variant)
    spec = config.functionality
    if len(inputs) != config.m or not all(is_valid_input(x, spec) for x in inputs):
        raise ParameterError("inputs must hold one domain value per party")
    if streams is None:
        streams = trial_streams(config.master_seed, trial)
    adversary = bind_strategy(adversary, config, inputs, lambda: streams.adversary, "dealer", variant)
    tx = Transcript() if record else None

    answers = adversary.provide_inputs()
    if not set(answers) <= config.corrupt:
        raise HarnessError("adversary submitted inputs for honest parties")
    submitted = [
        answers.get(j, ABORT) if j in config.corrupt else int(inputs[j - 1])
        for j in range(1, config.m + 1)
    ]
    if tx is not None:
        width = spec.output_width
        for j, x in enumerate(submitted, start=1):
            tx.add(0, "input", actor(j), b"" if x is ABORT or not is_valid_input(x, spec) else encode_value(x, width))
    pre = dealer_preprocess(config, submitted, streams.dealer, variant, streams.substitution)
    if isinstance(pre, PrematureAtOne):
        return _terminate(config, None, pre.status, 1, inputs, adversary, streams, variant, tx)
    table, status = pre
    if tx is not None:
        tx.add(0, "setup", "dealer", encode_set(sorted(status.initial_aborts)))
    return execute_rounds(config, table, status, inputs, adversary, streams, variant, tx)


def execute_rounds(
    config: ProtocolConfig,
    table: RoundValueTable,
    status: PartyStatus,
    inputs: Sequence[int],
    adversary,
    streams: Streams,
    variant: str = DOMAIN,
    transcript: Transcript | None = None,
) -> ExecutionResult:
    """Interaction rounds for an already built table (tests may pass any
    table here to enumerate dealer randomness)."""
    corrupt = config.corrupt
    visible = [k for k, J in enumerate(table.sets) if corrupt.issuperset(J)]
    visible_sets = [table.sets[k] for k in visible]
    rows = table.values[:, visible].tolist() if visible else [[] for _ in range(table.r)]
    width = config.functionality.output_width
    tx = transcript
    for i in range(1, table.r + 1):
        peeked = dict(zip(visible_sets, rows[i - 1]))
        if tx is not None:
            for J, v in peeked.items():
                tx.add(i, "peek", "dealer", encode_set(J) + encode_value(v, width))
        aborts = adversary.on_peek(i, peeked)
        if process_abort_phase(status, aborts, corrupt, config.threshold, i, tx):
            return _terminate(config, table, status, i, inputs, adversary, streams, variant, tx)
        if tx is not None:
            tx.add(i, "main", "dealer", b"proceed")
    if tx is not None:
        tx.add(table.r, "output", "dealer", encode_value(table.w, width))
    return ExecutionResult(
        "dealer",
        variant,
        table.w,
        NORMAL,
        None,
        table.special_round,
        initial_aborts=status.initial_aborts,
        aborted=frozenset(status.aborted),
        transcript=tx,
        table=table,
    )


def _terminate(config, table, status, i, inputs, adversary, streams, variant, tx) -> ExecutionResult:
    if tx is not None:
        tx.add(i, "premature", "dealer", i.to_bytes(4, "big"))
    late = tuple(adversary.late_aborts(i))
    recollected = None
    if i == 1:
        process_abort_phase(status, late, config.corrupt, config.threshold, i, tx, "late_abort")
        late = ()
        active_corrupt = [j for j in status.active if j in config.corrupt]
        answers = adversary.reprovide_inputs(tuple(active_corrupt))
        recollected = recollected_inputs(config.functionality, status, inputs, config.corrupt, answers)
        if tx is not None:
            for j in status.active:
                tx.add(i, "recollect", actor(j))
    out = premature_terminate(config, table, status, i, late, recollected, streams.substitution, tx)
    call = _hybrid("dealer_premature", i, status, config, out)
    if tx is not None:
        tx.add(i, "output", "dealer", encode_value(out, config.functionality.output_width))
    return ExecutionResult(
        "dealer",
        variant,
        out,
        PREMATURE,
        i,
        None if table is None else table.special_round,
        initial_aborts=status.initial_aborts,
        aborted=frozenset(status.aborted),
        hybrid_calls=[call],
        transcript=tx,
        table=table,
    )
