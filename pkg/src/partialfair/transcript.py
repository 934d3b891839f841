"""Execution records shared by both engines.

A transcript is an ordered list of :class:`Event`. Each event serialises to
one line ``round<TAB>phase<TAB>actor<TAB>payload_hex``. Within a round the
phases are ranked so that everything the adversary is shown (peeks, honest
broadcasts) precedes what corrupt parties send back.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import HarnessError

PHASE_RANK = {
    "input": 0,
    "blame": 1,
    "setup": 2,
    "package": 3,
    # interaction round
    "peek": 10,
    "broadcast": 11,
    "respond": 12,
    "abort": 13,
    "main": 14,
    # termination
    "premature": 20,
    "late_abort": 21,
    "recollect": 22,
    "hybrid": 23,
    "final": 24,
    "output": 30,
}


@dataclass(frozen=True)
class Event:
    round: int
    phase: str
    actor: str
    payload: bytes = b""

    def to_line(self) -> str:
        return f"{self.round}\t{self.phase}\t{self.actor}\t{self.payload.hex()}"

    @classmethod
    def from_line(cls, line: str) -> "Event":
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 4:
            raise ValueError(f"malformed transcript line {line!r}")
        rnd, phase, actor, payload = parts
        return cls(int(rnd), phase, actor, bytes.fromhex(payload))

    @property
    def key(self) -> tuple[int, int]:
        return (self.round, PHASE_RANK[self.phase])


class Transcript:
    """Append-only event log that enforces the round/phase order."""

    def __init__(self):
        self.events: list[Event] = []

    def add(self, round_index: int, phase: str, actor: str, payload: bytes = b"") -> None:
        if phase not in PHASE_RANK:
            raise HarnessError(f"unknown transcript phase {phase!r}")
        ev = Event(round_index, phase, actor, bytes(payload))
        if self.events and ev.key < self.events[-1].key:
            raise HarnessError(f"out-of-order event {ev} after {self.events[-1]}")
        self.events.append(ev)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def lines(self) -> list[str]:
        return [ev.to_line() for ev in self.events]

    def dumps(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    @classmethod
    def loads(cls, text: str) -> "Transcript":
        tr = cls()
        for line in text.splitlines():
            if line.strip():
                ev = Event.from_line(line)
                tr.add(ev.round, ev.phase, ev.actor, ev.payload)
        return tr

    def select(self, phase: str | None = None, round_index: int | None = None) -> list[Event]:
        return [
            ev
            for ev in self.events
            if (phase is None or ev.phase == phase) and (round_index is None or ev.round == round_index)
        ]


def is_rushing_ordered(events) -> bool:
    """True iff events are sorted by (round, phase rank)."""
    keys = [ev.key for ev in events]
    return all(a <= b for a, b in zip(keys, keys[1:]))


def actor(j: int) -> str:
    return f"p{j}"


def encode_value(value: int, width: int) -> bytes:
    return int(value).to_bytes(width, "big")


def encode_set(subset) -> bytes:
    return bytes([len(subset), *subset])


@dataclass(frozen=True)
class HybridCall:
    """One invocation of a trusted sub-functionality."""

    kind: str
    round: int
    active_honest: int
    active_corrupt: int
    output: int | None = None

    @property
    def honest_majority(self) -> bool:
        return self.active_honest > self.active_corrupt


NORMAL = "normal"
PREMATURE = "premature"


@dataclass
class ExecutionResult:
    """Outcome of one execution of either engine (or of the simulator).

    ``termination_round`` is ``None`` for normal termination and ``1`` for
    termination before the interaction rounds start. ``special_round`` is
    ``None`` when no round values were ever fixed.
    """

    engine: str
    variant: str
    honest_output: int | None
    termination: str
    termination_round: int | None
    special_round: int | None
    bottom: bool = False
    initial_aborts: frozenset = frozenset()
    aborted: frozenset = frozenset()
    hybrid_calls: list[HybridCall] = field(default_factory=list)
    transcript: Transcript | None = None
    table: object = None

    @property
    def termination_class(self) -> str:
        """Position of the termination relative to the special round."""
        if self.termination == NORMAL:
            return "after"
        if self.special_round is None:
            return "before"
        k = self.termination_round
        if k < self.special_round:
            return "before"
        return "at" if k == self.special_round else "after"

    @property
    def hit_special_round(self) -> bool:
        return self.termination == PREMATURE and self.termination_class == "at"

    def summary(self) -> tuple:
        return (self.termination_class, self.honest_output, self.bottom)
