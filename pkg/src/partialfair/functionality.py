"""Plaintext model of an m-party functionality and the round-count formulas.

A functionality maps an m-tuple of inputs from ``X = {0,1}^domain_bits`` to
an output in ``Z = {0,1}^range_bits``. Deterministic functionalities are
plain lookup tables; randomized ones map every input tuple to a distribution
over ``Z`` with dyadic weights, so that a random output is fully determined
by ``coin_bits`` coin flips and exact enumeration stays possible.

Input tuples are flattened in lexicographic order with the first party as
the most significant digit, i.e. the order of
``itertools.product(range(d), repeat=m)``.
"""

from __future__ import annotations

import functools
import itertools
import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import CapacityError, DomainError, ParameterError

DETERMINISTIC = "deterministic"
RANDOMIZED = "randomized"
KINDS = (DETERMINISTIC, RANDOMIZED)

DEFAULT_MAX_INPUT_BITS = 20
DEFAULT_MAX_RANGE_BITS = 8


def _dyadic_exponent(weight: Fraction) -> int:
    den = weight.denominator
    if den & (den - 1):
        raise ParameterError(f"weight {weight} is not a dyadic rational")
    return den.bit_length() - 1


@dataclass(frozen=True, eq=False)
class FunctionalitySpec:
    """An m-party functionality ``f_n`` with its domain/range metadata.

    ``table`` holds, per flattened input tuple, either the output value
    (deterministic) or a tuple of ``(output, numerator)`` pairs whose
    numerators sum to ``2**coin_bits`` (randomized).
    """

    party_count: int
    domain_bits: int
    range_bits: int
    kind: str
    table: tuple
    coin_bits: int = 0
    name: str = ""
    max_input_bits: int = DEFAULT_MAX_INPUT_BITS
    max_range_bits: int = DEFAULT_MAX_RANGE_BITS
    _lookup: np.ndarray = field(init=False, repr=False)
    _cum: np.ndarray = field(init=False, repr=False)
    _outs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m, ld, lr = self.party_count, self.domain_bits, self.range_bits
        if m < 1 or ld < 1 or lr < 1:
            raise ParameterError("party_count, domain_bits and range_bits must be positive")
        if self.kind not in KINDS:
            raise ParameterError(f"unknown functionality kind {self.kind!r}")
        if ld * m > self.max_input_bits:
            raise CapacityError(
                f"input space of {ld * m} bits exceeds the cap of {self.max_input_bits}"
            )
        if lr > self.max_range_bits:
            raise CapacityError(f"range of {lr} bits exceeds the cap of {self.max_range_bits}")
        size = (1 << ld) ** m
        if len(self.table) != size:
            raise ParameterError(f"table has {len(self.table)} entries, expected {size}")
        g = 1 << lr
        if self.kind == DETERMINISTIC:
            lookup = np.asarray(self.table, dtype=np.int64)
            if lookup.min() < 0 or lookup.max() >= g:
                raise DomainError("deterministic table contains an out-of-range output")
            object.__setattr__(self, "_lookup", lookup)
            object.__setattr__(self, "_cum", np.empty((0, 0), dtype=np.int64))
            object.__setattr__(self, "_outs", np.empty((0, 0), dtype=np.int64))
            object.__setattr__(self, "coin_bits", 0)
            return
        total = 1 << self.coin_bits
        width = max(len(entry) for entry in self.table)
        cum = np.full((size, width), total, dtype=np.int64)
        outs = np.zeros((size, width), dtype=np.int64)
        for row, entry in enumerate(self.table):
            acc = 0
            for col, (out, num) in enumerate(entry):
                if not 0 <= out < g:
                    raise DomainError(f"output {out} outside the range")
                if num <= 0:
                    raise ParameterError("weights must be positive")
                acc += num
                cum[row, col] = acc
                outs[row, col] = out
            if acc != total:
                raise ParameterError(f"weights of entry {row} do not sum to 1")
            # padding columns repeat the last output; they are never selected
            outs[row, len(entry):] = outs[row, len(entry) - 1]
        object.__setattr__(self, "_lookup", np.empty(0, dtype=np.int64))
        object.__setattr__(self, "_cum", cum)
        object.__setattr__(self, "_outs", outs)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_function(
        cls,
        party_count: int,
        domain_bits: int,
        range_bits: int,
        fn: Callable[..., int],
        name: str = "",
        **caps,
    ) -> "FunctionalitySpec":
        d = 1 << domain_bits
        _check_caps(party_count, domain_bits, range_bits, caps)
        table = tuple(int(fn(*xs)) for xs in itertools.product(range(d), repeat=party_count))
        return cls(party_count, domain_bits, range_bits, DETERMINISTIC, table, name=name, **caps)

    @classmethod
    def from_distribution(
        cls,
        party_count: int,
        domain_bits: int,
        range_bits: int,
        fn: Callable[..., Mapping[int, object]],
        name: str = "",
        **caps,
    ) -> "FunctionalitySpec":
        """Build a randomized functionality; ``fn`` returns ``{output: weight}``."""
        d = 1 << domain_bits
        _check_caps(party_count, domain_bits, range_bits, caps)
        dists = []
        for xs in itertools.product(range(d), repeat=party_count):
            dist = {int(k): Fraction(v) for k, v in fn(*xs).items() if Fraction(v) != 0}
            if sum(dist.values()) != 1:
                raise ParameterError(f"weights for inputs {xs} sum to {sum(dist.values())}")
            dists.append(dist)
        return cls.from_weights(party_count, domain_bits, range_bits, dists, name=name, **caps)

    @classmethod
    def from_weights(
        cls,
        party_count: int,
        domain_bits: int,
        range_bits: int,
        dists: Sequence[Mapping[int, Fraction]],
        name: str = "",
        **caps,
    ) -> "FunctionalitySpec":
        coin_bits = 0
        for dist in dists:
            for w in dist.values():
                coin_bits = max(coin_bits, _dyadic_exponent(Fraction(w)))
        total = 1 << coin_bits
        table = tuple(
            tuple((out, int(Fraction(w) * total)) for out, w in sorted(dist.items()))
            for dist in dists
        )
        return cls(
            party_count, domain_bits, range_bits, RANDOMIZED, table,
            coin_bits=coin_bits, name=name, **caps,
        )

    # -- sizes ------------------------------------------------------------

    @property
    def m(self) -> int:
        return self.party_count

    @property
    def domain_size(self) -> int:
        return 1 << self.domain_bits

    @property
    def range_size(self) -> int:
        return 1 << self.range_bits

    @property
    def input_space_size(self) -> int:
        return self.domain_size ** self.party_count

    @property
    def deterministic(self) -> bool:
        return self.kind == DETERMINISTIC

    @property
    def output_width(self) -> int:
        """Bytes needed to encode one output value."""
        return max(1, (self.range_bits + 7) // 8)

    # -- indexing and evaluation -----------------------------------------

    def index(self, inputs: Sequence[int]) -> int:
        if len(inputs) != self.party_count:
            raise DomainError(f"expected {self.party_count} inputs, got {len(inputs)}")
        d = self.domain_size
        idx = 0
        for x in inputs:
            if isinstance(x, bool) or not isinstance(x, (int, np.integer)) or not 0 <= x < d:
                raise DomainError(f"input {x!r} outside the domain [0, {d})")
            idx = idx * d + int(x)
        return idx

    def inputs_of(self, index: int) -> tuple[int, ...]:
        d = self.domain_size
        out = []
        for _ in range(self.party_count):
            index, x = divmod(index, d)
            out.append(x)
        return tuple(reversed(out))

    def index_array(self, inputs: np.ndarray) -> np.ndarray:
        """Flatten an array of shape ``(..., m)`` into indices of shape ``(...)``."""
        d = self.domain_size
        weights = d ** np.arange(self.party_count - 1, -1, -1, dtype=np.int64)
        return np.asarray(inputs, dtype=np.int64) @ weights

    def distribution(self, inputs: Sequence[int]) -> dict[int, Fraction]:
        idx = self.index(inputs)
        if self.deterministic:
            return {int(self._lookup[idx]): Fraction(1)}
        total = 1 << self.coin_bits
        return {out: Fraction(num, total) for out, num in self.table[idx]}

    def support(self, inputs: Sequence[int]) -> frozenset[int]:
        return frozenset(self.distribution(inputs))

    def evaluate_index(self, idx: int, coin: int = 0) -> int:
        if self.deterministic:
            return int(self._lookup[idx])
        acc = 0
        for out, num in self.table[idx]:
            acc += num
            if coin < acc:
                return out
        raise AssertionError("coin outside the coin space")

    def evaluate_indices(self, idx: np.ndarray, coins: np.ndarray | None = None) -> np.ndarray:
        """Vectorised evaluation; ``coins`` are integers in ``[0, 2**coin_bits)``."""
        idx = np.asarray(idx, dtype=np.int64)
        if self.deterministic:
            return self._lookup[idx]
        coins = np.asarray(coins, dtype=np.int64)
        pos = (coins[..., None] >= self._cum[idx]).sum(axis=-1)
        return np.take_along_axis(self._outs[idx], pos[..., None], axis=-1)[..., 0]

    def draw_coins(self, rng: np.random.Generator, size=None):
        if self.deterministic:
            return None if size is None else np.zeros(size, dtype=np.int64)
        return rng.integers(0, 1 << self.coin_bits, size=size, dtype=np.int64)

    def sample(self, inputs: Sequence[int], rng: np.random.Generator) -> int:
        """Evaluate with fresh coins drawn from ``rng``."""
        idx = self.index(inputs)
        if self.deterministic:
            return int(self._lookup[idx])
        return self.evaluate_index(idx, int(rng.integers(0, 1 << self.coin_bits)))


def _check_caps(m: int, ld: int, lr: int, caps: Mapping) -> None:
    # checked before the table is enumerated so oversized specs fail fast
    if ld * m > caps.get("max_input_bits", DEFAULT_MAX_INPUT_BITS):
        raise CapacityError(f"input space of {ld * m} bits exceeds the cap")
    if lr > caps.get("max_range_bits", DEFAULT_MAX_RANGE_BITS):
        raise CapacityError(f"range of {lr} bits exceeds the cap")


def _coins_to_int(coins, coin_bits: int) -> int:
    if isinstance(coins, str):
        bits = [int(c) for c in coins if not c.isspace()]
    else:
        bits = [int(c) for c in coins]
    if any(b not in (0, 1) for b in bits):
        raise ParameterError("coins must be a bit string")
    if len(bits) < coin_bits:
        raise ParameterError(f"need {coin_bits} coin bits, got {len(bits)}")
    value = 0
    for b in bits[:coin_bits]:
        value = (value << 1) | b
    return value


def evaluate(spec: FunctionalitySpec, inputs: Sequence[int], coins=None) -> int:
    """Compute ``f(inputs)``; for randomized specs the first ``coin_bits``
    bits of ``coins`` (most significant first) select the output."""
    idx = spec.index(inputs)
    if spec.deterministic:
        return spec.evaluate_index(idx)
    if coins is None:
        raise ParameterError("randomized functionality needs coins")
    return spec.evaluate_index(idx, _coins_to_int(coins, spec.coin_bits))


def sample_uniform_input(spec: FunctionalitySpec, rng: np.random.Generator) -> int:
    return int(rng.integers(0, spec.domain_size))


def min_output_probability(spec: FunctionalitySpec) -> Fraction:
    if spec.deterministic:
        return Fraction(1)
    total = 1 << spec.coin_bits
    return Fraction(min(num for entry in spec.table for _, num in entry), total)


# -- round counts ---------------------------------------------------------


def check_corruption_bound(m: int, t: int) -> None:
    """Require ``m/2 <= t < 2m/3``."""
    if not (isinstance(m, int) and isinstance(t, int)) or m < 1:
        raise ParameterError("m and t must be integers")
    if not (2 * t >= m and 3 * t < 2 * m):
        raise ParameterError(f"need m/2 <= t < 2m/3, got m={m}, t={t}")


def _as_p(p) -> Fraction:
    try:
        p = Fraction(p)
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"p must be rational, got {p!r}") from exc
    if p < 1:
        raise ParameterError("p must be at least 1")
    return p


def _positive(name: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ParameterError(f"{name} must be a positive integer, got {value!r}")
    return value


def rounds_for_domain(p, d: int, g: int, m: int, t: int, deterministic: bool = True) -> int:
    """Round count for the domain-bounded protocol.

    Deterministic: ``p * d**(m * 2**t)``; randomized:
    ``p * (2 * d**m * g * p)**(2**t)``. Ceilings are taken for rational p.
    """
    p = _as_p(p)
    _positive("d", d)
    _positive("g", g)
    check_corruption_bound(m, t)
    if deterministic:
        return math.ceil(p * d ** (m * 2**t))
    return math.ceil(p * (2 * d**m * g * p) ** (2**t))


def rounds_for_range(p, g: int, t: int) -> int:
    """Round count for the range-bounded protocol: ``(2p)**(2**t + 1) * g**(2**t)``."""
    p = _as_p(p)
    _positive("g", g)
    _positive("t", t)
    return math.ceil((2 * p) ** (2**t + 1) * g ** (2**t))


# -- protocol parameters --------------------------------------------------


@functools.lru_cache(maxsize=256)
def qualifying_sets(m: int, t: int, excluded: frozenset = frozenset()) -> tuple[tuple[int, ...], ...]:
    """All ``J`` within ``[m] \\ excluded`` with ``m - t <= |J| <= t``, in
    lexicographic order of their ascending index sequences."""
    pool = [j for j in range(1, m + 1) if j not in excluded]
    sets = [
        combo
        for size in range(max(m - t, 1), t + 1)
        for combo in itertools.combinations(pool, size)
    ]
    return tuple(sorted(sets))


@dataclass(frozen=True)
class ProtocolConfig:
    functionality: FunctionalitySpec
    t: int
    p: Fraction
    r: int
    corrupt: frozenset
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "p", _as_p(self.p))
        object.__setattr__(self, "corrupt", frozenset(int(j) for j in self.corrupt))
        m = self.functionality.party_count
        check_corruption_bound(m, self.t)
        _positive("r", self.r)
        if len(self.corrupt) > self.t:
            raise ParameterError(f"|B| = {len(self.corrupt)} exceeds t = {self.t}")
        if any(not 1 <= j <= m for j in self.corrupt):
            raise ParameterError("corrupt indices must lie in [1, m]")
        if not 0 <= self.master_seed < 2**64:
            raise ParameterError("master seed must be a 64-bit unsigned integer")

    @property
    def m(self) -> int:
        return self.functionality.party_count

    @property
    def d(self) -> int:
        return self.functionality.domain_size

    @property
    def g(self) -> int:
        return self.functionality.range_size

    @property
    def honest(self) -> tuple[int, ...]:
        return tuple(j for j in range(1, self.m + 1) if j not in self.corrupt)

    @property
    def threshold(self) -> int:
        """Number of aborts that triggers premature termination."""
        return self.m - self.t

    def sets(self, excluded: Iterable[int] = ()) -> tuple[tuple[int, ...], ...]:
        return qualifying_sets(self.m, self.t, frozenset(excluded))

    def evolve(self, **changes) -> "ProtocolConfig":
        return replace(self, **changes)


# -- builtin functionalities ---------------------------------------------


def xor_functionality(m: int = 4) -> FunctionalitySpec:
    return FunctionalitySpec.from_function(m, 1, 1, lambda *xs: functools.reduce(int.__xor__, xs), name=f"xor{m}")


def and_functionality(m: int = 4) -> FunctionalitySpec:
    return FunctionalitySpec.from_function(m, 1, 1, lambda *xs: int(all(xs)), name=f"and{m}")


def majority_functionality(m: int = 4) -> FunctionalitySpec:
    return FunctionalitySpec.from_function(m, 1, 1, lambda *xs: int(2 * sum(xs) > m), name=f"maj{m}")


def sum_functionality(m: int = 4, domain_bits: int = 1, range_bits: int = 3) -> FunctionalitySpec:
    g = 1 << range_bits
    return FunctionalitySpec.from_function(
        m, domain_bits, range_bits, lambda *xs: sum(xs) % g, name=f"sum{m}"
    )


def constant_functionality(m: int = 4, value: int = 0, range_bits: int = 1) -> FunctionalitySpec:
    return FunctionalitySpec.from_function(m, 1, range_bits, lambda *xs: value, name=f"const{m}")


def uniform_coin_functionality(m: int = 2, range_bits: int = 1) -> FunctionalitySpec:
    """Output uniform over the range, independent of the inputs."""
    g = 1 << range_bits
    return FunctionalitySpec.from_distribution(
        m, 1, range_bits, lambda *xs: {z: Fraction(1, g) for z in range(g)}, name=f"coin{m}"
    )


def noisy_xor_functionality(m: int = 4) -> FunctionalitySpec:
    """XOR of the inputs, flipped with probability 1/4."""
    def dist(*xs):
        v = functools.reduce(int.__xor__, xs)
        return {v: Fraction(3, 4), 1 - v: Fraction(1, 4)}

    return FunctionalitySpec.from_distribution(m, 1, 1, dist, name=f"noisyxor{m}")


BUILTINS: dict[str, Callable[[int], FunctionalitySpec]] = {
    "xor": xor_functionality,
    "and": and_functionality,
    "majority": majority_functionality,
    "sum": sum_functionality,
    "constant": constant_functionality,
    "coin": uniform_coin_functionality,
    "noisy-xor": noisy_xor_functionality,
}


# -- text format ----------------------------------------------------------
#
#   m domain_bits range_bits kind
#   <one line per input tuple, lexicographic order>
#
# Deterministic lines hold the output; randomized lines hold
# ``output:num/den`` pairs. Lines may be prefixed with ``x1 ... xm ->`` and
# ``#`` starts a comment.


def loads(text: str, **caps) -> FunctionalitySpec:
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise ParameterError("empty functionality description")
    header = lines[0].split()
    if len(header) != 4:
        raise ParameterError("header must be 'm domain_bits range_bits kind'")
    try:
        m, ld, lr = (int(v) for v in header[:3])
    except ValueError as exc:
        raise ParameterError(f"bad header {lines[0]!r}") from exc
    kind = header[3].lower()
    if kind not in KINDS:
        raise ParameterError(f"unknown kind {header[3]!r}")
    _check_caps(m, ld, lr, caps)
    d = 1 << ld
    expected = list(itertools.product(range(d), repeat=m))
    body = lines[1:]
    if len(body) != len(expected):
        raise ParameterError(f"expected {len(expected)} table lines, found {len(body)}")
    entries = []
    for xs, line in zip(expected, body):
        if "->" in line:
            lhs, line = line.split("->", 1)
            try:
                given = tuple(int(v) for v in lhs.split())
            except ValueError as exc:
                raise ParameterError(f"bad input tuple in {lhs!r}") from exc
            if given != xs:
                raise ParameterError(f"table line for {given} out of order (expected {xs})")
        entries.append(line.split())
    try:
        if kind == DETERMINISTIC:
            table = []
            for tokens in entries:
                if len(tokens) != 1:
                    raise ParameterError(f"deterministic line must hold one output: {tokens}")
                table.append(int(tokens[0], 0))
            return FunctionalitySpec(m, ld, lr, DETERMINISTIC, tuple(table), **caps)
        dists = []
        for tokens in entries:
            dist: dict[int, Fraction] = {}
            for tok in tokens:
                out, _, weight = tok.partition(":")
                if not weight:
                    raise ParameterError(f"randomized entry {tok!r} lacks a weight")
                dist[int(out, 0)] = dist.get(int(out, 0), Fraction(0)) + Fraction(weight)
            if sum(dist.values()) != 1:
                raise ParameterError(f"weights {tokens} do not sum to 1")
            dists.append(dist)
    except (ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(str(exc)) from exc
    return FunctionalitySpec.from_weights(m, ld, lr, dists, **caps)


def dumps(spec: FunctionalitySpec) -> str:
    lines = [f"{spec.party_count} {spec.domain_bits} {spec.range_bits} {spec.kind}"]
    total = 1 << spec.coin_bits
    for idx, entry in enumerate(spec.table):
        prefix = " ".join(map(str, spec.inputs_of(idx))) + " -> "
        if spec.deterministic:
            lines.append(prefix + str(entry))
        else:
            pairs = []
            for out, num in entry:
                w = Fraction(num, total)
                pairs.append(f"{out}:{w.numerator}/{w.denominator}")
            lines.append(prefix + " ".join(pairs))
    return "\n".join(lines) + "\n"


def load(path: str | Path, **caps) -> FunctionalitySpec:
    spec = loads(Path(path).read_text(), **caps)
    return replace(spec, name=Path(path).stem) if not spec.name else spec


def dump(spec: FunctionalitySpec, path: str | Path) -> None:
    Path(path).write_text(dumps(spec))
