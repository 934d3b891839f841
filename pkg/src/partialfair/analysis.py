"""Quantitative checks: exact oracles, bound formulas, the ideal-world
simulator for the dealer protocol, and real-versus-ideal comparison.

Everything that can be computed exactly returns :class:`fractions.Fraction`.
Monte Carlo helpers attach three-standard-deviation radii and compare
one-sidedly against the formulas.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .adversary import ABORT, bind_strategy
from .dealer import (
    DOMAIN,
    RANGE,
    PartyStatus,
    _branch_fraction,
    _membership,
    check_variant,
    is_valid_input,
    process_abort_phase,
    run_dealer_protocol,
    uniform_branch_probability,
)
from .dealerless import SHAREGEN
from .errors import CapacityError, ParameterError
from .functionality import (
    FunctionalitySpec,
    ProtocolConfig,
    check_corruption_bound,
    rounds_for_domain,
    rounds_for_range,
)
from .seeding import WORLD_IDEAL, trial_streams
from .transcript import NORMAL, PREMATURE, ExecutionResult, HybridCall, Transcript, actor, encode_set, encode_value

ENUMERATION_BUDGET = 2**20


# -- distributions ---------------------------------------------------------


@dataclass
class EmpiricalDistribution:
    counts: Counter = field(default_factory=Counter)
    trials: int = 0

    def add(self, outcome) -> None:
        self.counts[outcome] += 1
        self.trials += 1

    def merge(self, other: "EmpiricalDistribution") -> "EmpiricalDistribution":
        return EmpiricalDistribution(self.counts + other.counts, self.trials + other.trials)

    @classmethod
    def from_samples(cls, samples: Iterable) -> "EmpiricalDistribution":
        out = cls()
        for s in samples:
            out.add(s)
        return out

    def probabilities(self) -> dict:
        if self.trials <= 0:
            raise ParameterError("empirical distribution has no trials")
        return {k: Fraction(v, self.trials) for k, v in self.counts.items()}

    def probability(self, event: Callable[[object], bool]) -> Fraction:
        if self.trials <= 0:
            raise ParameterError("empirical distribution has no trials")
        return Fraction(sum(v for k, v in self.counts.items() if event(k)), self.trials)


def _as_probabilities(dist) -> dict:
    if isinstance(dist, EmpiricalDistribution):
        return dist.probabilities()
    if not isinstance(dist, Mapping) or not dist:
        raise ParameterError("expected an empirical distribution or a non-empty probability map")
    return {k: Fraction(v) for k, v in dist.items()}


def statistical_distance(a, b) -> Fraction:
    """Half the L1 distance between two finite distributions."""
    pa, pb = _as_probabilities(a), _as_probabilities(b)
    keys = set(pa) | set(pb)
    return sum((abs(pa.get(k, 0) - pb.get(k, 0)) for k in keys), Fraction(0)) / 2


total_variation = statistical_distance


def sd_noise(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    """Sampling scale of the plug-in distance estimate: half the sum over
    outcomes of the standard deviation of the difference of frequencies."""
    pa, pb = a.probabilities(), b.probabilities()
    total = 0.0
    for k in set(pa) | set(pb):
        x, y = float(pa.get(k, 0)), float(pb.get(k, 0))
        total += math.sqrt(x * (1 - x) / a.trials + y * (1 - y) / b.trials)
    return total / 2


def binomial_sigma(q: float, n: int) -> float:
    return math.sqrt(max(q * (1 - q), 0.0) / n)


# -- exact oracles ---------------------------------------------------------


def subset_value_distribution(
    spec: FunctionalitySpec,
    inputs: Sequence[int],
    J: Iterable[int],
    variant: str = DOMAIN,
    p=1,
) -> dict[int, Fraction]:
    """Exact distribution of a pre-special-round value for the set ``J``:
    ``f`` on the inputs of ``J`` and uniform inputs elsewhere (mixed with a
    uniform range value with probability ``1/(2p)`` in the range variant)."""
    members = set(J)
    free = [j for j in range(1, spec.party_count + 1) if j not in members]
    d = spec.domain_size
    if d ** len(free) * (1 << spec.coin_bits) > ENUMERATION_BUDGET:
        raise CapacityError("enumeration budget exceeded")
    weight = Fraction(1, d ** len(free))
    out: dict[int, Fraction] = {}
    ys = [0 if x is ABORT else int(x) for x in inputs]
    for combo in itertools.product(range(d), repeat=len(free)):
        for j, v in zip(free, combo):
            ys[j - 1] = v
        for z, pz in spec.distribution(ys).items():
            out[z] = out.get(z, Fraction(0)) + weight * pz
    if variant == RANGE:
        q = uniform_branch_probability(p)
        g = spec.range_size
        mixed = {z: (1 - q) * out.get(z, Fraction(0)) + q / g for z in range(g)}
        out = {z: v for z, v in mixed.items() if v}
    return out


def output_distribution_with_substitutes(
    spec: FunctionalitySpec, inputs: Sequence, substituted: Iterable[int]
) -> dict[int, Fraction]:
    """Exact distribution of ``f`` when the parties in ``substituted`` (and
    any entry equal to ``ABORT``) use uniform inputs."""
    subs = set(substituted) | {j for j, x in enumerate(inputs, start=1) if x is ABORT}
    keep = [j for j in range(1, spec.party_count + 1) if j not in subs]
    return subset_value_distribution(spec, [0 if x is ABORT else x for x in inputs], keep)


def visible_sets(config: ProtocolConfig, corrupt: Iterable[int] | None = None, excluded=()) -> tuple:
    coalition = set(config.corrupt if corrupt is None else corrupt) - set(excluded)
    return tuple(J for J in config.sets(excluded) if coalition.issuperset(J))


def alpha_exact(
    spec: FunctionalitySpec,
    config: ProtocolConfig,
    corrupt: Iterable[int] | None,
    inputs: Sequence[int],
    variant: str = DOMAIN,
) -> Fraction:
    """Minimum over outputs ``w`` possible on ``inputs`` of the probability
    that every value the coalition sees in a round before ``i*`` equals ``w``.

    Values of distinct sets are independent, so the probability is the
    product of the per-set probabilities.
    """
    check_variant(variant)
    sets = visible_sets(config, corrupt)
    if not sets:
        return Fraction(1)
    cost = spec.input_space_size * (1 << spec.coin_bits)
    if cost > ENUMERATION_BUDGET:
        raise CapacityError(f"alpha needs {cost} evaluations, budget is {ENUMERATION_BUDGET}")
    dists = [subset_value_distribution(spec, inputs, J, variant, config.p) for J in sets]
    best = None
    for w in spec.support(inputs):
        prob = Fraction(1)
        for dist in dists:
            prob *= dist.get(w, Fraction(0))
        best = prob if best is None else min(best, prob)
    return best


def alpha_lower_bound(d: int, m: int, t: int) -> Fraction:
    """``(1/d^m)^(2^t - 1)``, valid for deterministic functionalities."""
    return Fraction(1, d**m) ** (2**t - 1)


# -- bound formulas --------------------------------------------------------


@dataclass
class Check:
    name: str
    empirical: float
    radius: float
    bound: float
    passed: bool

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "empirical": self.empirical,
            "radius": self.radius,
            "bound": self.bound,
            "passed": self.passed,
        }


def _fmt(x):
    if isinstance(x, Fraction):
        return str(x)
    return x


@dataclass
class BoundReport:
    """Formula values for one parameter set plus any measured checks."""

    d: int
    g: int
    m: int
    t: int
    r: int
    p: Fraction
    variant: str
    deterministic: bool
    alpha: Fraction | None
    guessing_bound: Fraction | None
    sd_bound_deterministic: Fraction
    sd_bound_randomized: float
    sd_bound_randomized_statement: Fraction
    sd_bound_range: Fraction
    heavy_threshold: float
    rounds_domain: int | None
    rounds_range: int | None
    checks: list[Check] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def sd_bound(self):
        """The bound that applies to this variant and functionality kind."""
        if self.variant == RANGE:
            return self.sd_bound_range
        return self.sd_bound_deterministic if self.deterministic else self.sd_bound_randomized

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add_check(self, name: str, empirical, radius: float, bound) -> Check:
        """One-sided check: ``empirical <= bound + radius``."""
        emp, bnd = float(empirical), float(bound)
        check = Check(name, emp, float(radius), bnd, emp <= bnd + float(radius))
        self.checks.append(check)
        return check

    def to_record(self) -> dict:
        rec = {
            "d": self.d,
            "g": self.g,
            "m": self.m,
            "t": self.t,
            "r": self.r,
            "p": str(self.p),
            "variant": self.variant,
            "deterministic": self.deterministic,
            "alpha": _fmt(self.alpha),
            "guessing_bound": _fmt(self.guessing_bound),
            "sd_bound": _fmt(self.sd_bound),
            "sd_bound_deterministic": _fmt(self.sd_bound_deterministic),
            "sd_bound_randomized": self.sd_bound_randomized,
            "sd_bound_randomized_statement": _fmt(self.sd_bound_randomized_statement),
            "sd_bound_range": _fmt(self.sd_bound_range),
            "heavy_threshold": self.heavy_threshold,
            "rounds_domain": self.rounds_domain,
            "rounds_range": self.rounds_range,
            "checks": [c.to_record() for c in self.checks],
            "passed": self.passed,
        }
        rec.update({k: _fmt(v) for k, v in sorted(self.extra.items())})
        return rec

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)


def _root(r: int, t: int) -> float:
    """``r ** (2 ** -t)`` without overflowing for huge ``r``."""
    return math.exp(math.log(r) / 2**t)


def bound_formulas(
    d: int,
    g: int,
    m: int,
    t: int,
    r: int,
    p=1,
    variant: str = DOMAIN,
    alpha: Fraction | None = None,
    deterministic: bool = True,
) -> BoundReport:
    check_variant(variant)
    check_corruption_bound(m, t)
    for name, v in (("d", d), ("g", g), ("r", r)):
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ParameterError(f"{name} must be a positive integer")
    p = Fraction(p)
    if p < 1:
        raise ParameterError("p must be at least 1")
    dm = d**m
    root = _root(r, t)
    return BoundReport(
        d=d,
        g=g,
        m=m,
        t=t,
        r=r,
        p=p,
        variant=variant,
        deterministic=deterministic,
        alpha=alpha,
        guessing_bound=None if alpha is None else 1 / (alpha * r),
        sd_bound_deterministic=Fraction(dm ** (2**t), r),
        sd_bound_randomized=2 * g * dm / root,
        sd_bound_randomized_statement=Fraction(2 * g * dm, r ** (2**t)),
        sd_bound_range=Fraction((2 * p * g) ** (2**t)) / r + 1 / (2 * p),
        heavy_threshold=root / (g * dm),
        rounds_domain=rounds_for_domain(p, d, g, m, t, deterministic),
        rounds_range=rounds_for_range(p, g, t),
    )


# -- ideal world -----------------------------------------------------------


class TrustedParty:
    """Ideal functionality: one query, uniform inputs for missing parties."""

    def __init__(self, spec: FunctionalitySpec, inputs: Sequence[int], honest: Iterable[int], rng):
        self.spec = spec
        self.inputs = tuple(inputs)
        self.honest = frozenset(honest)
        self.rng = rng
        self.queried = False

    def query(self, corrupt_inputs: Mapping) -> int:
        if self.queried:
            raise ParameterError("the trusted party answers only once")
        self.queried = True
        xs = []
        for j in range(1, self.spec.party_count + 1):
            if j in self.honest:
                xs.append(self.inputs[j - 1])
            else:
                x = corrupt_inputs.get(j, ABORT)
                if x is ABORT or not is_valid_input(x, self.spec):
                    x = int(self.rng.integers(0, self.spec.domain_size))
                xs.append(int(x))
        return self.spec.sample(xs, self.rng)


def simulate_ideal_dealer(
    config: ProtocolConfig,
    inputs: Sequence[int],
    adversary=None,
    variant: str = DOMAIN,
    *,
    trial: int = 0,
    record: bool = True,
) -> ExecutionResult:
    """Ideal-world execution: the simulator plays the dealer towards the
    adversary and the honest parties output what the trusted party returns.

    Before the special round the coalition sees values computed from its own
    inputs and uniform substitutes; at the special round (or at an earlier
    premature termination) the simulator queries the trusted party. In the
    range variant a premature termination before the special round reports
    failure (``bottom``) with probability ``1/(2p)``.
    """
    check_variant(variant)
    spec = config.functionality
    if len(inputs) != config.m or not all(is_valid_input(x, spec) for x in inputs):
        raise ParameterError("inputs must hold one domain value per party")
    streams = trial_streams(config.master_seed, trial, WORLD_IDEAL)
    rng = streams.dealer
    adversary = bind_strategy(adversary, config, inputs, lambda: streams.adversary, "dealer", variant)
    trusted = TrustedParty(spec, inputs, config.honest, streams.substitution)
    corrupt = config.corrupt
    tx = Transcript() if record else None
    width = spec.output_width

    answers = adversary.provide_inputs()
    submitted = {j: answers.get(j, ABORT) for j in sorted(corrupt)}
    dropped = {j for j, x in submitted.items() if x is ABORT or not is_valid_input(x, spec)}
    if tx is not None:
        for j, x in submitted.items():
            tx.add(0, "input", actor(j), b"" if j in dropped else encode_value(x, width))
    status = PartyStatus(config.m, dropped)

    def finish(out, k, i_star, bottom=False, termination=PREMATURE):
        if tx is not None:
            tx.add(k or config.r, "output", "trusted", encode_value(out, width))
        return ExecutionResult(
            "ideal",
            variant,
            out,
            termination,
            k,
            i_star,
            bottom=bottom,
            initial_aborts=status.initial_aborts,
            aborted=frozenset(status.aborted),
            hybrid_calls=[
                HybridCall(
                    "trusted_party",
                    k or config.r,
                    status.active_count(config.honest),
                    status.active_count(corrupt),
                    out,
                )
            ],
            transcript=tx,
        )

    def recollect():
        active = tuple(j for j in status.active if j in corrupt)
        again = adversary.reprovide_inputs(active)
        return {j: again.get(j, ABORT) for j in active}

    if len(dropped) >= config.threshold:
        if tx is not None:
            tx.add(1, "premature", "simulator", (1).to_bytes(4, "big"))
        process_abort_phase(status, adversary.late_aborts(1), corrupt, config.threshold, 1, tx, "late_abort")
        return finish(trusted.query(recollect()), 1, None)

    i_star = int(rng.integers(1, config.r + 1))
    x_corrupt = {j: int(submitted[j]) for j in corrupt if j not in dropped}
    sets = visible_sets(config, corrupt, dropped)
    fake = _fake_values(config, x_corrupt, sets, i_star - 1, rng, variant)
    w_s = None
    for i in range(1, config.r + 1):
        if i == i_star:
            w_s = trusted.query(x_corrupt)
        peeked = {J: (fake[i - 1][k] if i < i_star else w_s) for k, J in enumerate(sets)}
        if tx is not None:
            for J, v in peeked.items():
                tx.add(i, "peek", "simulator", encode_set(J) + encode_value(v, width))
        if process_abort_phase(status, adversary.on_peek(i, peeked), corrupt, config.threshold, i, tx):
            if tx is not None:
                tx.add(i, "premature", "simulator", i.to_bytes(4, "big"))
            process_abort_phase(status, adversary.late_aborts(i), corrupt, config.threshold, i, tx, "late_abort")
            if w_s is not None:
                return finish(w_s, i, i_star)
            if variant == RANGE:
                num, den = _branch_fraction(config.p)
                if int(rng.integers(0, den)) < num:
                    # simulation failure: abort every corrupt party
                    return finish(trusted.query({}), i, i_star, bottom=True)
            if i == 1:
                return finish(trusted.query(recollect()), i, i_star)
            active = {j: x for j, x in x_corrupt.items() if j not in status.aborted}
            return finish(trusted.query(active), i, i_star)
        if tx is not None:
            tx.add(i, "main", "simulator", b"proceed")
    return finish(w_s, None, i_star, termination=NORMAL)


def _fake_values(config, x_corrupt, sets, rounds, rng, variant) -> list[list[int]]:
    spec = config.functionality
    if not rounds or not sets:
        return [[] for _ in range(max(rounds, 0))]
    m = config.m
    x = np.zeros(m, dtype=np.int64)
    for j, v in x_corrupt.items():
        x[j - 1] = v
    member = _membership(m, tuple(sets))
    subs = rng.integers(0, spec.domain_size, size=(rounds, len(sets), m))
    ys = np.where(member, x, subs)
    vals = spec.evaluate_indices(spec.index_array(ys), spec.draw_coins(rng, (rounds, len(sets))))
    if variant == RANGE:
        num, den = _branch_fraction(config.p)
        chosen = rng.integers(0, den, size=(rounds, len(sets))) < num
        vals = np.where(chosen, rng.integers(0, spec.range_size, size=(rounds, len(sets))), vals)
    return vals.tolist()


# -- exact real / ideal summaries ------------------------------------------


def _add(dist: dict, key, prob: Fraction) -> None:
    if prob:
        dist[key] = dist.get(key, Fraction(0)) + prob


def exact_summary_distribution(
    config: ProtocolConfig,
    inputs: Sequence[int],
    strategy_factory: Callable[[], object],
    world: str = "real",
    variant: str = DOMAIN,
) -> dict[tuple, Fraction]:
    """Exact distribution of ``(termination class, honest output, bottom)``
    for the dealer protocol (``world="real"``) or its simulation
    (``world="ideal"``).

    The strategy must be deterministic given its view (it may not draw from
    its random stream); it is replayed from scratch along every branch of
    the enumeration over ``i*``, ``w`` and the values it peeks at.
    """
    if world not in ("real", "ideal"):
        raise ParameterError("world must be 'real' or 'ideal'")
    check_variant(variant)
    spec = config.functionality
    corrupt = config.corrupt
    r = config.r
    dist: dict[tuple, Fraction] = {}

    def fresh():
        strat = bind_strategy(strategy_factory(), config, inputs, _no_rng, "dealer", variant)
        answers = strat.provide_inputs()
        return strat, answers

    strat, answers = fresh()
    submitted = [
        answers.get(j, ABORT) if j in corrupt else int(inputs[j - 1]) for j in range(1, config.m + 1)
    ]
    dropped = {j for j, x in enumerate(submitted, start=1) if x is ABORT or not is_valid_input(x, spec)}

    def recollect_dist(strat, status) -> dict:
        active = tuple(j for j in status.active if j in corrupt)
        again = strat.reprovide_inputs(active)
        xs = []
        for j in range(1, config.m + 1):
            if j in status.aborted:
                xs.append(ABORT)
            elif j in corrupt:
                x = again.get(j, ABORT)
                xs.append(x if x is ABORT or is_valid_input(x, spec) else ABORT)
            else:
                xs.append(int(inputs[j - 1]))
        return output_distribution_with_substitutes(spec, xs, ())

    if len(dropped) >= config.threshold:
        status = PartyStatus(config.m, dropped)
        process_abort_phase(status, strat.late_aborts(1), corrupt, config.threshold)
        for z, pz in recollect_dist(strat, status).items():
            _add(dist, ("before", z, False), pz)
        return dist

    x_sub = [ABORT if j in dropped else x for j, x in enumerate(submitted, start=1)]
    w_dist = output_distribution_with_substitutes(spec, x_sub, dropped)
    sets = visible_sets(config, corrupt, dropped)
    pre_dists = [subset_value_distribution(spec, x_sub, J, variant, config.p) for J in sets]
    combos = [
        (tuple(vals), math.prod((dd[v] for dd, v in zip(pre_dists, vals)), start=Fraction(1)))
        for vals in itertools.product(*[sorted(dd) for dd in pre_dists])
    ]
    q_fail = uniform_branch_probability(config.p) if variant == RANGE else Fraction(0)

    def terminal(strat, status, k, i_star, w, prob):
        """Distribution of the honest output after termination in round k."""
        process_abort_phase(status, strat.late_aborts(k), corrupt, config.threshold)
        if k >= i_star and world == "ideal":
            _add(dist, (_cls(k, i_star), w, False), prob)
            return
        if k == 1:
            for z, pz in recollect_dist(strat, status).items():
                cls = _cls(k, i_star)
                if world == "ideal" and q_fail:
                    _add(dist, (cls, z, False), prob * (1 - q_fail) * pz)
                else:
                    _add(dist, (cls, z, False), prob * pz)
            if world == "ideal" and q_fail:
                _add_bottom(dist, prob * q_fail)
            return
        if k - 1 >= i_star:
            _add(dist, (_cls(k, i_star), w, False), prob)
            return
        J = status.active
        if world == "real":
            out = subset_value_distribution(spec, x_sub, J, variant, config.p)
            for z, pz in out.items():
                _add(dist, (_cls(k, i_star), z, False), prob * pz)
        else:
            out = output_distribution_with_substitutes(
                spec, [ABORT if j in status.aborted else x for j, x in enumerate(x_sub, start=1)], ()
            )
            for z, pz in out.items():
                _add(dist, (_cls(k, i_star), z, False), prob * (1 - q_fail) * pz)
            if q_fail:
                _add_bottom(dist, prob * q_fail)

    def _add_bottom(dist, prob):
        # simulation failure: every corrupt input replaced
        out = output_distribution_with_substitutes(
            spec, [ABORT if j in corrupt else x for j, x in enumerate(inputs, start=1)], ()
        )
        for z, pz in out.items():
            _add(dist, ("before", z, True), prob * pz)

    def replay(history):
        strat, _ = fresh()
        status = PartyStatus(config.m, dropped)
        for i, peeked in enumerate(history, start=1):
            if process_abort_phase(status, strat.on_peek(i, peeked), corrupt, config.threshold):
                raise AssertionError("replay diverged")
        return strat, status

    def explore(i_star, w, history, prob):
        i = len(history) + 1
        if i > r:
            _add(dist, ("after", w, False), prob)
            return
        if i < i_star:
            branches = [(dict(zip(sets, vals)), pv) for vals, pv in combos]
        else:
            branches = [({J: w for J in sets}, Fraction(1))]
        for peeked, pv in branches:
            strat, status = replay(history)
            if process_abort_phase(status, strat.on_peek(i, peeked), corrupt, config.threshold):
                terminal(strat, status, i, i_star, w, prob * pv)
            else:
                explore(i_star, w, history + [peeked], prob * pv)

    for i_star in range(1, r + 1):
        for w, pw in w_dist.items():
            explore(i_star, w, [], Fraction(1, r) * pw)
    return dist


def _cls(k: int, i_star: int) -> str:
    if k < i_star:
        return "before"
    return "at" if k == i_star else "after"


def _no_rng():
    raise ParameterError("exact enumeration needs strategies that do not draw randomness")


# -- Monte Carlo -----------------------------------------------------------


@dataclass
class BatchResult:
    summaries: EmpiricalDistribution
    hits: int
    trials: int
    bottoms: int
    premature_before: int
    hybrid_calls: list = field(default_factory=list)

    @property
    def hit_rate(self) -> float:
        return self.hits / self.trials


def run_batch(
    runner: Callable[..., ExecutionResult],
    config: ProtocolConfig,
    inputs: Sequence[int],
    strategy_factory: Callable[[], object],
    trials: int,
    variant: str = DOMAIN,
    start: int = 0,
    keep_calls: bool = False,
) -> BatchResult:
    """Run ``trials`` executions with trial indices ``start, start+1, ...``."""
    summaries = EmpiricalDistribution()
    hits = bottoms = before = 0
    calls = []
    for k in range(start, start + trials):
        res = runner(config, inputs, strategy_factory(), variant, trial=k, record=False)
        summaries.add(res.summary())
        hits += res.hit_special_round
        bottoms += res.bottom
        before += res.termination == PREMATURE and res.termination_class == "before"
        if keep_calls:
            calls.extend(res.hybrid_calls)
    return BatchResult(summaries, hits, trials, bottoms, before, calls)


def guessing_probability(
    config: ProtocolConfig,
    inputs: Sequence[int],
    strategy_factory: Callable[[], object],
    trials: int,
    variant: str = DOMAIN,
    runner: Callable[..., ExecutionResult] = run_dealer_protocol,
) -> tuple[float, float]:
    """Empirical probability of premature termination exactly at ``i*`` and
    its binomial standard deviation."""
    if trials < 1:
        raise ParameterError("need at least one trial")
    batch = run_batch(runner, config, inputs, strategy_factory, trials, variant)
    q = batch.hit_rate
    return q, binomial_sigma(q, trials)


def compare_real_ideal(
    config: ProtocolConfig,
    inputs: Sequence[int],
    strategy_factory: Callable[[], object],
    trials: int,
    variant: str = DOMAIN,
    alpha: Fraction | None = None,
    runner: Callable[..., ExecutionResult] = run_dealer_protocol,
) -> BoundReport:
    """Matched real and ideal batches, compared on the execution summary.

    ``runner`` is the real-world engine (the dealer protocol by default).
    Adds checks of the estimated distance against the formula bound and,
    when ``alpha`` is known (or computable), against ``1/(alpha r)``; the
    guessing probability is checked against ``1/(alpha r)`` as well. Every
    fallback sub-call (fair evaluation or reconstruction) must see an honest
    majority of active parties.
    """
    if trials < 1:
        raise ParameterError("need at least one trial")
    spec = config.functionality
    if alpha is None:
        try:
            alpha = alpha_exact(spec, config, None, inputs, variant)
        except CapacityError:
            alpha = None
    report = bound_formulas(
        config.d, config.g, config.m, config.t, config.r, config.p, variant, alpha, spec.deterministic
    )
    real = run_batch(runner, config, inputs, strategy_factory, trials, variant, keep_calls=True)
    ideal = run_batch(simulate_ideal_dealer, config, inputs, strategy_factory, trials, variant)
    sd = statistical_distance(real.summaries, ideal.summaries)
    noise = 3 * sd_noise(real.summaries, ideal.summaries)
    report.add_check("sd_vs_formula", sd, noise, report.sd_bound)
    q = real.hit_rate
    # share generation is secure with abort and needs no honest majority
    violations = sum(not c.honest_majority for c in real.hybrid_calls if c.kind != SHAREGEN)
    report.add_check("honest_majority_violations", violations, 0, 0)
    report.extra.update(
        {
            "trials": trials,
            "sd_estimate": float(sd),
            "sd_radius": noise,
            "guess_rate": q,
            "bottom_rate": ideal.bottoms / trials,
            "trusted_calls": len(real.hybrid_calls),
        }
    )
    if alpha is not None:
        guess_bound = report.guessing_bound
        if variant == RANGE:
            guess_bound = guess_bound + uniform_branch_probability(config.p)
        report.add_check("sd_vs_guessing_bound", sd, noise, guess_bound)
        report.add_check("guess_vs_bound", q, 3 * binomial_sigma(q, trials), report.guessing_bound)
    return report
