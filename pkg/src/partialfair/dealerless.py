"""Dealer-free protocol over a synchronous broadcast channel.

Setup calls the share generator (ideal model with abort and cheat
detection) until it succeeds, blaming one corrupt party per failed call. In
round ``i`` every active party broadcasts its signed round-``i`` message;
invalid or missing messages make the sender inactive. Once ``m - t``
parties are gone the survivors hand their round ``i - 1`` inner shares to a
trusted reconstruction functionality (or, in round one, recompute ``f``
with a fair trusted functionality). After round ``r`` the members of the
first fully signed qualifying set open their round-``r`` inner shares.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .adversary import ABORT, bind_strategy
from .auth import IdealSignatureProvider, SignatureProvider
from .dealer import (
    DOMAIN,
    PartyStatus,
    check_variant,
    is_valid_input,
    process_abort_phase,
    recollected_inputs,
)
from .errors import HarnessError, ParameterError, ReconstructionError
from .functionality import FunctionalitySpec, ProtocolConfig
from .seeding import Streams, trial_streams
from .sharegen import (
    PartyPackage,
    ShareGenOutput,
    ShareLayout,
    check_inner_share,
    multi_share_gen_with_abort,
    parse_round_message,
    unmask_rows,
)
from .transcript import (
    NORMAL,
    PREMATURE,
    ExecutionResult,
    HybridCall,
    Transcript,
    actor,
    encode_value,
)

SHAREGEN = "sharegen_with_abort"
FAIR_MPC = "fair_mpc"
RECONSTRUCTION = "reconstruction"


def validate_round_message(slot, provider: SignatureProvider, vk: bytes, q: int, i: int, layout: ShareLayout) -> bool:
    """True iff ``slot`` is ``q``'s properly signed message for round ``i``."""
    return parse_round_message(slot, provider, vk, q, i, layout) is not None


def fair_mpc_functionality(
    submissions: Sequence, spec: FunctionalitySpec, rng: np.random.Generator
) -> int:
    """Evaluate ``f`` with fresh coins; non-submitters get uniform inputs."""
    xs = [
        int(x) if x is not ABORT and is_valid_input(x, spec) else int(rng.integers(0, spec.domain_size))
        for x in submissions
    ]
    return spec.sample(xs, rng)


def inner_payload_value(payloads: Sequence[bytes]) -> int:
    acc = bytes(len(payloads[0]))
    for p in payloads:
        acc = bytes(a ^ b for a, b in zip(acc, p))
    return int.from_bytes(acc, "big")


def reconstruction_functionality(
    submissions: Mapping[int, Mapping | None],
    i: int,
    status: PartyStatus,
    layout: ShareLayout,
    provider: SignatureProvider,
    vk: bytes,
) -> tuple[int, list[int]]:
    """Reconstruct ``sigma[i - 1, [m] \\ D]`` from signed inner shares.

    ``submissions`` maps each active party to its shares of round ``i - 1``
    (``J -> blob``) or ``None``. Parties whose submission lacks a properly
    signed share for some ``J`` containing them join ``D`` (ascending).
    Returns the value and the parties added to ``D``.
    """
    prev = i - 1
    payloads: dict[int, dict[tuple, bytes]] = {}
    dropped = []
    for j in status.active:
        shares = submissions.get(j)
        good = {}
        ok = isinstance(shares, Mapping)
        if ok:
            for J in layout.sets:
                if j not in J:
                    continue
                payload = check_inner_share(shares.get(J, b""), provider, vk, prev, J, j)
                if payload is None:
                    ok = False
                    break
                good[J] = payload
        if ok:
            payloads[j] = good
        else:
            dropped.append(j)
    status.aborted.update(dropped)
    J = status.active
    if J not in set(layout.sets):
        raise ReconstructionError(f"survivors {J} do not form a qualifying set")
    return inner_payload_value([payloads[j][J] for j in J]), dropped


def final_reconstruction(
    broadcasts: Mapping[int, Mapping | None],
    status: PartyStatus,
    layout: ShareLayout,
    provider: SignatureProvider,
    vk: bytes,
) -> tuple[int, tuple] | None:
    """Value of the lexicographically first qualifying set inside the active
    parties whose members all opened properly signed round-``r`` shares.
    ``None`` if no such set exists."""
    active = set(status.active)
    r = layout.r
    cache: dict[tuple, bytes | None] = {}

    def payload(J, j):
        if (J, j) not in cache:
            shares = broadcasts.get(j)
            blob = shares.get(J, b"") if isinstance(shares, Mapping) else b""
            cache[(J, j)] = check_inner_share(blob, provider, vk, r, J, j)
        return cache[(J, j)]

    for J in layout.sets:
        if not active.issuperset(J):
            continue
        parts = [payload(J, j) for j in J]
        if all(p is not None for p in parts):
            return inner_payload_value(parts), J
    return None


@dataclass
class _Board:
    """Valid round messages, parsed, per round."""

    rounds: dict[int, dict[int, np.ndarray]] = field(default_factory=dict)


class CorruptView:
    """What the coalition knows: its own packages and all valid broadcasts.

    Rushing: during round ``i`` the honest round-``i`` slots are already
    visible. Everything is computed lazily on request.
    """

    def __init__(self, engine: "_Execution"):
        self._e = engine

    @property
    def active_corrupt(self) -> tuple[int, ...]:
        e = self._e
        return tuple(j for j in sorted(e.config.corrupt) if j not in e.status.aborted)

    @property
    def packages(self) -> dict[int, PartyPackage]:
        return {q: self._e.packages[q] for q in sorted(self._e.config.corrupt) if q in self._e.packages}

    def own_message(self, j: int, i: int) -> bytes:
        return self._e.packages[j].round_message(i)

    def board(self, i: int) -> dict[int, bytes]:
        return dict(self._e.raw_board.get(i, {}))

    def _sources(self, i: int) -> dict[int, np.ndarray]:
        e = self._e
        known = dict(e.board.rounds.get(i, {}))
        for q in self.packages:
            if q not in known:
                known[q] = e.parsed_own(q, i)
        return known

    def inner_blobs(self, j: int, i: int) -> dict[tuple, bytes]:
        e = self._e
        pkg = e.packages[j]
        blobs = unmask_rows(pkg, i, self._sources(i))
        rows = e.layout.holder_rows[j]
        return {e.layout.rows[k][0]: blobs[n].tobytes() for n, k in enumerate(rows)}

    inner_shares = inner_blobs

    def peek(self, i: int) -> "LazyPeek":
        return LazyPeek(self, i)


class LazyPeek(Mapping):
    """``J -> sigma[i, J]`` for the fully corrupt qualifying sets; the values
    are unmasked only when first read."""

    def __init__(self, view: CorruptView, i: int):
        self._view = view
        self._i = i
        corrupt = view._e.config.corrupt
        self._sets = [J for J in view._e.layout.sets if corrupt.issuperset(J)]
        self._values: dict | None = None

    def _compute(self) -> dict:
        if self._values is None:
            e = self._view._e
            width = e.layout.width
            off = 6  # blob length prefix and inner-message length prefix
            per_party = {}
            for j in sorted({j for J in self._sets for j in J}):
                per_party[j] = self._view.inner_blobs(j, self._i)
            self._values = {
                J: inner_payload_value([per_party[j][J][off : off + width] for j in J])
                for J in self._sets
            }
        return self._values

    def __getitem__(self, key):
        return self._compute()[tuple(key)]

    def __iter__(self):
        return iter(self._sets)

    def __len__(self):
        return len(self._sets)


class _Execution:
    def __init__(self, config, inputs, adversary, variant, streams, record, provider_factory):
        self.config = config
        self.inputs = tuple(int(x) for x in inputs)
        self.variant = variant
        self.streams = streams
        self.tx = Transcript() if record else None
        self.provider_factory = provider_factory
        self.adversary = bind_strategy(adversary, config, inputs, lambda: streams.adversary, "dealerless", variant)
        self.status = PartyStatus(config.m)
        self.substitutes: dict[int, int] = {}
        self.calls: list[HybridCall] = []
        self.packages: dict[int, PartyPackage] = {}
        self.board = _Board()
        self.raw_board: dict[int, dict[int, bytes]] = {}
        self.gen: ShareGenOutput | None = None
        self.view = CorruptView(self)

    # -- helpers --

    @property
    def layout(self) -> ShareLayout:
        return self.gen.layout

    def parsed_own(self, q: int, i: int) -> np.ndarray:
        """Complement shares of ``q``'s authentic round-``i`` message."""
        pkg = self.packages[q]
        if pkg.complements is not None:
            return pkg.complements[i - 1]
        return parse_round_message(
            pkg.round_message(i), self.gen.provider, self.gen.keys.verification_key, q, i, self.layout
        )

    def parse_slot(self, q: int, i: int, slot) -> np.ndarray | None:
        pkg = self.packages.get(q)
        if pkg is not None and isinstance(slot, bytes) and slot == pkg.round_message(i):
            # byte-identical to the generator's signed message
            return self.parsed_own(q, i)
        return parse_round_message(slot, self.gen.provider, self.gen.keys.verification_key, q, i, self.layout)

    def _call(self, kind: str, i: int, out=None):
        call = HybridCall(
            kind,
            i,
            self.status.active_count(self.config.honest),
            self.status.active_count(self.config.corrupt),
            out,
        )
        self.calls.append(call)
        return call

    def _log(self, i, phase, who, payload=b""):
        if self.tx is not None:
            self.tx.add(i, phase, who, payload)

    def _result(self, output, termination, k) -> ExecutionResult:
        self._log(k or self.config.r, "output", "honest", encode_value(output, self.config.functionality.output_width))
        return ExecutionResult(
            "dealerless",
            self.variant,
            output,
            termination,
            k,
            None if self.gen is None else self.gen.table.special_round,
            initial_aborts=self.status.initial_aborts,
            aborted=frozenset(self.status.aborted),
            hybrid_calls=self.calls,
            transcript=self.tx,
            table=None if self.gen is None else self.gen.table,
        )

    # -- phases --

    def setup(self) -> bool:
        config = self.config
        honest = {j: self.inputs[j - 1] for j in config.honest}
        while True:
            if len(self.status.initial_aborts) >= config.threshold:
                return False
            provider = self.provider_factory(self.streams)
            self._call(SHAREGEN, 0)
            outcome = multi_share_gen_with_abort(
                config,
                self.adversary,
                honest,
                self.status.initial_aborts,
                self.variant,
                self.streams,
                provider,
                self.substitutes,
            )
            if outcome.completed:
                self.gen = outcome.output
                self.packages = outcome.packages
                self._log(0, "setup", "sharegen", b"ok")
                for q in sorted(self.packages):
                    if q in config.corrupt:
                        self._log(0, "package", actor(q), self.packages[q].to_bytes())
                return True
            j = outcome.blamed
            self._log(0, "blame", actor(j))
            # substitute once, when blamed
            self.substitutes[j] = int(self.streams.substitution.integers(0, config.d))
            self.status.initial_aborts = self.status.initial_aborts | {j}
            self.status.aborted.add(j)

    def broadcast_round(self, i: int) -> bool:
        """Run round ``i``; True means premature termination."""
        config = self.config
        raw = {}
        parsed = {}
        for j in self.status.active:
            if j in config.corrupt:
                continue
            msg = self.packages[j].round_message(i)
            raw[j] = msg
            parsed[j] = self.parsed_own(j, i)
            self._log(i, "broadcast", actor(j), msg)
        self.raw_board[i] = raw
        self.board.rounds[i] = parsed
        answers = self.adversary.on_broadcast(i, self.view)
        active_corrupt = set(self.view.active_corrupt)
        if not set(answers) <= active_corrupt:
            raise HarnessError("adversary wrote slots of parties it does not control (or inactive ones)")
        inactive = []
        for j in sorted(active_corrupt):
            slot = answers.get(j)
            self._log(i, "respond", actor(j), slot if isinstance(slot, (bytes, bytearray)) else b"")
            comp = self.parse_slot(j, i, slot)
            if comp is None:
                inactive.append(j)
            else:
                raw[j] = bytes(slot)
                parsed[j] = comp
        return process_abort_phase(self.status, inactive, config.corrupt, config.threshold, i, self.tx)

    def honest_shares(self, j: int, i: int) -> dict[tuple, bytes]:
        pkg = self.packages[j]
        blobs = unmask_rows(pkg, i, self.board.rounds[i])
        rows = self.layout.holder_rows[j]
        return {self.layout.rows[k][0]: blobs[n].tobytes() for n, k in enumerate(rows)}

    def fair_mpc(self, i: int) -> int:
        config = self.config
        late = self.adversary.late_aborts(i)
        process_abort_phase(self.status, late, config.corrupt, config.threshold, i, self.tx, "late_abort")
        active_corrupt = [j for j in self.status.active if j in config.corrupt]
        answers = self.adversary.reprovide_inputs(tuple(active_corrupt))
        subs = recollected_inputs(config.functionality, self.status, self.inputs, config.corrupt, answers)
        for j, x in self.substitutes.items():
            subs[j - 1] = x
        call = self._call(FAIR_MPC, i)
        out = fair_mpc_functionality(subs, config.functionality, self.streams.substitution)
        self.calls[-1] = HybridCall(call.kind, call.round, call.active_honest, call.active_corrupt, out)
        self._log(i, "hybrid", FAIR_MPC)
        return out

    def reconstruct(self, i: int) -> int:
        config, gen = self.config, self.gen
        answers = self.adversary.on_reconstruction_input(i, self.view)
        active_corrupt = set(self.view.active_corrupt)
        if not set(answers) <= active_corrupt:
            raise HarnessError("reconstruction input for parties the adversary does not control")
        submissions = {}
        for j in self.status.active:
            submissions[j] = answers.get(j) if j in config.corrupt else self.honest_shares(j, i - 1)
        call = self._call(RECONSTRUCTION, i)
        out, dropped = reconstruction_functionality(
            submissions, i, self.status, self.layout, gen.provider, gen.keys.verification_key
        )
        for j in dropped:
            self._log(i, "late_abort", actor(j))
        self.calls[-1] = HybridCall(call.kind, call.round, call.active_honest, call.active_corrupt, out)
        self._log(i, "hybrid", RECONSTRUCTION)
        return out

    def premature(self, i: int) -> ExecutionResult:
        self._log(i, "premature", "honest", i.to_bytes(4, "big"))
        out = self.fair_mpc(i) if i == 1 else self.reconstruct(i)
        return self._result(out, PREMATURE, i)

    def finish(self) -> ExecutionResult:
        config, gen = self.config, self.gen
        r = config.r
        answers = self.adversary.on_final_broadcast(self.view)
        active_corrupt = set(self.view.active_corrupt)
        if not set(answers) <= active_corrupt:
            raise HarnessError("final broadcast for parties the adversary does not control")
        broadcasts = {}
        for j in self.status.active:
            broadcasts[j] = answers.get(j) if j in config.corrupt else self.honest_shares(j, r)
        found = final_reconstruction(broadcasts, self.status, self.layout, gen.provider, gen.keys.verification_key)
        if found is None:
            # unreachable while the honest parties alone form a qualifying set
            return self.premature(r)
        value, J = found
        self._log(r, "final", "honest", bytes(J))
        return self._result(value, NORMAL, None)

    def run(self) -> ExecutionResult:
        if not self.setup():
            self._log(1, "premature", "honest", (1).to_bytes(4, "big"))
            return self._result(self.fair_mpc(1), PREMATURE, 1)
        for i in range(1, self.config.r + 1):
            if self.broadcast_round(i):
                return self.premature(i)
            self._log(i, "main", "honest", b"proceed")
        return self.finish()


def ideal_provider(streams: Streams) -> SignatureProvider:
    return IdealSignatureProvider(streams.auth)


def run_mpc(
    config: ProtocolConfig,
    inputs: Sequence[int],
    adversary=None,
    variant: str = DOMAIN,
    *,
    trial: int = 0,
    record: bool = True,
    streams: Streams | None = None,
    provider_factory=ideal_provider,
) -> ExecutionResult:
    """One execution of the dealer-free protocol.

    ``inputs`` are the true inputs of all parties. ``provider_factory``
    builds the signature provider of each share-generation call.
    """
    check_variant(variant)
    spec = config.functionality
    if len(inputs) != config.m or not all(is_valid_input(x, spec) for x in inputs):
        raise ParameterError("inputs must hold one domain value per party")
    if streams is None:
        streams = trial_streams(config.master_seed, trial)
    return _Execution(config, inputs, adversary, variant, streams, record, provider_factory).run()
