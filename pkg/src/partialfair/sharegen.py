"""Share generation for the dealer-free protocol.

The generator computes the same round-value table as the dealer, splits
every value ``sigma[i, J]`` into XOR shares among the members of ``J``
(inner sharing), signs each inner share together with ``(i, J, j)``, and
shares every signed inner share once more with respect to its holder
(outer sharing, threshold ``t + 1``). The holder keeps the masking share;
the complement shares for round ``i`` are packed into one signed message
per party, which that party broadcasts in round ``i``.

:func:`multi_share_gen_with_abort` wraps the computation in the ideal model
with abort and cheat detection: the adversary may stop it, but then one of
the corrupt parties is blamed.
"""

from __future__ import annotations

import functools
import struct
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .adversary import ABORT
from .auth import (
    IdealSignatureProvider,
    KeyPair,
    SignatureProvider,
    SignedPayload,
    decode_inner_message,
    inner_prefix,
    inner_suffix,
)
from .dealer import DOMAIN, RoundValueTable, build_value_table, check_variant, is_valid_input
from .errors import HarnessError, ParameterError, ReconstructionError
from .functionality import ProtocolConfig, qualifying_sets
from .seeding import Streams
from .sharing import random_bytes, reconstruct_rows, share_rows_with_respect_to

_HEADER = struct.Struct(">BIHH")  # party, round, share count, blob length


@dataclass(frozen=True, eq=False)
class ShareLayout:
    """Canonical order of the signed inner shares of one round.

    Rows are the pairs ``(J, j)`` with ``j`` in ``J``, sorted by ``J``
    (lexicographically) and then by ``j``.
    """

    m: int
    t: int
    r: int
    sets: tuple
    width: int
    tag_len: int

    @functools.cached_property
    def rows(self) -> tuple[tuple[tuple, int], ...]:
        return tuple((J, j) for J in self.sets for j in J)

    @functools.cached_property
    def set_offsets(self) -> np.ndarray:
        return np.cumsum([0] + [len(J) for J in self.sets[:-1]]).astype(np.intp)

    @functools.cached_property
    def holder_rows(self) -> dict[int, np.ndarray]:
        return {
            q: np.array([k for k, (_, j) in enumerate(self.rows) if j == q], dtype=np.intp)
            for q in range(1, self.m + 1)
        }

    @functools.cached_property
    def message_rows(self) -> dict[int, np.ndarray]:
        return {
            q: np.array([k for k, (_, j) in enumerate(self.rows) if j != q], dtype=np.intp)
            for q in range(1, self.m + 1)
        }

    @functools.cached_property
    def message_position(self) -> dict[int, np.ndarray]:
        """``message_position[q][row]``: index of ``row`` inside ``q``'s message."""
        out = {}
        for q, rows in self.message_rows.items():
            pos = np.full(len(self.rows), -1, dtype=np.intp)
            pos[rows] = np.arange(len(rows))
            out[q] = pos
        return out

    @functools.cached_property
    def message_len(self) -> int:
        longest = max((len(J) for J in self.sets), default=0)
        return 4 + self.width + 5 + longest + 1

    @property
    def blob_len(self) -> int:
        return 2 + self.message_len + 2 + self.tag_len

    def suffixes(self, i: int) -> list[bytes]:
        return [inner_suffix(i, J, j) for J, j in self.rows]

    @functools.cached_property
    def message_lengths(self) -> np.ndarray:
        return np.array([4 + self.width + 5 + len(J) + 1 for J, _ in self.rows], dtype=np.intp)

    @functools.cached_property
    def signature_columns(self) -> np.ndarray:
        """Column indices of each row's signature bytes inside its blob."""
        start = 2 + self.message_lengths + 2
        return start[:, None] + np.arange(self.tag_len, dtype=np.intp)

    @functools.cached_property
    def message_spans(self) -> list[tuple[int, int]]:
        """Byte ranges of the signed messages inside the flattened blobs."""
        L = self.blob_len
        return [
            (n * L + 2, n * L + 2 + int(lm))
            for n, lm in enumerate(np.tile(self.message_lengths, self.r))
        ]

    @functools.cached_property
    def signature_positions(self) -> np.ndarray:
        """Flat positions of all signature bytes, row-major over (round, row)."""
        n = self.r * len(self.rows)
        cols = np.tile(self.signature_columns, (self.r, 1))
        return (np.arange(n, dtype=np.intp)[:, None] * self.blob_len + cols).reshape(-1)

    @functools.cached_property
    def blob_template(self) -> np.ndarray:
        """Blobs of all rounds with zero payloads and zero signatures."""
        out = np.zeros((self.r, len(self.rows), self.blob_len), dtype=np.uint8)
        prefix = inner_prefix(self.width) + bytes(self.width)
        for i in range(1, self.r + 1):
            for k, suffix in enumerate(self.suffixes(i)):
                msg = prefix + suffix
                body = struct.pack(">H", len(msg)) + msg + struct.pack(">H", self.tag_len)
                out[i - 1, k, : len(body)] = np.frombuffer(body, dtype=np.uint8)
        out.setflags(write=False)
        return out

    def row_of(self, J: Iterable[int], j: int) -> int:
        return self._row_index[(tuple(sorted(J)), j)]

    @functools.cached_property
    def _row_index(self) -> dict:
        return {row: k for k, row in enumerate(self.rows)}

    def rows_of_set(self, J) -> list[int]:
        return [self.row_of(J, j) for j in J]


@functools.lru_cache(maxsize=128)
def share_layout(m: int, t: int, r: int, excluded: frozenset, width: int, tag_len: int) -> ShareLayout:
    return ShareLayout(m, t, r, qualifying_sets(m, t, excluded), width, tag_len)


# -- blobs -----------------------------------------------------------------


def encode_blob(message: bytes, signature: bytes, blob_len: int) -> bytes:
    body = struct.pack(">H", len(message)) + message + struct.pack(">H", len(signature)) + signature
    if len(body) > blob_len:
        raise ParameterError("signed share longer than the layout allows")
    return body + bytes(blob_len - len(body))


def decode_blob(blob: bytes) -> tuple[bytes, bytes]:
    """Split a padded blob into ``(message, signature)``; raises ``ValueError``."""
    blob = bytes(blob)
    if len(blob) < 2:
        raise ValueError("truncated blob")
    (lm,) = struct.unpack_from(">H", blob, 0)
    if len(blob) < 4 + lm:
        raise ValueError("truncated blob")
    msg = blob[2 : 2 + lm]
    (ls,) = struct.unpack_from(">H", blob, 2 + lm)
    end = 4 + lm + ls
    if len(blob) < end or any(blob[end:]):
        raise ValueError("bad signature length or padding")
    return msg, blob[4 + lm : end]


@dataclass(frozen=True)
class SignedInnerShare:
    payload: bytes
    round: int
    subset: tuple
    holder: int
    signature: bytes

    @property
    def message(self) -> bytes:
        return inner_prefix(len(self.payload)) + self.payload + inner_suffix(self.round, self.subset, self.holder)


def parse_inner_share(blob: bytes) -> SignedInnerShare:
    msg, sig = decode_blob(blob)
    payload, i, J, j = decode_inner_message(msg)
    return SignedInnerShare(payload, i, J, j, sig)


def check_inner_share(
    blob, provider: SignatureProvider, vk: bytes, i: int, J: tuple, j: int
) -> bytes | None:
    """Payload of a properly signed inner share for ``(i, J, j)``, else None."""
    try:
        msg, sig = decode_blob(blob)
        payload, i2, J2, j2 = decode_inner_message(msg)
    except (ValueError, TypeError):
        return None
    if (i2, J2, j2) != (i, tuple(J), j):
        return None
    if not provider.verify(msg, sig, vk):
        return None
    return payload


# -- packages ----------------------------------------------------------------


@dataclass(eq=False)
class PartyPackage:
    """What party ``holder`` receives from the share generator."""

    holder: int
    verification_key: bytes
    round_messages: list[bytes]
    masking: np.ndarray  # (r, own rows, blob_len)
    layout: ShareLayout
    complements: np.ndarray | None = None  # (r, message rows, blob_len), parsed round messages

    def round_message(self, i: int) -> bytes:
        return self.round_messages[i - 1]

    def masking_share(self, i: int, J: Iterable[int]) -> bytes:
        row = self.layout.row_of(J, self.holder)
        k = int(np.searchsorted(self.layout.holder_rows[self.holder], row))
        return self.masking[i - 1, k].tobytes()

    def to_bytes(self) -> bytes:
        parts = [struct.pack(">BH", self.holder, len(self.verification_key)), self.verification_key]
        for msg in self.round_messages:
            parts += [struct.pack(">I", len(msg)), msg]
        parts.append(self.masking.tobytes())
        return b"".join(parts)


@dataclass(eq=False)
class ShareGenOutput:
    table: RoundValueTable
    packages: dict[int, PartyPackage]
    layout: ShareLayout
    keys: KeyPair
    provider: SignatureProvider
    inner: np.ndarray = field(repr=False, default=None)  # (r, rows, width), for tests


def build_round_message(q: int, i: int, complements: np.ndarray, signing_key: bytes, provider: SignatureProvider) -> bytes:
    """Signed envelope of ``q``'s complement shares for round ``i`` in
    canonical row order. ``complements`` has shape ``(rows, blob_len)``."""
    complements = np.asarray(complements, dtype=np.uint8)
    if complements.ndim != 2:
        raise ParameterError("complement shares must be a (rows, blob_len) array")
    count, width = complements.shape
    body = _HEADER.pack(q, i, count, width) + complements.tobytes()
    return provider.sign(body, signing_key).to_bytes()


def parse_round_message(
    slot, provider: SignatureProvider, vk: bytes, q: int, i: int, layout: ShareLayout
) -> np.ndarray | None:
    """Complement shares of a valid round message, or None."""
    if not isinstance(slot, (bytes, bytearray)):
        return None
    try:
        signed = SignedPayload.from_bytes(bytes(slot))
    except ValueError:
        return None
    body = signed.message
    if len(body) < _HEADER.size:
        return None
    q2, i2, count, width = _HEADER.unpack_from(body)
    expected = len(layout.message_rows[q])
    if (q2, i2, count, width) != (q, i, expected, layout.blob_len):
        return None
    if len(body) != _HEADER.size + count * width:
        return None
    if not provider.verify(body, signed.signature, vk):
        return None
    return np.frombuffer(body, dtype=np.uint8, offset=_HEADER.size).reshape(count, width)


def multi_share_gen(
    config: ProtocolConfig,
    inputs: Sequence[int],
    initial_aborts: Iterable[int],
    variant: str = DOMAIN,
    streams: Streams | None = None,
    provider: SignatureProvider | None = None,
    *,
    value_rng: np.random.Generator | None = None,
    sharing_rng: np.random.Generator | None = None,
) -> ShareGenOutput:
    """Compute every party's package.

    ``inputs`` holds one value per party; entries of aborted parties that
    are not valid inputs are replaced by uniform ones. The value table is
    drawn exactly as the dealer would draw it from the same stream.
    """
    check_variant(variant)
    spec = config.functionality
    m, t, r = config.m, config.t, config.r
    excluded = frozenset(initial_aborts)
    if len(excluded) >= config.threshold:
        raise ParameterError("too many initial aborts for share generation")
    if len(inputs) != m:
        raise ParameterError(f"expected {m} inputs")
    if value_rng is None or sharing_rng is None:
        if streams is None:
            raise ParameterError("need streams or explicit generators")
        value_rng = value_rng or streams.dealer
        sharing_rng = sharing_rng or streams.sharing
    if provider is None:
        provider = IdealSignatureProvider(streams.auth if streams is not None else sharing_rng)

    effective = []
    for j, x in enumerate(inputs, start=1):
        if not is_valid_input(x, spec):
            if j not in excluded:
                raise ParameterError(f"party {j} has no valid input")
            x = int(sharing_rng.integers(0, spec.domain_size))
        effective.append(int(x))
    table = build_value_table(config, effective, excluded, value_rng, variant)

    keys = provider.gen(streams.auth if streams is not None else sharing_rng)
    width = spec.output_width
    layout = share_layout(m, t, r, excluded, width, provider.tag_len)
    n_rows = len(layout.rows)

    # inner XOR shares: random everywhere, then fix the last member of each set
    inner = random_bytes(sharing_rng, (r, n_rows, width)).copy()
    if n_rows:
        sigma = _value_bytes(table.values, width)  # (r, sets, width)
        acc = np.bitwise_xor.reduceat(inner, layout.set_offsets, axis=1)
        last = layout.set_offsets + np.array([len(J) - 1 for J in layout.sets], dtype=np.intp)
        inner[:, last] ^= acc ^ sigma

    # signed inner shares, laid out as fixed-length blobs
    blob_len = layout.blob_len
    blobs = layout.blob_template.copy()
    blobs[:, :, 6 : 6 + width] = inner
    blobs = blobs.reshape(r * n_rows, blob_len)
    raw = blobs.tobytes()
    messages = [raw[a:b] for a, b in layout.message_spans]
    sigs = provider.sign_many(messages, keys.signing_key)
    if sigs:
        sig_arr = np.frombuffer(b"".join(sigs), dtype=np.uint8)
        if sig_arr.size != len(sigs) * layout.tag_len:
            raise ParameterError("signature length differs from the provider's tag length")
        blobs.reshape(-1)[layout.signature_positions] = sig_arr

    mask, values = share_rows_with_respect_to(blobs, t + 1, m, sharing_rng)
    mask = mask.reshape(r, n_rows, blob_len)
    values = values.reshape(m, r, n_rows, blob_len)

    packages = {}
    for q in range(1, m + 1):
        if q in excluded:
            continue
        complements = values[q - 1][:, layout.message_rows[q]]
        count = complements.shape[1]
        bodies = [
            _HEADER.pack(q, i, count, blob_len) + complements[i - 1].tobytes() for i in range(1, r + 1)
        ]
        tags = provider.sign_many(bodies, keys.signing_key)
        msgs = [SignedPayload(body, tag).to_bytes() for body, tag in zip(bodies, tags)]
        packages[q] = PartyPackage(
            q, keys.verification_key, msgs, mask[:, layout.holder_rows[q]], layout, complements
        )
    return ShareGenOutput(table, packages, layout, keys, provider, inner)


def _value_bytes(values: np.ndarray, width: int) -> np.ndarray:
    v = values.astype(np.uint64)
    shifts = np.arange(width - 1, -1, -1, dtype=np.uint64) * np.uint64(8)
    return ((v[..., None] >> shifts) & np.uint64(0xFF)).astype(np.uint8)


def unmask_rows(
    package: PartyPackage,
    i: int,
    complements: Mapping[int, np.ndarray],
    rows: np.ndarray | None = None,
) -> np.ndarray:
    """Recover the blobs of ``package.holder``'s inner shares of round ``i``.

    ``complements`` maps a sender to the complement array of its round-``i``
    message. The first ``t`` senders other than the holder (ascending) are
    used. Returns shape ``(len(rows), blob_len)``.
    """
    layout = package.layout
    j = package.holder
    own = layout.holder_rows[j]
    if rows is None:
        rows = own
    senders = sorted(q for q in complements if q != j)[: layout.t]
    if len(senders) < layout.t:
        raise ReconstructionError(
            f"party {j} has {len(senders)} complement shares, needs {layout.t}"
        )
    pos = layout.message_position
    stack = np.stack([complements[q][pos[q][rows]] for q in senders])
    local = np.searchsorted(own, rows)
    return reconstruct_rows(senders, stack) ^ package.masking[i - 1, local]


def unmask_inner_share(
    package: PartyPackage, i: int, J: Iterable[int], complements: Mapping[int, np.ndarray]
) -> SignedInnerShare:
    """Signed inner share of ``sigma[i, J]`` held by ``package.holder``."""
    row = package.layout.row_of(J, package.holder)
    blob = unmask_rows(package, i, complements, np.array([row], dtype=np.intp))[0]
    try:
        return parse_inner_share(blob.tobytes())
    except ValueError as exc:
        raise ReconstructionError(f"unmasked share does not parse: {exc}") from exc


@dataclass(frozen=True)
class CheatDetectionOutcome:
    """``packages`` on success; otherwise ``blamed`` names a corrupt party."""

    packages: dict | None = None
    blamed: int | None = None
    output: ShareGenOutput | None = None

    @property
    def completed(self) -> bool:
        return self.blamed is None


def multi_share_gen_with_abort(
    config: ProtocolConfig,
    adversary,
    honest_inputs: Mapping[int, int],
    initial_aborts: Iterable[int] = (),
    variant: str = DOMAIN,
    streams: Streams | None = None,
    provider: SignatureProvider | None = None,
    substitutes: Mapping[int, int] | None = None,
) -> CheatDetectionOutcome:
    """One call of the share generator in the ideal model with abort and
    cheat detection. ``adversary`` must already be bound. Parties in
    ``initial_aborts`` use ``substitutes`` (or fresh uniform inputs)."""
    excluded = frozenset(initial_aborts)
    corrupt = config.corrupt - excluded
    answers = adversary.provide_inputs()
    if not set(answers) <= config.corrupt:
        raise HarnessError("adversary submitted inputs for honest parties")
    spec = config.functionality
    bad = [j for j in sorted(corrupt) if answers.get(j, ABORT) is ABORT or not is_valid_input(answers.get(j), spec)]
    if bad:
        return CheatDetectionOutcome(blamed=bad[0])
    substitutes = dict(substitutes or {})
    inputs = []
    for j in range(1, config.m + 1):
        if j in excluded:
            inputs.append(substitutes.get(j, ABORT))
        elif j in corrupt:
            inputs.append(int(answers[j]))
        else:
            inputs.append(int(honest_inputs[j]))
    out = multi_share_gen(config, inputs, excluded, variant, streams, provider)
    verdict = adversary.on_packages({q: out.packages[q] for q in sorted(corrupt)})
    if verdict is None:
        return CheatDetectionOutcome(packages=out.packages, output=out)
    if isinstance(verdict, bool) or not isinstance(verdict, (int, np.integer)) or verdict not in corrupt:
        raise HarnessError(f"adversary blamed {verdict!r}, which it does not control")
    return CheatDetectionOutcome(blamed=int(verdict))
