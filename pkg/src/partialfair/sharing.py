"""Byte-wise secret sharing over GF(2^8).

Schemes: XOR k-out-of-k, Shamir alpha-out-of-m, share completion, and
sharing *with respect to* a designated party (a 2-out-of-2 additive split
whose second half is Shamir-shared among everybody else).

The field uses the reduction polynomial x^8 + x^4 + x^3 + x + 1 (0x11B).
Party ``j`` is always evaluated at the field point ``j``, so ``m <= 255``.

Randomness is consumed exclusively through ``rng.bytes(n)``. The layout is
part of the contract (tests enumerate it): Shamir draws its ``alpha - 1``
non-constant coefficients as consecutive rows of ``len(secret)`` bytes,
lowest degree first.
"""

from __future__ import annotations

import math

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

POLY = 0x11B
MAX_PARTIES = 255

XOR = "xor"
SHAMIR = "shamir"
MASKING = "masking"
COMPLEMENT = "complement"
SCHEME_TAGS = (XOR, SHAMIR, MASKING, COMPLEMENT)


def _build_tables():
    exp = np.zeros(512, dtype=np.int64)
    log = np.zeros(256, dtype=np.int64)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        # multiply by the generator 3 = x + 1
        x ^= (x << 1) ^ (POLY if x & 0x80 else 0)
        x &= 0xFF
    exp[255:510] = exp[:255]
    a = np.arange(256)
    mul = exp[(log[:, None] + log[None, :])].astype(np.uint8)
    mul[0, :] = 0
    mul[:, 0] = 0
    inv = np.zeros(256, dtype=np.int64)
    inv[1:] = exp[255 - log[a[1:]]]
    return exp, log, mul, inv


_EXP, _LOG, MUL, _INV = _build_tables()


def gf_mul(a: int, b: int) -> int:
    return int(MUL[a, b])


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(256)")
    return int(_INV[a])


def gf_pow(a: int, e: int) -> int:
    out = 1
    for _ in range(e):
        out = int(MUL[out, a])
    return out


def lagrange_at_zero(points: Sequence[int]) -> list[int]:
    """Coefficients ``c_k`` with ``f(0) = sum c_k f(x_k)`` for distinct nonzero points."""
    coeffs = []
    for k, xk in enumerate(points):
        num, den = 1, 1
        for l, xl in enumerate(points):
            if l != k:
                num = int(MUL[num, xl])
                den = int(MUL[den, xk ^ xl])
        coeffs.append(int(MUL[num, _INV[den]]))
    return coeffs


def lagrange_at(points: Sequence[int], x: int) -> list[int]:
    """Coefficients for evaluating the interpolating polynomial at ``x``."""
    coeffs = []
    for k, xk in enumerate(points):
        num, den = 1, 1
        for l, xl in enumerate(points):
            if l != k:
                num = int(MUL[num, x ^ xl])
                den = int(MUL[den, xk ^ xl])
        coeffs.append(int(MUL[num, _INV[den]]))
    return coeffs


def combine(coeffs: Sequence[int], rows: np.ndarray) -> np.ndarray:
    """``XOR_k coeffs[k] * rows[k]`` along the first axis."""
    out = np.zeros(rows.shape[1:], dtype=np.uint8)
    for c, row in zip(coeffs, rows):
        if c:
            out ^= MUL[c].take(row)
    return out


def random_bytes(rng, shape) -> np.ndarray:
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    return np.frombuffer(rng.bytes(math.prod(shape)), dtype=np.uint8).reshape(shape)


def eval_polys(constant: np.ndarray, coeffs: np.ndarray, points: Sequence[int]) -> np.ndarray:
    """Evaluate polynomials ``constant + sum_k coeffs[k] x^(k+1)`` at each point.

    ``constant`` has shape ``S`` and ``coeffs`` shape ``(deg,) + S``; the
    result has shape ``(len(points),) + S``.
    """
    out = np.empty((len(points),) + constant.shape, dtype=np.uint8)
    for n, x in enumerate(points):
        acc = constant.copy()
        xp = 1
        for row in coeffs:
            xp = int(MUL[xp, x])
            acc ^= MUL[xp].take(row)
        out[n] = acc
    return out


# -- share objects --------------------------------------------------------


@dataclass(frozen=True)
class IndexedShare:
    holder_index: int
    payload: bytes
    scheme_tag: str

    def __post_init__(self):
        if self.scheme_tag not in SCHEME_TAGS:
            raise ParameterError(f"unknown scheme tag {self.scheme_tag!r}")
        if not 1 <= self.holder_index <= MAX_PARTIES:
            raise ParameterError(f"holder index {self.holder_index} out of range")

    def as_record(self) -> str:
        return f"{self.holder_index} {self.scheme_tag} {self.payload.hex()}"


def _secret_array(secret) -> np.ndarray:
    if isinstance(secret, np.ndarray):
        arr = secret.astype(np.uint8, copy=False)
    else:
        arr = np.frombuffer(bytes(secret), dtype=np.uint8)
    if arr.size == 0:
        raise ParameterError("secret must be a non-empty byte string")
    return arr


def _payloads(shares: Sequence[IndexedShare]) -> np.ndarray:
    lengths = {len(s.payload) for s in shares}
    if len(lengths) != 1:
        raise ParameterError("share payload lengths differ")
    return np.stack([np.frombuffer(s.payload, dtype=np.uint8) for s in shares])


def _check_distinct(shares: Sequence[IndexedShare]) -> None:
    idx = [s.holder_index for s in shares]
    if len(set(idx)) != len(idx):
        raise ParameterError("duplicate holder index")


# -- XOR k-out-of-k -------------------------------------------------------


def xor_share(secret: bytes, k: int, rng) -> list[IndexedShare]:
    sec = _secret_array(secret)
    if k < 1:
        raise ParameterError("k must be at least 1")
    rand = random_bytes(rng, (k - 1, sec.size))
    last = np.bitwise_xor.reduce(rand, axis=0) ^ sec if k > 1 else sec
    payloads = list(rand) + [last]
    return [IndexedShare(j + 1, bytes(p), XOR) for j, p in enumerate(payloads)]


def xor_reconstruct(shares: Sequence[IndexedShare]) -> bytes:
    if not shares:
        raise ParameterError("need at least one share")
    return np.bitwise_xor.reduce(_payloads(shares), axis=0).tobytes()


# -- Shamir ---------------------------------------------------------------


def _check_threshold(threshold: int, party_count: int) -> None:
    if not 1 <= party_count <= MAX_PARTIES:
        raise ParameterError(f"party count must be in [1, {MAX_PARTIES}]")
    if not 1 <= threshold <= party_count:
        raise ParameterError(f"threshold {threshold} outside [1, {party_count}]")


def shamir_share(secret: bytes, threshold: int, party_count: int, rng) -> list[IndexedShare]:
    """Degree ``threshold - 1`` sharing; party j holds the evaluation at j."""
    sec = _secret_array(secret)
    _check_threshold(threshold, party_count)
    coeffs = random_bytes(rng, (threshold - 1, sec.size))
    points = list(range(1, party_count + 1))
    values = eval_polys(sec, coeffs, points)
    return [IndexedShare(j, values[j - 1].tobytes(), SHAMIR) for j in points]


def shamir_reconstruct(shares: Sequence[IndexedShare], threshold: int) -> bytes:
    """Interpolate at 0 from the first ``threshold`` shares by ascending index.

    Consistency of the remaining shares is not checked.
    """
    if threshold < 1:
        raise ParameterError("threshold must be at least 1")
    _check_distinct(shares)
    if len(shares) < threshold:
        raise ParameterError(f"need {threshold} shares, got {len(shares)}")
    chosen = sorted(shares, key=lambda s: s.holder_index)[:threshold]
    rows = _payloads(chosen)
    coeffs = lagrange_at_zero([s.holder_index for s in chosen])
    return combine(coeffs, rows).tobytes()


def shamir_complete(
    partial: Sequence[IndexedShare], secret: bytes, threshold: int, party_count: int, rng
) -> list[IndexedShare]:
    """Uniformly random full sharing of ``secret`` extending ``partial``.

    ``threshold - 1 - len(partial)`` free points (the lowest unused indices)
    get uniform values; together with ``(0, secret)`` and the given shares
    they pin down a unique polynomial of degree ``threshold - 1``.
    """
    sec = _secret_array(secret)
    _check_threshold(threshold, party_count)
    _check_distinct(partial)
    if len(partial) >= threshold:
        raise ParameterError("completion needs fewer than threshold shares")
    if any(not 1 <= s.holder_index <= party_count for s in partial):
        raise ParameterError("share index outside [1, party_count]")
    if any(len(s.payload) != sec.size for s in partial):
        raise ParameterError("partial shares and secret differ in length")
    given = {s.holder_index: np.frombuffer(s.payload, dtype=np.uint8) for s in partial}
    free = [j for j in range(1, party_count + 1) if j not in given][: threshold - 1 - len(given)]
    rand = random_bytes(rng, (len(free), sec.size))
    known_points = [0] + sorted(given) + free
    known_rows = np.stack([sec] + [given[j] for j in sorted(given)] + list(rand))
    out = []
    for j in range(1, party_count + 1):
        if j in given:
            row = given[j]
        else:
            row = combine(lagrange_at(known_points, j), known_rows)
        out.append(IndexedShare(j, row.tobytes(), SHAMIR))
    return out


# -- sharing with respect to a designated party --------------------------


def share_with_respect_to(
    secret: bytes, special_index: int, threshold: int, party_count: int, rng
) -> tuple[IndexedShare, list[IndexedShare]]:
    """Return the masking share of ``special_index`` and the complement shares.

    The masking share is uniform; the complement ``secret XOR mask`` is
    Shamir-shared with threshold ``threshold - 1`` among the other parties.
    """
    sec = _secret_array(secret)
    if not 1 <= special_index <= party_count:
        raise ParameterError(f"special index {special_index} outside [1, {party_count}]")
    if not 2 <= threshold <= party_count or party_count > MAX_PARTIES:
        raise ParameterError(f"threshold {threshold} outside [2, {party_count}]")
    mask = random_bytes(rng, sec.size)
    coeffs = random_bytes(rng, (threshold - 2, sec.size))
    others = [l for l in range(1, party_count + 1) if l != special_index]
    values = eval_polys(sec ^ mask, coeffs, others)
    masking = IndexedShare(special_index, mask.tobytes(), MASKING)
    complements = [IndexedShare(l, v.tobytes(), COMPLEMENT) for l, v in zip(others, values)]
    return masking, complements


def reconstruct_with_respect_to(
    masking: IndexedShare | None, complements: Sequence[IndexedShare], threshold: int
) -> bytes:
    if masking is None:
        raise ParameterError("the masking share is required")
    if threshold < 2:
        raise ParameterError("threshold must be at least 2")
    if masking.holder_index in {c.holder_index for c in complements}:
        raise ParameterError("complement shares must come from other parties")
    inner = shamir_reconstruct(complements, threshold - 1)
    if len(inner) != len(masking.payload):
        raise ParameterError("masking and complement lengths differ")
    return bytes(a ^ b for a, b in zip(masking.payload, inner))


# -- vectorised forms used by the share generator ------------------------


def share_rows_with_respect_to(
    blobs: np.ndarray, threshold: int, party_count: int, rng
) -> tuple[np.ndarray, np.ndarray]:
    """Share every row of ``blobs`` (shape ``(N, L)``) with respect to some party.

    Returns ``(masks, values)`` with ``masks`` of shape ``(N, L)`` and
    ``values`` of shape ``(party_count, N, L)`` holding every party's
    evaluation of the complement polynomial. The caller discards the entry
    of the designated party itself, which is never distributed.
    """
    n, width = blobs.shape
    mask = random_bytes(rng, (n, width))
    coeffs = random_bytes(rng, (threshold - 2, n, width))
    values = eval_polys(blobs ^ mask, coeffs, range(1, party_count + 1))
    return mask, values


def reconstruct_rows(points: Iterable[int], rows: np.ndarray) -> np.ndarray:
    """Interpolate at 0 from ``rows[k]`` held at ``points[k]``."""
    return combine(lagrange_at_zero(list(points)), rows)
