import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partialfair import sharing
from partialfair.errors import ParameterError
from partialfair.sharing import (
    IndexedShare,
    gf_inv,
    gf_mul,
    reconstruct_with_respect_to,
    shamir_complete,
    shamir_reconstruct,
    shamir_share,
    share_rows_with_respect_to,
    share_with_respect_to,
    xor_reconstruct,
    xor_share,
)


class Tape:
    """Stand-in generator that replays fixed bytes."""

    def __init__(self, data: bytes):
        self.data = bytes(data)
        self.pos = 0

    def bytes(self, n: int) -> bytes:
        out = self.data[self.pos:self.pos + n]
        assert len(out) == n, "tape exhausted"
        self.pos += n
        return out


def _slow_mul(a, b):
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        if a & 0x100:
            a ^= 0x11B
        b >>= 1
    return out


def test_field_tables_match_schoolbook():
    for a in range(256):
        for b in range(0, 256, 7):
            assert gf_mul(a, b) == _slow_mul(a, b)
    for a in range(1, 256):
        assert gf_mul(a, gf_inv(a)) == 1
    with pytest.raises(ZeroDivisionError):
        gf_inv(0)


secrets = st.binary(min_size=1, max_size=24)
seeds = st.integers(0, 2**32 - 1)


@given(secret=secrets, k=st.integers(1, 8), seed=seeds)
def test_xor_round_trip(secret, k, seed):
    shares = xor_share(secret, k, np.random.default_rng(seed))
    assert len(shares) == k
    assert xor_reconstruct(shares) == secret


@given(secret=secrets, m=st.integers(1, 12), data=st.data(), seed=seeds)
def test_shamir_any_subset(secret, m, data, seed):
    k = data.draw(st.integers(1, m))
    shares = shamir_share(secret, k, m, np.random.default_rng(seed))
    subset = data.draw(st.lists(st.sampled_from(shares), min_size=k, max_size=m, unique_by=lambda s: s.holder_index))
    assert shamir_reconstruct(subset, k) == secret


@given(secret=secrets, m=st.integers(2, 10), data=st.data(), seed=seeds)
def test_construction_round_trip(secret, m, data, seed):
    alpha = data.draw(st.integers(2, m))
    j = data.draw(st.integers(1, m))
    masking, comps = share_with_respect_to(secret, j, alpha, m, np.random.default_rng(seed))
    assert masking.holder_index == j and j not in {c.holder_index for c in comps}
    chosen = data.draw(st.lists(st.sampled_from(comps), min_size=alpha - 1, max_size=m - 1, unique_by=lambda s: s.holder_index))
    assert reconstruct_with_respect_to(masking, chosen, alpha) == secret


@settings(max_examples=50)
@given(secret=secrets, m=st.integers(2, 8), data=st.data(), seed=seeds)
def test_shamir_complete_extends(secret, m, data, seed):
    k = data.draw(st.integers(1, m))
    rng = np.random.default_rng(seed)
    base = shamir_share(bytes(len(secret)), k, m, rng)
    partial = data.draw(st.lists(st.sampled_from(base), max_size=k - 1, unique_by=lambda s: s.holder_index))
    full = shamir_complete(partial, secret, k, m, rng)
    by_index = {s.holder_index: s for s in full}
    for s in partial:
        assert by_index[s.holder_index].payload == s.payload
    for combo in itertools.islice(itertools.combinations(full, k), 5):
        assert shamir_reconstruct(list(combo), k) == secret


def test_reconstruction_errors():
    rng = np.random.default_rng(1)
    shares = shamir_share(b"ab", 3, 4, rng)
    with pytest.raises(ParameterError):
        shamir_reconstruct(shares[:2], 3)
    with pytest.raises(ParameterError):
        shamir_reconstruct([shares[0], shares[0], shares[1]], 3)
    masking, comps = share_with_respect_to(b"ab", 1, 3, 4, rng)
    with pytest.raises(ParameterError):
        reconstruct_with_respect_to(None, comps, 3)
    with pytest.raises(ParameterError):
        xor_share(b"", 2, rng)


def test_vectorised_rows_match_single():
    rng = np.random.default_rng(5)
    blobs = rng.integers(0, 256, size=(6, 9), dtype=np.uint8)
    mask, values = share_rows_with_respect_to(blobs, 3, 5, rng)
    for row in range(6):
        for holder in range(1, 6):
            others = [q for q in range(1, 6) if q != holder][:2]
            inner = sharing.reconstruct_rows(others, values[[q - 1 for q in others], row])
            assert bytes(inner ^ mask[row]) == blobs[row].tobytes()


def test_scripted_tape_drives_sharing():
    # mask 0x0f, no polynomial coefficients at threshold 2
    masking, comps = share_with_respect_to(b"\xf0", 1, 2, 3, Tape(b"\x0f"))
    assert masking.payload == b"\x0f"
    assert {c.payload for c in comps} == {b"\xff"}


def test_xor_privacy_by_enumeration():
    # every (k-1)-subset of a 3-of-3 XOR sharing of one byte is uniform
    for secret in (0, 0x5A, 0xFF):
        seen = {}
        for a, b in itertools.product(range(256), repeat=2):
            shares = xor_share(bytes([secret]), 3, Tape(bytes([a, b])))
            view = (shares[0].payload, shares[2].payload)
            seen[view] = seen.get(view, 0) + 1
        assert len(seen) == 256 * 256 and set(seen.values()) == {1}


def test_share_record_format():
    s = IndexedShare(3, b"\x01\xab", "shamir")
    assert s.as_record() == "3 shamir 01ab"
    with pytest.raises(ParameterError):
        IndexedShare(0, b"", "xor")
    with pytest.raises(ParameterError):
        IndexedShare(1, b"", "bogus")
