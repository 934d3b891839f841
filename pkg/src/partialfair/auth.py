"""Signature abstraction for signed shares and round messages.

:class:`IdealSignatureProvider` is the default: a signature is a random tag
recorded in a registry, and verification is a registry lookup, so forging is
impossible by construction. :class:`Ed25519SignatureProvider` backs the same
interface with a real scheme.
"""

from __future__ import annotations

import abc
import struct
import threading
from collections.abc import Sequence
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey

from .errors import ParameterError


@dataclass(frozen=True)
class KeyPair:
    signing_key: bytes
    verification_key: bytes


@dataclass(frozen=True)
class SignedPayload:
    message: bytes
    signature: bytes

    def to_bytes(self) -> bytes:
        return struct.pack(">I", len(self.message)) + self.message + self.signature

    @classmethod
    def from_bytes(cls, blob: bytes) -> "SignedPayload":
        """Inverse of :meth:`to_bytes`; raises ``ValueError`` on malformed input."""
        if len(blob) < 4:
            raise ValueError("truncated signed payload")
        (n,) = struct.unpack_from(">I", blob)
        if len(blob) < 4 + n:
            raise ValueError("truncated signed payload")
        return cls(bytes(blob[4 : 4 + n]), bytes(blob[4 + n :]))


class SignatureProvider(abc.ABC):
    """Gen / Sign / Ver triple."""

    @abc.abstractmethod
    def gen(self, rng) -> KeyPair: ...

    @abc.abstractmethod
    def sign(self, message: bytes, signing_key: bytes) -> SignedPayload: ...

    @abc.abstractmethod
    def verify(self, message: bytes, signature: bytes, verification_key: bytes) -> bool: ...

    def sign_many(self, messages: Sequence[bytes], signing_key: bytes) -> list[bytes]:
        return [self.sign(msg, signing_key).signature for msg in messages]


class IdealSignatureProvider(SignatureProvider):
    """Registry oracle: unforgeable unconditionally, valid only in-process.

    Tags are drawn from the ``rng`` passed to the constructor (or to
    :meth:`gen` for the first key if none was given).
    """

    key_len = 16
    tag_len = 16
    _pool_size = 4096

    def __init__(self, rng=None):
        self._rng = rng
        self._vk_of: dict[bytes, bytes] = {}
        self._registry: dict[bytes, set[tuple[bytes, bytes]]] = {}
        self._pool = b""
        self._pos = 0
        self._lock = threading.Lock()

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._pool):
            self._pool = self._rng.bytes(max(self._pool_size, n))
            self._pos = 0
        out = self._pool[self._pos : self._pos + n]
        self._pos += n
        return out

    def gen(self, rng=None) -> KeyPair:
        with self._lock:
            if self._rng is None:
                if rng is None:
                    raise ParameterError("no randomness source for key generation")
                self._rng = rng
            while True:
                sk = self._take(self.key_len)
                vk = self._take(self.key_len)
                if sk not in self._vk_of and vk not in self._registry:
                    break
            self._vk_of[sk] = vk
            self._registry[vk] = set()
            return KeyPair(sk, vk)

    def sign(self, message: bytes, signing_key: bytes) -> SignedPayload:
        return SignedPayload(bytes(message), self.sign_many([message], signing_key)[0])

    def sign_many(self, messages: Sequence[bytes], signing_key: bytes) -> list[bytes]:
        with self._lock:
            vk = self._vk_of.get(signing_key)
            if vk is None:
                raise ParameterError("unknown signing key")
            table = self._registry[vk]
            n = self.tag_len
            pool = self._take(n * len(messages))
            tags = [pool[k * n : (k + 1) * n] for k in range(len(messages))]
            table.update(zip(map(bytes, messages), tags))
            return tags

    def verify(self, message: bytes, signature: bytes, verification_key: bytes) -> bool:
        table = self._registry.get(verification_key)
        if table is None:
            return False
        try:
            return (bytes(message), bytes(signature)) in table
        except TypeError:
            return False


class Ed25519SignatureProvider(SignatureProvider):
    """Real signatures via ``cryptography``'s Ed25519 implementation."""

    tag_len = 64

    def gen(self, rng=None) -> KeyPair:
        if rng is not None:
            key = Ed25519PrivateKey.from_private_bytes(rng.bytes(32))
        else:
            key = Ed25519PrivateKey.generate()
        sk = key.private_bytes(
            serialization.Encoding.Raw,
            serialization.PrivateFormat.Raw,
            serialization.NoEncryption(),
        )
        vk = key.public_key().public_bytes(
            serialization.Encoding.Raw, serialization.PublicFormat.Raw
        )
        return KeyPair(sk, vk)

    def sign(self, message: bytes, signing_key: bytes) -> SignedPayload:
        try:
            key = Ed25519PrivateKey.from_private_bytes(signing_key)
        except ValueError as exc:
            raise ParameterError("malformed signing key") from exc
        return SignedPayload(bytes(message), key.sign(bytes(message)))

    def verify(self, message: bytes, signature: bytes, verification_key: bytes) -> bool:
        try:
            Ed25519PublicKey.from_public_bytes(verification_key).verify(signature, message)
        except (InvalidSignature, ValueError, TypeError):
            return False
        return True


# -- canonical encodings --------------------------------------------------


def encode_inner_message(payload: bytes, round_index: int, subset: Sequence[int], holder: int) -> bytes:
    """Length-prefixed encoding of ``(payload, i, J, j)``."""
    return inner_prefix(len(payload)) + payload + inner_suffix(round_index, subset, holder)


def inner_prefix(payload_len: int) -> bytes:
    return struct.pack(">I", payload_len)


def inner_suffix(round_index: int, subset: Sequence[int], holder: int) -> bytes:
    return struct.pack(">IB", round_index, len(subset)) + bytes(subset) + bytes([holder])


def decode_inner_message(message: bytes) -> tuple[bytes, int, tuple[int, ...], int]:
    """Inverse of :func:`encode_inner_message`; raises ``ValueError``."""
    try:
        (n,) = struct.unpack_from(">I", message, 0)
        payload = bytes(message[4 : 4 + n])
        if len(payload) != n:
            raise ValueError("truncated payload")
        i, size = struct.unpack_from(">IB", message, 4 + n)
        start = 4 + n + 5
        subset = tuple(message[start : start + size])
        if len(message) != start + size + 1 or len(subset) != size:
            raise ValueError("bad length")
        holder = message[start + size]
    except struct.error as exc:
        raise ValueError(str(exc)) from exc
    return payload, i, subset, holder
