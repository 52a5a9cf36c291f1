"""Signature and hash primitives.

Ed25519 (RFC 8032) for signatures and SHA-256 for hashing. Every other module
goes through the functions here, never through the backend directly.
"""
from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

SEED_LEN = 32
PUBLIC_KEY_LEN = 32
SIGNATURE_LEN = 64
DIGEST_LEN = 32


class SeedLengthError(ValueError):
    pass


class EncodingError(ValueError):
    """A byte field has the wrong length or an invalid character set."""


@dataclass(frozen=True)
class Digest:
    value: bytes

    def __post_init__(self) -> None:
        if len(self.value) != DIGEST_LEN:
            raise EncodingError(f"digest must be {DIGEST_LEN} bytes, got {len(self.value)}")

    @classmethod
    def zero(cls) -> Digest:
        return cls(bytes(DIGEST_LEN))

    def is_zero(self) -> bool:
        return self.value == bytes(DIGEST_LEN)

    def hex(self) -> str:
        return self.value.hex()


@dataclass(frozen=True)
class Signature:
    value: bytes

    def __post_init__(self) -> None:
        if len(self.value) != SIGNATURE_LEN:
            raise EncodingError(
                f"signature must be {SIGNATURE_LEN} bytes, got {len(self.value)}"
            )

    def hex(self) -> str:
        return self.value.hex()


@dataclass(frozen=True)
class KeyPair:
    private_key: bytes = field(repr=False)
    public_key: bytes

    def __post_init__(self) -> None:
        if len(self.private_key) != SEED_LEN:
            raise SeedLengthError(f"private key must be {SEED_LEN} bytes")
        if len(self.public_key) != PUBLIC_KEY_LEN:
            raise EncodingError(f"public key must be {PUBLIC_KEY_LEN} bytes")


def generate_keypair(seed: bytes) -> KeyPair:
    if len(seed) != SEED_LEN:
        raise SeedLengthError(f"seed must be exactly {SEED_LEN} bytes, got {len(seed)}")
    sk = Ed25519PrivateKey.from_private_bytes(bytes(seed))
    pk = sk.public_key().public_bytes(
        serialization.Encoding.Raw, serialization.PublicFormat.Raw
    )
    return KeyPair(private_key=bytes(seed), public_key=pk)


def random_keypair() -> KeyPair:
    """Key pair from OS entropy, for use outside the simulator."""
    return generate_keypair(os.urandom(SEED_LEN))


def sign(message: bytes, key: KeyPair) -> Signature:
    sk = Ed25519PrivateKey.from_private_bytes(key.private_key)
    return Signature(sk.sign(bytes(message)))


def verify(message: bytes, sig: Signature | bytes, pub: bytes) -> bool:
    """True iff `sig` is a valid signature of exactly `message` under `pub`.

    Raises EncodingError for malformed lengths; a well-formed but wrong
    signature (or a 32-byte string that is not a curve point) is a plain False.
    """
    if not isinstance(sig, Signature):
        sig = Signature(bytes(sig))
    if len(pub) != PUBLIC_KEY_LEN:
        raise EncodingError(f"public key must be {PUBLIC_KEY_LEN} bytes, got {len(pub)}")
    try:
        Ed25519PublicKey.from_public_bytes(bytes(pub)).verify(sig.value, bytes(message))
    except (InvalidSignature, ValueError):
        return False
    return True


def hash_bytes(data: bytes) -> Digest:
    return Digest(hashlib.sha256(data).digest())
