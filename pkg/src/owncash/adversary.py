"""Certificate forgeries for adversarial scenarios.

Every generator here works without the private key of the note's current
owner (and without the issuer's key), so none of its output should ever be
applied by an honest database.
"""
from __future__ import annotations

import random
from dataclasses import replace
from typing import Callable, Sequence

from owncash.crypto import Digest, KeyPair, Signature, generate_keypair
from owncash.note import Note, OwnershipCert, cert_digest, sign_statement


def random_keypair(rng: random.Random) -> KeyPair:
    return generate_keypair(rng.randbytes(32))


def _flip_bit(data: bytes, rng: random.Random) -> bytes:
    i = rng.randrange(len(data) * 8)
    out = bytearray(data)
    out[i // 8] ^= 1 << (i % 8)
    return bytes(out)


def forge_genesis(rng: random.Random, note_number: int) -> OwnershipCert:
    """Genesis signed by a random key posing as the issuer."""
    thief = random_keypair(rng)
    return sign_statement(note_number, 0, thief.public_key, Digest.zero(), thief)


def forge_next_transfer(rng: random.Random, current: OwnershipCert) -> OwnershipCert:
    """Correctly chained next certificate, signed by a key that is not the owner's."""
    thief = random_keypair(rng)
    cert = sign_statement(
        current.note_number, current.epoch + 1, thief.public_key, cert_digest(current), thief
    )
    return cert.countersigned(thief)


def reuse_signature(rng: random.Random, current: OwnershipCert) -> OwnershipCert:
    """Next statement naming a thief, carrying the owner's signature lifted from `current`."""
    thief = random_keypair(rng)
    return OwnershipCert(
        note_number=current.note_number,
        epoch=current.epoch + 1,
        owner_public_key=thief.public_key,
        prev_cert_digest=cert_digest(current),
        transfer_signature=current.transfer_signature,
        acceptance_signature=current.acceptance_signature,
    )


def tamper(rng: random.Random, cert: OwnershipCert) -> OwnershipCert:
    """One bit flipped in one field of an otherwise valid certificate."""
    which = rng.randrange(6)
    if which == 0:
        return replace(cert, owner_public_key=_flip_bit(cert.owner_public_key, rng))
    if which == 1:
        return replace(cert, prev_cert_digest=Digest(_flip_bit(cert.prev_cert_digest.value, rng)))
    if which == 2:
        return replace(cert, epoch=cert.epoch ^ (1 << rng.randrange(8)))
    if which == 3:
        return replace(cert, note_number=cert.note_number ^ (1 << rng.randrange(16)))
    if which == 4:
        return replace(cert, transfer_signature=Signature(_flip_bit(cert.transfer_signature.value, rng)))
    # bump the epoch and point at the real predecessor, keeping the old signature
    return replace(cert, epoch=cert.epoch + 1, prev_cert_digest=cert_digest(cert))


def random_cert(rng: random.Random, note_numbers: Sequence[int]) -> OwnershipCert:
    """Random bytes in every field, for a known or unknown note number."""
    n = rng.choice(note_numbers) if note_numbers and rng.random() < 0.8 else rng.getrandbits(64)
    accept = Signature(rng.randbytes(64)) if rng.random() < 0.5 else None
    return OwnershipCert(
        note_number=n,
        epoch=rng.randrange(4),
        owner_public_key=rng.randbytes(32),
        prev_cert_digest=Digest(rng.randbytes(32)),
        transfer_signature=Signature(rng.randbytes(64)),
        acceptance_signature=accept,
    )


def forgery_campaign(
    rng: random.Random, chains: dict[int, list[OwnershipCert]], count: int
) -> list[OwnershipCert]:
    """`count` mixed forgeries against notes whose known certificates are in `chains`.

    `chains` maps note number to the certificates an outsider has observed on
    the wire, oldest first.
    """
    numbers = sorted(chains)
    fresh = max(numbers, default=0) + 1
    kinds: list[Callable[[], OwnershipCert]] = [
        lambda: forge_genesis(rng, fresh + rng.randrange(1000)),
        lambda: forge_genesis(rng, rng.choice(numbers)),
        lambda: forge_next_transfer(rng, chains[rng.choice(numbers)][-1]),
        lambda: reuse_signature(rng, chains[rng.choice(numbers)][-1]),
        lambda: tamper(rng, rng.choice(chains[rng.choice(numbers)])),
        lambda: random_cert(rng, numbers),
    ]
    return [rng.choice(kinds)() for _ in range(count)]


def theft_attempts(
    rng: random.Random, stolen: Note, current: OwnershipCert, thief: KeyPair, count: int
) -> list[OwnershipCert]:
    """Transfers of a stolen note built with everything except the owner's key."""
    n = stolen.note_number
    prev = cert_digest(current)

    def to_thief_signed_by_thief() -> OwnershipCert:
        return sign_statement(n, current.epoch + 1, thief.public_key, prev, thief).countersigned(thief)

    def signed_by_random_key() -> OwnershipCert:
        return forge_next_transfer(rng, current)

    def lifted_signature() -> OwnershipCert:
        return reuse_signature(rng, current)

    def part_c_signature() -> OwnershipCert:
        return OwnershipCert(
            n, current.epoch + 1, thief.public_key, prev, stolen.part_c.body_signature
        )

    def random_signature() -> OwnershipCert:
        return OwnershipCert(n, current.epoch + 1, thief.public_key, prev, Signature(rng.randbytes(64)))

    def tampered_current() -> OwnershipCert:
        return tamper(rng, current)

    def thief_as_issuer() -> OwnershipCert:
        return sign_statement(n, 0, thief.public_key, Digest.zero(), thief)

    def stale_epoch() -> OwnershipCert:
        key = random_keypair(rng)
        return sign_statement(n, current.epoch, thief.public_key, prev, key)

    kinds = [
        to_thief_signed_by_thief,
        signed_by_random_key,
        lifted_signature,
        part_c_signature,
        random_signature,
        tampered_current,
        thief_as_issuer,
        stale_epoch,
    ]
    return [rng.choice(kinds)() for _ in range(count)]
