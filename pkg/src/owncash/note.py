"""The three-part note and its canonical encodings.

Part B (NoteBody) and Part C (AuthenticityCert) are frozen at minting.
Part A (OwnershipCert) is replaced on every transfer. Each ownership
certificate is bound to one chain position by its epoch and by the digest of
its predecessor, so an old certificate cannot be replayed later.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, replace

from owncash.crypto import (
    PUBLIC_KEY_LEN,
    Digest,
    EncodingError,
    KeyPair,
    Signature,
    hash_bytes,
    sign,
    verify,
)

BODY_MAGIC = b"EB01"
STATEMENT_MAGIC = b"EA01"
BODY_VERSION = 1
BODY_LEN = 56
STATEMENT_LEN = 84
U64_MAX = 2**64 - 1

_BODY = struct.Struct(">4sBQQ3s32s")
_STATEMENT = struct.Struct(">4sQQ32s32s")


@dataclass(frozen=True)
class NoteBody:
    note_number: int
    amount_minor: int
    currency: str
    picture_digest: Digest
    version: int = BODY_VERSION


@dataclass(frozen=True)
class AuthenticityCert:
    issuer_public_key: bytes
    body_signature: Signature


@dataclass(frozen=True)
class OwnershipCert:
    note_number: int
    epoch: int
    owner_public_key: bytes
    prev_cert_digest: Digest
    transfer_signature: Signature
    acceptance_signature: Signature | None = None

    @property
    def is_genesis(self) -> bool:
        return self.epoch == 0

    def statement(self) -> bytes:
        return encode_ownership_statement(self)

    def countersigned(self, key: KeyPair) -> OwnershipCert:
        return replace(self, acceptance_signature=sign(self.statement(), key))


@dataclass(frozen=True)
class Note:
    part_a: OwnershipCert
    part_b: NoteBody
    part_c: AuthenticityCert

    def __post_init__(self) -> None:
        if self.part_a.note_number != self.part_b.note_number:
            raise ValueError(
                f"Part A names note {self.part_a.note_number}, "
                f"Part B is note {self.part_b.note_number}"
            )

    @property
    def note_number(self) -> int:
        return self.part_b.note_number

    def with_part_a(self, cert: OwnershipCert) -> Note:
        return replace(self, part_a=cert)


def _check_u64(name: str, value: int) -> None:
    if not 0 <= value <= U64_MAX:
        raise EncodingError(f"{name} out of u64 range: {value}")


def _check_key(name: str, key: bytes) -> None:
    if len(key) != PUBLIC_KEY_LEN:
        raise EncodingError(f"{name} must be {PUBLIC_KEY_LEN} bytes, got {len(key)}")


def valid_currency(code: str) -> bool:
    return len(code) == 3 and all("A" <= c <= "Z" for c in code)


def encode_note_body(body: NoteBody) -> bytes:
    if not valid_currency(body.currency):
        raise EncodingError(f"currency must be 3 ASCII uppercase letters: {body.currency!r}")
    if not 0 <= body.version <= 0xFF:
        raise EncodingError(f"version must fit one byte: {body.version}")
    _check_u64("note_number", body.note_number)
    _check_u64("amount_minor", body.amount_minor)
    return _BODY.pack(
        BODY_MAGIC,
        body.version,
        body.note_number,
        body.amount_minor,
        body.currency.encode("ascii"),
        body.picture_digest.value,
    )


def encode_ownership_statement(cert: OwnershipCert) -> bytes:
    """Canonical form of "<owner> is the owner of note N", signatures excluded."""
    _check_u64("note_number", cert.note_number)
    _check_u64("epoch", cert.epoch)
    _check_key("owner_public_key", cert.owner_public_key)
    return _STATEMENT.pack(
        STATEMENT_MAGIC,
        cert.note_number,
        cert.epoch,
        cert.owner_public_key,
        cert.prev_cert_digest.value,
    )


def cert_digest(cert: OwnershipCert) -> Digest:
    return hash_bytes(encode_ownership_statement(cert) + cert.transfer_signature.value)


def body_digest(body: NoteBody) -> Digest:
    return hash_bytes(encode_note_body(body))


def sign_statement(
    note_number: int,
    epoch: int,
    owner_public_key: bytes,
    prev_cert_digest: Digest,
    signer: KeyPair,
) -> OwnershipCert:
    """Build an ownership certificate signed by `signer` (previous owner, or issuer at genesis)."""
    unsigned = OwnershipCert(
        note_number=note_number,
        epoch=epoch,
        owner_public_key=owner_public_key,
        prev_cert_digest=prev_cert_digest,
        transfer_signature=Signature(bytes(64)),
    )
    return replace(unsigned, transfer_signature=sign(unsigned.statement(), signer))


def _safe_verify(message_fn, sig: Signature, pub: bytes) -> bool:
    try:
        return verify(message_fn(), sig, pub)
    except EncodingError:
        return False


def verify_authenticity(note: Note, trusted_issuer: bytes) -> bool:
    part_c = note.part_c
    if part_c.issuer_public_key != trusted_issuer:
        return False
    return _safe_verify(
        lambda: body_digest(note.part_b).value, part_c.body_signature, trusted_issuer
    )


def verify_genesis(cert: OwnershipCert, issuer_public_key: bytes) -> bool:
    return (
        cert.epoch == 0
        and cert.prev_cert_digest.is_zero()
        and _safe_verify(cert.statement, cert.transfer_signature, issuer_public_key)
    )


def verify_acceptance(cert: OwnershipCert) -> bool:
    if cert.acceptance_signature is None:
        return False
    return _safe_verify(cert.statement, cert.acceptance_signature, cert.owner_public_key)


def transfer_link_error(prev: OwnershipCert, nxt: OwnershipCert) -> str | None:
    """Name of the first failed link condition, or None when `nxt` extends `prev`."""
    if nxt.note_number != prev.note_number:
        return "NoteMismatch"
    if nxt.epoch != prev.epoch + 1:
        return "EpochMismatch"
    if nxt.prev_cert_digest != cert_digest(prev):
        return "BadPrevDigest"
    if not _safe_verify(nxt.statement, nxt.transfer_signature, prev.owner_public_key):
        return "NotSignedByCurrentOwner"
    return None


def verify_transfer_link(prev: OwnershipCert, nxt: OwnershipCert) -> bool:
    return transfer_link_error(prev, nxt) is None


assert _BODY.size == BODY_LEN and _STATEMENT.size == STATEMENT_LEN
