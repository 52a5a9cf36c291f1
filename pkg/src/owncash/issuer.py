"""The note issuer: minting, genesis certificates and the over-issuance audit."""
from __future__ import annotations

from dataclasses import dataclass, field

from owncash.certdb import CertificateDb
from owncash.crypto import Digest, KeyPair, hash_bytes, sign, verify
from owncash.note import (
    U64_MAX,
    AuthenticityCert,
    Note,
    NoteBody,
    OwnershipCert,
    body_digest,
    sign_statement,
    valid_currency,
)


class IssuanceCapExceeded(RuntimeError):
    pass


class InvalidAmount(ValueError):
    pass


class UnknownNote(KeyError):
    pass


class DuplicateGenesis(RuntimeError):
    pass


@dataclass
class Issuer:
    keypair: KeyPair
    next_note_number: int = 1
    issuance_cap: int | None = None
    issued: dict[int, tuple[NoteBody, AuthenticityCert]] = field(default_factory=dict)
    genesis_issued: set[int] = field(default_factory=set)
    # Honest issuers refuse a second genesis and respect the cap; the
    # dishonest variant exists so attacks can be staged in scenarios.
    honest: bool = True

    @classmethod
    def dishonest(cls, keypair: KeyPair, **kwargs) -> Issuer:
        return cls(keypair, honest=False, **kwargs)

    @property
    def public_key(self) -> bytes:
        return self.keypair.public_key

    def mint_note(
        self, picture: bytes, amount_minor: int, currency: str
    ) -> tuple[NoteBody, AuthenticityCert]:
        if not 0 < amount_minor <= U64_MAX:
            raise InvalidAmount(f"amount must be a positive u64, got {amount_minor}")
        if not valid_currency(currency):
            raise ValueError(f"currency must be 3 ASCII uppercase letters: {currency!r}")
        if (
            self.honest
            and self.issuance_cap is not None
            and len(self.issued) >= self.issuance_cap
        ):
            raise IssuanceCapExceeded(f"cap of {self.issuance_cap} notes reached")
        n = self.next_note_number
        if n > U64_MAX:
            raise OverflowError("note number space exhausted")
        body = NoteBody(
            note_number=n,
            amount_minor=amount_minor,
            currency=currency,
            picture_digest=hash_bytes(picture),
        )
        cert = AuthenticityCert(self.public_key, sign(body_digest(body).value, self.keypair))
        self.issued[n] = (body, cert)
        self.next_note_number = n + 1
        return body, cert

    def issue_to(self, note_number: int, owner_pub: bytes) -> OwnershipCert:
        if note_number not in self.issued:
            raise UnknownNote(note_number)
        if self.honest and note_number in self.genesis_issued:
            raise DuplicateGenesis(f"note {note_number} already has a genesis certificate")
        cert = sign_statement(note_number, 0, owner_pub, Digest.zero(), self.keypair)
        self.genesis_issued.add(note_number)
        return cert

    def issue_note(self, note_number: int, owner_pub: bytes) -> Note:
        """Genesis certificate plus the frozen parts, ready to hand to the first owner."""
        part_a = self.issue_to(note_number, owner_pub)
        body, auth = self.issued[note_number]
        return Note(part_a, body, auth)


@dataclass(frozen=True)
class IssuanceAudit:
    count: int
    over_cap: bool
    note_numbers: tuple[int, ...]


def _genesis_signed_by(db: CertificateDb, note_number: int, issuer_pub: bytes) -> bool:
    record = db.records[note_number]
    chain = record.chain()
    genesis = chain[0]
    if genesis.epoch == 0:
        return verify(genesis.statement(), genesis.transfer_signature, issuer_pub)
    # Without retained history the genesis is gone; the database only ever
    # admits geneses signed by its trusted issuer.
    return issuer_pub == db.trusted_issuer


def audit_issuance(db: CertificateDb, issuer_pub: bytes, cap: int) -> IssuanceAudit:
    numbers = tuple(n for n in sorted(db.records) if _genesis_signed_by(db, n, issuer_pub))
    return IssuanceAudit(len(numbers), len(numbers) > cap, numbers)
