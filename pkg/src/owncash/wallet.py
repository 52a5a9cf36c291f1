"""A user's wallet: receiving, paying, accepting and re-keying notes."""
from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

from owncash.certdb import CertificateDb, quorum_owner_check
from owncash.crypto import SEED_LEN, KeyPair, generate_keypair
from owncash.note import (
    Note,
    OwnershipCert,
    cert_digest,
    sign_statement,
    verify_authenticity,
    verify_genesis,
    verify_transfer_link,
)


class Refusal(str, enum.Enum):
    BAD_AUTHENTICITY = "BadAuthenticity"
    BAD_GENESIS_SIGNATURE = "BadGenesisSignature"
    NOT_ADDRESSED_TO_ME = "NotAddressedToMe"
    PAYER_NOT_CURRENT_OWNER = "PayerNotCurrentOwner"
    BAD_CHAIN_LINK = "BadChainLink"
    QUORUM_DISAGREEMENT = "QuorumDisagreement"
    LOCAL_DB_REJECTED = "LocalDbRejected"

    def __str__(self) -> str:
        return self.value


class PaymentRejected(Exception):
    def __init__(self, reason: Refusal, detail: str = ""):
        super().__init__(f"{reason.value}{': ' + detail if detail else ''}")
        self.reason = reason


class UnknownHolding(KeyError):
    pass


class NotOwnerLocally(RuntimeError):
    pass


@dataclass
class Wallet:
    trusted_issuer: bytes
    db: CertificateDb
    identities: list[KeyPair]
    holdings: dict[int, Note] = field(default_factory=dict)
    seed_source: Callable[[], bytes] = field(default=lambda: os.urandom(SEED_LEN), repr=False)

    @classmethod
    def create(
        cls,
        trusted_issuer: bytes,
        db: CertificateDb,
        seed_source: Callable[[], bytes] | None = None,
    ) -> Wallet:
        wallet = cls(trusted_issuer, db, [])
        if seed_source is not None:
            wallet.seed_source = seed_source
        wallet.new_identity()
        return wallet

    @property
    def identity(self) -> KeyPair:
        return self.identities[-1]

    @property
    def public_key(self) -> bytes:
        return self.identity.public_key

    def new_identity(self) -> KeyPair:
        kp = generate_keypair(self.seed_source())
        self.identities.append(kp)
        return kp

    def _key_for(self, public_key: bytes) -> KeyPair | None:
        for kp in reversed(self.identities):
            if kp.public_key == public_key:
                return kp
        return None

    def _commit(self, note: Note, key: KeyPair) -> Note:
        cert = note.part_a.countersigned(key)
        result = self.db.apply_certificate(cert)
        if not result.applied:
            raise PaymentRejected(Refusal.LOCAL_DB_REJECTED, str(result))
        accepted = note.with_part_a(cert)
        self.holdings[note.note_number] = accepted
        return accepted

    def receive_issued(self, note: Note) -> Note:
        """Check a freshly issued note, countersign its genesis and store it.

        Returns the note carrying the countersigned Part A, which the caller
        broadcasts.
        """
        if not verify_authenticity(note, self.trusted_issuer):
            raise PaymentRejected(Refusal.BAD_AUTHENTICITY)
        if not verify_genesis(note.part_a, self.trusted_issuer):
            raise PaymentRejected(Refusal.BAD_GENESIS_SIGNATURE)
        key = self._key_for(note.part_a.owner_public_key)
        if key is None:
            raise PaymentRejected(Refusal.NOT_ADDRESSED_TO_ME)
        return self._commit(note, key)

    def make_transfer(self, note_number: int, payee_pub: bytes) -> Note:
        held = self.holdings.get(note_number)
        if held is None:
            raise UnknownHolding(note_number)
        current = self.db.current(note_number)
        key = None if current is None else self._key_for(current.owner_public_key)
        if key is None:
            raise NotOwnerLocally(f"local database does not list this wallet as owner of {note_number}")
        cert = sign_statement(
            note_number, current.epoch + 1, payee_pub, cert_digest(current), key
        )
        return held.with_part_a(cert)

    def accept_transfer(
        self,
        note: Note,
        expected_payer: bytes,
        peers: Sequence[CertificateDb] = (),
        quorum_threshold: int = 0,
    ) -> Note:
        """Validate an incoming payment against the local database and accept it.

        With `quorum_threshold` > 0 the payer must also be the current owner
        in at least that many of `peers`.
        """
        n = note.note_number
        if not verify_authenticity(note, self.trusted_issuer):
            raise PaymentRejected(Refusal.BAD_AUTHENTICITY)
        current = self.db.current(n)
        if current is None or current.owner_public_key != expected_payer:
            raise PaymentRejected(Refusal.PAYER_NOT_CURRENT_OWNER)
        if not verify_transfer_link(current, note.part_a):
            raise PaymentRejected(Refusal.BAD_CHAIN_LINK)
        key = self._key_for(note.part_a.owner_public_key)
        if key is None:
            raise PaymentRejected(Refusal.NOT_ADDRESSED_TO_ME)
        if quorum_threshold and not quorum_owner_check(peers, n, expected_payer, quorum_threshold):
            raise PaymentRejected(Refusal.QUORUM_DISAGREEMENT)
        return self._commit(note, key)

    def rotate_identity(self, note_number: int) -> tuple[KeyPair, Note]:
        """Move a held note to a fresh key; returns the key and the note to broadcast."""
        if note_number not in self.holdings:
            raise UnknownHolding(note_number)
        if not self.owns(note_number):
            raise NotOwnerLocally(f"local database does not list this wallet as owner of {note_number}")
        old_owner = self.db.current_owner(note_number)
        fresh = self.new_identity()
        note = self.make_transfer(note_number, fresh.public_key)
        return fresh, self.accept_transfer(note, old_owner)

    def observe(self, cert: OwnershipCert) -> None:
        """Drop a holding once the database shows someone else owns it."""
        n = cert.note_number
        if n in self.holdings:
            owner = self.db.current_owner(n)
            if owner is None or self._key_for(owner) is None:
                del self.holdings[n]

    def owns(self, note_number: int) -> bool:
        owner = self.db.current_owner(note_number)
        return owner is not None and self._key_for(owner) is not None
