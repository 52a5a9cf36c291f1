"""Ownership-transfer electronic cash: protocol library, network simulator and scenarios."""

from owncash.certdb import CertificateDb, DbPolicy, import_db, quorum_owner_check
from owncash.crypto import KeyPair, generate_keypair, hash_bytes, sign, verify
from owncash.issuer import Issuer, audit_issuance
from owncash.note import Note, NoteBody, OwnershipCert, verify_authenticity, verify_transfer_link
from owncash.wallet import PaymentRejected, Wallet

__all__ = [
    "CertificateDb",
    "DbPolicy",
    "Issuer",
    "KeyPair",
    "Note",
    "NoteBody",
    "OwnershipCert",
    "PaymentRejected",
    "Wallet",
    "audit_issuance",
    "generate_keypair",
    "hash_bytes",
    "import_db",
    "quorum_owner_check",
    "sign",
    "verify",
    "verify_authenticity",
    "verify_transfer_link",
]
