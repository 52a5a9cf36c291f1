"""Per-node certificate database.

Maps note number to the current ownership certificate. Every incoming
certificate is validated before it replaces the stored one; the first valid
certificate for a chain position wins and later competitors are rejected.
"""
from __future__ import annotations

import copy
import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from owncash.crypto import Digest, EncodingError, Signature
from owncash.note import (
    OwnershipCert,
    transfer_link_error,
    verify_acceptance,
    verify_genesis,
)

DB_HEADER = "OWNCASHDB v1"


class Rejection(str, enum.Enum):
    DUPLICATE_GENESIS = "DuplicateGenesis"
    UNKNOWN_NOTE = "UnknownNote"
    NOT_SIGNED_BY_CURRENT_OWNER = "NotSignedByCurrentOwner"
    EPOCH_MISMATCH = "EpochMismatch"
    BAD_PREV_DIGEST = "BadPrevDigest"
    BAD_SIGNATURE = "BadSignature"
    MISSING_ACCEPTANCE = "MissingAcceptance"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ApplyResult:
    reason: Rejection | None = None

    @property
    def applied(self) -> bool:
        return self.reason is None

    def __str__(self) -> str:
        return "Applied" if self.reason is None else f"Rejected({self.reason.value})"


APPLIED = ApplyResult()


@dataclass(frozen=True)
class DbPolicy:
    require_acceptance_signature: bool = False
    retain_history: bool = False


@dataclass
class CertRecord:
    current: OwnershipCert
    history: list[OwnershipCert] | None = None

    def chain(self) -> list[OwnershipCert]:
        """Stored certificates oldest first, ending with the current one."""
        return [*(self.history or []), self.current]


class ParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass
class CertificateDb:
    trusted_issuer: bytes
    policy: DbPolicy = field(default_factory=DbPolicy)
    records: dict[int, CertRecord] = field(default_factory=dict)

    def apply_certificate(self, cert: OwnershipCert) -> ApplyResult:
        reason = self._check(cert)
        if reason is not None:
            return ApplyResult(reason)
        record = self.records.get(cert.note_number)
        if record is None:
            history = [] if self.policy.retain_history else None
            self.records[cert.note_number] = CertRecord(cert, history)
        else:
            if self.policy.retain_history:
                record.history = [*(record.history or []), record.current]
            record.current = cert
        return APPLIED

    def _check(self, cert: OwnershipCert) -> Rejection | None:
        record = self.records.get(cert.note_number)
        if cert.epoch == 0:
            if not cert.prev_cert_digest.is_zero():
                return Rejection.BAD_PREV_DIGEST
            if not verify_genesis(cert, self.trusted_issuer):
                return Rejection.BAD_SIGNATURE
            if record is not None:
                return Rejection.DUPLICATE_GENESIS
        else:
            if record is None:
                return Rejection.UNKNOWN_NOTE
            link = transfer_link_error(record.current, cert)
            if link is not None:
                return Rejection(link)
            if cert.acceptance_signature is None:
                if self.policy.require_acceptance_signature:
                    return Rejection.MISSING_ACCEPTANCE
                return None
        if cert.acceptance_signature is not None and not verify_acceptance(cert):
            return Rejection.BAD_SIGNATURE
        return None

    def current(self, note_number: int) -> OwnershipCert | None:
        record = self.records.get(note_number)
        return None if record is None else record.current

    def current_owner(self, note_number: int) -> bytes | None:
        cert = self.current(note_number)
        return None if cert is None else cert.owner_public_key

    def note_numbers(self) -> list[int]:
        return sorted(self.records)

    def copy(self) -> CertificateDb:
        return copy.deepcopy(self)

    def export_db(self) -> bytes:
        lines = [DB_HEADER]
        for n in sorted(self.records):
            c = self.records[n].current
            lines.append(
                f"N={c.note_number} OWNER={c.owner_public_key.hex()} "
                f"EPOCH={c.epoch} PREV={c.prev_cert_digest.hex()}"
            )
            lines.append(f"XFER={c.transfer_signature.hex()}")
            accept = "-" if c.acceptance_signature is None else c.acceptance_signature.hex()
            lines.append(f"ACCEPT={accept}")
        return ("\n".join(lines) + "\n").encode("utf-8")


_HEX64 = "[0-9a-f]{64}"
_HEX128 = "[0-9a-f]{128}"
_LINE1 = re.compile(rf"N=(\d+) OWNER=({_HEX64}) EPOCH=(\d+) PREV=({_HEX64})")
_LINE2 = re.compile(rf"XFER=({_HEX128})")
_LINE3 = re.compile(rf"ACCEPT=({_HEX128}|-)")


def import_db(
    data: bytes, trusted_issuer: bytes, policy: DbPolicy | None = None
) -> CertificateDb:
    """Parse an exported database.

    The export carries current certificates only, so the trusted issuer and
    policy are supplied by the reader. Signatures are not re-checked here.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(1, f"not UTF-8: {exc}") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != DB_HEADER:
        raise ParseError(1, f"expected header {DB_HEADER!r}")
    body = lines[1:]
    if len(body) % 3:
        raise ParseError(len(lines) + 1, "truncated record block")
    db = CertificateDb(trusted_issuer, policy or DbPolicy())
    last = -1
    for i in range(0, len(body), 3):
        line_no = i + 2
        m1 = _LINE1.fullmatch(body[i])
        if not m1:
            raise ParseError(line_no, f"bad record line: {body[i]!r}")
        m2 = _LINE2.fullmatch(body[i + 1])
        if not m2:
            raise ParseError(line_no + 1, f"bad XFER line: {body[i + 1]!r}")
        m3 = _LINE3.fullmatch(body[i + 2])
        if not m3:
            raise ParseError(line_no + 2, f"bad ACCEPT line: {body[i + 2]!r}")
        try:
            cert = OwnershipCert(
                note_number=int(m1.group(1)),
                epoch=int(m1.group(3)),
                owner_public_key=bytes.fromhex(m1.group(2)),
                prev_cert_digest=Digest(bytes.fromhex(m1.group(4))),
                transfer_signature=Signature(bytes.fromhex(m2.group(1))),
                acceptance_signature=(
                    None if m3.group(1) == "-" else Signature(bytes.fromhex(m3.group(1)))
                ),
            )
            cert.statement()
        except EncodingError as exc:
            raise ParseError(line_no, str(exc)) from None
        if cert.note_number <= last:
            raise ParseError(line_no, "records not sorted by note number")
        last = cert.note_number
        history = [] if db.policy.retain_history else None
        db.records[cert.note_number] = CertRecord(cert, history)
    return db


def quorum_owner_check(
    peers: Sequence[CertificateDb], note_number: int, expected_owner: bytes, threshold: int
) -> bool:
    if threshold > len(peers):
        raise ValueError(f"threshold {threshold} exceeds peer count {len(peers)}")
    agree = sum(1 for p in peers if p.current_owner(note_number) == expected_owner)
    return agree >= threshold


def replay_chain(
    chain: Iterable[OwnershipCert], trusted_issuer: bytes, policy: DbPolicy | None = None
) -> tuple[CertificateDb, list[ApplyResult]]:
    """Apply `chain` in order to an empty database."""
    db = CertificateDb(trusted_issuer, policy or DbPolicy(retain_history=True))
    results = [db.apply_certificate(c) for c in chain]
    return db, results
