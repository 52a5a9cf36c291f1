import os
from pathlib import Path

import hypothesis
import pytest

from owncash.certdb import CertificateDb, DbPolicy
from owncash.crypto import generate_keypair
from owncash.issuer import Issuer
from owncash.wallet import Wallet

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=500, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = Path(__file__).parent / "fixtures"

ACCEPTANCE_RESULTS: list[str] = []


def seed_of(i: int) -> bytes:
    return i.to_bytes(32, "big")


@pytest.fixture
def issuer():
    return Issuer(generate_keypair(seed_of(1000)), next_note_number=12345)


def make_wallet(issuer_pub: bytes, base: int, policy: DbPolicy | None = None) -> Wallet:
    counter = iter(range(base, base + 10_000))
    db = CertificateDb(issuer_pub, policy or DbPolicy())
    return Wallet.create(issuer_pub, db, lambda: seed_of(next(counter)))


@pytest.fixture
def wallets(issuer):
    """Three wallets whose databases see the same certificates (applied by hand)."""
    return [make_wallet(issuer.public_key, 100 * (i + 1)) for i in range(3)]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
