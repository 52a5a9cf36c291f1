"""Registered end-to-end scenarios and the verdict engine.

Each scenario builds an issuer, four user wallets and a five-node network from
a seed, runs a scripted story, and returns verdicts. Node 0 is the issuer's
node; nodes 1..4 are users U1..U4.
"""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping

from owncash import adversary
from owncash.certdb import CertificateDb, CertRecord, DbPolicy, quorum_owner_check, replay_chain
from owncash.crypto import generate_keypair
from owncash.issuer import IssuanceCapExceeded, Issuer, audit_issuance
from owncash.note import Note, OwnershipCert, cert_digest, sign_statement, verify_transfer_link
from owncash.sim import (
    AdversaryAction,
    AdversaryScript,
    DeliveryPolicy,
    Node,
    QuiescenceTimeout,
    RandomDelay,
    ReliableFifo,
    SimConfig,
    Simulation,
)
from owncash.wallet import PaymentRejected, Wallet

FIRST_NOTE_NUMBER = 12345
NODE_COUNT = 5
ISSUER_NODE = 0


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class Verdict:
    check: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.check} {self.detail}".rstrip()


@dataclass
class ScenarioReport:
    scenario_name: str
    seed: int
    verdicts: list[Verdict]
    final_owners: dict[int, dict[int, str]]
    trace_path: str = ""
    exports: dict[int, bytes] = field(default_factory=dict, repr=False, compare=False)
    trace: str = field(default="", repr=False, compare=False)
    dbs: dict[int, CertificateDb] = field(default_factory=dict, repr=False, compare=False)

    @property
    def passed(self) -> bool:
        return bool(self.verdicts) and all(v.passed for v in self.verdicts)

    def render(self) -> str:
        lines = [v.line() for v in self.verdicts]
        text = "".join(line + "\n" for line in lines)
        for node_id in sorted(self.exports):
            text += f"OWNERS {node_id}\n" + self.exports[node_id].decode("utf-8")
        return text


@dataclass(frozen=True)
class Settings:
    """The knobs `--policy` may override."""

    require_acceptance_signature: bool = False
    retain_history: bool = False
    quorum_threshold: int = 2

    @property
    def db_policy(self) -> DbPolicy:
        return DbPolicy(self.require_acceptance_signature, self.retain_history)


def _parse_bool(key: str, value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"{key} expects a boolean, got {value!r}")


def parse_overrides(overrides: Mapping[str, str] | None) -> Settings:
    values: dict = {}
    for key, raw in (overrides or {}).items():
        if key in ("require_acceptance_signature", "retain_history"):
            values[key] = _parse_bool(key, str(raw))
        elif key == "quorum_threshold":
            try:
                t = int(raw)
            except ValueError:
                raise UsageError(f"quorum_threshold expects an integer, got {raw!r}") from None
            # a merchant consults every node except itself and the payer
            if not 0 <= t <= NODE_COUNT - 2:
                raise UsageError(f"quorum_threshold must be in 0..{NODE_COUNT - 2}")
            values[key] = t
        else:
            raise UsageError(f"unknown policy key {key!r}")
    return Settings(**values)


def derive_seed(seed: int, label: str) -> bytes:
    return hashlib.sha256(f"owncash:{seed}:{label}".encode()).digest()


class World:
    def __init__(
        self,
        seed: int,
        settings: Settings,
        dishonest_issuer: bool = False,
        delivery: DeliveryPolicy | None = None,
        **issuer_kw,
    ):
        self.seed = seed
        self.settings = settings
        issuer_key = generate_keypair(derive_seed(seed, "issuer"))
        make = Issuer.dishonest if dishonest_issuer else Issuer
        self.issuer = make(issuer_key, next_note_number=FIRST_NOTE_NUMBER, **issuer_kw)
        nodes = [Node(ISSUER_NODE, self._new_db())]
        for i in range(1, NODE_COUNT):
            nodes.append(Node(i, (db := self._new_db()), Wallet.create(self.issuer.public_key, db, self._seeds(i))))
        config = SimConfig(seed=seed, node_count=NODE_COUNT, delivery=delivery or ReliableFifo())
        self.sim = Simulation(config, nodes)
        self.rng = random.Random(int.from_bytes(derive_seed(seed, "adversary"), "big"))

    def _new_db(self) -> CertificateDb:
        return CertificateDb(self.issuer.public_key, self.settings.db_policy)

    def _seeds(self, node_id: int) -> Callable[[], bytes]:
        counter = iter(range(2**63))
        return lambda: derive_seed(self.seed, f"node{node_id}/identity{next(counter)}")

    def wallet(self, node_id: int) -> Wallet:
        wallet = self.sim.nodes[node_id].wallet
        assert wallet is not None
        return wallet

    def db(self, node_id: int) -> CertificateDb:
        return self.sim.nodes[node_id].db

    @property
    def node_ids(self) -> list[int]:
        return sorted(self.sim.nodes)

    def settle(self) -> int:
        return self.sim.run_until_quiescent()

    def mint(self) -> int:
        picture = derive_seed(self.seed, f"picture{self.issuer.next_note_number}") * 4
        amount = 500 * (1 + self.seed % 20)
        body, _ = self.issuer.mint_note(picture, amount, "EUR")
        return body.note_number

    def issue(self, owner: int, note_number: int | None = None) -> int:
        """Mint (unless given) and issue a note to `owner`, then settle the broadcast."""
        n = self.mint() if note_number is None else note_number
        note = self.issuer.issue_note(n, self.wallet(owner).public_key)
        self.sim.send_note(ISSUER_NODE, owner, note, self._receive_issued)
        self.settle()
        return n

    def _receive_issued(self, node: Node, note: Note) -> str:
        try:
            accepted = node.wallet.receive_issued(note)
        except PaymentRejected as exc:
            return f"Refused({exc.reason})"
        self.sim.broadcast(node.node_id, accepted.part_a)
        return "Accepted"

    def peers(self, *exclude: int) -> list[CertificateDb]:
        return [self.db(i) for i in self.node_ids if i not in exclude]

    def payment_handler(self, payer_key: bytes, payer: int, outcomes: list) -> Callable[[Node, Note], str]:
        def handle(node: Node, note: Note) -> str:
            try:
                accepted = node.wallet.accept_transfer(
                    note,
                    payer_key,
                    peers=self.peers(node.node_id, payer),
                    quorum_threshold=self.settings.quorum_threshold,
                )
            except PaymentRejected as exc:
                outcomes.append(exc.reason)
                return f"Refused({exc.reason})"
            outcomes.append(None)
            self.sim.broadcast(node.node_id, accepted.part_a)
            return "Accepted"

        return handle

    def send_payment(self, payer: int, payee: int, note: Note, payer_key: bytes) -> list:
        outcomes: list = []
        self.sim.send_note(payer, payee, note, self.payment_handler(payer_key, payer, outcomes))
        self.settle()
        return outcomes

    def pay(self, payer: int, payee: int, note_number: int) -> list:
        w = self.wallet(payer)
        payer_key = w.db.current_owner(note_number)
        note = w.make_transfer(note_number, self.wallet(payee).public_key)
        return self.send_payment(payer, payee, note, payer_key)

    def inject(self, node: int, certs: Iterable[OwnershipCert], targets=None) -> None:
        tick = self.sim.now + 1
        actions = [AdversaryAction(tick, c, targets) for c in certs]
        self.sim.inject_adversary(AdversaryScript(node, actions))
        self.settle()

    def owners(self, note_number: int, nodes: Iterable[int] | None = None) -> dict[int, bytes | None]:
        ids = self.node_ids if nodes is None else nodes
        return {i: self.db(i).current_owner(note_number) for i in ids}

    def results_for(self, cert: OwnershipCert, since: int = 0) -> dict[int, str]:
        """Per-node apply results for deliveries of `cert` (signatures included)."""
        return {
            d.dst: str(d.result)
            for d in self.sim.deliveries[since:]
            if d.cert == cert
        }


def _everyone_maps(world: World, n: int, key: bytes, nodes=None) -> tuple[bool, str]:
    owners = world.owners(n, nodes)
    agree = sum(1 for v in owners.values() if v == key)
    return agree == len(owners), f"{agree}/{len(owners)} nodes"


SCENARIOS: dict[str, Callable[[World], list[Verdict]]] = {}
_WORLD_OPTIONS: dict[str, dict] = {}


def scenario(name: str, **world_options):
    def register(fn):
        SCENARIOS[name] = fn
        _WORLD_OPTIONS[name] = world_options
        return fn

    return register


@scenario("honest_issue_and_pay")
def honest_issue_and_pay(world: World) -> list[Verdict]:
    u1, u2 = world.wallet(1), world.wallet(2)
    n = world.issue(1)
    ok, detail = _everyone_maps(world, n, u1.public_key)
    verdicts = [Verdict("genesis_settled", ok, detail)]

    issued_b, issued_c = world.issuer.issued[n]
    outcomes = world.pay(1, 2, n)
    verdicts.append(Verdict("payee_accepted", outcomes == [None], str(outcomes[0] or "Accepted")))
    ok, detail = _everyone_maps(world, n, u2.public_key)
    verdicts.append(Verdict("all_nodes_map_payee", ok, detail))
    verdicts.append(Verdict("payer_released_note", n not in u1.holdings, f"note={n}"))
    held = u2.holdings.get(n)
    coherent = held is not None and held.part_a == world.db(2).current(n)
    verdicts.append(Verdict("payee_holding_matches_db", coherent, f"note={n}"))
    frozen = held is not None and held.part_b == issued_b and held.part_c == issued_c
    verdicts.append(Verdict("frozen_parts_unchanged", frozen, "parts B and C"))
    rejected = [d for d in world.sim.deliveries if not d.result.applied]
    verdicts.append(Verdict("no_rejections", not rejected, f"{len(world.sim.deliveries)} deliveries"))
    return verdicts


@scenario("double_spend")
def double_spend(world: World) -> list[Verdict]:
    u1, u2, u3 = world.wallet(1), world.wallet(2), world.wallet(3)
    n = world.issue(1)
    payer_key = u1.public_key
    to_u2 = u1.make_transfer(n, u2.public_key)
    to_u3 = u1.make_transfer(n, u3.public_key)
    both = verify_transfer_link(world.db(1).current(n), to_u2.part_a) and verify_transfer_link(
        world.db(1).current(n), to_u3.part_a
    )
    verdicts = [Verdict("both_spends_constructible", both, "payer signed two payees")]

    first = world.send_payment(1, 2, to_u2, payer_key)
    verdicts.append(Verdict("first_payee_accepted", first == [None], str(first[0] or "Accepted")))
    second = world.send_payment(1, 3, to_u3, payer_key)
    verdicts.append(
        Verdict(
            "second_payee_refused",
            [str(r) for r in second] == ["PayerNotCurrentOwner"],
            str(second[0]) if second else "no outcome",
        )
    )

    # the double spender pushes the competing certificate to everyone anyway
    mark = len(world.sim.deliveries)
    world.inject(1, [to_u3.part_a])
    honest = [i for i in world.node_ids if i != 1]
    winner = cert_digest(to_u2.part_a)
    applied_everywhere = all(
        (c := world.db(i).current(n)) is not None and cert_digest(c) == winner for i in honest
    )
    verdicts.append(Verdict("winner_applied_at_every_honest_node", applied_everywhere, f"{len(honest)} nodes"))
    results = world.results_for(to_u3.part_a, mark)
    competitor_rejected = sorted(results) == honest and all(
        r.startswith("Rejected(") for r in results.values()
    )
    reasons = sorted(set(results.values()))
    verdicts.append(Verdict("competitor_rejected_at_every_honest_node", competitor_rejected, ",".join(reasons)))
    exports = {world.db(i).export_db() for i in world.node_ids}
    verdicts.append(Verdict("zero_divergence", len(exports) == 1, f"{len(exports)} distinct db states"))
    return verdicts


@scenario("bank_accomplice", dishonest_issuer=True)
def bank_accomplice(world: World) -> list[Verdict]:
    u1, u2, accomplice = world.wallet(1), world.wallet(2), world.wallet(4)
    n = world.issue(1)
    holders = [i for i in world.node_ids if world.db(i).current(n) is not None and i != 4]

    fraud = world.issuer.issue_note(n, accomplice.public_key)
    fraud_a = fraud.part_a.countersigned(accomplice.identity)
    mark = len(world.sim.deliveries)
    world.inject(4, [fraud_a])
    results = world.results_for(fraud_a, mark)
    dup = [i for i in holders if results.get(i) == "Rejected(DuplicateGenesis)"]
    verdicts = [
        Verdict(
            "second_genesis_rejected_duplicate",
            len(dup) == len(holders) and len(holders) > 0,
            f"{len(dup)}/{len(holders)} holders",
        )
    ]
    ok, detail = _everyone_maps(world, n, u1.public_key)
    verdicts.append(Verdict("first_owner_kept", ok, detail))

    # the accomplice tries to spend its copy; it is not the owner anywhere
    spend = sign_statement(n, 1, u2.public_key, cert_digest(fraud_a), accomplice.identity)
    outcomes = world.send_payment(4, 2, fraud.with_part_a(spend), accomplice.public_key)
    verdicts.append(
        Verdict(
            "accomplice_payment_refused",
            [str(r) for r in outcomes] == ["PayerNotCurrentOwner"],
            str(outcomes[0]) if outcomes else "no outcome",
        )
    )
    mark = len(world.sim.deliveries)
    world.inject(4, [spend.countersigned(u2.identity)])
    applied = [d for d in world.sim.deliveries[mark:] if d.result.applied]
    verdicts.append(Verdict("accomplice_transfer_never_applied", not applied, f"{len(world.sim.deliveries) - mark} deliveries"))
    ok, detail = _everyone_maps(world, n, u1.public_key)
    verdicts.append(Verdict("owner_unchanged_after_attack", ok, detail))
    return verdicts


@scenario("theft_without_key")
def theft_without_key(world: World, attempts: int = 64, merchant_attempts: int = 8) -> list[Verdict]:
    u1, merchant, thief = world.wallet(1), world.wallet(2), world.wallet(4)
    n = world.issue(1)
    stolen = u1.holdings[n]
    current = world.db(1).current(n)
    forged = adversary.theft_attempts(world.rng, stolen, current, thief.identity, attempts)

    refusals = []
    offered = [c for c in forged if c.note_number == n][:merchant_attempts]
    for cert in offered:
        refusals += world.send_payment(4, 2, stolen.with_part_a(cert), u1.public_key)
    verdicts = [
        Verdict(
            "merchant_refused_stolen_note",
            len(refusals) == len(offered) and all(r is not None for r in refusals),
            ",".join(sorted({str(r) for r in refusals})) or "none",
        )
    ]
    mark = len(world.sim.deliveries)
    world.inject(4, forged)
    deliveries = world.sim.deliveries[mark:]
    applied = sum(1 for d in deliveries if d.result.applied)
    verdicts.append(Verdict("no_forged_transfer_applied", applied == 0, f"{applied}/{len(deliveries)} applied"))
    ok, detail = _everyone_maps(world, n, u1.public_key)
    verdicts.append(Verdict("owner_unchanged", ok, detail))
    verdicts.append(Verdict("merchant_holds_nothing", n not in merchant.holdings, f"note={n}"))
    return verdicts


@scenario("replay_old_certificate")
def replay_old_certificate(world: World) -> list[Verdict]:
    u1 = world.wallet(1)
    n = world.issue(1)
    world.pay(1, 2, n)
    old = world.db(2).current(n)
    world.pay(2, 1, n)
    verdicts = [Verdict("chain_cycled_back", world.db(0).current(n).epoch == 2, "U1->U2->U1")]

    mark = len(world.sim.deliveries)
    world.inject(4, [old])
    results = world.results_for(old, mark)
    targets = [i for i in world.node_ids if i != 4]
    ok = sorted(results) == targets and all(r == "Rejected(EpochMismatch)" for r in results.values())
    verdicts.append(Verdict("replay_rejected_epoch_mismatch", ok, f"{len(results)} nodes"))
    ok, detail = _everyone_maps(world, n, u1.public_key)
    verdicts.append(Verdict("owner_unchanged", ok, detail))
    return verdicts


@scenario("key_rotation")
def key_rotation(world: World) -> list[Verdict]:
    u1, u2 = world.wallet(1), world.wallet(2)
    n = world.issue(1)
    old_key = u1.public_key
    start_epoch = world.db(0).current(n).epoch

    fresh, note = u1.rotate_identity(n)
    world.sim.broadcast(1, note.part_a)
    world.settle()
    ok, detail = _everyone_maps(world, n, fresh.public_key)
    verdicts = [Verdict("fresh_key_owns_everywhere", ok, detail)]
    verdicts.append(Verdict("fresh_key_differs", fresh.public_key != old_key, "byte comparison"))
    current = world.db(0).current(n)
    verdicts.append(Verdict("certificate_omits_prior_key", old_key not in current.statement(), "statement bytes"))

    again, note = u1.rotate_identity(n)
    world.sim.broadcast(1, note.part_a)
    world.settle()
    epochs = {world.db(i).current(n).epoch for i in world.node_ids}
    verdicts.append(Verdict("epoch_advanced_by_two", epochs == {start_epoch + 2}, f"epoch={sorted(epochs)}"))
    ok, detail = _everyone_maps(world, n, again.public_key)
    verdicts.append(Verdict("second_fresh_key_owns_everywhere", ok, detail))
    keys = [kp.public_key for kp in u1.identities]
    verdicts.append(Verdict("identities_distinct", len(set(keys)) == len(keys), f"{len(keys)} identities"))

    outcomes = world.pay(1, 2, n)
    ok, detail = _everyone_maps(world, n, u2.public_key)
    verdicts.append(Verdict("rotated_key_can_pay", outcomes == [None] and ok, detail))
    return verdicts


OVER_ISSUANCE_CAP = 3


@scenario("over_issuance_audit", dishonest_issuer=True, issuance_cap=OVER_ISSUANCE_CAP)
def over_issuance_audit(world: World) -> list[Verdict]:
    cap = OVER_ISSUANCE_CAP
    numbers = [world.issue(1 + k % (NODE_COUNT - 1)) for k in range(cap + 1)]
    audits = {i: audit_issuance(world.db(i), world.issuer.public_key, cap) for i in world.node_ids}
    flagged = [i for i, a in audits.items() if a.over_cap]
    verdicts = [Verdict("audit_flags_over_cap", len(flagged) == len(audits), f"{len(flagged)}/{len(audits)} nodes")]
    exact = all(a.count == cap + 1 and list(a.note_numbers) == numbers for a in audits.values())
    verdicts.append(Verdict("audit_count_exact", exact, f"count={cap + 1} cap={cap}"))

    honest = Issuer(world.issuer.keypair, issuance_cap=cap)
    for _ in range(cap):
        honest.mint_note(b"p", 100, "EUR")
    try:
        honest.mint_note(b"p", 100, "EUR")
        refused = False
    except IssuanceCapExceeded:
        refused = True
    verdicts.append(Verdict("honest_issuer_stops_at_cap", refused, f"cap={cap}"))
    return verdicts


@scenario("quorum_check_payment")
def quorum_check_payment(world: World) -> list[Verdict]:
    u1, merchant, attacker = world.wallet(1), world.wallet(2), world.wallet(4)
    n = world.issue(1)
    genesis = world.db(2).current(n)
    merchant_db = world.db(2)

    # someone with write access to the merchant's db rewrites note n to name
    # the attacker; the attacker cannot sign as U1, so the fake is self-signed
    fake = sign_statement(n, 1, attacker.public_key, cert_digest(genesis), attacker.identity)

    def tamper() -> str:
        history = [genesis] if merchant_db.policy.retain_history else None
        merchant_db.records[n] = CertRecord(fake, history)
        return "Tampered"

    world.sim.schedule(world.sim.now + 1, 2, tamper, n, fake.epoch)
    world.settle()
    attack = sign_statement(n, 2, merchant.public_key, cert_digest(fake), attacker.identity)
    fooled = merchant_db.current_owner(n) == attacker.public_key and verify_transfer_link(
        merchant_db.current(n), attack
    )
    verdicts = [Verdict("local_db_fooled", fooled, "tampered record validates the attack locally")]

    peers = world.peers(2, 4)
    agree = quorum_owner_check(peers, n, attacker.public_key, world.settings.quorum_threshold)
    outcomes = world.send_payment(4, 2, u1.holdings[n].with_part_a(attack), attacker.public_key)
    verdicts.append(
        Verdict(
            "merchant_refused_on_quorum",
            [str(r) for r in outcomes] == ["QuorumDisagreement"] and not agree,
            str(outcomes[0]) if outcomes else "no outcome",
        )
    )
    ok, detail = _everyone_maps(world, n, u1.public_key, [i for i in world.node_ids if i != 2])
    verdicts.append(Verdict("untampered_nodes_keep_owner", ok, detail))

    def resync() -> str:
        # adopt the record reported by a peer majority
        for peer in peers:
            if quorum_owner_check(peers, n, peer.current_owner(n), len(peers) // 2 + 1):
                merchant_db.records[n] = peer.copy().records[n]
                return "Resynced"
        return "NoMajority"

    world.sim.schedule(world.sim.now + 1, 2, resync, n)
    world.settle()
    ok, detail = _everyone_maps(world, n, u1.public_key)
    verdicts.append(Verdict("merchant_resynced_from_peers", ok, detail))

    outcomes = world.pay(1, 2, n)
    ok, detail = _everyone_maps(world, n, merchant.public_key)
    verdicts.append(Verdict("honest_payment_passes_quorum", outcomes == [None] and ok, detail))
    return verdicts


def double_spend_divergence(seed: int, max_delay: int) -> int:
    """Distinct database states left when two payees accept the same note concurrently.

    Both payments leave at the same tick under random delays. No consensus
    layer exists to settle the race, so this is a measurement only.
    """
    world = World(seed, Settings(quorum_threshold=0), delivery=RandomDelay(max_delay))
    u1 = world.wallet(1)
    n = world.issue(1)
    for payee in (2, 3):
        note = u1.make_transfer(n, world.wallet(payee).public_key)
        world.sim.send_note(1, payee, note, world.payment_handler(u1.public_key, 1, []))
    world.settle()
    return len({world.db(i).export_db() for i in world.node_ids})


def history_verdict(world: World) -> Verdict:
    """Replaying every stored chain from empty must rebuild each record exactly."""
    checked = 0
    for i in world.node_ids:
        db = world.db(i)
        for n, record in db.records.items():
            rebuilt, results = replay_chain(record.chain(), db.trusted_issuer, db.policy)
            if not all(r.applied for r in results) or rebuilt.records.get(n) != record:
                return Verdict("history_replays", False, f"node={i} note={n}")
            checked += 1
    return Verdict("history_replays", True, f"{checked} records")


def build_world(name: str, seed: int, settings: Settings) -> World:
    return World(seed, settings, **_WORLD_OPTIONS[name])


def run_scenario(
    name: str,
    seed: int,
    overrides: Mapping[str, str] | None = None,
    report_path: str | Path | None = None,
    trace_path: str | Path | None = None,
) -> ScenarioReport:
    if name not in SCENARIOS:
        raise UsageError(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}")
    if not 0 <= seed < 2**64:
        raise UsageError("seed must be an unsigned 64-bit integer")
    settings = parse_overrides(overrides)
    world = build_world(name, seed, settings)
    try:
        verdicts = SCENARIOS[name](world)
    except QuiescenceTimeout as exc:
        verdicts = [Verdict("quiescence", False, str(exc))]
    if settings.retain_history:
        verdicts.append(history_verdict(world))

    exports = {i: world.db(i).export_db() for i in world.node_ids}
    owners = {
        i: {n: world.db(i).current_owner(n).hex() for n in world.db(i).note_numbers()}
        for i in world.node_ids
    }
    report = ScenarioReport(
        scenario_name=name,
        seed=seed,
        verdicts=verdicts,
        final_owners=owners,
        trace_path=str(trace_path or ""),
        exports=exports,
        trace=world.sim.trace_text(),
        dbs={i: world.db(i) for i in world.node_ids},
    )
    if trace_path:
        Path(trace_path).write_text(report.trace, encoding="utf-8")
    if report_path:
        Path(report_path).write_text(report.render(), encoding="utf-8")
    return report
