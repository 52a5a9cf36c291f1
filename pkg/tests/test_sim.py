import pytest

from conftest import seed_of
from owncash.certdb import CertificateDb
from owncash.crypto import Digest, generate_keypair
from owncash.note import sign_statement
from owncash.sim import (
    AdversaryAction,
    AdversaryScript,
    DropList,
    Lcg64,
    Node,
    QuiescenceTimeout,
    RandomDelay,
    ReliableFifo,
    ScriptError,
    SimConfig,
    SimError,
    Simulation,
)

ISSUER = generate_keypair(seed_of(1))
OWNER = generate_keypair(seed_of(2))

# computed with numpy uint64 wrap-around arithmetic from seed 7
LCG_SEED7 = [1059165278, 2052263231, 1946856753, 585718673]


def genesis(n):
    return sign_statement(n, 0, OWNER.public_key, Digest.zero(), ISSUER)


def make_sim(node_count=4, **config):
    nodes = [Node(i, CertificateDb(ISSUER.public_key)) for i in range(node_count)]
    return Simulation(SimConfig(node_count=node_count, **config), nodes)


def test_lcg_known_values():
    rng = Lcg64(7)
    assert [rng.next() for _ in range(4)] == LCG_SEED7


def test_empty_run():
    assert make_sim().run_until_quiescent() == 0


def test_reliable_broadcast():
    sim = make_sim()
    sim.broadcast(0, genesis(1))
    assert sim.pending == 3
    assert sim.run_until_quiescent() == 1
    assert [(d.dst, str(d.result)) for d in sim.deliveries] == [(1, "Applied"), (2, "Applied"), (3, "Applied")]
    assert sim.trace == [
        "1 0 0 1 cert 1 0 Applied",
        "1 1 0 2 cert 1 0 Applied",
        "1 2 0 3 cert 1 0 Applied",
    ]
    assert sim.nodes[0].db.current(1) is None  # the sender is not a recipient


def test_fifo_per_sender_order():
    sim = make_sim()
    for n in range(1, 6):
        sim.broadcast(1, genesis(n))
    sim.run_until_quiescent()
    to_two = [d.cert.note_number for d in sim.deliveries if d.dst == 2]
    assert to_two == [1, 2, 3, 4, 5]


def test_drop_list():
    sim = make_sim(delivery=DropList(frozenset({(0, 2)})))
    sim.broadcast(0, genesis(1))
    sim.run_until_quiescent()
    assert [d.dst for d in sim.deliveries] == [1, 3]
    assert sim.nodes[2].db.records == {}
    assert sim.dropped == [(0, 0, 2)]


def run_random(seed):
    sim = make_sim(seed=seed, delivery=RandomDelay(5))
    for n in range(1, 8):
        sim.broadcast(n % 4, genesis(n))
    sim.run_until_quiescent()
    return sim


def test_random_delay_deterministic():
    a, b = run_random(11), run_random(11)
    assert a.trace == b.trace
    assert [n.db.export_db() for n in a.nodes.values()] == [n.db.export_db() for n in b.nodes.values()]
    assert run_random(12).trace != a.trace


def test_random_delay_range():
    sim = run_random(3)
    ticks = {d.tick for d in sim.deliveries}
    assert ticks <= set(range(1, 6)) and len(ticks) > 1


def test_events_in_tick_seq_order():
    sim = run_random(5)
    keys = [tuple(map(int, line.split()[:2])) for line in sim.trace]
    assert keys == sorted(keys)


def test_unknown_node():
    sim = make_sim()
    with pytest.raises(SimError):
        sim.broadcast(9, genesis(1))


def test_quiescence_timeout():
    sim = make_sim(max_ticks=3)
    sim.schedule(5, 0, lambda: "late")
    with pytest.raises(QuiescenceTimeout):
        sim.run_until_quiescent()


def test_scheduled_action_logged():
    sim = make_sim()
    sim.schedule(2, 1, lambda: "Done", 7, 3)
    assert sim.run_until_quiescent() == 2
    assert sim.trace == ["2 0 1 1 action 7 3 Done"]


def test_inject_adversary():
    sim = make_sim()
    sim.broadcast(0, genesis(1))
    sim.run_until_quiescent()
    forged = sign_statement(1, 0, OWNER.public_key, Digest.zero(), OWNER)
    sim.inject_adversary(AdversaryScript(3, [AdversaryAction(4, forged), AdversaryAction(4, genesis(1), (1, 2))]))
    sim.run_until_quiescent()
    late = [d for d in sim.deliveries if d.tick == 5]
    assert [(d.dst, str(d.result)) for d in late] == [
        (0, "Rejected(BadSignature)"),
        (1, "Rejected(BadSignature)"),
        (2, "Rejected(BadSignature)"),
        (1, "Rejected(DuplicateGenesis)"),
        (2, "Rejected(DuplicateGenesis)"),
    ]
    assert "4 3 3 3 inject 1 0 Injected" in sim.trace


@pytest.mark.parametrize(
    "script",
    [
        AdversaryScript(7, []),
        AdversaryScript(1, [AdversaryAction(1, genesis(1), (9,))]),
        AdversaryScript(1, ["not an action"]),
    ],
)
def test_malformed_scripts(script):
    with pytest.raises(ScriptError):
        make_sim().inject_adversary(script)


def test_inject_in_past():
    sim = make_sim()
    sim.schedule(3, 0, lambda: "x")
    sim.run_until_quiescent()
    with pytest.raises(ScriptError):
        sim.inject_adversary(AdversaryScript(0, [AdversaryAction(1, genesis(1))]))


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(node_count=0)
    with pytest.raises(ValueError):
        RandomDelay(0)
    with pytest.raises(SimError):
        Simulation(SimConfig(node_count=3), [Node(0, CertificateDb(ISSUER.public_key))])
    assert SimConfig().delivery == ReliableFifo()


def test_broadcast_payload_has_no_sender():
    """A recipient sees only the certificate; its db state is the same whoever sent it."""
    states = []
    for src in (0, 1):
        sim = make_sim()
        sim.broadcast(src, genesis(1))
        sim.run_until_quiescent()
        states.append(sim.nodes[3].db.export_db())
    assert states[0] == states[1]
