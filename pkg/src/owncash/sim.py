"""Deterministic discrete-event broadcast network.

Events run in strict (tick, seq) order. `seq` is a global counter assigned at
scheduling time, so a given configuration and script always yields the same
trace. Random delays come from a 64-bit LCG (Knuth's MMIX constants) seeded
from `SimConfig.seed`:

    state <- (state * 6364136223846793005 + 1442695040888963407) mod 2**64
    draw   = state >> 33
    delay  = 1 + draw mod max_delay

Broadcast payloads never carry the sender; `src` exists only in the trace.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence, Union

from owncash.certdb import ApplyResult, CertificateDb
from owncash.note import Note, OwnershipCert
from owncash.wallet import Wallet

LCG_MULTIPLIER = 6364136223846793005
LCG_INCREMENT = 1442695040888963407
_MASK64 = 2**64 - 1


class SimError(RuntimeError):
    pass


class QuiescenceTimeout(SimError):
    pass


class ScriptError(SimError):
    pass


class Lcg64:
    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next(self) -> int:
        self.state = (self.state * LCG_MULTIPLIER + LCG_INCREMENT) & _MASK64
        return self.state >> 33

    def below(self, n: int) -> int:
        return self.next() % n


@dataclass(frozen=True)
class ReliableFifo:
    pass


@dataclass(frozen=True)
class RandomDelay:
    max_delay: int

    def __post_init__(self) -> None:
        if self.max_delay < 1:
            raise ValueError("max_delay must be positive")


@dataclass(frozen=True)
class DropList:
    pairs: frozenset[tuple[int, int]]


DeliveryPolicy = Union[ReliableFifo, RandomDelay, DropList]


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    node_count: int = 5
    delivery: DeliveryPolicy = field(default_factory=ReliableFifo)
    max_ticks: int = 10_000

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise ValueError("node_count must be positive")
        if self.max_ticks < 1:
            raise ValueError("max_ticks must be positive")


@dataclass(order=True)
class SimEvent:
    tick: int
    seq: int
    src: int = field(compare=False)
    dst: int = field(compare=False)
    kind: str = field(compare=False)
    payload: Any = field(compare=False, default=None)


@dataclass
class Node:
    node_id: int
    db: CertificateDb
    wallet: Wallet | None = None


@dataclass(frozen=True)
class Delivery:
    tick: int
    src: int
    dst: int
    cert: OwnershipCert
    result: ApplyResult


@dataclass(frozen=True)
class AdversaryAction:
    tick: int
    cert: OwnershipCert
    targets: tuple[int, ...] | None = None


@dataclass(frozen=True)
class AdversaryScript:
    node: int
    actions: Sequence[AdversaryAction]


NoteHandler = Callable[[Node, Note], str]


@dataclass(frozen=True)
class _NoteMessage:
    note: Note
    handler: NoteHandler


@dataclass(frozen=True)
class _Action:
    fn: Callable[[], str]
    note_number: int | None
    epoch: int | None


class Simulation:
    def __init__(self, config: SimConfig, nodes: Sequence[Node]):
        if len(nodes) != config.node_count:
            raise SimError(f"expected {config.node_count} nodes, got {len(nodes)}")
        self.config = config
        self.nodes = {n.node_id: n for n in nodes}
        if sorted(self.nodes) != list(range(config.node_count)):
            raise SimError("node ids must be 0..node_count-1")
        self.now = 0
        self._seq = 0
        self._queue: list[SimEvent] = []
        self._rng = Lcg64(config.seed)
        self.trace: list[str] = []
        self.deliveries: list[Delivery] = []
        self.dropped: list[tuple[int, int, int]] = []

    def _check_node(self, node_id: int) -> None:
        if node_id not in self.nodes:
            raise SimError(f"unknown node {node_id}")

    def _push(self, tick: int, src: int, dst: int, kind: str, payload: Any) -> None:
        heapq.heappush(self._queue, SimEvent(tick, self._seq, src, dst, kind, payload))
        self._seq += 1

    def _delay(self) -> int:
        policy = self.config.delivery
        if isinstance(policy, RandomDelay):
            return 1 + self._rng.below(policy.max_delay)
        return 1

    def _dispatch(self, src: int, dst: int, kind: str, payload: Any) -> None:
        policy = self.config.delivery
        if isinstance(policy, DropList) and (src, dst) in policy.pairs:
            self.dropped.append((self.now, src, dst))
            return
        self._push(self.now + self._delay(), src, dst, kind, payload)

    def broadcast(self, src: int, cert: OwnershipCert, targets: Sequence[int] | None = None) -> None:
        self._check_node(src)
        dsts = sorted(self.nodes) if targets is None else list(targets)
        for dst in dsts:
            self._check_node(dst)
            if dst != src:
                self._dispatch(src, dst, "cert", cert)

    def send_note(self, src: int, dst: int, note: Note, handler: NoteHandler) -> None:
        """Point-to-point delivery of a whole note; `handler` is the recipient's reaction."""
        self._check_node(src)
        self._check_node(dst)
        self._dispatch(src, dst, "note", _NoteMessage(note, handler))

    def schedule(
        self,
        tick: int,
        node_id: int,
        fn: Callable[[], str],
        note_number: int | None = None,
        epoch: int | None = None,
    ) -> None:
        """Run a scripted local action at `tick`; it appears in the trace as kind 'action'."""
        self._check_node(node_id)
        if tick < self.now:
            raise SimError(f"cannot schedule in the past (tick {tick} < now {self.now})")
        self._push(tick, node_id, node_id, "action", _Action(fn, note_number, epoch))

    def inject_adversary(self, script: AdversaryScript) -> None:
        if script.node not in self.nodes:
            raise ScriptError(f"adversary node {script.node} does not exist")
        for action in script.actions:
            if not isinstance(action, AdversaryAction) or not isinstance(action.cert, OwnershipCert):
                raise ScriptError(f"malformed adversary action: {action!r}")
            if action.tick < self.now:
                raise ScriptError(f"action tick {action.tick} is before now ({self.now})")
            if action.targets is not None:
                bad = [t for t in action.targets if t not in self.nodes]
                if bad:
                    raise ScriptError(f"unknown target nodes {bad}")
        for action in script.actions:
            self._push(action.tick, script.node, script.node, "inject", action)

    def _log(self, ev: SimEvent, note_number: Any, epoch: Any, result: str) -> None:
        n = "-" if note_number is None else note_number
        e = "-" if epoch is None else epoch
        self.trace.append(f"{ev.tick} {ev.seq} {ev.src} {ev.dst} {ev.kind} {n} {e} {result}")

    def _process(self, ev: SimEvent) -> None:
        if ev.kind == "cert":
            cert: OwnershipCert = ev.payload
            node = self.nodes[ev.dst]
            result = node.db.apply_certificate(cert)
            if node.wallet is not None:
                node.wallet.observe(cert)
            self.deliveries.append(Delivery(ev.tick, ev.src, ev.dst, cert, result))
            self._log(ev, cert.note_number, cert.epoch, str(result))
        elif ev.kind == "note":
            msg: _NoteMessage = ev.payload
            outcome = msg.handler(self.nodes[ev.dst], msg.note)
            self._log(ev, msg.note.note_number, msg.note.part_a.epoch, outcome)
        elif ev.kind == "inject":
            action: AdversaryAction = ev.payload
            self.broadcast(ev.src, action.cert, action.targets)
            self._log(ev, action.cert.note_number, action.cert.epoch, "Injected")
        elif ev.kind == "action":
            act: _Action = ev.payload
            self._log(ev, act.note_number, act.epoch, act.fn())
        else:  # pragma: no cover
            raise SimError(f"unknown event kind {ev.kind}")

    def run_until_quiescent(self) -> int:
        while self._queue:
            if self._queue[0].tick > self.config.max_ticks:
                raise QuiescenceTimeout(
                    f"{len(self._queue)} events pending past max_ticks={self.config.max_ticks}"
                )
            ev = heapq.heappop(self._queue)
            self.now = ev.tick
            self._process(ev)
        return self.now

    @property
    def pending(self) -> int:
        return len(self._queue)

    def trace_text(self) -> str:
        return "".join(line + "\n" for line in self.trace)
