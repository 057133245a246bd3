"""Privacy-preserving rule matching between two exchange points.

One side (the querier) holds a single ternary rule; the other (the holder)
keeps a table of installed rules partitioned by BGP prefix, each tagged with
the identifier of the next deflection on its path.  A query reveals to the
querier exactly the set of next-hop identifiers whose rules overlap the
queried rule, and nothing else: not which table positions matched, not how
the non-matching rules look, and the holder learns nothing about the queried
rule beyond its arrival and target prefix.

Session flow, all on one framed channel:

1. querier sends a cleartext envelope {prefix, rule width, backend, nonce};
2. holder answers with {k, id width} where k is its entry count for the
   prefix; k == 0 ends the session with an empty result and no circuit work;
3. otherwise both sides run the batch-query circuit under the chosen secure
   backend, the holder having freshly permuted its entries so positions carry
   no information;
4. the holder sends its output share and learns nothing back; the querier
   reconstructs k identifiers, drops the dummy placeholder, and deduplicates.
"""

from __future__ import annotations

import json
import logging
import random
import threading
from dataclasses import dataclass, field

from prelude.circuits import Circuit, CircuitLayout, build_batch_query, rule_input_bits
from prelude.rules import TernaryRule
from prelude.smpc import (
    ChannelClosed,
    ChannelTimeout,
    LoopbackEnd,
    MSG_ENVELOPE,
    MSG_ENVELOPE_ACK,
    ProtocolError,
    SessionTranscript,
    SetupUnderprovisioned,
    dealer_for_circuit,
    gmw_execute,
    reveal_output,
    run_pair,
    yao_execute,
)

log = logging.getLogger(__name__)

SDX_ID_BITS = 16
AS_ID_BITS = 32
HOP_ID_BITS = SDX_ID_BITS + AS_ID_BITS

BACKENDS = ("gmw", "yao")


@dataclass(frozen=True, order=True)
class NextHopId:
    """Where a deflected packet goes next: an AS reached at an SDX."""

    sdx_id: int
    as_id: int

    def __post_init__(self) -> None:
        if not 0 <= self.sdx_id < (1 << SDX_ID_BITS):
            raise ValueError("sdx_id out of range")
        if not 0 <= self.as_id < (1 << AS_ID_BITS):
            raise ValueError("as_id out of range")

    def to_bits(self) -> tuple[int, ...]:
        value = (self.sdx_id << AS_ID_BITS) | self.as_id
        return tuple((value >> (HOP_ID_BITS - 1 - i)) & 1 for i in range(HOP_ID_BITS))

    @classmethod
    def from_bits(cls, bits) -> "NextHopId":
        if len(bits) != HOP_ID_BITS:
            raise ValueError("identifier needs exactly 48 bits")
        value = 0
        for b in bits:
            value = (value << 1) | b
        return cls(value >> AS_ID_BITS, value & ((1 << AS_ID_BITS) - 1))


DUMMY_HOP = NextHopId((1 << SDX_ID_BITS) - 1, (1 << AS_ID_BITS) - 1)


@dataclass(frozen=True)
class RuleEntry:
    """One installed rule as the holder stores it."""

    rule: TernaryRule
    next_hop: NextHopId
    owner: int
    prefix: str

    def __post_init__(self) -> None:
        if self.next_hop == DUMMY_HOP:
            raise ValueError("the dummy identifier cannot be a real next hop")


@dataclass(frozen=True)
class QueryResult:
    """Deduplicated next-hop identifiers of the overlapping remote rules."""

    hops: frozenset[NextHopId]

    def __contains__(self, hop: NextHopId) -> bool:
        return hop in self.hops

    def __len__(self) -> int:
        return len(self.hops)

    def sorted_hops(self) -> list[NextHopId]:
        return sorted(self.hops)


EMPTY_RESULT = QueryResult(frozenset())


class QueryAborted(Exception):
    """The session failed before a result was reconstructed."""


@dataclass
class SessionStats:
    """Counters one completed query session leaves behind."""

    backend: str
    prefix: str
    k: int
    and_depth: int
    online_rounds: int
    setup_bytes: int
    online_bytes: int
    online_wall_time: float


# --------------------------------------------------------------------------
# circuit cache


_cache_lock = threading.Lock()
_circuit_cache: dict[CircuitLayout, Circuit] = {}


def circuit_for_layout(layout: CircuitLayout) -> Circuit:
    """Build (or reuse) the batch-query circuit for a layout."""
    with _cache_lock:
        circuit = _circuit_cache.get(layout)
        if circuit is None:
            circuit = build_batch_query(layout)
            _circuit_cache[layout] = circuit
    return circuit


# --------------------------------------------------------------------------
# holder


class SdxMatchService:
    """One exchange point's rule table and its query-serving side.

    Registrations are serialized behind a lock; queries snapshot the table
    and then run without holding it, so a slow session never blocks writers
    or other queries.
    """

    def __init__(self, sdx_id: int) -> None:
        self.sdx_id = sdx_id
        self._lock = threading.RLock()
        self._tables: dict[str, dict[RuleEntry, None]] = {}
        self._listeners: list = []

    # -------------------------------------------------------- table writes

    def register(self, entry: RuleEntry) -> None:
        with self._lock:
            table = self._tables.setdefault(entry.prefix, {})
            already = entry in table
            table[entry] = None
        if not already:
            self._notify("register", entry)

    def deregister(self, entry: RuleEntry) -> None:
        with self._lock:
            table = self._tables.get(entry.prefix, {})
            if entry not in table:
                log.warning("deregister of unknown entry for %s", entry.prefix)
                return
            del table[entry]
        self._notify("deregister", entry)

    def entries_for(self, prefix: str) -> list[RuleEntry]:
        with self._lock:
            return list(self._tables.get(prefix, {}))

    def add_change_listener(self, fn) -> None:
        """fn(event, entry) fires after every table mutation."""
        with self._lock:
            self._listeners.append(fn)

    def _notify(self, event: str, entry: RuleEntry) -> None:
        with self._lock:
            listeners = list(self._listeners)
        for fn in listeners:
            fn(event, entry)

    # -------------------------------------------------------- query serving

    def serve_query(self, channel, dealer, shuffle_rng: random.Random,
                    garble_rng: random.Random,
                    transcript: SessionTranscript | None = None) -> None:
        """Run the holder side of one query session to completion."""
        kind, payload, n = channel.recv()
        if kind != MSG_ENVELOPE:
            raise ProtocolError(f"expected envelope, got kind {kind}")
        if transcript is not None:
            transcript.record_receive(kind, n, payload)
        envelope = json.loads(payload.decode("utf-8"))
        prefix = envelope["prefix"]
        backend = envelope["backend"]
        if backend not in BACKENDS:
            raise ProtocolError(f"unknown backend {backend!r}")
        width = int(envelope["rule_width"])

        entries = self.entries_for(prefix)
        k = len(entries)
        ack = json.dumps({"k": k, "id_width": HOP_ID_BITS}).encode("utf-8")
        n = channel.send(MSG_ENVELOPE_ACK, ack)
        if transcript is not None:
            transcript.record_send(MSG_ENVELOPE_ACK, n, ack)
        if k == 0:
            return

        shuffle_rng.shuffle(entries)
        layout = CircuitLayout(k=k, rule_width=width, id_width=HOP_ID_BITS)
        circuit = circuit_for_layout(layout)
        inputs = _holder_inputs(entries)
        material = dealer.material(circuit, backend, party=1)
        if backend == "gmw":
            shares = gmw_execute(circuit, 1, inputs, channel, material, transcript)
        else:
            shares = yao_execute(circuit, 1, inputs, channel, material,
                                 rng=garble_rng, transcript=transcript, garbler=1)
        reveal_output(shares, channel, transcript, send=True, receive=False)


def _holder_inputs(entries: list[RuleEntry]) -> dict[str, list[int]]:
    masks: list[int] = []
    patterns: list[int] = []
    ids: list[int] = []
    for entry in entries:
        m, p = rule_input_bits(entry.rule)
        masks.extend(m)
        patterns.extend(p)
        ids.extend(entry.next_hop.to_bits())
    return {
        "h_masks": masks,
        "h_patterns": patterns,
        "h_ids": ids,
        "h_dummy": list(DUMMY_HOP.to_bits()),
    }


# --------------------------------------------------------------------------
# querier


def _querier_session(local: TernaryRule, prefix: str, backend: str, channel,
                     dealer, nonce: str,
                     transcript: SessionTranscript | None) -> list[NextHopId]:
    envelope = json.dumps({
        "prefix": prefix,
        "rule_width": local.width,
        "id_width": HOP_ID_BITS,
        "backend": backend,
        "nonce": nonce,
    }).encode("utf-8")
    n = channel.send(MSG_ENVELOPE, envelope)
    if transcript is not None:
        transcript.record_send(MSG_ENVELOPE, n, envelope)
    kind, payload, n = channel.recv()
    if kind != MSG_ENVELOPE_ACK:
        raise ProtocolError(f"expected envelope ack, got kind {kind}")
    if transcript is not None:
        transcript.record_receive(kind, n, payload)
    ack = json.loads(payload.decode("utf-8"))
    k = int(ack["k"])
    if k == 0:
        return []
    if int(ack["id_width"]) != HOP_ID_BITS:
        raise ProtocolError("holder uses an incompatible identifier width")

    layout = CircuitLayout(k=k, rule_width=local.width, id_width=HOP_ID_BITS)
    circuit = circuit_for_layout(layout)
    mask_bits, pattern_bits = rule_input_bits(local)
    inputs = {"q_mask": list(mask_bits), "q_pattern": list(pattern_bits)}
    material = dealer.material(circuit, backend, party=0)
    if backend == "gmw":
        shares = gmw_execute(circuit, 0, inputs, channel, material, transcript)
    else:
        shares = yao_execute(circuit, 0, inputs, channel, material,
                             transcript=transcript, garbler=1)
    bits = reveal_output(shares, channel, transcript, send=False, receive=True)
    raw = [
        NextHopId.from_bits(bits[i * HOP_ID_BITS : (i + 1) * HOP_ID_BITS])
        for i in range(k)
    ]
    return raw


class _SessionDealer:
    """Hands both parties of one session their correlated setup material."""

    def __init__(self, seed: int) -> None:
        self._seed = seed
        self._lock = threading.Lock()
        self._materials = None

    def material(self, circuit: Circuit, backend: str, party: int):
        with self._lock:
            if self._materials is None:
                rng = random.Random(self._seed)
                self._materials = dealer_for_circuit(circuit, backend, rng,
                                                     garbler=1)
            return self._materials[party]


class LoopbackEndpoint:
    """A holder reachable over in-process channels, one session per query.

    The endpoint plays the trusted dealer for its sessions and owns the
    randomness for nonces, shuffles, and garbling, so a seeded endpoint
    produces reproducible sessions when queries are issued serially.
    """

    def __init__(self, service: SdxMatchService, seed: int = 0,
                 one_way_delay: float = 0.0) -> None:
        self.service = service
        self._rng = random.Random(seed)
        self._delay = one_way_delay
        self._lock = threading.Lock()

    def query(
        self,
        local: TernaryRule,
        prefix: str,
        backend: str = "gmw",
        stats_out: list[SessionStats] | None = None,
        _raw_out: list[NextHopId] | None = None,
    ) -> QueryResult:
        """Run one full query session; see module docstring for the flow."""
        if backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        with self._lock:
            dealer_seed = self._rng.getrandbits(64)
            shuffle_seed = self._rng.getrandbits(64)
            garble_seed = self._rng.getrandbits(64)
            nonce = f"{self._rng.getrandbits(64):016x}"
        dealer = _SessionDealer(dealer_seed)
        ch_q, ch_h = LoopbackEnd.pair(one_way_delay=self._delay)
        t_q = SessionTranscript()
        t_h = SessionTranscript()

        def holder_side() -> None:
            self.service.serve_query(
                ch_h, dealer,
                shuffle_rng=random.Random(shuffle_seed),
                garble_rng=random.Random(garble_seed),
                transcript=t_h,
            )

        def querier_side() -> list[NextHopId]:
            return _querier_session(local, prefix, backend, ch_q, dealer,
                                    nonce, t_q)

        try:
            raw, _ = run_pair(querier_side, holder_side,
                              close_on_error=(ch_q, ch_h))
        except (ChannelClosed, ChannelTimeout, ProtocolError,
                SetupUnderprovisioned) as exc:
            raise QueryAborted(str(exc)) from exc

        if _raw_out is not None:
            _raw_out.extend(raw)
        if stats_out is not None:
            k = len(raw)
            depth = 0
            if k:
                layout = CircuitLayout(k=k, rule_width=local.width,
                                       id_width=HOP_ID_BITS)
                depth = circuit_for_layout(layout).and_depth()
            stats_out.append(SessionStats(
                backend=backend,
                prefix=prefix,
                k=k,
                and_depth=depth,
                online_rounds=t_q.online_rounds,
                setup_bytes=t_q.setup_bytes,
                online_bytes=t_q.online_bytes,
                online_wall_time=t_q.online_wall_time,
            ))
        hops = frozenset(h for h in raw if h != DUMMY_HOP)
        return QueryResult(hops)


def query(local: TernaryRule, remote_sdx: LoopbackEndpoint, prefix: str,
          backend: str = "gmw", **kwargs) -> QueryResult:
    """Module-level convenience wrapper around endpoint.query()."""
    return remote_sdx.query(local, prefix, backend, **kwargs)
