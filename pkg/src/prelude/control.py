"""Per-exchange verifier nodes that veto forwarding-loop-inducing rules.

A member asks its exchange to activate a deflection rule.  The exchange
walks the deflected traffic's BGP path, asks every exchange present on
that path which of its installed rules overlap the candidate (via the
distinct-match primitive, so the rule itself never leaves the verifier),
and chases each reported deflection onward.  Reaching a previously seen
(exchange, AS) point means the rule would close a loop; running out of
hop budget with deflections still unexplored is treated the same way,
conservatively.  Accepted rules are registered locally and the verifier
subscribes at every exchange it consulted so later removals, deactivations,
and routing changes trigger re-verification.

The exploration never learns who owns a remote rule, only where the rule
would send the traffic.  It prunes a reported deflection when no member of
the reporting exchange other than the deflection target lies on the path
being walked: whoever owns that rule, the traffic cannot reach them here,
so the rule cannot fire.  For the verifier's own exchange the owners are
local knowledge and the filter is exact.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field

from .bgpsim import (
    DeflectionPolicy,
    PolicyError,
    RibState,
    SdxSite,
    validate_policy,
)
from .distinct_match import (
    LoopbackEndpoint,
    NextHopId,
    QueryAborted,
    RuleEntry,
    SdxMatchService,
)
from .rules import TernaryRule, overlaps

log = logging.getLogger(__name__)

ACCEPT = "accept"
REJECT = "reject"

SAFE = "safe"
LOOP_DETECTED = "loop_detected"
BUDGET_EXHAUSTED = "budget_exhausted"
QUERY_FAILED = "query_failed"

DEFAULT_BUDGET = 6


# --------------------------------------------------------------------------
# request / verdict types


@dataclass(frozen=True)
class VerifyRequest:
    """One member's request to activate a deflection rule."""

    requester: int
    origin_sdx: int
    policy: DeflectionPolicy
    prefix: str
    visited: tuple[tuple[int, int], ...]
    budget: int

    def __post_init__(self) -> None:
        if self.budget < 0:
            raise ValueError("budget must be non-negative")
        if not self.visited or self.visited[0] != (self.origin_sdx,
                                                   self.requester):
            raise ValueError(
                "visited must begin with the requester at its exchange")
        if self.policy.owner != self.requester:
            raise ValueError("requester must own the policy")
        if self.policy.prefix != self.prefix:
            raise ValueError("prefix must match the policy")


def make_request(policy: DeflectionPolicy,
                 budget: int = DEFAULT_BUDGET) -> VerifyRequest:
    return VerifyRequest(
        requester=policy.owner,
        origin_sdx=policy.sdx_id,
        policy=policy,
        prefix=policy.prefix,
        visited=((policy.sdx_id, policy.owner),),
        budget=budget,
    )


@dataclass(frozen=True)
class Verdict:
    decision: str
    reason: str
    closed_at: int | None = None
    rule_id: str | None = None

    def __post_init__(self) -> None:
        if self.decision not in (ACCEPT, REJECT):
            raise ValueError(f"unknown decision {self.decision!r}")
        if self.decision == REJECT and self.reason == SAFE:
            raise ValueError("a rejection needs a reason")
        if self.decision == ACCEPT and self.reason != SAFE:
            raise ValueError("an acceptance cannot carry a failure reason")
        if self.closed_at is not None and self.reason != LOOP_DETECTED:
            raise ValueError("closed_at only accompanies a detected loop")

    @property
    def accepted(self) -> bool:
        return self.decision == ACCEPT


# --------------------------------------------------------------------------
# exploration core

# A query answer is a list of (next hop, owner) pairs; owner is None when
# the reporting exchange is remote and must not reveal it.  None for the
# whole answer means the query itself failed.
QueryAnswer = "list[tuple[NextHopId, int | None]] | None"


@dataclass(frozen=True)
class Exploration:
    """Outcome of walking one candidate rule's deflection consequences."""

    status: str
    closed_at: int | None
    queried: frozenset[int]
    max_depth: int


def explore_deflection(view, *, prefix: str, rule: TernaryRule,
                       origin_sdx: int, requester: int, deflect_to: int,
                       budget: int) -> Exploration:
    """Walk the deflected path, chasing overlapping remote deflections.

    `view` supplies the verifier's knowledge: `path(prefix, asn)`,
    `sites_of(asn)`, `members(sdx_id)`, and
    `query(origin_sdx, target_sdx, rule, prefix)`.
    """
    state = _WalkState(view, prefix, rule, origin_sdx)
    status, closed = state.walk(
        arrival=(origin_sdx, deflect_to),
        visited=((origin_sdx, requester),),
        budget=budget,
        depth=1,
    )
    return Exploration(status, closed, frozenset(state.queried),
                       state.max_depth)


class _WalkState:
    def __init__(self, view, prefix: str, rule: TernaryRule,
                 origin_sdx: int) -> None:
        self.view = view
        self.prefix = prefix
        self.rule = rule
        self.origin_sdx = origin_sdx
        self.queried: set[int] = set()
        self.max_depth = 0

    def walk(self, arrival: tuple[int, int],
             visited: tuple[tuple[int, int], ...], budget: int,
             depth: int) -> tuple[str, int | None]:
        self.max_depth = max(self.max_depth, depth)
        site_here, asn_here = arrival
        path = self.view.path(self.prefix, asn_here)
        if not path:
            # The deflection target cannot reach the prefix at all; the
            # traffic is dropped there, which cannot form a loop.
            return SAFE, None
        on_path = set(path)

        # Revisiting any exchange presence point already on the chain means
        # the traffic comes back to an AS it already left: a loop.  The
        # point the arrival deflection itself delivered to is not a revisit.
        sites_in_order: list[int] = []
        seen: set[int] = set()
        for pos, asn in enumerate(path):
            for site_id in self.view.sites_of(asn):
                point = (site_id, asn)
                if point != arrival or pos != 0:
                    if point in visited:
                        return LOOP_DETECTED, site_id
                if site_id not in seen:
                    seen.add(site_id)
                    sites_in_order.append(site_id)

        for site_id in sites_in_order:
            answer = self.view.query(self.origin_sdx, site_id, self.rule,
                                     self.prefix)
            if answer is None:
                return QUERY_FAILED, site_id
            self.queried.add(site_id)
            for hop, owner in sorted(answer, key=lambda p: p[0]):
                point = (hop.sdx_id, hop.as_id)
                if owner is not None:
                    candidates = {owner}
                else:
                    candidates = set(self.view.members(hop.sdx_id))
                    candidates.discard(hop.as_id)
                if not candidates & on_path:
                    # No possible owner of this rule is on the walked path,
                    # so the rule cannot fire on this traffic here.
                    continue
                if point in visited:
                    return LOOP_DETECTED, hop.sdx_id
                if budget == 0:
                    return BUDGET_EXHAUSTED, None
                status, closed = self.walk(point, visited + (point,),
                                           budget - 1, depth + 1)
                if status != SAFE:
                    return status, closed
        return SAFE, None


def verdict_of(exploration: Exploration, rule_id: str | None = None) -> Verdict:
    if exploration.status == SAFE:
        return Verdict(ACCEPT, SAFE, rule_id=rule_id)
    closed = exploration.closed_at if exploration.status == LOOP_DETECTED else None
    return Verdict(REJECT, exploration.status, closed_at=closed,
                   rule_id=rule_id)


# --------------------------------------------------------------------------
# stateless view over explicit rule sets (replays, baselines)


class StaticMatchView:
    """Exploration knowledge backed by explicit entry lists.

    Useful for replaying an install attempt against a hypothetical rule
    state without touching live nodes.  With `match_agnostic` every entry
    is reported regardless of overlap, which is the SIDR-style baseline:
    it shares per-prefix forwarding actions but nothing about the traffic
    they apply to.
    """

    def __init__(self, sites: list[SdxSite], ribs: dict[str, RibState],
                 entries: dict[int, list[RuleEntry]],
                 match_agnostic: bool = False) -> None:
        self._sites = {s.sdx_id: s for s in sites}
        self._ribs = ribs
        self._entries = entries
        self._agnostic = match_agnostic
        self._presence: dict[int, tuple[int, ...]] = {}
        for site in sites:
            for asn in site.members:
                got = self._presence.get(asn, ())
                self._presence[asn] = tuple(sorted(set(got) | {site.sdx_id}))

    def path(self, prefix: str, asn: int) -> tuple[int, ...]:
        rib = self._ribs.get(prefix)
        return rib.path(asn) if rib else ()

    def sites_of(self, asn: int) -> tuple[int, ...]:
        return self._presence.get(asn, ())

    def members(self, sdx_id: int) -> frozenset[int]:
        return self._sites[sdx_id].members

    def query(self, origin_sdx: int, target_sdx: int, rule: TernaryRule,
              prefix: str):
        local = origin_sdx == target_sdx
        answer: list[tuple[NextHopId, int | None]] = []
        seen: set[NextHopId] = set()
        for entry in self._entries.get(target_sdx, ()):
            if entry.prefix != prefix:
                continue
            if not self._agnostic and not overlaps(rule, entry.rule):
                continue
            if local:
                answer.append((entry.next_hop, entry.owner))
            elif entry.next_hop not in seen:
                seen.add(entry.next_hop)
                answer.append((entry.next_hop, None))
        return answer


def sidr_baseline(req: VerifyRequest, sites: list[SdxSite],
                  ribs: dict[str, RibState],
                  entries: dict[int, list[RuleEntry]]) -> Verdict:
    """Match-agnostic verdict over the same exploration and budget."""
    view = StaticMatchView(sites, ribs, entries, match_agnostic=True)
    exploration = explore_deflection(
        view, prefix=req.prefix, rule=req.policy.rule,
        origin_sdx=req.origin_sdx, requester=req.requester,
        deflect_to=req.policy.deflect_to, budget=req.budget)
    return verdict_of(exploration)


# --------------------------------------------------------------------------
# event log


@dataclass(frozen=True)
class LogEvent:
    time: int
    sdx: int
    kind: str
    detail: dict

    def line(self) -> str:
        inner = " ".join(f"{k}={self.detail[k]}" for k in sorted(self.detail))
        return f"{self.time} sdx={self.sdx} {self.kind} {inner}"


# --------------------------------------------------------------------------
# registry


@dataclass
class RegistryEntry:
    """A rule as its home exchange tracks it, active or not."""

    rule_id: str
    entry: RuleEntry
    policy: DeflectionPolicy
    budget: int
    active: bool = False
    queried: frozenset[int] = frozenset()
    subscribers: set[int] = field(default_factory=set)


# --------------------------------------------------------------------------
# transports


class DirectTransport:
    """Plaintext query evaluation with the same answers the SMPC gives.

    The holder-visible information is logged identically (prefix, entry
    count, requester) so log-based privacy checks cover both transports.
    """

    def __init__(self, plane: "ControlPlane") -> None:
        self.plane = plane

    def query(self, origin_sdx: int, target_sdx: int, rule: TernaryRule,
              prefix: str):
        node = self.plane.nodes[target_sdx]
        entries = node.service.entries_for(prefix)
        node.log("query_served",
                 {"prefix": prefix, "k": len(entries), "from": origin_sdx})
        local = origin_sdx == target_sdx
        answer: list[tuple[NextHopId, int | None]] = []
        seen: set[NextHopId] = set()
        for entry in entries:
            if not overlaps(rule, entry.rule):
                continue
            if local:
                answer.append((entry.next_hop, entry.owner))
            elif entry.next_hop not in seen:
                seen.add(entry.next_hop)
                answer.append((entry.next_hop, None))
        return answer


class SmpcTransport:
    """Queries remote exchanges through real two-party sessions."""

    def __init__(self, plane: "ControlPlane", backend: str = "gmw") -> None:
        self.plane = plane
        self.backend = backend

    def query(self, origin_sdx: int, target_sdx: int, rule: TernaryRule,
              prefix: str):
        node = self.plane.nodes[target_sdx]
        if origin_sdx == target_sdx:
            entries = node.service.entries_for(prefix)
            node.log("query_served",
                     {"prefix": prefix, "k": len(entries),
                      "from": origin_sdx})
            return [(e.next_hop, e.owner) for e in entries
                    if overlaps(rule, e.rule)]
        try:
            result = node.endpoint.query(rule, prefix, backend=self.backend)
        except QueryAborted:
            return None
        node.log("query_served",
                 {"prefix": prefix, "k": len(node.service.entries_for(prefix)),
                  "from": origin_sdx})
        return [(hop, None) for hop in result.sorted_hops()]


# --------------------------------------------------------------------------
# nodes and plane


class SdxNode:
    """One exchange's verifier: registry, match service, subscriptions."""

    def __init__(self, site: SdxSite, plane: "ControlPlane",
                 endpoint_seed: int) -> None:
        self.sdx_id = site.sdx_id
        self.members = site.members
        self.plane = plane
        self.service = SdxMatchService(site.sdx_id)
        self.endpoint = LoopbackEndpoint(self.service, seed=endpoint_seed)
        self.registry: dict[str, RegistryEntry] = {}
        self._next_serial = 1

    # -- bookkeeping

    def log(self, kind: str, detail: dict) -> None:
        self.plane.record(self.sdx_id, kind, detail)

    def _new_rule_id(self) -> str:
        rule_id = f"r{self.sdx_id}-{self._next_serial}"
        self._next_serial += 1
        return rule_id

    def active_policies(self, prefix: str | None = None
                        ) -> list[DeflectionPolicy]:
        return [r.policy for r in self.registry.values()
                if r.active and (prefix is None or r.entry.prefix == prefix)]

    # -- verification

    def handle_install(self, req: VerifyRequest) -> Verdict:
        if req.origin_sdx != self.sdx_id:
            raise ValueError("request addressed to another exchange")
        if req.requester not in self.members:
            raise ValueError(f"AS {req.requester} is not a member here")
        rib = self.plane.rib(req.prefix)
        if rib is None:
            raise PolicyError(f"no routing state for prefix {req.prefix!r}")
        validate_policy(req.policy, self.plane.sites, rib)
        rule_id = self._new_rule_id()
        self.log("install_request",
                 {"rule_id": rule_id, "owner": req.requester,
                  "prefix": req.prefix, "budget": req.budget})
        record = RegistryEntry(
            rule_id=rule_id,
            entry=RuleEntry(
                rule=req.policy.rule,
                next_hop=NextHopId(self.sdx_id, req.policy.deflect_to),
                owner=req.requester,
                prefix=req.prefix,
            ),
            policy=req.policy,
            budget=req.budget,
        )
        self.registry[rule_id] = record
        verdict = self._verify(record)
        if verdict.accepted:
            self._activate(record)
        self.log("verdict",
                 {"rule_id": rule_id, "decision": verdict.decision,
                  "reason": verdict.reason})
        return verdict

    def _verify(self, record: RegistryEntry) -> Verdict:
        exploration = explore_deflection(
            self.plane,
            prefix=record.entry.prefix,
            rule=record.entry.rule,
            origin_sdx=self.sdx_id,
            requester=record.entry.owner,
            deflect_to=record.policy.deflect_to,
            budget=record.budget,
        )
        record.queried = exploration.queried - {self.sdx_id}
        return verdict_of(exploration, rule_id=record.rule_id)

    def _activate(self, record: RegistryEntry) -> None:
        self.service.register(record.entry)
        record.active = True
        self.log("activate", {"rule_id": record.rule_id})
        for sdx_id in sorted(record.queried):
            self.plane.nodes[sdx_id].receive_subscribe(
                record.entry.prefix, self.sdx_id)

    def _deactivate(self, record: RegistryEntry, why: str) -> None:
        self.service.deregister(record.entry)
        record.active = False
        self.log("deactivate",
                 {"rule_id": record.rule_id, "owner": record.entry.owner,
                  "reason": why})
        self._notify_subscribers(record)

    def _notify_subscribers(self, record: RegistryEntry) -> None:
        targets = sorted(record.subscribers)
        record.subscribers.clear()
        for sdx_id in targets:
            self.log("notify", {"to": sdx_id, "prefix": record.entry.prefix})
            self.plane.nodes[sdx_id].receive_notify(record.entry.prefix,
                                                    self.sdx_id)

    # -- inter-exchange messages

    def receive_subscribe(self, prefix: str, subscriber: int) -> None:
        self.log("subscribe", {"prefix": prefix, "from": subscriber})
        for record in self.registry.values():
            if record.active and record.entry.prefix == prefix:
                record.subscribers.add(subscriber)

    def receive_notify(self, prefix: str, from_sdx: int) -> None:
        for rule_id in sorted(self.registry):
            record = self.registry[rule_id]
            if not record.active or record.entry.prefix != prefix:
                continue
            if from_sdx not in record.queried:
                continue
            self.log("reverify", {"rule_id": rule_id, "cause": "notify"})
            verdict = self._verify(record)
            if not verdict.accepted:
                self._deactivate(record, verdict.reason)

    # -- lifecycle

    def handle_remove(self, owner: int, rule_id: str) -> bool:
        record = self.registry.get(rule_id)
        if record is None or record.entry.owner != owner:
            log.warning("removal of unknown rule %s by AS %d", rule_id, owner)
            self.log("remove_unknown", {"rule_id": rule_id, "owner": owner})
            return False
        if record.active:
            self.service.deregister(record.entry)
        del self.registry[rule_id]
        self.log("remove", {"rule_id": rule_id, "owner": owner})
        self._notify_subscribers(record)
        return True

    def reverify_for_update(self, prefix: str, old_rib: RibState | None
                            ) -> list[Verdict]:
        verdicts: list[Verdict] = []
        for rule_id in sorted(self.registry):
            record = self.registry[rule_id]
            if record.entry.prefix != prefix:
                continue
            old_path = old_rib.path(record.policy.deflect_to) if old_rib else ()
            new_path = self.plane.path(prefix, record.policy.deflect_to)
            if old_path == new_path:
                continue
            self.log("reverify", {"rule_id": rule_id, "cause": "bgp_update"})
            verdict = self._verify(record)
            verdicts.append(verdict)
            if record.active and not verdict.accepted:
                self._deactivate(record, verdict.reason)
            elif not record.active and verdict.accepted:
                self._activate(record)
        return verdicts


class ControlPlane:
    """Deterministic single-process simulation of the verifier network."""

    def __init__(self, graph, sites: list[SdxSite],
                 ribs: dict[str, RibState], *, transport: str = "direct",
                 backend: str = "gmw", seed: int = 0) -> None:
        self.graph = graph
        self.sites = list(sites)
        self._ribs = dict(ribs)
        self.clock = 0
        self.events: list[LogEvent] = []
        self._lock = threading.Lock()
        self.nodes: dict[int, SdxNode] = {}
        for index, site in enumerate(sorted(self.sites,
                                            key=lambda s: s.sdx_id)):
            self.nodes[site.sdx_id] = SdxNode(
                site, self, endpoint_seed=seed * 7919 + index)
        self._presence: dict[int, tuple[int, ...]] = {}
        for site in self.sites:
            for asn in site.members:
                got = self._presence.get(asn, ())
                self._presence[asn] = tuple(sorted(set(got) | {site.sdx_id}))
        if transport == "direct":
            self.transport = DirectTransport(self)
        elif transport == "smpc":
            self.transport = SmpcTransport(self, backend=backend)
        else:
            raise ValueError(f"unknown transport {transport!r}")

    # -- exploration view

    def rib(self, prefix: str) -> RibState | None:
        return self._ribs.get(prefix)

    def path(self, prefix: str, asn: int) -> tuple[int, ...]:
        rib = self._ribs.get(prefix)
        return rib.path(asn) if rib else ()

    def sites_of(self, asn: int) -> tuple[int, ...]:
        return self._presence.get(asn, ())

    def members(self, sdx_id: int) -> frozenset[int]:
        return self.nodes[sdx_id].members

    def query(self, origin_sdx: int, target_sdx: int, rule: TernaryRule,
              prefix: str):
        self.nodes[origin_sdx].log(
            "query_sent", {"target": target_sdx, "prefix": prefix})
        return self.transport.query(origin_sdx, target_sdx, rule, prefix)

    # -- event log

    def record(self, sdx_id: int, kind: str, detail: dict) -> None:
        with self._lock:
            self.events.append(LogEvent(self.clock, sdx_id, kind,
                                        dict(detail)))
            self.clock += 1

    def events_at(self, sdx_id: int) -> list[LogEvent]:
        return [e for e in self.events if e.sdx == sdx_id]

    # -- member-facing operations

    def install(self, policy: DeflectionPolicy,
                budget: int = DEFAULT_BUDGET) -> Verdict:
        node = self.nodes[policy.sdx_id]
        return node.handle_install(make_request(policy, budget))

    def remove(self, owner: int, rule_id: str) -> bool:
        for node in self.nodes.values():
            if rule_id in node.registry:
                return node.handle_remove(owner, rule_id)
        log.warning("removal of unknown rule %s by AS %d", rule_id, owner)
        return False

    def bgp_update(self, prefix: str, rib: RibState) -> list[Verdict]:
        old = self._ribs.get(prefix)
        self._ribs[prefix] = rib
        self.record(0, "bgp_update", {"prefix": prefix})
        verdicts: list[Verdict] = []
        for sdx_id in sorted(self.nodes):
            verdicts.extend(
                self.nodes[sdx_id].reverify_for_update(prefix, old))
        return verdicts

    # -- state inspection

    def active_policies(self, prefix: str | None = None
                        ) -> list[DeflectionPolicy]:
        out: list[DeflectionPolicy] = []
        for sdx_id in sorted(self.nodes):
            out.extend(self.nodes[sdx_id].active_policies(prefix))
        return out

    def active_entries(self) -> dict[int, list[RuleEntry]]:
        return {
            sdx_id: [r.entry for r in node.registry.values() if r.active]
            for sdx_id, node in self.nodes.items()
        }

    def rules_of(self, owner: int) -> list[tuple[str, bool]]:
        out: list[tuple[str, bool]] = []
        for sdx_id in sorted(self.nodes):
            for rule_id, record in sorted(
                    self.nodes[sdx_id].registry.items()):
                if record.entry.owner == owner:
                    out.append((rule_id, record.active))
        return out

    def sidr_verdict(self, policy: DeflectionPolicy,
                     budget: int = DEFAULT_BUDGET) -> Verdict:
        req = make_request(policy, budget)
        entries = {sdx_id: node.service.entries_for(policy.prefix)
                   for sdx_id, node in self.nodes.items()}
        return sidr_baseline(req, self.sites, self._ribs, entries)


__all__ = [
    "ACCEPT",
    "BUDGET_EXHAUSTED",
    "ControlPlane",
    "DEFAULT_BUDGET",
    "DirectTransport",
    "Exploration",
    "LOOP_DETECTED",
    "LogEvent",
    "QUERY_FAILED",
    "REJECT",
    "RegistryEntry",
    "SAFE",
    "SdxNode",
    "SmpcTransport",
    "StaticMatchView",
    "Verdict",
    "VerifyRequest",
    "explore_deflection",
    "make_request",
    "sidr_baseline",
    "verdict_of",
]
