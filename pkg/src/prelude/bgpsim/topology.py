"""AS-level topologies with business relationships and exchange points.

The graph stores the usual two relationship kinds: customer-to-provider
(the customer pays) and settlement-free peering.  A synthetic generator
builds hierarchies that are acyclic by construction and fully reachable
under export rules: a clique of transit-free providers at the top, every
other AS multihomed to earlier ASes, peering sprinkled on top, and exchange
fabrics that peer their members.  Real relationship dumps in the common
``a|b|rel`` text form can be imported instead.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

CUSTOMER = "customer"
PROVIDER = "provider"
PEER = "peer"


class TopologyError(ValueError):
    """Topology construction or validation failed."""


@dataclass(frozen=True)
class SdxSite:
    """One software-defined exchange: an identifier and its member ASes."""

    sdx_id: int
    members: frozenset[int]

    def __post_init__(self) -> None:
        if not 0 <= self.sdx_id < (1 << 16):
            raise TopologyError("sdx_id must fit 16 bits")
        if len(self.members) < 2:
            raise TopologyError("an exchange needs at least two members")


class AsGraph:
    """Mutable AS graph; at most one relationship per AS pair."""

    def __init__(self) -> None:
        self._customers: dict[int, set[int]] = {}
        self._providers: dict[int, set[int]] = {}
        self._peers: dict[int, set[int]] = {}

    # ------------------------------------------------------------ building

    def add_as(self, asn: int) -> None:
        if asn < 0:
            raise TopologyError("AS numbers are non-negative")
        self._customers.setdefault(asn, set())
        self._providers.setdefault(asn, set())
        self._peers.setdefault(asn, set())

    def _check_new_edge(self, a: int, b: int) -> None:
        if a == b:
            raise TopologyError("self-loops are not allowed")
        if self.relationship(a, b) is not None:
            raise TopologyError(f"ASes {a} and {b} already have a relationship")

    def add_customer_provider(self, customer: int, provider: int) -> None:
        self.add_as(customer)
        self.add_as(provider)
        self._check_new_edge(customer, provider)
        self._customers[provider].add(customer)
        self._providers[customer].add(provider)

    def add_peer(self, a: int, b: int) -> None:
        self.add_as(a)
        self.add_as(b)
        self._check_new_edge(a, b)
        self._peers[a].add(b)
        self._peers[b].add(a)

    # ------------------------------------------------------------ queries

    def __contains__(self, asn: int) -> bool:
        return asn in self._customers

    @property
    def as_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self._customers))

    @property
    def n_as(self) -> int:
        return len(self._customers)

    def customers(self, asn: int) -> tuple[int, ...]:
        return tuple(sorted(self._customers.get(asn, ())))

    def providers(self, asn: int) -> tuple[int, ...]:
        return tuple(sorted(self._providers.get(asn, ())))

    def peers(self, asn: int) -> tuple[int, ...]:
        return tuple(sorted(self._peers.get(asn, ())))

    def relationship(self, a: int, b: int) -> str | None:
        """How b relates to a: b is a's customer, provider, or peer."""
        if b in self._customers.get(a, ()):
            return CUSTOMER
        if b in self._providers.get(a, ()):
            return PROVIDER
        if b in self._peers.get(a, ()):
            return PEER
        return None

    def edges(self):
        """Yield (a, b, kind) with customer edges as (customer, provider)."""
        for customer in self.as_ids:
            for provider in self.providers(customer):
                yield (customer, provider, CUSTOMER)
        seen = set()
        for a in self.as_ids:
            for b in self.peers(a):
                if (b, a) not in seen:
                    seen.add((a, b))
                    yield (a, b, PEER)

    # ---------------------------------------------------------- validation

    def validate(self) -> None:
        """Reject provider cycles (an AS must not transitively pay itself)."""
        state: dict[int, int] = {}

        def visit(asn: int) -> None:
            stack = [(asn, iter(self.providers(asn)))]
            state[asn] = 1
            while stack:
                node, it = stack[-1]
                advanced = False
                for nxt in it:
                    if state.get(nxt) == 1:
                        raise TopologyError(
                            f"provider hierarchy contains a cycle through AS {nxt}"
                        )
                    if nxt not in state:
                        state[nxt] = 1
                        stack.append((nxt, iter(self.providers(nxt))))
                        advanced = True
                        break
                if not advanced:
                    state[node] = 2
                    stack.pop()

        for asn in self.as_ids:
            if asn not in state:
                visit(asn)


def sites_of_member(sites, asn: int) -> list[SdxSite]:
    """All exchanges the AS is present at, in sdx_id order."""
    return sorted((s for s in sites if asn in s.members), key=lambda s: s.sdx_id)


# --------------------------------------------------------------------------
# synthetic generation


def generate_topology(
    n_as: int,
    n_sdx: int,
    seed: int,
    n_tier1: int | None = None,
    max_providers: int = 2,
    peer_fraction: float = 0.3,
    sdx_size_range: tuple[int, int] = (2, 6),
    fabric_peering: float = 0.6,
) -> tuple[AsGraph, list[SdxSite]]:
    """Build a reachable, hierarchy-acyclic topology with exchange sites."""
    if n_as < 3:
        raise TopologyError("need at least three ASes")
    if n_sdx < 0:
        raise TopologyError("negative exchange count")
    if sdx_size_range[0] < 2 or sdx_size_range[0] > sdx_size_range[1]:
        raise TopologyError("exchange size range must be [lo, hi] with lo >= 2")
    if sdx_size_range[1] > n_as:
        raise TopologyError("exchange size exceeds AS count")

    rng = random.Random(seed)
    graph = AsGraph()
    ids = list(range(1, n_as + 1))
    if n_tier1 is None:
        n_tier1 = max(2, min(8, n_as // 20))
    n_tier1 = min(n_tier1, n_as)

    tier1 = ids[:n_tier1]
    for asn in tier1:
        graph.add_as(asn)
    for i, a in enumerate(tier1):
        for b in tier1[i + 1 :]:
            graph.add_peer(a, b)

    # Every later AS buys transit from one or two already-placed ASes,
    # preferring the well-connected ones, so the hierarchy is acyclic and
    # everyone has an uphill path into the clique.
    degree = {asn: 1 for asn in ids}
    for asn in ids[n_tier1:]:
        placed = ids[: ids.index(asn)]
        weights = [degree[p] for p in placed]
        n_prov = 1 if len(placed) == 1 else rng.randint(1, max_providers)
        chosen: list[int] = []
        while len(chosen) < n_prov:
            pick = rng.choices(placed, weights=weights)[0]
            if pick not in chosen:
                chosen.append(pick)
        for provider in chosen:
            graph.add_customer_provider(asn, provider)
            degree[provider] += 1
            degree[asn] += 1

    n_peer_links = round(n_as * peer_fraction)
    attempts = 0
    added = 0
    while added < n_peer_links and attempts < 20 * n_peer_links:
        attempts += 1
        a, b = rng.sample(ids, 2)
        if graph.relationship(a, b) is None:
            graph.add_peer(a, b)
            added += 1

    sites: list[SdxSite] = []
    for sdx_id in range(1, n_sdx + 1):
        size = rng.randint(*sdx_size_range)
        members = rng.sample(ids, size)
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                if graph.relationship(a, b) is None and rng.random() < fabric_peering:
                    graph.add_peer(a, b)
        sites.append(SdxSite(sdx_id=sdx_id, members=frozenset(members)))

    graph.validate()
    return graph, sites


# --------------------------------------------------------------------------
# text formats


def parse_relationships(text: str) -> AsGraph:
    """Read ``a|b|-1`` (a is provider of b) and ``a|b|0`` (peers) lines."""
    graph = AsGraph()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("|")
        if len(parts) != 3:
            raise TopologyError(f"line {lineno}: expected a|b|rel")
        try:
            a, b, rel = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise TopologyError(f"line {lineno}: {exc}") from None
        if rel == -1:
            graph.add_customer_provider(customer=b, provider=a)
        elif rel == 0:
            graph.add_peer(a, b)
        else:
            raise TopologyError(f"line {lineno}: unknown relationship {rel}")
    graph.validate()
    return graph


def format_relationships(graph: AsGraph) -> str:
    lines = []
    for a, b, kind in graph.edges():
        if kind == CUSTOMER:
            lines.append(f"{b}|{a}|-1")
        else:
            lines.append(f"{a}|{b}|0")
    return "\n".join(lines) + "\n"


def parse_sdx_sites(text: str) -> list[SdxSite]:
    """Read ``sdx_id: as1,as2,...`` lines."""
    sites = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, tail = line.partition(":")
        try:
            sdx_id = int(head)
            members = frozenset(int(m) for m in tail.split(",") if m.strip())
        except ValueError as exc:
            raise TopologyError(f"line {lineno}: {exc}") from None
        sites.append(SdxSite(sdx_id=sdx_id, members=members))
    if len({s.sdx_id for s in sites}) != len(sites):
        raise TopologyError("duplicate sdx_id")
    return sites


def format_sdx_sites(sites) -> str:
    lines = [
        f"{s.sdx_id}: {','.join(str(m) for m in sorted(s.members))}"
        for s in sorted(sites, key=lambda s: s.sdx_id)
    ]
    return "\n".join(lines) + "\n"
