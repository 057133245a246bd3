"""AS-level network model: topology, stable routing, deflections, oracle."""

from prelude.bgpsim.fixtures import (
    AS_A,
    AS_B,
    AS_M,
    AS_N,
    AS_Z,
    PREFIX,
    SDX_1,
    SDX_2,
    TwoExchangeFixture,
    two_exchange_fixture,
)
from prelude.bgpsim.oracle import (
    Loop,
    cube_minus,
    forwarding_oracle,
    normalize_cycle,
    simulate_packet,
)
from prelude.bgpsim.policies import (
    DeflectionPolicy,
    PolicyError,
    generate_policies,
    gr_compliant,
    hop_class,
    validate_policy,
)
from prelude.bgpsim.routing import (
    CUSTOMER,
    ORIGIN,
    PEER,
    PREFERENCE,
    PROVIDER,
    RibState,
    Route,
    compute_routes,
    traversed_sdxes,
    valley_free,
)
from prelude.bgpsim.topology import (
    AsGraph,
    SdxSite,
    TopologyError,
    format_relationships,
    format_sdx_sites,
    generate_topology,
    parse_relationships,
    parse_sdx_sites,
    sites_of_member,
)

__all__ = [
    "AS_A",
    "AS_B",
    "AS_M",
    "AS_N",
    "AS_Z",
    "AsGraph",
    "CUSTOMER",
    "DeflectionPolicy",
    "Loop",
    "ORIGIN",
    "PEER",
    "PREFERENCE",
    "PREFIX",
    "PROVIDER",
    "PolicyError",
    "RibState",
    "Route",
    "SDX_1",
    "SDX_2",
    "SdxSite",
    "TopologyError",
    "TwoExchangeFixture",
    "compute_routes",
    "cube_minus",
    "format_relationships",
    "format_sdx_sites",
    "forwarding_oracle",
    "generate_policies",
    "generate_topology",
    "gr_compliant",
    "hop_class",
    "normalize_cycle",
    "parse_relationships",
    "parse_sdx_sites",
    "simulate_packet",
    "sites_of_member",
    "traversed_sdxes",
    "two_exchange_fixture",
    "valley_free",
]
