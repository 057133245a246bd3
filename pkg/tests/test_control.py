"""Verifier node, exploration, baseline, and churn-safety tests."""

from __future__ import annotations

import random

import pytest

from prelude.bgpsim import (
    AsGraph,
    DeflectionPolicy,
    PolicyError,
    SdxSite,
    compute_routes,
    forwarding_oracle,
    generate_policies,
    generate_topology,
    parse_relationships,
    format_relationships,
    two_exchange_fixture,
)
from prelude.control import (
    ACCEPT,
    BUDGET_EXHAUSTED,
    ControlPlane,
    LOOP_DETECTED,
    QUERY_FAILED,
    REJECT,
    SAFE,
    StaticMatchView,
    Verdict,
    VerifyRequest,
    explore_deflection,
    make_request,
    sidr_baseline,
    verdict_of,
)
from prelude.distinct_match import QueryAborted
from prelude.rules import (
    FlowSpec,
    PROTO_TCP,
    encode,
    random_rule,
)


WEB = encode(FlowSpec(ip_proto=PROTO_TCP, dst_port=80))
SSH = encode(FlowSpec(ip_proto=PROTO_TCP, dst_port=22))


def fixture_plane(transport: str = "direct", **kwargs) -> ControlPlane:
    fx = two_exchange_fixture()
    plane = ControlPlane(fx.graph, list(fx.sites), {fx.prefix: fx.rib},
                         transport=transport, **kwargs)
    return plane


# --------------------------------------------------------------------------
# request and verdict invariants


class TestRequestInvariants:
    def test_request_shape(self):
        fx = two_exchange_fixture()
        req = make_request(fx.deflect_b_to_a, budget=4)
        assert req.visited[0] == (1, 2)
        assert req.budget == 4
        with pytest.raises(ValueError):
            VerifyRequest(requester=2, origin_sdx=1,
                          policy=fx.deflect_b_to_a, prefix=fx.prefix,
                          visited=((1, 2),), budget=-1)
        with pytest.raises(ValueError):
            VerifyRequest(requester=2, origin_sdx=1,
                          policy=fx.deflect_b_to_a, prefix=fx.prefix,
                          visited=((2, 2),), budget=3)
        with pytest.raises(ValueError):
            VerifyRequest(requester=4, origin_sdx=1,
                          policy=fx.deflect_b_to_a, prefix=fx.prefix,
                          visited=((1, 4),), budget=3)

    def test_verdict_shape(self):
        with pytest.raises(ValueError):
            Verdict(REJECT, SAFE)
        with pytest.raises(ValueError):
            Verdict(ACCEPT, LOOP_DETECTED)
        with pytest.raises(ValueError):
            Verdict(ACCEPT, SAFE, closed_at=3)
        ok = Verdict(REJECT, LOOP_DETECTED, closed_at=2)
        assert not ok.accepted


# --------------------------------------------------------------------------
# the two-exchange story, end to end over real sessions


class TestFixtureSequence:
    def test_install_reject_remove_retry(self):
        fx = two_exchange_fixture()
        plane = fixture_plane("smpc", backend="gmw", seed=11)

        first = plane.install(fx.deflect_b_to_a)
        assert first.accepted
        assert plane.active_policies() == [fx.deflect_b_to_a]

        second = plane.install(fx.deflect_n_to_m)
        assert second.decision == REJECT
        assert second.reason == LOOP_DETECTED
        assert second.closed_at in (1, 2)
        assert plane.active_policies(fx.prefix) == [fx.deflect_b_to_a]

        ssh_policy = DeflectionPolicy(owner=3, sdx_id=2, rule=SSH,
                                      deflect_to=4, prefix=fx.prefix)
        third = plane.install(ssh_policy)
        assert third.accepted

        assert plane.remove(2, first.rule_id)
        retry = plane.install(fx.deflect_n_to_m)
        assert retry.accepted
        active = set()
        for policy in plane.active_policies(fx.prefix):
            active.add(policy.owner)
        assert active == {3}
        assert forwarding_oracle(fx.graph, fx.rib,
                                 plane.active_policies(fx.prefix),
                                 fx.prefix) == set()

    def test_subscription_and_notification_flow(self):
        fx = two_exchange_fixture()
        plane = fixture_plane("direct")
        first = plane.install(fx.deflect_b_to_a)
        node1 = plane.nodes[1]
        record = node1.registry[first.rule_id]
        assert record.subscribers == set()

        ssh_policy = DeflectionPolicy(owner=3, sdx_id=2, rule=SSH,
                                      deflect_to=4, prefix=fx.prefix)
        plane.install(ssh_policy)
        # the accepted ssh rule consulted exchange 1 and subscribed there
        assert record.subscribers == {2}

        plane.remove(2, first.rule_id)
        notifies = [e for e in plane.events if e.kind == "notify"]
        assert len(notifies) == 1
        assert notifies[0].detail["to"] == 2
        reverifies = [e for e in plane.events_at(2)
                      if e.kind == "reverify"]
        assert len(reverifies) == 1
        # the dependent ssh rule stays active: a removal cannot loop it
        assert plane.active_policies(fx.prefix) == [ssh_policy]

    def test_remove_unknown_rule_is_a_noop(self, caplog):
        plane = fixture_plane("direct")
        with caplog.at_level("WARNING"):
            assert not plane.remove(2, "r1-99")
        assert "unknown rule" in caplog.text

    def test_query_failure_rejects_conservatively(self):
        fx = two_exchange_fixture()
        plane = fixture_plane("smpc", seed=5)
        plane.install(fx.deflect_b_to_a)

        def boom(local, prefix, backend="gmw", **kwargs):
            raise QueryAborted("injected")

        plane.nodes[1].endpoint.query = boom
        verdict = plane.install(fx.deflect_n_to_m)
        assert verdict.decision == REJECT
        assert verdict.reason == QUERY_FAILED
        assert plane.active_policies(fx.prefix) == [fx.deflect_b_to_a]


# --------------------------------------------------------------------------
# verdicts against the forwarding oracle on the two-exchange topology


class TestTwoSdxExactness:
    def test_random_rule_pairs_match_oracle(self):
        fx = two_exchange_fixture()
        rng = random.Random(41)
        for _ in range(150):
            rule_b = random_rule(8, rng)
            rule_n = random_rule(8, rng)
            first = DeflectionPolicy(owner=2, sdx_id=1, rule=rule_b,
                                     deflect_to=1, prefix=fx.prefix)
            second = DeflectionPolicy(owner=3, sdx_id=2, rule=rule_n,
                                      deflect_to=4, prefix=fx.prefix)
            plane = ControlPlane(fx.graph, list(fx.sites),
                                 {fx.prefix: fx.rib})
            assert plane.install(first).accepted
            verdict = plane.install(second)
            loops = forwarding_oracle(fx.graph, fx.rib, [first, second],
                                      fx.prefix)
            if loops:
                assert verdict.decision == REJECT, (rule_b, rule_n)
                assert verdict.reason == LOOP_DETECTED
            else:
                assert verdict.accepted, (rule_b, rule_n)

    def test_http_ssh_disjointness_is_seen(self):
        fx = two_exchange_fixture()
        plane = fixture_plane("direct")
        plane.install(fx.deflect_b_to_a)
        ssh_policy = DeflectionPolicy(owner=3, sdx_id=2, rule=SSH,
                                      deflect_to=4, prefix=fx.prefix)
        assert plane.install(ssh_policy).accepted


# --------------------------------------------------------------------------
# budget semantics on a three-exchange chain


def chain_setup(loop_back: bool):
    g = AsGraph()
    g.add_customer_provider(customer=1, provider=9)
    g.add_customer_provider(customer=2, provider=3)
    g.add_customer_provider(customer=3, provider=9)
    g.add_customer_provider(customer=4, provider=5)
    g.add_customer_provider(customer=5, provider=9)
    if loop_back:
        g.add_customer_provider(customer=6, provider=1)
    else:
        g.add_customer_provider(customer=6, provider=9)
    sites = [
        SdxSite(1, frozenset({1, 2})),
        SdxSite(2, frozenset({3, 4})),
        SdxSite(3, frozenset({5, 6})),
    ]
    rib = compute_routes(g, 9)
    plane = ControlPlane(g, sites, {"p": rib})
    chain = [
        DeflectionPolicy(owner=3, sdx_id=2, rule=WEB, deflect_to=4,
                         prefix="p"),
        DeflectionPolicy(owner=5, sdx_id=3, rule=WEB, deflect_to=6,
                         prefix="p"),
    ]
    head = DeflectionPolicy(owner=1, sdx_id=1, rule=WEB, deflect_to=2,
                            prefix="p")
    return plane, chain, head


class TestBudget:
    def test_exhaustion_then_acceptance(self):
        plane, chain, head = chain_setup(loop_back=False)
        assert plane.install(chain[1], budget=6).accepted
        assert plane.install(chain[0], budget=6).accepted
        low = plane.install(head, budget=1)
        assert (low.decision, low.reason) == (REJECT, BUDGET_EXHAUSTED)
        zero = plane.install(head, budget=0)
        assert zero.reason == BUDGET_EXHAUSTED
        high = plane.install(head, budget=2)
        assert high.accepted

    def test_deep_loop_found_once_budget_reaches_it(self):
        plane, chain, head = chain_setup(loop_back=True)
        assert plane.install(chain[1], budget=6).accepted
        assert plane.install(chain[0], budget=6).accepted
        low = plane.install(head, budget=1)
        assert low.reason == BUDGET_EXHAUSTED
        deep = plane.install(head, budget=2)
        assert (deep.decision, deep.reason) == (REJECT, LOOP_DETECTED)
        deeper = plane.install(head, budget=6)
        assert deeper.reason == LOOP_DETECTED

    def test_rejected_set_shrinks_with_budget(self):
        rng = random.Random(13)
        fx = two_exchange_fixture()
        graph, sites = generate_topology(n_as=40, n_sdx=5, seed=23)
        ribs = {"p": compute_routes(graph, graph.as_ids[0])}
        pool = generate_policies(graph, sites, ribs, seed=9)[:40]
        entries_state: dict[int, list] = {}
        plane = ControlPlane(graph, sites, ribs)
        for policy in pool:
            try:
                plane.install(policy, budget=6)
            except PolicyError:
                continue
        entries = plane.active_entries()
        view = StaticMatchView(sites, ribs, entries)
        previous_rejects: set[int] | None = None
        for budget in (0, 1, 2, 4, 8):
            rejects = set()
            for index, policy in enumerate(pool):
                exploration = explore_deflection(
                    view, prefix=policy.prefix, rule=policy.rule,
                    origin_sdx=policy.sdx_id, requester=policy.owner,
                    deflect_to=policy.deflect_to, budget=budget)
                if exploration.status != SAFE:
                    rejects.add(index)
            if previous_rejects is not None:
                assert rejects <= previous_rejects
            previous_rejects = rejects


# --------------------------------------------------------------------------
# the match-agnostic baseline


class TestSidrBaseline:
    def test_disjoint_rules_still_rejected(self):
        fx = two_exchange_fixture()
        plane = fixture_plane("direct")
        plane.install(fx.deflect_b_to_a)
        ssh_policy = DeflectionPolicy(owner=3, sdx_id=2, rule=SSH,
                                      deflect_to=4, prefix=fx.prefix)
        baseline = plane.sidr_verdict(ssh_policy)
        assert baseline.decision == REJECT
        assert baseline.reason == LOOP_DETECTED
        # while the match-aware verdict accepts
        assert plane.install(ssh_policy).accepted

    def test_genuine_loop_also_rejected(self):
        fx = two_exchange_fixture()
        plane = fixture_plane("direct")
        plane.install(fx.deflect_b_to_a)
        baseline = plane.sidr_verdict(fx.deflect_n_to_m)
        assert baseline.decision == REJECT

    def test_rejections_contain_the_match_aware_ones(self):
        rng = random.Random(3)
        fx = two_exchange_fixture()
        members = {1: (1, 2), 2: (3, 4)}
        for _ in range(200):
            plane = ControlPlane(fx.graph, list(fx.sites),
                                 {fx.prefix: fx.rib})
            n_pre = rng.randint(0, 3)
            for _ in range(n_pre):
                sdx_id = rng.choice((1, 2))
                owner, target = rng.sample(members[sdx_id], 2)
                policy = DeflectionPolicy(owner=owner, sdx_id=sdx_id,
                                          rule=random_rule(8, rng),
                                          deflect_to=target,
                                          prefix=fx.prefix)
                try:
                    plane.install(policy, budget=6)
                except PolicyError:
                    continue
            sdx_id = rng.choice((1, 2))
            owner, target = rng.sample(members[sdx_id], 2)
            candidate = DeflectionPolicy(owner=owner, sdx_id=sdx_id,
                                         rule=random_rule(8, rng),
                                         deflect_to=target,
                                         prefix=fx.prefix)
            budget = rng.choice((1, 2, 6))
            try:
                baseline = plane.sidr_verdict(candidate, budget=budget)
                aware = plane.install(candidate, budget=budget)
            except PolicyError:
                continue
            if aware.decision == REJECT:
                assert baseline.decision == REJECT, candidate


# --------------------------------------------------------------------------
# routing churn


def alternate_rib(fx, extra_provider: int):
    """Fixture routing state where `extra_provider` sells transit to Z."""
    graph = parse_relationships(format_relationships(fx.graph))
    graph.add_customer_provider(customer=5, provider=extra_provider)
    graph.validate()
    return graph, compute_routes(graph, 5)


class TestBgpUpdates:
    def test_update_reactivates_a_rejected_rule(self):
        fx = two_exchange_fixture()
        plane = fixture_plane("direct")
        assert plane.install(fx.deflect_b_to_a).accepted
        rejected = plane.install(fx.deflect_n_to_m)
        assert rejected.reason == LOOP_DETECTED

        # M now reaches the origin directly, so the deflected path
        # M -> B -> Z that fed the loop no longer exists.
        graph3, rib3 = alternate_rib(fx, extra_provider=4)
        verdicts = plane.bgp_update(fx.prefix, rib3)
        assert any(v.accepted for v in verdicts)
        owners = {p.owner for p in plane.active_policies(fx.prefix)}
        assert owners == {2, 3}
        assert forwarding_oracle(graph3, rib3,
                                 plane.active_policies(fx.prefix),
                                 fx.prefix) == set()

    def test_update_deactivates_a_rule_turning_unsafe(self):
        fx = two_exchange_fixture()
        graph3, rib3 = alternate_rib(fx, extra_provider=4)
        plane = ControlPlane(fx.graph, list(fx.sites), {fx.prefix: rib3})
        assert plane.install(fx.deflect_b_to_a).accepted
        assert plane.install(fx.deflect_n_to_m).accepted

        verdicts = plane.bgp_update(fx.prefix, fx.rib)
        assert any(v.decision == REJECT for v in verdicts)
        owners = {p.owner for p in plane.active_policies(fx.prefix)}
        assert owners == {2}
        assert forwarding_oracle(fx.graph, fx.rib,
                                 plane.active_policies(fx.prefix),
                                 fx.prefix) == set()

    def test_untouched_paths_produce_no_reverification(self):
        fx = two_exchange_fixture()
        plane = fixture_plane("direct")
        plane.install(fx.deflect_b_to_a)
        verdicts = plane.bgp_update(fx.prefix, fx.rib)
        assert verdicts == []


class TestChurnSafety:
    def test_oracle_stays_empty_through_mixed_events(self):
        for seed in (1, 2, 3):
            rng = random.Random(seed)
            graph, sites = generate_topology(n_as=30, n_sdx=4,
                                             seed=seed + 60)
            origins = list(graph.as_ids[:2])
            prefixes = [f"pfx{i}" for i in range(len(origins))]
            base_ribs = {p: compute_routes(graph, o)
                         for p, o in zip(prefixes, origins)}
            variants = {p: [base_ribs[p]] for p in prefixes}
            for p, origin in zip(prefixes, origins):
                text = format_relationships(graph)
                for attempt in range(10):
                    g2 = parse_relationships(text)
                    a, b = rng.sample(graph.as_ids, 2)
                    try:
                        g2.add_peer(a, b)
                        g2.validate()
                    except Exception:
                        continue
                    variants[p].append(compute_routes(g2, origin))
                    break
            pool = generate_policies(graph, sites, base_ribs, seed=seed)
            rng.shuffle(pool)
            available = list(pool)
            installed: list[tuple[int, str]] = []
            plane = ControlPlane(graph, sites, base_ribs)
            current = dict(base_ribs)
            for step in range(100):
                roll = rng.random()
                if roll < 0.55 and available:
                    policy = available.pop()
                    try:
                        verdict = plane.install(
                            policy, budget=rng.choice((1, 2, 4, 6)))
                    except PolicyError:
                        continue
                    if verdict.rule_id is not None:
                        installed.append((policy.owner, verdict.rule_id))
                elif roll < 0.8 and installed:
                    owner, rule_id = installed.pop(
                        rng.randrange(len(installed)))
                    plane.remove(owner, rule_id)
                else:
                    prefix = rng.choice(prefixes)
                    rib = rng.choice(variants[prefix])
                    plane.bgp_update(prefix, rib)
                    current[prefix] = rib
                for prefix in prefixes:
                    active = plane.active_policies(prefix)
                    assert forwarding_oracle(graph, current[prefix],
                                             active, prefix) == set(), (
                        seed, step)


# --------------------------------------------------------------------------
# privacy boundary, checked in the structured logs


class TestPrivacyBoundary:
    def test_holder_logs_know_only_prefix_count_and_requester(self):
        fx = two_exchange_fixture()
        plane = fixture_plane("smpc", seed=31)
        plane.install(fx.deflect_b_to_a)
        ssh_policy = DeflectionPolicy(owner=3, sdx_id=2, rule=SSH,
                                      deflect_to=4, prefix=fx.prefix)
        plane.install(ssh_policy)

        served = [e for e in plane.events if e.kind == "query_served"]
        assert served
        for event in served:
            assert set(event.detail) == {"prefix", "k", "from"}

        dump1 = "\n".join(e.line() for e in plane.events_at(1))
        dump2 = "\n".join(e.line() for e in plane.events_at(2))
        assert str(SSH.pattern) not in dump1
        assert str(SSH.mask) not in dump1
        assert str(WEB.pattern) not in dump2
        assert str(WEB.mask) not in dump2

    def test_event_lines_are_renderable(self):
        plane = fixture_plane("direct")
        fx = two_exchange_fixture()
        plane.install(fx.deflect_b_to_a)
        for event in plane.events:
            line = event.line()
            assert line.startswith(str(event.time))
            assert f"sdx={event.sdx}" in line


# --------------------------------------------------------------------------
# stateless pieces


class TestStatelessHelpers:
    def test_static_view_agnostic_superset(self):
        fx = two_exchange_fixture()
        plane = fixture_plane("direct")
        plane.install(fx.deflect_b_to_a)
        entries = plane.active_entries()
        ribs = {fx.prefix: fx.rib}
        aware = StaticMatchView(list(fx.sites), ribs, entries)
        agnostic = StaticMatchView(list(fx.sites), ribs, entries,
                                   match_agnostic=True)
        got_aware = aware.query(2, 1, SSH, fx.prefix)
        got_agnostic = agnostic.query(2, 1, SSH, fx.prefix)
        assert got_aware == []
        assert len(got_agnostic) == 1

    def test_sidr_baseline_function_matches_plane_wrapper(self):
        fx = two_exchange_fixture()
        plane = fixture_plane("direct")
        plane.install(fx.deflect_b_to_a)
        req = make_request(fx.deflect_n_to_m, budget=4)
        direct = sidr_baseline(req, list(fx.sites), {fx.prefix: fx.rib},
                               plane.active_entries())
        wrapped = plane.sidr_verdict(fx.deflect_n_to_m, budget=4)
        assert (direct.decision, direct.reason) == (
            wrapped.decision, wrapped.reason)

    def test_verdict_of_maps_statuses(self):
        from prelude.control import Exploration
        safe = Exploration(SAFE, None, frozenset(), 1)
        assert verdict_of(safe, "x").accepted
        loop = Exploration(LOOP_DETECTED, 2, frozenset({1}), 3)
        v = verdict_of(loop)
        assert (v.decision, v.reason, v.closed_at) == (
            REJECT, LOOP_DETECTED, 2)
