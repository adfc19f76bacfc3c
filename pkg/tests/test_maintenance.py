"""Maintenance issues: mediation, arbitrator invitation, polling, results."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rentledger import (
    AuthorizationError,
    KeyCollision,
    NotFound,
    NotVisible,
    ValidationError,
)
from rentledger import maintenance as mi
from rentledger import rentcollect
from rentledger.maintenance import (
    AlreadyConfirmed,
    DuplicateVote,
    ImpersonationError,
    InvitationAlreadyActive,
    InvitationFull,
    NotAVoter,
    NotEnoughArbitrators,
    VotingIncomplete,
)

from conftest import make_lease


@pytest.fixture
def lease(platform):
    return make_lease(platform, n_arb=3)


@pytest.fixture
def report(platform, engine, lease):
    return mi.create_mi(engine, "Alice", lease, "Broken window", "2024-05-03")


def arbitrated_report(platform, engine, lease, report, n=3):
    roster = mi.request_roster(engine, "Alice")
    out = mi.invoke_arbitrators(engine, "Alice", lease, roster, report)
    invite = out["invite"]
    for arb in [f"Arb{i}" for i in range(1, n + 1)]:
        invite = mi.accept_invitation(engine, arb, invite)
    return mi.confirm_attribution(engine, "Alice", invite)


class TestReporting:
    def test_tenant_reports_issue(self, engine, report):
        rec = engine.fetch(report)
        assert rec.signatories == frozenset({"Alice", "Bob"})
        assert rec.payload["arbitrators"] == []
        assert rec.payload["activeInvitation"] is False

    def test_landlord_may_report_too(self, platform, engine, lease):
        cid = mi.create_mi(engine, "Bob", lease, "Clogged drain", "2024-05-04")
        assert engine.is_active(cid)

    def test_operator_cannot_report(self, platform, engine, lease):
        with pytest.raises(AuthorizationError):
            mi.create_mi(engine, "Operator", lease, "nope", "2024-05-04")

    def test_issue_cannot_predate_lease(self, platform, engine, lease):
        with pytest.raises(ValidationError):
            mi.create_mi(engine, "Alice", lease, "too early", "2024-04-01")


class TestMediation:
    def test_assessment_flow_accept(self, platform, engine, report):
        a = mi.submit_assessment(engine, "Bob", report, mi.responsibility(70), 20000)
        rec = engine.fetch(a)
        assert rec.signatories == frozenset({"Bob"})
        assert rec.observers == frozenset({"Alice"})
        result = mi.resolve_mediation(engine, "Alice", a, accept=True)
        res = engine.fetch(result)
        assert res.payload["method"] == "mediation"
        assert res.payload["responsibility"] == {"landlordPct": 70, "tenantPct": 30}
        assert res.signatories == frozenset({"Alice", "Bob"})

    def test_reject_leaves_no_result(self, platform, engine, report):
        a = mi.submit_assessment(engine, "Bob", report, mi.responsibility(70), 20000)
        mi.resolve_mediation(engine, "Alice", a, accept=False)
        assert not engine.is_active(a)
        assert engine.active_contracts(mi.MI_RESULT) == []

    def test_creator_cannot_accept_own_assessment(self, platform, engine, report):
        a = mi.submit_assessment(engine, "Bob", report, mi.responsibility(70), 20000)
        with pytest.raises(AuthorizationError):
            mi.resolve_mediation(engine, "Bob", a, accept=True)

    def test_arbitrator_cannot_assess(self, platform, engine, report):
        with pytest.raises(AuthorizationError):
            mi.submit_assessment(engine, "Arb1", report, mi.responsibility(50), 100)

    def test_split_must_sum_to_hundred(self, platform, engine, report):
        with pytest.raises(ValidationError):
            mi.submit_assessment(engine, "Bob", report,
                                 {"landlordPct": 60, "tenantPct": 60}, 100)


class TestRosterRequests:
    def test_two_requesters_get_two_instances(self, platform, engine):
        first = mi.request_roster(engine, "Alice")
        second = mi.request_roster(engine, "Bob")
        assert first != second
        assert engine.fetch(first).observers == frozenset({"Alice"})
        assert engine.fetch(second).observers == frozenset({"Bob"})
        # the public baseline stays
        assert mi.public_roster(engine) is not None

    def test_add_observer_needs_a_request(self, platform, engine):
        baseline = mi.public_roster(engine)
        with pytest.raises(NotFound):
            engine.exercise("public", baseline.contract_id, "AddObserver",
                            {"request": "c-99999999"})

    def test_add_observer_rejects_invisible_contract(self, platform, engine, report):
        # an MIReport is not visible to the roster's authority, let alone a request
        baseline = mi.public_roster(engine)
        with pytest.raises(NotVisible):
            engine.exercise("public", baseline.contract_id, "AddObserver",
                            {"request": report})

    def test_add_observer_rejects_wrong_template(self, platform, engine):
        # publicly readable but not an AvailableArbitratorsRequest
        update = rentcollect.current_update(engine, "Operator")
        baseline = mi.public_roster(engine)
        with pytest.raises(ValidationError):
            engine.exercise("public", baseline.contract_id, "AddObserver",
                            {"request": update.contract_id})


class TestInvocation:
    def test_invite_carries_roster_and_requirement(self, platform, engine, lease, report):
        roster = mi.request_roster(engine, "Alice")
        out = mi.invoke_arbitrators(engine, "Alice", lease, roster, report)
        invite = engine.fetch(out["invite"])
        assert set(invite.payload["invited"]) == {"Arb1", "Arb2", "Arb3", "Arb4"}
        assert invite.payload["required"] == 3
        assert invite.payload["confirmed"] == []
        flagged = engine.fetch(out["miReport"])
        assert flagged.payload["activeInvitation"] is True
        assert not engine.is_active(report)
        assert not engine.is_active(roster)

    def test_second_invocation_while_active(self, platform, engine, lease, report):
        roster = mi.request_roster(engine, "Alice")
        out = mi.invoke_arbitrators(engine, "Alice", lease, roster, report)
        roster2 = mi.request_roster(engine, "Bob")
        with pytest.raises(InvitationAlreadyActive):
            mi.invoke_arbitrators(engine, "Bob", lease, roster2, out["miReport"])

    def test_landlord_forged_roster_rejected(self, platform, engine, lease, report):
        fake = engine.create(
            "Bob", mi.AVAILABLE_ARBITRATORS,
            {"operator": "Bob", "arbitrators": ["Carol"], "observers": ["Alice", "Bob"]},
        )
        with pytest.raises(ImpersonationError):
            mi.invoke_arbitrators(engine, "Bob", lease, fake.contract_id, report)

    def test_accomplice_forged_roster_rejected(self, platform, engine, lease, report):
        fake = engine.create(
            "Dave", mi.AVAILABLE_ARBITRATORS,
            {"operator": "Dave", "arbitrators": ["Carol"], "observers": ["Alice", "Bob"]},
        )
        with pytest.raises(AuthorizationError):
            mi.invoke_arbitrators(engine, "Alice", lease, fake.contract_id, report)

    def test_foreign_report_fails_the_fetch(self, platform, engine, lease):
        """An MIReport of unrelated parties dies at the visibility check."""
        other = make_lease(platform, tenant="Carol", landlord="Dave", house_id="h77", n_arb=1)
        foreign = mi.create_mi(engine, "Carol", other, "not yours", "2024-05-05")
        roster = mi.request_roster(engine, "Alice")
        with pytest.raises(NotVisible):
            mi.invoke_arbitrators(engine, "Alice", lease, roster, foreign)

    def test_report_of_sibling_lease_rejected(self, platform, engine, lease):
        """Same parties, different house: visible, but the lease key differs."""
        sibling = make_lease(platform, house_id="h88", n_arb=1)
        foreign = mi.create_mi(engine, "Alice", sibling, "other house", "2024-05-05")
        roster = mi.request_roster(engine, "Alice")
        with pytest.raises(ValidationError):
            mi.invoke_arbitrators(engine, "Alice", lease, roster, foreign)

    def test_outsider_cannot_invoke(self, platform, engine, lease, report):
        roster = mi.request_roster(engine, "Carol")
        with pytest.raises(AuthorizationError):
            mi.invoke_arbitrators(engine, "Carol", lease, roster, report)


class TestInvitationRound:
    @pytest.mark.parametrize("required", [1, 3])
    def test_confirmations_cap_at_the_agreed_number(self, platform, required):
        lease = make_lease(platform, n_arb=required, house_id=f"hN{required}")
        engine = platform.engine
        report = mi.create_mi(engine, "Alice", lease, "issue", "2024-05-03")
        roster = mi.request_roster(engine, "Alice")
        invite = mi.invoke_arbitrators(engine, "Alice", lease, roster, report)["invite"]
        for arb in [f"Arb{i}" for i in range(1, required + 1)]:
            invite = mi.accept_invitation(engine, arb, invite)
        with pytest.raises(InvitationFull):
            mi.accept_invitation(engine, f"Arb{required + 1}", invite)

    def test_double_accept_rejected(self, platform, engine, lease, report):
        roster = mi.request_roster(engine, "Alice")
        invite = mi.invoke_arbitrators(engine, "Alice", lease, roster, report)["invite"]
        invite = mi.accept_invitation(engine, "Arb1", invite)
        with pytest.raises(AlreadyConfirmed):
            mi.accept_invitation(engine, "Arb1", invite)

    def test_uninvited_party_rejected(self, platform, engine, lease, report):
        roster = mi.request_roster(engine, "Alice")
        invite = mi.invoke_arbitrators(engine, "Alice", lease, roster, report)["invite"]
        with pytest.raises(AuthorizationError):
            mi.accept_invitation(engine, "Carol", invite)

    def test_confirm_needs_exact_count(self, platform, engine, lease, report):
        roster = mi.request_roster(engine, "Alice")
        invite = mi.invoke_arbitrators(engine, "Alice", lease, roster, report)["invite"]
        invite = mi.accept_invitation(engine, "Arb1", invite)
        invite = mi.accept_invitation(engine, "Arb2", invite)
        with pytest.raises(NotEnoughArbitrators):
            mi.confirm_attribution(engine, "Alice", invite)

    def test_arbitrator_cannot_confirm(self, platform, engine, lease, report):
        roster = mi.request_roster(engine, "Alice")
        invite = mi.invoke_arbitrators(engine, "Alice", lease, roster, report)["invite"]
        for arb in ("Arb1", "Arb2", "Arb3"):
            invite = mi.accept_invitation(engine, arb, invite)
        with pytest.raises(AuthorizationError):
            mi.confirm_attribution(engine, "Arb1", invite)

    def test_confirm_attributes_arbitrators(self, platform, engine, lease, report):
        attributed = arbitrated_report(platform, engine, lease, report)
        rec = engine.fetch(attributed)
        assert rec.payload["arbitrators"] == ["Arb1", "Arb2", "Arb3"]
        assert rec.observers == frozenset({"Arb1", "Arb2", "Arb3"})
        assert rec.payload["activeInvitation"] is True  # stays up until a result lands


class TestPolling:
    def test_visitor_opens_the_poll(self, platform, engine, lease, report):
        attributed = arbitrated_report(platform, engine, lease, report)
        poll = mi.create_poll(engine, "Arb2", attributed, "saw it", "2024-05-06",
                              "2024-05-20", 15000, mi.responsibility(80))
        rec = engine.fetch(poll)
        assert rec.payload["visitor"] == "Arb2"
        assert rec.payload["alreadyVoted"] == ["Arb2"]
        assert rec.signatories == frozenset({"Alice", "Bob", "Arb2"})
        assert rec.observers == frozenset({"Arb1", "Arb3"})

    def test_non_arbitrator_cannot_open_poll(self, platform, engine, lease, report):
        attributed = arbitrated_report(platform, engine, lease, report)
        with pytest.raises(AuthorizationError):
            mi.create_poll(engine, "Alice", attributed, "x", "2024-05-06",
                           "2024-05-20", 15000, mi.responsibility(80))

    def test_second_poll_for_same_issue_collides(self, platform, engine, lease, report):
        attributed = arbitrated_report(platform, engine, lease, report)
        mi.create_poll(engine, "Arb1", attributed, "x", "2024-05-06", "2024-05-20",
                       100, mi.responsibility(80))
        with pytest.raises(KeyCollision):
            mi.create_poll(engine, "Arb2", attributed, "y", "2024-05-07", "2024-05-21",
                           100, mi.responsibility(20))

    def test_vote_extends_signatories(self, platform, engine, lease, report):
        attributed = arbitrated_report(platform, engine, lease, report)
        poll = mi.create_poll(engine, "Arb1", attributed, "x", "2024-05-06",
                              "2024-05-20", 100, mi.responsibility(100))
        out = mi.cast_vote(engine, "Arb2", poll, mi.responsibility(50))
        rec = engine.fetch(out["poll"])
        assert rec.signatories == frozenset({"Alice", "Bob", "Arb1", "Arb2"})
        assert len(rec.payload["votes"]) == 2
        assert out["complete"] is False

    def test_duplicate_vote_rejected(self, platform, engine, lease, report):
        attributed = arbitrated_report(platform, engine, lease, report)
        poll = mi.create_poll(engine, "Arb1", attributed, "x", "2024-05-06",
                              "2024-05-20", 100, mi.responsibility(100))
        poll = mi.cast_vote(engine, "Arb2", poll, mi.responsibility(50))["poll"]
        with pytest.raises(DuplicateVote):
            mi.cast_vote(engine, "Arb2", poll, mi.responsibility(10))

    def test_outsider_vote_rejected(self, platform, engine, lease, report):
        attributed = arbitrated_report(platform, engine, lease, report)
        poll = mi.create_poll(engine, "Arb1", attributed, "x", "2024-05-06",
                              "2024-05-20", 100, mi.responsibility(100))
        with pytest.raises(NotAVoter):
            mi.cast_vote(engine, "Arb4", poll, mi.responsibility(10))
        with pytest.raises(NotAVoter):
            mi.cast_vote(engine, "Alice", poll, mi.responsibility(10))

    def test_finalize_requires_every_vote(self, platform, engine, lease, report):
        attributed = arbitrated_report(platform, engine, lease, report)
        poll = mi.create_poll(engine, "Arb1", attributed, "x", "2024-05-06",
                              "2024-05-20", 100, mi.responsibility(100))
        poll = mi.cast_vote(engine, "Arb2", poll, mi.responsibility(50))["poll"]
        with pytest.raises(VotingIncomplete):
            mi.finalize_votation(engine, "Arb2", poll)

    def test_full_poll_resolves_to_the_mean(self, platform, engine, lease, report):
        attributed = arbitrated_report(platform, engine, lease, report)
        poll = mi.create_poll(engine, "Arb1", attributed, "x", "2024-05-06",
                              "2024-05-20", 15000, mi.responsibility(100))
        poll = mi.cast_vote(engine, "Arb2", poll, mi.responsibility(50))["poll"]
        out = mi.cast_vote(engine, "Arb3", poll, mi.responsibility(0))
        assert out["complete"] is True
        result = mi.finalize_votation(engine, "Arb3", out["poll"])
        rec = engine.fetch(result)
        assert rec.payload["responsibility"] == {"landlordPct": 50, "tenantPct": 50}
        assert rec.payload["method"] == "arbitration"
        assert rec.payload["cost"] == 15000
        assert rec.observers == frozenset({"Arb1", "Arb2", "Arb3"})

    def test_first_result_wins_across_routes(self, platform, engine, lease, report):
        attributed = arbitrated_report(platform, engine, lease, report)
        poll = mi.create_poll(engine, "Arb1", attributed, "x", "2024-05-06",
                              "2024-05-20", 100, mi.responsibility(100))
        poll = mi.cast_vote(engine, "Arb2", poll, mi.responsibility(50))["poll"]
        poll = mi.cast_vote(engine, "Arb3", poll, mi.responsibility(0))["poll"]
        # mediation sneaks in first
        a = mi.submit_assessment(engine, "Bob", attributed, mi.responsibility(100), 100)
        mi.resolve_mediation(engine, "Alice", a, accept=True)
        with pytest.raises(KeyCollision):
            mi.finalize_votation(engine, "Arb1", poll)


class TestMean:
    def test_derived_mean_60_40_50(self):
        votes = [mi.responsibility(60), mi.responsibility(40), mi.responsibility(50)]
        # independent oracle: exact rational mean, half away from zero
        exact = Fraction(sum(v["landlordPct"] for v in votes), len(votes))
        floor = exact.numerator // exact.denominator
        expected = floor + (1 if exact - floor >= Fraction(1, 2) else 0)
        got = mi.mean_responsibility(votes)
        assert got["landlordPct"] == expected == 50
        assert got["tenantPct"] == 50

    @pytest.mark.parametrize(
        "pcts,expected",
        [([100, 50, 0], 50), ([1, 2], 2), ([0, 1], 1), ([33, 33, 34], 33), ([0], 0), ([100], 100)],
    )
    def test_rounding_half_away_from_zero(self, pcts, expected):
        votes = [mi.responsibility(p) for p in pcts]
        assert mi.mean_responsibility(votes)["landlordPct"] == expected

    @given(st.lists(st.integers(0, 100), min_size=1, max_size=9), st.randoms())
    @settings(max_examples=200, deadline=None)
    def test_mean_is_permutation_invariant_and_valid(self, pcts, rng):
        votes = [mi.responsibility(p) for p in pcts]
        base = mi.mean_responsibility(votes)
        shuffled = list(votes)
        rng.shuffle(shuffled)
        assert mi.mean_responsibility(shuffled) == base
        assert 0 <= base["landlordPct"] <= 100
        assert base["landlordPct"] + base["tenantPct"] == 100
        exact = Fraction(sum(pcts), len(pcts))
        assert abs(Fraction(base["landlordPct"]) - exact) <= Fraction(1, 2)
