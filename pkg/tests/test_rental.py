"""Lease workflow: propose-and-accept chain, agreement keys, IOU wiring."""

import pytest

from rentledger import (
    AuthorizationError,
    ContractNotActive,
    KeyCollision,
    ValidationError,
)
from rentledger import rental, rentcollect
from rentledger.ledger.model import CreateNode, ExerciseNode

from conftest import make_lease


@pytest.fixture
def proposal(platform, engine):
    house = rental.House("h1", "Rua A 1", "Bob")
    terms = rental.LeaseTerms(80000, "2024-05-01", ("2024-05-25", "2024-06-25"), 3)
    return rental.submit_proposal(engine, "Alice", "Bob", "Operator", house, terms)


class TestProposal:
    def test_proposal_visible_to_the_three_parties(self, engine, proposal):
        rec = engine.fetch(proposal)
        assert rec.signatories == frozenset({"Alice"})
        assert rec.observers == frozenset({"Bob", "Operator"})

    def test_only_tenant_can_propose(self, platform, engine):
        house = rental.House("h2", "x", "Bob")
        terms = rental.LeaseTerms(100, "2024-05-01", ("2024-05-25",), 1)
        with pytest.raises(AuthorizationError):
            engine.create(
                "Bob",
                rental.PROPOSAL,
                {
                    "tenant": "Alice",
                    "landlord": "Bob",
                    "operator": "Operator",
                    "house": house.payload(),
                    "terms": terms.payload(),
                },
            )

    def test_two_proposals_for_same_house_both_active(self, platform, engine, proposal):
        house = rental.House("h1", "Rua A 1", "Bob")
        terms = rental.LeaseTerms(70000, "2024-05-01", ("2024-05-25",), 1)
        second = rental.submit_proposal(engine, "Alice", "Bob", "Operator", house, terms)
        assert engine.is_active(proposal) and engine.is_active(second)

    def test_withdraw_archives(self, engine, proposal):
        rental.withdraw(engine, "Alice", proposal)
        assert not engine.is_active(proposal)

    def test_decline_archives(self, engine, proposal):
        rental.decline(engine, "Bob", proposal)
        assert not engine.is_active(proposal)

    def test_tenant_cannot_decline(self, engine, proposal):
        with pytest.raises(AuthorizationError):
            engine.exercise("Alice", proposal, "Decline")

    def test_resubmission_after_decline(self, platform, engine, proposal):
        rental.decline(engine, "Bob", proposal)
        house = rental.House("h1", "Rua A 1", "Bob")
        terms = rental.LeaseTerms(75000, "2024-05-01", ("2024-05-25",), 1)
        again = rental.submit_proposal(engine, "Alice", "Bob", "Operator", house, terms)
        assert engine.is_active(again)

    def test_terms_validation(self, platform, engine):
        house = rental.House("h3", "x", "Bob")
        bad = {"rent": 100, "beginDate": "2024-05-01", "paymentDates": ["2024-04-25"], "numArbitrators": 1}
        with pytest.raises(ValidationError):
            rental.submit_proposal(engine, "Alice", "Bob", "Operator", house, bad)
        bad = {"rent": 100, "beginDate": "2024-05-01", "paymentDates": ["2024-05-25"], "numArbitrators": 0}
        with pytest.raises(ValidationError):
            rental.submit_proposal(engine, "Alice", "Bob", "Operator", house, bad)


class TestAcceptApprove:
    def test_accept_creates_request_signed_by_both(self, engine, proposal):
        req = rental.accept(engine, "Bob", proposal)
        rec = engine.fetch(req)
        assert rec.template == rental.LA_REQUEST
        assert rec.signatories == frozenset({"Alice", "Bob"})
        assert not engine.is_active(proposal)

    def test_operator_cannot_accept(self, engine, proposal):
        with pytest.raises(AuthorizationError):
            engine.exercise("Operator", proposal, "Accept")

    def test_approve_creates_three_signatory_lease(self, platform, engine, proposal):
        req = rental.accept(engine, "Bob", proposal)
        lease = rental.approve(engine, "Operator", req)
        rec = engine.fetch(lease)
        assert rec.signatories == frozenset({"Alice", "Bob", "Operator"})
        assert rec.payload["remainingPaymentDates"] == ["2024-05-25", "2024-06-25"]

    def test_tenant_cannot_approve(self, engine, proposal):
        req = rental.accept(engine, "Bob", proposal)
        with pytest.raises(AuthorizationError):
            engine.exercise("Alice", req, "Approve")

    def test_duplicate_lease_key_collides_on_second_approve(self, platform, engine, proposal):
        req = rental.accept(engine, "Bob", proposal)
        rental.approve(engine, "Operator", req)
        house = rental.House("h1", "Rua A 1", "Bob")
        terms = rental.LeaseTerms(90000, "2024-05-01", ("2024-05-25",), 1)
        second = rental.submit_proposal(engine, "Alice", "Bob", "Operator", house, terms)
        req2 = rental.accept(engine, "Bob", second)
        with pytest.raises(KeyCollision):
            rental.approve(engine, "Operator", req2)

    def test_approve_registers_lease_for_collection(self, platform, engine, proposal):
        req = rental.accept(engine, "Bob", proposal)
        rental.approve(engine, "Operator", req)
        registry = engine.lookup_by_key("Evolve", rentcollect.clock_key("Operator"), "Operator")
        assert rental.la_key("Alice", "Bob", "h1") in registry.payload["laKeys"]


class TestProvenance:
    def test_lease_only_exists_after_full_chain(self, platform, engine, proposal):
        """Replay the log: the lease's create sits under Approve under Accept."""
        req = rental.accept(engine, "Bob", proposal)
        lease = rental.approve(engine, "Operator", req)

        approve_tx = next(
            tx for tx in engine.log
            for n in tx.iter_nodes()
            if isinstance(n, CreateNode) and n.contract.contract_id == lease
        )
        root = approve_tx.roots[0]
        assert isinstance(root, ExerciseNode)
        assert (root.template, root.choice, root.contract_id) == (rental.LA_REQUEST, "Approve", req)

        accept_tx = next(
            tx for tx in engine.log
            for n in tx.iter_nodes()
            if isinstance(n, CreateNode) and n.contract.contract_id == req
        )
        root = accept_tx.roots[0]
        assert isinstance(root, ExerciseNode)
        assert (root.template, root.choice, root.contract_id) == (rental.PROPOSAL, "Accept", proposal)

    def test_direct_creation_helper_requires_joint_action(self, platform, engine):
        house = rental.House("h4", "x", "Bob")
        terms = rental.LeaseTerms(100, "2024-05-01", ("2024-05-25",), 1)
        lease = rental.create_lease_direct(engine, "Alice", "Bob", "Operator", house, terms)
        assert engine.fetch(lease).signatories == frozenset({"Alice", "Bob", "Operator"})


class TestLeaseInvariants:
    def test_remaining_dates_must_be_subset_of_terms(self, engine):
        payload = {
            "tenant": "Alice",
            "landlord": "Bob",
            "operator": "Operator",
            "house": {"houseId": "h5", "address": "x", "landlord": "Bob"},
            "terms": {
                "rent": 100,
                "beginDate": "2024-05-01",
                "paymentDates": ["2024-05-25"],
                "numArbitrators": 1,
            },
            "remainingPaymentDates": ["2024-07-25"],
        }
        with pytest.raises(ValidationError):
            engine.create({"Alice", "Bob", "Operator"}, rental.LEASE_AGREEMENT, payload)

    def test_iou_amount_matches_lease_rent(self, platform, engine, clock):
        make_lease(platform, rent=123456)
        clock.set("2024-05-26T09:00:00Z")
        rentcollect.advance(engine, platform.provider, platform.operator)
        ious = rentcollect.process_event(engine, platform.lifecycler, platform.operator)
        assert len(ious) == 1
        rec = engine.fetch(ious[0])
        assert rec.payload["amount"] == 123456
        assert rec.payload["owner"] == "Bob" and rec.payload["debtor"] == "Alice"
        assert rec.signatories == frozenset({"Alice"})
        assert rec.observers == frozenset({"Bob"})
