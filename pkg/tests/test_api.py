"""Gateway endpoints: sessions, commands, stores, error mapping."""

import pytest
from fastapi.testclient import TestClient

from rentledger import ManualClock, new_platform
from rentledger.api import create_app

from conftest import ARBS, USERS


@pytest.fixture
def clock():
    return ManualClock("2024-05-01T09:00:00Z")


@pytest.fixture
def platform(clock):
    return new_platform(clock=clock, users=USERS, arbitrators=ARBS, initial_date="2024-05-01")


@pytest.fixture
def client(platform):
    app = create_app(platform)
    with TestClient(app) as c:
        yield c


def open_session(client, party, role):
    resp = client.post("/v1/sessions", json={"party": party, "role": role})
    assert resp.status_code == 201, resp.text
    return resp.json()["session"]


@pytest.fixture
def sessions(client):
    return {
        "tenant": open_session(client, "Alice", "tenant"),
        "landlord": open_session(client, "Bob", "landlord"),
        "operator": open_session(client, "Operator", "operator"),
        "arb1": open_session(client, "Arb1", "arbitrator"),
        "arb2": open_session(client, "Arb2", "arbitrator"),
        "arb3": open_session(client, "Arb3", "arbitrator"),
        "provider": open_session(client, "TimeProvider", "oracle"),
        "lifecycler": open_session(client, "Lifecycler", "oracle"),
    }


PROPOSAL_BODY = {
    "landlord": "Bob",
    "operator": "Operator",
    "house": {"houseId": "h1", "address": "Rua A 1"},
    "terms": {
        "rent": 80000,
        "beginDate": "2024-05-01",
        "paymentDates": ["2024-05-25", "2024-06-25"],
        "numArbitrators": 3,
    },
}


def make_lease_http(client, sessions):
    prop = client.post(f"/v1/sessions/{sessions['tenant']}/proposals", json=PROPOSAL_BODY)
    assert prop.status_code == 201
    # the landlord sees the proposal under a different external id
    landlord_props = client.get(f"/v1/sessions/{sessions['landlord']}/proposals").json()["entries"]
    xid = landlord_props[-1]["externalId"]
    req = client.post(f"/v1/sessions/{sessions['landlord']}/proposals/{xid}/accept")
    assert req.status_code == 200, req.text
    op_reqs = client.get(f"/v1/sessions/{sessions['operator']}/la-requests").json()["entries"]
    lease = client.post(
        f"/v1/sessions/{sessions['operator']}/la-requests/{op_reqs[-1]['externalId']}/approve"
    )
    assert lease.status_code == 200, lease.text
    tenant_leases = client.get(f"/v1/sessions/{sessions['tenant']}/lease-agreements").json()["entries"]
    return tenant_leases[-1]["externalId"]


class TestSessions:
    def test_unknown_party_404(self, client):
        resp = client.post("/v1/sessions", json={"party": "Nobody", "role": "tenant"})
        assert resp.status_code == 404
        assert resp.json()["error"]["code"] == "UnknownParty"

    def test_bad_role_403(self, client):
        resp = client.post("/v1/sessions", json={"party": "Alice", "role": "admin"})
        assert resp.status_code == 403

    def test_close_session(self, client):
        sid = open_session(client, "Alice", "tenant")
        assert client.delete(f"/v1/sessions/{sid}").status_code == 204
        assert client.get(f"/v1/sessions/{sid}").status_code == 404


class TestLeaseWorkflow:
    def test_full_chain(self, client, sessions):
        lease_xid = make_lease_http(client, sessions)
        entry = client.get(f"/v1/sessions/{sessions['tenant']}/store").json()["entries"]
        assert any(e["externalId"] == lease_xid for e in entry)

    def test_unauthorized_accept_is_403(self, client, sessions):
        client.post(f"/v1/sessions/{sessions['tenant']}/proposals", json=PROPOSAL_BODY)
        xid = client.get(f"/v1/sessions/{sessions['tenant']}/proposals").json()["entries"][-1]["externalId"]
        resp = client.post(f"/v1/sessions/{sessions['tenant']}/proposals/{xid}/accept")
        assert resp.status_code == 403
        assert resp.json()["error"]["code"] == "AuthorizationError"

    def test_stale_external_id_is_410(self, client, sessions):
        client.post(f"/v1/sessions/{sessions['tenant']}/proposals", json=PROPOSAL_BODY)
        xid = client.get(f"/v1/sessions/{sessions['tenant']}/proposals").json()["entries"][-1]["externalId"]
        assert client.post(f"/v1/sessions/{sessions['tenant']}/proposals/{xid}/withdraw").status_code == 200
        resp = client.post(f"/v1/sessions/{sessions['tenant']}/proposals/{xid}/withdraw")
        assert resp.status_code == 410
        assert resp.json()["error"]["code"] == "ContractGone"

    def test_unknown_external_id_is_404(self, client, sessions):
        resp = client.post(f"/v1/sessions/{sessions['tenant']}/proposals/999/accept")
        assert resp.status_code == 404

    def test_wrong_template_is_422(self, client, sessions):
        lease_xid = make_lease_http(client, sessions)
        resp = client.post(f"/v1/sessions/{sessions['tenant']}/proposals/{lease_xid}/withdraw")
        assert resp.status_code == 422
        assert resp.json()["error"]["code"] == "WrongTemplate"

    def test_invalid_terms_is_422(self, client, sessions):
        body = dict(PROPOSAL_BODY, terms=dict(PROPOSAL_BODY["terms"], paymentDates=["2024-04-01"]))
        resp = client.post(f"/v1/sessions/{sessions['tenant']}/proposals", json=body)
        assert resp.status_code == 422
        assert resp.json()["error"]["code"] == "ValidationError"


class TestMaintenanceOverHttp:
    def run_arbitration(self, client, sessions, lease_xid):
        t = sessions["tenant"]
        mi = client.post(
            f"/v1/sessions/{t}/lease-agreements/{lease_xid}/mis",
            json={"description": "Broken window", "startingDate": "2024-05-03"},
        )
        assert mi.status_code == 201, mi.text
        mi_xid = mi.json()["miReport"]["externalId"]
        invoked = client.post(f"/v1/sessions/{t}/mis/{mi_xid}/invoke-arbitrators", json={})
        assert invoked.status_code == 201, invoked.text
        for key in ("arb1", "arb2", "arb3"):
            sid = sessions[key]
            invites = client.get(f"/v1/sessions/{sid}/invitations").json()["entries"]
            resp = client.post(f"/v1/sessions/{sid}/invitations/{invites[-1]['externalId']}/accept")
            assert resp.status_code == 200, resp.text
        t_invites = client.get(f"/v1/sessions/{t}/invitations").json()["entries"]
        confirmed = client.post(f"/v1/sessions/{t}/invitations/{t_invites[-1]['externalId']}/confirm")
        assert confirmed.status_code == 200, confirmed.text
        # visitor opens the poll
        a1 = sessions["arb1"]
        mis = client.get(f"/v1/sessions/{a1}/mis").json()["entries"]
        poll = client.post(
            f"/v1/sessions/{a1}/mis/{mis[-1]['externalId']}/polls",
            json={
                "visitDetails": "saw it",
                "assessmentDate": "2024-05-06",
                "reparationDate": "2024-05-20",
                "cost": 15000,
                "landlordPct": 100,
            },
        )
        assert poll.status_code == 201, poll.text
        for key, pct in (("arb2", 50), ("arb3", 0)):
            sid = sessions[key]
            polls = client.get(f"/v1/sessions/{sid}/polls").json()["entries"]
            vote = client.post(
                f"/v1/sessions/{sid}/polls/{polls[-1]['externalId']}/vote",
                json={"landlordPct": pct},
            )
            assert vote.status_code == 200, vote.text
            last_vote = vote.json()
        return last_vote

    def test_arbitration_to_mean_result(self, client, sessions):
        lease_xid = make_lease_http(client, sessions)
        last_vote = self.run_arbitration(client, sessions, lease_xid)
        assert last_vote["votingComplete"] is True
        # the last voter's client auto-finalizes
        sid = sessions["arb3"]
        poll_xid = last_vote["poll"]["externalId"]
        final = client.post(f"/v1/sessions/{sid}/polls/{poll_xid}/finalize")
        assert final.status_code == 200, final.text
        result = final.json()["result"]["payload"]
        assert result["responsibility"] == {"landlordPct": 50, "tenantPct": 50}
        # every voter and both lease parties see the result
        for key in ("tenant", "landlord", "arb1", "arb2", "arb3"):
            entries = client.get(f"/v1/sessions/{sessions[key]}/results").json()["entries"]
            assert len(entries) == 1
        # the operator does not
        entries = client.get(f"/v1/sessions/{sessions['operator']}/results").json()["entries"]
        assert entries == []

    def test_duplicate_vote_is_409(self, client, sessions):
        lease_xid = make_lease_http(client, sessions)
        self.run_arbitration(client, sessions, lease_xid)
        sid = sessions["arb2"]
        polls = client.get(f"/v1/sessions/{sid}/polls").json()["entries"]
        resp = client.post(
            f"/v1/sessions/{sid}/polls/{polls[-1]['externalId']}/vote", json={"landlordPct": 10}
        )
        assert resp.status_code == 409
        assert resp.json()["error"]["code"] == "DuplicateVote"

    def test_mediation_over_http(self, client, sessions):
        lease_xid = make_lease_http(client, sessions)
        t, l = sessions["tenant"], sessions["landlord"]
        mi = client.post(
            f"/v1/sessions/{t}/lease-agreements/{lease_xid}/mis",
            json={"description": "leak", "startingDate": "2024-05-03"},
        ).json()["miReport"]
        l_mis = client.get(f"/v1/sessions/{l}/mis").json()["entries"]
        offer = client.post(
            f"/v1/sessions/{l}/mis/{l_mis[-1]['externalId']}/assessments",
            json={"landlordPct": 70, "cost": 20000},
        )
        assert offer.status_code == 201
        t_offers = client.get(f"/v1/sessions/{t}/mediation").json()["entries"]
        accepted = client.post(f"/v1/sessions/{t}/mediation/{t_offers[-1]['externalId']}/accept")
        assert accepted.status_code == 200
        assert accepted.json()["result"]["payload"]["method"] == "mediation"


class TestOracleEndpoints:
    def test_advance_and_process(self, client, sessions, clock):
        make_lease_http(client, sessions)
        clock.set("2024-05-26T09:00:00Z")
        adv = client.post(f"/v1/sessions/{sessions['provider']}/oracle/advance")
        assert adv.status_code == 200 and adv.json()["advanced"] is True
        assert adv.json()["date"] == "2024-05-26"
        proc = client.post(f"/v1/sessions/{sessions['lifecycler']}/oracle/process")
        assert proc.status_code == 200
        body = proc.json()
        assert body["iousCreated"] == 1 and body["leases"] == 1
        # the tenant sees the debt
        ious = client.get(f"/v1/sessions/{sessions['tenant']}/ious").json()["entries"]
        assert len(ious) == 1 and ious[0]["payload"]["amount"] == 80000
        # rerun: idempotent
        proc2 = client.post(f"/v1/sessions/{sessions['lifecycler']}/oracle/process")
        assert proc2.json()["iousCreated"] == 0

    def test_oracle_endpoints_require_oracle_role(self, client, sessions):
        resp = client.post(f"/v1/sessions/{sessions['tenant']}/oracle/advance")
        assert resp.status_code == 403
        assert resp.json()["error"]["code"] == "WrongRole"

    def test_non_provider_oracle_session_rejected(self, client, sessions):
        sid = open_session(client, "Alice", "oracle")
        resp = client.post(f"/v1/sessions/{sid}/oracle/advance")
        assert resp.status_code in (403, 404)  # not a provider: engine says no


class TestStoreEquivalence:
    def test_every_session_store_matches_projection(self, client, sessions, platform):
        lease_xid = make_lease_http(client, sessions)
        TestMaintenanceOverHttp().run_arbitration(client, sessions, lease_xid)
        engine = platform.engine
        party_by_key = {
            "tenant": "Alice", "landlord": "Bob", "operator": "Operator",
            "arb1": "Arb1", "arb2": "Arb2", "arb3": "Arb3",
        }
        for key, party in party_by_key.items():
            entries = client.get(f"/v1/sessions/{sessions[key]}/store").json()["entries"]
            got = {e["contractId"]: e["payload"] for e in entries}
            want = {cid: rec.payload for cid, rec in engine.visible_active(party).items()}
            assert got == want, party
