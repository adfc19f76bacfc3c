"""Per-party contract store: external ids, convergence, resync, feeds."""

from rentledger import maintenance, rental, rentcollect
from rentledger.api.store import GONE, LIVE, UNKNOWN, ContractStore

from conftest import make_lease


def store_for(engine, party):
    return ContractStore(engine, party).start()


def engine_view(engine, party):
    return {cid: rec.payload for cid, rec in engine.visible_active(party).items()}


def test_entries_follow_commit_order(platform, engine):
    store = store_for(engine, "Alice")
    house = rental.House("h1", "x", "Bob")
    terms = rental.LeaseTerms(100, "2024-05-01", ("2024-05-25",), 1)
    p1 = rental.submit_proposal(engine, "Alice", "Bob", "Operator", house, terms)
    house2 = rental.House("h2", "x", "Bob")
    p2 = rental.submit_proposal(engine, "Alice", "Bob", "Operator", house2, terms)
    entries = store.entries(rental.PROPOSAL)
    assert [e.contract_id for e in entries] == [p1, p2]
    assert [e.external_id for e in entries] == sorted(e.external_id for e in entries)


def test_archive_removes_entry_and_marks_gone(platform, engine):
    store = store_for(engine, "Alice")
    house = rental.House("h1", "x", "Bob")
    terms = rental.LeaseTerms(100, "2024-05-01", ("2024-05-25",), 1)
    prop = rental.submit_proposal(engine, "Alice", "Bob", "Operator", house, terms)
    xid = store.external_for(prop)
    assert store.status(xid) == LIVE
    rental.withdraw(engine, "Alice", prop)
    assert store.status(xid) == GONE
    assert store.get(xid) is None
    assert store.status(10_000) == UNKNOWN


def test_store_tracks_stakeholder_contracts_only(platform, engine):
    store_op = store_for(engine, "Operator")
    lease = make_lease(platform)
    mi_cid = maintenance.create_mi(engine, "Alice", lease, "leak", "2024-05-02")
    # the operator only witnessed the report: not in the store
    assert store_op.external_for(mi_cid) is None
    assert store_op.external_for(lease) is not None


def test_catchup_on_late_start(platform, engine):
    lease = make_lease(platform)
    store = store_for(engine, "Alice")  # started after the fact
    assert store.external_for(lease) is not None
    assert store.snapshot() == engine_view(engine, "Alice")


def test_resync_after_detach_keeps_ids_unique(platform, engine):
    store = store_for(engine, "Alice")
    make_lease(platform, house_id="h1")
    store.detach()
    make_lease(platform, house_id="h2")  # missed while detached
    store.resync()
    make_lease(platform, house_id="h3")
    assert store.snapshot() == engine_view(engine, "Alice")
    ids = [e.external_id for e in store.entries()]
    assert len(ids) == len(set(ids))
    assert ids == sorted(ids)


def test_store_converges_for_every_party(platform, engine, clock):
    parties = ("Alice", "Bob", "Operator", "Arb1", "Lifecycler")
    stores = {p: store_for(engine, p) for p in parties}
    lease = make_lease(platform)
    mi_cid = maintenance.create_mi(engine, "Alice", lease, "leak", "2024-05-02")
    roster = maintenance.request_roster(engine, "Alice")
    out = maintenance.invoke_arbitrators(engine, "Alice", lease, roster, mi_cid)
    invite = out["invite"]
    for arb in ("Arb1", "Arb2", "Arb3"):
        invite = maintenance.accept_invitation(engine, arb, invite)
    maintenance.confirm_attribution(engine, "Bob", invite)
    clock.set("2024-05-26T09:00:00Z")
    rentcollect.advance(engine, platform.provider, platform.operator)
    rentcollect.process_event(engine, platform.lifecycler, platform.operator)
    for party, store in stores.items():
        assert store.snapshot() == engine_view(engine, party), party


def test_feed_notifications(platform, engine, clock):
    tenant_store = store_for(engine, "Alice")
    arb_store = store_for(engine, "Arb1")
    voter_store = store_for(engine, "Arb2")
    feed_t, stop_t = tenant_store.listen()
    feed_a, stop_a = arb_store.listen()
    feed_v, stop_v = voter_store.listen()

    lease = make_lease(platform)
    mi_cid = maintenance.create_mi(engine, "Alice", lease, "leak", "2024-05-02")
    roster = maintenance.request_roster(engine, "Alice")
    out = maintenance.invoke_arbitrators(engine, "Alice", lease, roster, mi_cid)
    invite = out["invite"]
    for arb in ("Arb1", "Arb2", "Arb3"):
        invite = maintenance.accept_invitation(engine, arb, invite)
    report = maintenance.confirm_attribution(engine, "Alice", invite)
    poll = maintenance.create_poll(engine, "Arb1", report, "x", "2024-05-06",
                                   "2024-05-20", 100, maintenance.responsibility(100))
    poll = maintenance.cast_vote(engine, "Arb2", poll, maintenance.responsibility(50))["poll"]
    out2 = maintenance.cast_vote(engine, "Arb3", poll, maintenance.responsibility(0))
    maintenance.finalize_votation(engine, "Arb3", out2["poll"])
    clock.set("2024-05-26T09:00:00Z")
    rentcollect.advance(engine, platform.provider, platform.operator)
    rentcollect.process_event(engine, platform.lifecycler, platform.operator)

    tenant_types = []
    while not feed_t.empty():
        tenant_types.append(feed_t.get_nowait()["type"])
    arb_types = []
    while not feed_a.empty():
        arb_types.append(feed_a.get_nowait()["type"])
    voter_types = []
    while not feed_v.empty():
        voter_types.append(feed_v.get_nowait()["type"])
    stop_t()
    stop_a()
    stop_v()

    assert "iou" in tenant_types
    assert "result" in tenant_types
    assert "invitation" in arb_types
    assert "poll" not in arb_types  # the visitor has already voted
    assert "poll" in voter_types
    assert "result" in arb_types
    assert "iou" not in arb_types  # the arbitrator holds no stake in the debt


def test_unrelated_party_gets_no_events(platform, engine):
    store = store_for(engine, "Dave")
    feed, stop = store.listen()
    make_lease(platform)
    assert feed.empty()
    assert store.entries() == []
    stop()
