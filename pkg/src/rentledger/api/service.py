"""HTTP/JSON gateway in front of one ledger engine.

Clients open a role session for their party; each session owns a live
contract store (external ids -> active contracts) and an SSE event feed.
Commands are synchronous: the response is produced after the commit, and
the session store has already ingested the transaction by then.

Wire conventions: dates are ISO-8601 strings, money is integer minor
units, errors are `{"error": {"code", "message"}}` with the engine's
machine-readable code, SSE frames are `event: <type>` / `data: <json>`.
"""

from __future__ import annotations

import json
import queue
import threading
import time
import uuid
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .. import maintenance, rental, rentcollect
from ..ledger import LedgerError
from ..platform import ROLES, Platform
from .store import GONE, LIVE, ContractStore, StoreEntry

_STATUS_BY_CODE = {
    "AuthorizationError": 403,
    "NotVisible": 403,
    "ImpersonationError": 403,
    "NotFound": 404,
    "UnknownParty": 404,
    "UnknownTemplate": 404,
    "UnknownChoice": 404,
    "UnknownExternalId": 404,
    "UnknownSession": 404,
    "ContractNotActive": 410,
    "ContractGone": 410,
    "KeyCollision": 409,
    "InvitationAlreadyActive": 409,
    "AlreadyConfirmed": 409,
    "InvitationFull": 409,
    "NotEnoughArbitrators": 409,
    "DuplicateVote": 409,
    "NotAVoter": 409,
    "VotingIncomplete": 409,
    "StaleUpdate": 409,
    "TimeOutOfSkew": 422,
    "ValidationError": 422,
    "WrongTemplate": 422,
    "WrongRole": 403,
}

SSE_KEEPALIVE_SECONDS = 15.0


class ApiError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        self.message = message
        super().__init__(message)


def _error_response(code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=_STATUS_BY_CODE.get(code, 400),
        content={"error": {"code": code, "message": message}},
    )


class Session:
    def __init__(self, session_id: str, party: str, role: str, store: ContractStore):
        self.session_id = session_id
        self.party = party
        self.role = role
        self.store = store

    def to_json(self) -> dict:
        return {
            "session": self.session_id,
            "party": self.party,
            "role": self.role,
            "offset": self.store.offset,
        }


# --- request bodies ----------------------------------------------------------


class SessionBody(BaseModel):
    party: str
    role: str


class HouseBody(BaseModel):
    houseId: str
    address: str


class TermsBody(BaseModel):
    rent: int
    beginDate: str
    paymentDates: list
    numArbitrators: int = Field(ge=1)


class ProposalBody(BaseModel):
    landlord: str
    operator: str
    house: HouseBody
    terms: TermsBody


class MiBody(BaseModel):
    description: str
    startingDate: str


class AssessmentBody(BaseModel):
    landlordPct: int = Field(ge=0, le=100)
    cost: int = Field(ge=0)


class InvokeBody(BaseModel):
    rosterId: Optional[int] = None


class PollBody(BaseModel):
    visitDetails: str
    assessmentDate: str
    reparationDate: str
    cost: int = Field(ge=0)
    landlordPct: int = Field(ge=0, le=100)


class VoteBody(BaseModel):
    landlordPct: int = Field(ge=0, le=100)


class PartyBody(BaseModel):
    party: str


def create_app(platform: Platform, ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="rentledger gateway", version="0.1.0")
    # the browser UI may be served from another origin during development
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    engine = platform.engine
    operator = platform.operator
    sessions: dict = {}
    sessions_lock = threading.Lock()

    @app.exception_handler(LedgerError)
    def _ledger_error(_request: Request, exc: LedgerError):
        return _error_response(exc.code, str(exc))

    @app.exception_handler(ApiError)
    def _api_error(_request: Request, exc: ApiError):
        return _error_response(exc.code, exc.message)

    def get_session(sid: str) -> Session:
        with sessions_lock:
            session = sessions.get(sid)
        if session is None:
            raise ApiError("UnknownSession", f"no session {sid!r}")
        return session

    def resolve(session: Session, external_id: int, template: Optional[str] = None) -> StoreEntry:
        status = session.store.status(external_id)
        if status == GONE:
            raise ApiError("ContractGone", f"contract behind external id {external_id} was archived")
        if status != LIVE:
            raise ApiError("UnknownExternalId", f"external id {external_id} is not in the store")
        entry = session.store.get(external_id)
        if template is not None and entry.template != template:
            raise ApiError(
                "WrongTemplate",
                f"external id {external_id} is a {entry.template}, expected {template}",
            )
        return entry

    def entry_json(session: Session, contract_id: str) -> Optional[dict]:
        entry = session.store.entry_for(contract_id)
        return entry.to_json() if entry is not None else None

    # -- meta -------------------------------------------------------------

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "offset": engine.offset, "operator": operator}

    @app.get("/v1/parties")
    def parties():
        return {"parties": sorted(engine.parties)}

    @app.post("/v1/parties", status_code=201)
    def register_party(body: PartyBody):
        engine.register_party(body.party)
        return {"party": body.party}

    # -- sessions ----------------------------------------------------------

    @app.post("/v1/sessions", status_code=201)
    def open_session(body: SessionBody):
        if body.role not in ROLES:
            raise ApiError("WrongRole", f"role must be one of {sorted(ROLES)}")
        store = ContractStore(engine, body.party).start()
        session = Session(uuid.uuid4().hex, body.party, body.role, store)
        with sessions_lock:
            sessions[session.session_id] = session
        return session.to_json()

    @app.get("/v1/sessions/{sid}")
    def session_info(sid: str):
        return get_session(sid).to_json()

    @app.delete("/v1/sessions/{sid}", status_code=204)
    def close_session(sid: str):
        with sessions_lock:
            session = sessions.pop(sid, None)
        if session is None:
            raise ApiError("UnknownSession", f"no session {sid!r}")
        session.store.close()
        return None

    @app.get("/v1/sessions/{sid}/store")
    def store_view(sid: str, template: Optional[str] = None):
        session = get_session(sid)
        return {
            "offset": session.store.offset,
            "entries": [e.to_json() for e in session.store.entries(template)],
        }

    # -- event feed ---------------------------------------------------------

    @app.get("/v1/sessions/{sid}/events")
    def events(sid: str, types: Optional[str] = None):
        session = get_session(sid)
        wanted = set(types.split(",")) if types else None
        feed, stop = session.store.listen()

        def stream():
            try:
                yield f": connected offset={session.store.offset}\n\n"
                while True:
                    try:
                        note = feed.get(timeout=SSE_KEEPALIVE_SECONDS)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    if note is None:  # store closed
                        return
                    if wanted is not None and note["type"] not in wanted:
                        continue
                    data = json.dumps(note, separators=(",", ":"))
                    yield f"id: {note['offset']}\nevent: {note['type']}\ndata: {data}\n\n"
            finally:
                stop()

        return StreamingResponse(stream(), media_type="text/event-stream")

    # -- lease workflow -------------------------------------------------------

    @app.get("/v1/sessions/{sid}/proposals")
    def list_proposals(sid: str):
        session = get_session(sid)
        return {"entries": [e.to_json() for e in session.store.entries(rental.PROPOSAL)]}

    @app.post("/v1/sessions/{sid}/proposals", status_code=201)
    def make_proposal(sid: str, body: ProposalBody):
        session = get_session(sid)
        house = {"houseId": body.house.houseId, "address": body.house.address, "landlord": body.landlord}
        cid = rental.submit_proposal(
            engine, session.party, body.landlord, body.operator, house, body.terms.model_dump()
        )
        return {"proposal": entry_json(session, cid)}

    @app.post("/v1/sessions/{sid}/proposals/{xid}/accept")
    def accept_proposal(sid: str, xid: int):
        session = get_session(sid)
        entry = resolve(session, xid, rental.PROPOSAL)
        cid = rental.accept(engine, session.party, entry.contract_id)
        return {"request": entry_json(session, cid)}

    @app.post("/v1/sessions/{sid}/proposals/{xid}/decline")
    def decline_proposal(sid: str, xid: int):
        session = get_session(sid)
        entry = resolve(session, xid, rental.PROPOSAL)
        rental.decline(engine, session.party, entry.contract_id)
        return {"declined": xid}

    @app.post("/v1/sessions/{sid}/proposals/{xid}/withdraw")
    def withdraw_proposal(sid: str, xid: int):
        session = get_session(sid)
        entry = resolve(session, xid, rental.PROPOSAL)
        rental.withdraw(engine, session.party, entry.contract_id)
        return {"withdrawn": xid}

    @app.get("/v1/sessions/{sid}/la-requests")
    def list_requests(sid: str):
        session = get_session(sid)
        return {"entries": [e.to_json() for e in session.store.entries(rental.LA_REQUEST)]}

    @app.post("/v1/sessions/{sid}/la-requests/{xid}/approve")
    def approve_request(sid: str, xid: int):
        session = get_session(sid)
        entry = resolve(session, xid, rental.LA_REQUEST)
        cid = rental.approve(engine, session.party, entry.contract_id)
        return {"leaseAgreement": entry_json(session, cid)}

    @app.get("/v1/sessions/{sid}/lease-agreements")
    def list_leases(sid: str):
        session = get_session(sid)
        return {"entries": [e.to_json() for e in session.store.entries(rental.LEASE_AGREEMENT)]}

    @app.get("/v1/sessions/{sid}/ious")
    def list_ious(sid: str):
        session = get_session(sid)
        return {"entries": [e.to_json() for e in session.store.entries(rental.IOU)]}

    # -- maintenance issues ------------------------------------------------------

    @app.get("/v1/sessions/{sid}/mis")
    def list_mis(sid: str):
        session = get_session(sid)
        return {"entries": [e.to_json() for e in session.store.entries(maintenance.MI_REPORT)]}

    @app.post("/v1/sessions/{sid}/lease-agreements/{xid}/mis", status_code=201)
    def report_mi(sid: str, xid: int, body: MiBody):
        session = get_session(sid)
        entry = resolve(session, xid, rental.LEASE_AGREEMENT)
        cid = maintenance.create_mi(
            engine, session.party, entry.contract_id, body.description, body.startingDate
        )
        return {"miReport": entry_json(session, cid)}

    @app.get("/v1/sessions/{sid}/mediation")
    def list_assessments(sid: str):
        session = get_session(sid)
        return {"entries": [e.to_json() for e in session.store.entries(maintenance.MEDIATION)]}

    @app.post("/v1/sessions/{sid}/mis/{xid}/assessments", status_code=201)
    def propose_assessment(sid: str, xid: int, body: AssessmentBody):
        session = get_session(sid)
        entry = resolve(session, xid, maintenance.MI_REPORT)
        cid = maintenance.submit_assessment(
            engine,
            session.party,
            entry.contract_id,
            maintenance.responsibility(body.landlordPct),
            body.cost,
        )
        return {"assessment": entry_json(session, cid)}

    @app.post("/v1/sessions/{sid}/mediation/{xid}/accept")
    def accept_assessment(sid: str, xid: int):
        session = get_session(sid)
        entry = resolve(session, xid, maintenance.MEDIATION)
        cid = maintenance.resolve_mediation(engine, session.party, entry.contract_id, accept=True)
        return {"result": entry_json(session, cid)}

    @app.post("/v1/sessions/{sid}/mediation/{xid}/reject")
    def reject_assessment(sid: str, xid: int):
        session = get_session(sid)
        entry = resolve(session, xid, maintenance.MEDIATION)
        maintenance.resolve_mediation(engine, session.party, entry.contract_id, accept=False)
        return {"rejected": xid}

    # -- arbitration ---------------------------------------------------------------

    @app.get("/v1/sessions/{sid}/available-arbitrators")
    def list_rosters(sid: str):
        session = get_session(sid)
        baseline = maintenance.public_roster(engine)
        return {
            "public": {
                "contractId": baseline.contract_id,
                "arbitrators": baseline.payload["arbitrators"],
            },
            "private": [e.to_json() for e in session.store.entries(maintenance.AVAILABLE_ARBITRATORS)],
        }

    @app.post("/v1/sessions/{sid}/available-arbitrators/request", status_code=201)
    def request_roster(sid: str):
        session = get_session(sid)
        cid = maintenance.request_roster(engine, session.party)
        return {"roster": entry_json(session, cid)}

    @app.post("/v1/sessions/{sid}/mis/{xid}/invoke-arbitrators", status_code=201)
    def invoke_arbitrators(sid: str, xid: int, body: Optional[InvokeBody] = None):
        session = get_session(sid)
        report = resolve(session, xid, maintenance.MI_REPORT)
        if body is not None and body.rosterId is not None:
            roster_cid = resolve(session, body.rosterId, maintenance.AVAILABLE_ARBITRATORS).contract_id
        else:
            roster_cid = maintenance.request_roster(engine, session.party)
        lease = engine.lookup_by_key("LeaseAgreement", report.payload["laKey"], session.party)
        out = maintenance.invoke_arbitrators(
            engine, session.party, lease.contract_id, roster_cid, report.contract_id
        )
        return {
            "invite": entry_json(session, out["invite"]),
            "miReport": entry_json(session, out["miReport"]),
        }

    @app.get("/v1/sessions/{sid}/invitations")
    def list_invitations(sid: str):
        session = get_session(sid)
        return {"entries": [e.to_json() for e in session.store.entries(maintenance.INVITE)]}

    @app.post("/v1/sessions/{sid}/invitations/{xid}/accept")
    def accept_invitation(sid: str, xid: int):
        session = get_session(sid)
        entry = resolve(session, xid, maintenance.INVITE)
        cid = maintenance.accept_invitation(engine, session.party, entry.contract_id)
        return {"invite": entry_json(session, cid)}

    @app.post("/v1/sessions/{sid}/invitations/{xid}/confirm")
    def confirm_attribution(sid: str, xid: int):
        session = get_session(sid)
        entry = resolve(session, xid, maintenance.INVITE)
        cid = maintenance.confirm_attribution(engine, session.party, entry.contract_id)
        return {"miReport": entry_json(session, cid)}

    @app.get("/v1/sessions/{sid}/polls")
    def list_polls(sid: str):
        session = get_session(sid)
        return {"entries": [e.to_json() for e in session.store.entries(maintenance.POLL)]}

    @app.post("/v1/sessions/{sid}/mis/{xid}/polls", status_code=201)
    def open_poll(sid: str, xid: int, body: PollBody):
        session = get_session(sid)
        entry = resolve(session, xid, maintenance.MI_REPORT)
        cid = maintenance.create_poll(
            engine,
            session.party,
            entry.contract_id,
            body.visitDetails,
            body.assessmentDate,
            body.reparationDate,
            body.cost,
            maintenance.responsibility(body.landlordPct),
        )
        return {"poll": entry_json(session, cid)}

    @app.post("/v1/sessions/{sid}/polls/{xid}/vote")
    def vote(sid: str, xid: int, body: VoteBody):
        session = get_session(sid)
        entry = resolve(session, xid, maintenance.POLL)
        out = maintenance.cast_vote(
            engine, session.party, entry.contract_id, maintenance.responsibility(body.landlordPct)
        )
        return {"poll": entry_json(session, out["poll"]), "votingComplete": out["complete"]}

    @app.post("/v1/sessions/{sid}/polls/{xid}/finalize")
    def finalize(sid: str, xid: int):
        session = get_session(sid)
        entry = resolve(session, xid, maintenance.POLL)
        cid = maintenance.finalize_votation(engine, session.party, entry.contract_id)
        return {"result": entry_json(session, cid)}

    @app.get("/v1/sessions/{sid}/results")
    def list_results(sid: str):
        session = get_session(sid)
        return {"entries": [e.to_json() for e in session.store.entries(maintenance.MI_RESULT)]}

    # -- oracle node ----------------------------------------------------------------

    @app.post("/v1/sessions/{sid}/oracle/advance")
    def oracle_advance(sid: str):
        session = get_session(sid)
        if session.role != "oracle":
            raise ApiError("WrongRole", "the advance trigger requires an oracle session")
        t0 = time.perf_counter()
        out = rentcollect.advance(engine, session.party, operator)
        ms = (time.perf_counter() - t0) * 1000.0
        return {"advanced": out["advanced"], "date": out["date"], "advanceMs": ms}

    @app.post("/v1/sessions/{sid}/oracle/process")
    def oracle_process(sid: str):
        session = get_session(sid)
        if session.role != "oracle":
            raise ApiError("WrongRole", "rent lifecycling requires an oracle session")
        registry = engine.lookup_by_key("Evolve", rentcollect.clock_key(operator), session.party)
        t0 = time.perf_counter()
        ious = rentcollect.process_event(engine, session.party, operator)
        ms = (time.perf_counter() - t0) * 1000.0
        return {
            "iousCreated": len(ious),
            "leases": len(registry.payload["laKeys"]),
            "lifecycleMs": ms,
        }

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
