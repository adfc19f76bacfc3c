"""Maintenance-issue oracle: reporting, mediation, arbitration, polling.

An issue raised on a lease can resolve two ways. Mediation is a direct
offer between tenant and landlord (assessment proposed by one, countersigned
or rejected by the other). Arbitration pulls in human arbitrators: an
invitation goes out to the operator-signed roster, confirmed arbitrators
are attributed to the report, the first of them to visit the property opens
a poll, and the poll's mean vote becomes the binding responsibility split.

Either route ends in a single MIResult per issue; its contract key makes
the first committed result win.
"""

from __future__ import annotations

from .ledger import (
    AuthorizationError,
    ChoiceDescriptor,
    LedgerEngine,
    LedgerError,
    NotFound,
    TemplateDescriptor,
    ValidationError,
    digest,
)
from .ledger.model import PUBLIC

MI_REPORT = "MIReport"
AVAILABLE_ARBITRATORS = "AvailableArbitrators"
AA_REQUEST = "AvailableArbitratorsRequest"
INVITE = "InviteArbitrators"
POLL = "Poll"
MEDIATION = "MediationAssessment"
MI_RESULT = "MIResult"

METHOD_MEDIATION = "mediation"
METHOD_ARBITRATION = "arbitration"


class InvitationAlreadyActive(LedgerError):
    """An invitation round is already open for this maintenance issue."""


class ImpersonationError(LedgerError):
    """An arbitrator roster signed by a lease party was offered as genuine."""


class AlreadyConfirmed(LedgerError):
    """The arbitrator already accepted this invitation."""


class InvitationFull(LedgerError):
    """The invitation already holds the agreed number of arbitrators."""


class NotEnoughArbitrators(LedgerError):
    """Attribution requires exactly the agreed number of confirmations."""


class DuplicateVote(LedgerError):
    """The arbitrator already voted on this poll."""


class NotAVoter(LedgerError):
    """The party is not among the poll's voters."""


class VotingIncomplete(LedgerError):
    """The poll cannot be finalized until every voter has voted."""


def mi_ref(la_key: dict, details: dict) -> dict:
    """Stable identity of a maintenance issue: lease key plus details digest."""
    return {"laKey": la_key, "miDigest": digest(details)}


def responsibility(landlord_pct: int) -> dict:
    return {"landlordPct": landlord_pct, "tenantPct": 100 - landlord_pct}


def check_responsibility(value) -> dict:
    if not isinstance(value, dict):
        raise ValidationError("responsibility: expected an object")
    lp, tp = value.get("landlordPct"), value.get("tenantPct")
    for name, pct in (("landlordPct", lp), ("tenantPct", tp)):
        if not isinstance(pct, int) or isinstance(pct, bool) or not 0 <= pct <= 100:
            raise ValidationError(f"responsibility.{name}: expected an integer in 0..100")
    if lp + tp != 100:
        raise ValidationError("responsibility: percentages must sum to 100")
    if set(value) != {"landlordPct", "tenantPct"}:
        raise ValidationError("responsibility: unexpected fields")
    return value


def mean_responsibility(votes) -> dict:
    """Integer mean of the landlord percentages, half rounded away from zero."""
    if not votes:
        raise ValidationError("cannot average an empty vote list")
    total = sum(v["landlordPct"] for v in votes)
    n = len(votes)
    landlord = (2 * total + n) // (2 * n)
    return responsibility(landlord)


# --- MIReport ---------------------------------------------------------------


def _submit_assessment_body(ctx, payload, args):
    creator = args["creator"]
    tenant, landlord = payload["tenant"], payload["landlord"]
    if creator not in (tenant, landlord):
        raise AuthorizationError("only the tenant or the landlord may propose an assessment")
    counterpart = landlord if creator == tenant else tenant
    split = check_responsibility(args["responsibility"])
    cost = args["cost"]
    if not isinstance(cost, int) or isinstance(cost, bool) or cost < 0:
        raise ValidationError("cost: expected a non-negative integer amount")
    return ctx.create(
        MEDIATION,
        {
            "tenant": tenant,
            "landlord": landlord,
            "creator": creator,
            "counterpart": counterpart,
            "miRef": mi_ref(payload["laKey"], payload["miDetails"]),
            "responsibility": split,
            "cost": cost,
        },
    )


def _create_poll_body(ctx, payload, args):
    visitor = args["visitor"]
    if visitor not in payload["arbitrators"]:
        raise AuthorizationError("only an attributed arbitrator may open the poll")
    vote = check_responsibility(args["vote"])
    cost = args["cost"]
    if not isinstance(cost, int) or isinstance(cost, bool) or cost < 0:
        raise ValidationError("cost: expected a non-negative integer amount")
    return ctx.create(
        POLL,
        {
            "tenant": payload["tenant"],
            "landlord": payload["landlord"],
            "miRef": mi_ref(payload["laKey"], payload["miDetails"]),
            "miDetails": payload["miDetails"],
            "visitor": visitor,
            "visitDetails": args["visitDetails"],
            "assessmentDate": args["assessmentDate"],
            "reparationDate": args["reparationDate"],
            "cost": cost,
            "voters": payload["arbitrators"],
            "alreadyVoted": [visitor],
            "votes": [vote],
        },
    )


def mi_report_template() -> TemplateDescriptor:
    return TemplateDescriptor(
        name=MI_REPORT,
        schema={
            "tenant": "party",
            "landlord": "party",
            "laKey": "record",
            "miDetails": "record",
            "arbitrators": "parties",
            "activeInvitation": "bool",
        },
        signatories=lambda p: {p["tenant"], p["landlord"]},
        observers=lambda p: set(p["arbitrators"]),
        choices={
            "SubmitAssessment": ChoiceDescriptor(
                name="SubmitAssessment",
                controllers=lambda p, a: {a["creator"]},
                consuming=False,
                body=_submit_assessment_body,
            ),
            "CreatePoll": ChoiceDescriptor(
                name="CreatePoll",
                controllers=lambda p, a: {a["visitor"]},
                consuming=False,
                body=_create_poll_body,
            ),
        },
    )


# --- arbitrator roster --------------------------------------------------------


def _add_observer_body(ctx, payload, args):
    request = ctx.fetch(args["request"])
    if request.template != AA_REQUEST:
        raise ValidationError("request does not reference an AvailableArbitratorsRequest")
    return ctx.create(
        AVAILABLE_ARBITRATORS,
        {
            "operator": payload["operator"],
            "arbitrators": payload["arbitrators"],
            "observers": [request.payload["requester"]],
        },
    )


def available_arbitrators_template() -> TemplateDescriptor:
    return TemplateDescriptor(
        name=AVAILABLE_ARBITRATORS,
        schema={"operator": "party", "arbitrators": "parties", "observers": "parties"},
        signatories=lambda p: {p["operator"]},
        observers=lambda p: set(p["observers"]),
        choices={
            # Anyone may run this acting as the public party; it hands the
            # requester a private roster copy they can actually reference.
            "AddObserver": ChoiceDescriptor(
                name="AddObserver",
                controllers=lambda p, a: {PUBLIC},
                consuming=False,
                body=_add_observer_body,
            ),
        },
    )


def aa_request_template() -> TemplateDescriptor:
    return TemplateDescriptor(
        name=AA_REQUEST,
        schema={"public": "party", "requester": "party"},
        signatories=lambda p: {p["requester"]},
        observers=lambda p: {p["public"]},
    )


# --- invitations ----------------------------------------------------------------


def _accept_invitation_body(ctx, payload, args):
    actor = args["actor"]
    if actor not in payload["invited"]:
        raise AuthorizationError("party was not invited to arbitrate")
    if actor in payload["confirmed"]:
        raise AlreadyConfirmed(f"{actor} already accepted this invitation")
    if len(payload["confirmed"]) >= payload["required"]:
        raise InvitationFull("the agreed number of arbitrators has been reached")
    confirmed = sorted(set(payload["confirmed"]) | {actor})
    return ctx.create(INVITE, {**payload, "confirmed": confirmed})


def _confirm_attribution_body(ctx, payload, args):
    caller = args["caller"]
    if caller not in (payload["tenant"], payload["landlord"]):
        raise AuthorizationError("only the tenant or the landlord may confirm the attribution")
    if len(payload["confirmed"]) != payload["required"]:
        raise NotEnoughArbitrators(
            f"{len(payload['confirmed'])} of {payload['required']} arbitrators confirmed"
        )
    report = ctx.fetch(payload["miReport"])
    ctx.archive(report.contract_id)
    return ctx.create(MI_REPORT, {**report.payload, "arbitrators": payload["confirmed"]})


def invite_template() -> TemplateDescriptor:
    def validate(p):
        if not set(p["confirmed"]) <= set(p["invited"]):
            raise ValidationError("confirmed arbitrators must all have been invited")
        if len(p["confirmed"]) > p["required"]:
            raise ValidationError("confirmed arbitrators cannot exceed the agreed number")
        if p["required"] < 1:
            raise ValidationError("required: expected a positive integer")

    return TemplateDescriptor(
        name=INVITE,
        schema={
            "tenant": "party",
            "landlord": "party",
            "miRef": "record",
            "miReport": "text",  # live MIReport contract id
            "required": "int",
            "invited": "parties",
            "confirmed": "parties",
        },
        signatories=lambda p: {p["tenant"], p["landlord"]},
        observers=lambda p: set(p["invited"]),
        validate=validate,
        choices={
            "Accept": ChoiceDescriptor(
                name="Accept",
                controllers=lambda p, a: {a["actor"]},
                consuming=True,
                body=_accept_invitation_body,
            ),
            "ConfirmAttribution": ChoiceDescriptor(
                name="ConfirmAttribution",
                controllers=lambda p, a: {a["caller"]},
                consuming=True,
                body=_confirm_attribution_body,
            ),
        },
    )


# --- polling -------------------------------------------------------------------


def _vote_body(ctx, payload, args):
    voter = args["voter"]
    if voter not in payload["voters"]:
        raise NotAVoter(f"{voter} is not a voter on this poll")
    if voter in payload["alreadyVoted"]:
        raise DuplicateVote(f"{voter} already voted on this poll")
    vote = check_responsibility(args["vote"])
    voted = sorted(set(payload["alreadyVoted"]) | {voter})
    cid = ctx.create(POLL, {**payload, "alreadyVoted": voted, "votes": payload["votes"] + [vote]})
    return {"poll": cid, "complete": set(voted) == set(payload["voters"])}


def _finalize_body(ctx, payload, args):
    if set(payload["alreadyVoted"]) != set(payload["voters"]):
        missing = sorted(set(payload["voters"]) - set(payload["alreadyVoted"]))
        raise VotingIncomplete(f"still waiting on votes from {missing}")
    return ctx.create(
        MI_RESULT,
        {
            "tenant": payload["tenant"],
            "landlord": payload["landlord"],
            "miRef": payload["miRef"],
            "responsibility": mean_responsibility(payload["votes"]),
            "cost": payload["cost"],
            "method": METHOD_ARBITRATION,
            "voters": payload["voters"],
        },
    )


def poll_template() -> TemplateDescriptor:
    def validate(p):
        if len(p["votes"]) != len(p["alreadyVoted"]):
            raise ValidationError("votes and alreadyVoted must stay in step")
        if not set(p["alreadyVoted"]) <= set(p["voters"]):
            raise ValidationError("alreadyVoted must be a subset of voters")
        if p["visitor"] not in p["alreadyVoted"]:
            raise ValidationError("the visitor votes at poll creation")
        for vote in p["votes"]:
            check_responsibility(vote)

    return TemplateDescriptor(
        name=POLL,
        schema={
            "tenant": "party",
            "landlord": "party",
            "miRef": "record",
            "miDetails": "record",
            "visitor": "party",
            "visitDetails": "text",
            "assessmentDate": "date",
            "reparationDate": "date",
            "cost": "int",
            "voters": "parties",
            "alreadyVoted": "parties",
            "votes": "records",
        },
        signatories=lambda p: set(p["alreadyVoted"]) | {p["tenant"], p["landlord"]},
        observers=lambda p: set(p["voters"]),
        key=lambda p: {"tenant": p["tenant"], "landlord": p["landlord"], "miRef": p["miRef"]},
        validate=validate,
        choices={
            "Vote": ChoiceDescriptor(
                name="Vote",
                controllers=lambda p, a: {a["voter"]},
                consuming=True,
                body=_vote_body,
            ),
            "FinalizeVotation": ChoiceDescriptor(
                name="FinalizeVotation",
                controllers=lambda p, a: {a["caller"]},
                consuming=True,
                body=_finalize_body,
            ),
        },
    )


# --- mediation -------------------------------------------------------------------


def _accept_assessment_body(ctx, payload, args):
    return ctx.create(
        MI_RESULT,
        {
            "tenant": payload["tenant"],
            "landlord": payload["landlord"],
            "miRef": payload["miRef"],
            "responsibility": payload["responsibility"],
            "cost": payload["cost"],
            "method": METHOD_MEDIATION,
            "voters": [],
        },
    )


def mediation_template() -> TemplateDescriptor:
    def validate(p):
        check_responsibility(p["responsibility"])
        if {p["creator"], p["counterpart"]} != {p["tenant"], p["landlord"]}:
            raise ValidationError("assessment parties must be the lease tenant and landlord")
        if p["cost"] < 0:
            raise ValidationError("cost: cannot be negative")

    return TemplateDescriptor(
        name=MEDIATION,
        schema={
            "tenant": "party",
            "landlord": "party",
            "creator": "party",
            "counterpart": "party",
            "miRef": "record",
            "responsibility": "record",
            "cost": "int",
        },
        signatories=lambda p: {p["creator"]},
        observers=lambda p: {p["counterpart"]},
        validate=validate,
        choices={
            "AcceptAssessment": ChoiceDescriptor(
                name="AcceptAssessment",
                controllers=lambda p, a: {p["counterpart"]},
                consuming=True,
                body=_accept_assessment_body,
            ),
            "RejectAssessment": ChoiceDescriptor(
                name="RejectAssessment",
                controllers=lambda p, a: {p["counterpart"]},
                consuming=True,
                body=lambda ctx, p, a: None,
            ),
        },
    )


def mi_result_template() -> TemplateDescriptor:
    def validate(p):
        check_responsibility(p["responsibility"])
        if p["method"] not in (METHOD_MEDIATION, METHOD_ARBITRATION):
            raise ValidationError("method: expected 'mediation' or 'arbitration'")
        if p["cost"] < 0:
            raise ValidationError("cost: cannot be negative")

    return TemplateDescriptor(
        name=MI_RESULT,
        schema={
            "tenant": "party",
            "landlord": "party",
            "miRef": "record",
            "responsibility": "record",
            "cost": "int",
            "method": "text",
            "voters": "parties",
        },
        signatories=lambda p: {p["tenant"], p["landlord"]},
        observers=lambda p: set(p["voters"]),
        # one binding result per issue, whichever route commits first
        key=lambda p: {"tenant": p["tenant"], "landlord": p["landlord"], "miRef": p["miRef"]},
        validate=validate,
    )


def templates() -> list:
    return [
        mi_report_template(),
        available_arbitrators_template(),
        aa_request_template(),
        invite_template(),
        poll_template(),
        mediation_template(),
        mi_result_template(),
    ]


# --- workflow helpers --------------------------------------------------------


def create_mi(engine: LedgerEngine, creator: str, lease_cid: str, description: str,
              starting_date: str) -> str:
    tx = engine.exercise(
        creator,
        lease_cid,
        "CreateMI",
        {"creator": creator, "description": description, "startingDate": starting_date},
    )
    return tx.result


def submit_assessment(engine: LedgerEngine, creator: str, report_cid: str,
                      split: dict, cost: int) -> str:
    tx = engine.exercise(
        creator,
        report_cid,
        "SubmitAssessment",
        {"creator": creator, "responsibility": split, "cost": cost},
    )
    return tx.result


def resolve_mediation(engine: LedgerEngine, counterpart: str, assessment_cid: str,
                      accept: bool):
    choice = "AcceptAssessment" if accept else "RejectAssessment"
    return engine.exercise(counterpart, assessment_cid, choice).result


def public_roster(engine: LedgerEngine):
    """The baseline operator-signed roster every party can read."""
    for rec in engine.active_contracts(AVAILABLE_ARBITRATORS):
        if PUBLIC in rec.observers:
            return rec
    raise NotFound("no public AvailableArbitrators roster exists")


def request_roster(engine: LedgerEngine, requester: str) -> str:
    """Obtain a private roster copy observable by the requester."""
    request = engine.create(
        requester, AA_REQUEST, {"public": PUBLIC, "requester": requester}
    )
    baseline = public_roster(engine)
    tx = engine.exercise(
        PUBLIC, baseline.contract_id, "AddObserver", {"request": request.contract_id}
    )
    return tx.result


def invoke_arbitrators(engine: LedgerEngine, caller: str, lease_cid: str,
                       roster_cid: str, report_cid: str) -> dict:
    tx = engine.exercise(
        caller,
        lease_cid,
        "InvokeArbitrators",
        {"caller": caller, "availableArbitrators": roster_cid, "miReport": report_cid},
    )
    return tx.result


def accept_invitation(engine: LedgerEngine, arbitrator: str, invite_cid: str) -> str:
    return engine.exercise(arbitrator, invite_cid, "Accept", {"actor": arbitrator}).result


def confirm_attribution(engine: LedgerEngine, caller: str, invite_cid: str) -> str:
    return engine.exercise(caller, invite_cid, "ConfirmAttribution", {"caller": caller}).result


def create_poll(engine: LedgerEngine, visitor: str, report_cid: str, visit_details: str,
                assessment_date: str, reparation_date: str, cost: int, vote: dict) -> str:
    tx = engine.exercise(
        visitor,
        report_cid,
        "CreatePoll",
        {
            "visitor": visitor,
            "visitDetails": visit_details,
            "assessmentDate": assessment_date,
            "reparationDate": reparation_date,
            "cost": cost,
            "vote": vote,
        },
    )
    return tx.result


def cast_vote(engine: LedgerEngine, voter: str, poll_cid: str, vote: dict) -> dict:
    return engine.exercise(voter, poll_cid, "Vote", {"voter": voter, "vote": vote}).result


def finalize_votation(engine: LedgerEngine, caller: str, poll_cid: str) -> str:
    return engine.exercise(caller, poll_cid, "FinalizeVotation", {"caller": caller}).result
