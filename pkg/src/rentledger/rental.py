"""Lease workflow templates: proposal, creation request, agreement, debt.

A lease agreement can only come into existence along the propose-and-accept
chain: the tenant signs a Proposal, the landlord's Accept turns it into an
LACreationRequest signed by both, and the operator's Approve creates the
LeaseAgreement carrying all three signatures. Direct creation therefore
needs all three parties to act jointly.

The agreement also hosts the choices other workflows enter through:
ProcessPayment (rent lifecycling), CreateMI and InvokeArbitrators
(maintenance issues).
"""

from __future__ import annotations

from dataclasses import dataclass

from .ledger import (
    AuthorizationError,
    ChoiceDescriptor,
    LedgerEngine,
    NotFound,
    TemplateDescriptor,
    ValidationError,
)
from .ledger.canon import is_iso_date
from .maintenance import ImpersonationError, InvitationAlreadyActive, mi_ref
from .rentcollect import StaleUpdate

PROPOSAL = "Proposal"
LA_REQUEST = "LACreationRequest"
LEASE_AGREEMENT = "LeaseAgreement"
IOU = "IOU"


@dataclass(frozen=True)
class House:
    house_id: str
    address: str
    landlord: str

    def payload(self) -> dict:
        return {"houseId": self.house_id, "address": self.address, "landlord": self.landlord}


@dataclass(frozen=True)
class LeaseTerms:
    rent: int  # minor currency units
    begin_date: str
    payment_dates: tuple
    num_arbitrators: int

    def payload(self) -> dict:
        return {
            "rent": self.rent,
            "beginDate": self.begin_date,
            "paymentDates": sorted(set(self.payment_dates)),
            "numArbitrators": self.num_arbitrators,
        }


def la_key(tenant: str, landlord: str, house_id: str) -> dict:
    return {"tenant": tenant, "landlord": landlord, "houseId": house_id}


def _check_house(house: dict, landlord: str) -> None:
    for field in ("houseId", "landlord"):
        if not isinstance(house.get(field), str) or not house[field]:
            raise ValidationError(f"house.{field}: expected non-empty text")
    if not isinstance(house.get("address"), str):
        raise ValidationError("house.address: expected text")
    if house["landlord"] != landlord:
        raise ValidationError("house.landlord must match the landlord party")


def _check_terms(terms: dict) -> None:
    rent = terms.get("rent")
    if not isinstance(rent, int) or isinstance(rent, bool) or rent < 0:
        raise ValidationError("terms.rent: expected a non-negative integer amount")
    begin = terms.get("beginDate")
    if not is_iso_date(begin):
        raise ValidationError("terms.beginDate: expected an ISO date")
    dates = terms.get("paymentDates")
    if not isinstance(dates, list) or not all(is_iso_date(d) for d in dates):
        raise ValidationError("terms.paymentDates: expected a list of ISO dates")
    if dates != sorted(set(dates)):
        raise ValidationError("terms.paymentDates: must be sorted and unique")
    if any(d < begin for d in dates):
        raise ValidationError("terms.paymentDates: all dates must be on or after beginDate")
    n = terms.get("numArbitrators")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValidationError("terms.numArbitrators: expected a positive integer")
    extra = set(terms) - {"rent", "beginDate", "paymentDates", "numArbitrators"}
    if extra:
        raise ValidationError(f"terms: unknown fields {sorted(extra)}")


def _validate_proposal(payload: dict) -> None:
    _check_house(payload["house"], payload["landlord"])
    _check_terms(payload["terms"])
    if payload["tenant"] == payload["landlord"]:
        raise ValidationError("tenant and landlord must be distinct parties")


_PROPOSAL_SCHEMA = {
    "tenant": "party",
    "landlord": "party",
    "operator": "party",
    "house": "record",
    "terms": "record",
}


def _accept_body(ctx, payload, args):
    return ctx.create(
        LA_REQUEST,
        {
            "tenant": payload["tenant"],
            "landlord": payload["landlord"],
            "operator": payload["operator"],
            "house": payload["house"],
            "terms": payload["terms"],
        },
    )


def proposal_template() -> TemplateDescriptor:
    return TemplateDescriptor(
        name=PROPOSAL,
        schema=_PROPOSAL_SCHEMA,
        signatories=lambda p: {p["tenant"]},
        observers=lambda p: {p["landlord"], p["operator"]},
        validate=_validate_proposal,
        choices={
            "Withdraw": ChoiceDescriptor(
                name="Withdraw",
                controllers=lambda p, a: {p["tenant"]},
                consuming=True,
                body=lambda ctx, p, a: None,
            ),
            "Decline": ChoiceDescriptor(
                name="Decline",
                controllers=lambda p, a: {p["landlord"]},
                consuming=True,
                body=lambda ctx, p, a: None,
            ),
            "Accept": ChoiceDescriptor(
                name="Accept",
                controllers=lambda p, a: {p["landlord"]},
                consuming=True,
                body=_accept_body,
            ),
        },
    )


def _approve_body(ctx, payload, args):
    lease_cid = ctx.create(
        LEASE_AGREEMENT,
        {
            "tenant": payload["tenant"],
            "landlord": payload["landlord"],
            "operator": payload["operator"],
            "house": payload["house"],
            "terms": payload["terms"],
            "remainingPaymentDates": payload["terms"]["paymentDates"],
        },
    )
    registry = ctx.lookup_by_key("Evolve", {"operator": payload["operator"]})
    if registry is None:
        raise NotFound("no lease registry (Evolve) exists for this operator")
    key = la_key(payload["tenant"], payload["landlord"], payload["house"]["houseId"])
    ctx.exercise(registry.contract_id, "AddLA", {"laKey": key})
    return lease_cid


def la_request_template() -> TemplateDescriptor:
    return TemplateDescriptor(
        name=LA_REQUEST,
        schema=_PROPOSAL_SCHEMA,
        signatories=lambda p: {p["tenant"], p["landlord"]},
        observers=lambda p: {p["operator"]},
        validate=_validate_proposal,
        choices={
            "Approve": ChoiceDescriptor(
                name="Approve",
                controllers=lambda p, a: {p["operator"]},
                consuming=True,
                body=_approve_body,
            ),
        },
    )


def _process_payment_body(ctx, payload, args):
    """Create one IOU per overdue payment date, consuming those dates.

    The caller passes the current DateClockUpdate as proof of the date; an
    archived update is stale evidence and rejects the whole run.
    """
    update_cid = args["update"]
    if not ctx.is_active(update_cid):
        raise StaleUpdate("the referenced DateClockUpdate has been superseded")
    update = ctx.fetch(update_cid)
    if update.template != "DateClockUpdate":
        raise ValidationError("ProcessPayment requires a DateClockUpdate as date proof")
    today = update.payload["date"]
    remaining = payload["remainingPaymentDates"]
    due = [d for d in remaining if d < today]
    if not due:
        return []
    ctx.archive(ctx.self_id)
    ctx.create(
        LEASE_AGREEMENT,
        {**payload, "remainingPaymentDates": [d for d in remaining if d >= today]},
    )
    key = la_key(payload["tenant"], payload["landlord"], payload["house"]["houseId"])
    ious = []
    for day in due:
        ious.append(
            ctx.create(
                IOU,
                {
                    "owner": payload["landlord"],
                    "debtor": payload["tenant"],
                    "amount": payload["terms"]["rent"],
                    "dueDate": day,
                    "laKey": key,
                },
            )
        )
    return ious


def _create_mi_body(ctx, payload, args):
    creator = args["creator"]
    if creator not in (payload["tenant"], payload["landlord"]):
        raise AuthorizationError("only the tenant or the landlord may report an issue")
    starting = args["startingDate"]
    if not is_iso_date(starting):
        raise ValidationError("startingDate: expected an ISO date")
    if starting < payload["terms"]["beginDate"]:
        raise ValidationError("startingDate: cannot precede the lease begin date")
    description = args["description"]
    if not isinstance(description, str) or not description:
        raise ValidationError("description: expected non-empty text")
    details = {
        "description": description,
        "startingDate": starting,
        "house": payload["house"],
    }
    key = la_key(payload["tenant"], payload["landlord"], payload["house"]["houseId"])
    return ctx.create(
        "MIReport",
        {
            "tenant": payload["tenant"],
            "landlord": payload["landlord"],
            "laKey": key,
            "miDetails": details,
            "arbitrators": [],
            "activeInvitation": False,
        },
    )


def _invoke_arbitrators_body(ctx, payload, args):
    """Open the arbitrator invitation round for a maintenance issue.

    Runs on the agreement so that the operator's signature is in scope:
    archiving the arbitrator roster requires its signatory's authority,
    which unmasks rosters signed by anyone other than the real operator.
    """
    caller = args["caller"]
    tenant, landlord = payload["tenant"], payload["landlord"]
    if caller not in (tenant, landlord):
        raise AuthorizationError("only the tenant or the landlord may invoke arbitrators")

    report = ctx.fetch(args["miReport"])
    if report.template != "MIReport":
        raise ValidationError("miReport does not reference an MIReport contract")
    if report.payload["laKey"] != la_key(tenant, landlord, payload["house"]["houseId"]):
        raise ValidationError("the maintenance issue belongs to a different lease")
    if report.payload["activeInvitation"]:
        raise InvitationAlreadyActive("an invitation round is already running for this issue")

    roster = ctx.fetch(args["availableArbitrators"])
    if roster.template != "AvailableArbitrators":
        raise ValidationError("availableArbitrators does not reference an arbitrator roster")
    if roster.payload["operator"] in (tenant, landlord):
        raise ImpersonationError("arbitrator roster was not signed by an independent operator")
    ctx.archive(roster.contract_id)

    ctx.archive(report.contract_id)
    flagged = ctx.create("MIReport", {**report.payload, "activeInvitation": True})
    invite = ctx.create(
        "InviteArbitrators",
        {
            "tenant": tenant,
            "landlord": landlord,
            "miRef": mi_ref(report.payload["laKey"], report.payload["miDetails"]),
            "miReport": flagged,
            "required": payload["terms"]["numArbitrators"],
            "invited": roster.payload["arbitrators"],
            "confirmed": [],
        },
    )
    return {"invite": invite, "miReport": flagged}


def lease_agreement_template() -> TemplateDescriptor:
    def validate(p):
        _validate_proposal(p)
        if any(d not in p["terms"]["paymentDates"] for d in p["remainingPaymentDates"]):
            raise ValidationError("remainingPaymentDates must be a subset of terms.paymentDates")

    return TemplateDescriptor(
        name=LEASE_AGREEMENT,
        schema={**_PROPOSAL_SCHEMA, "remainingPaymentDates": "dates"},
        signatories=lambda p: {p["tenant"], p["landlord"], p["operator"]},
        observers=lambda p: set(),
        key=lambda p: la_key(p["tenant"], p["landlord"], p["house"]["houseId"]),
        validate=validate,
        choices={
            "ProcessPayment": ChoiceDescriptor(
                name="ProcessPayment",
                controllers=lambda p, a: {p["operator"]},
                consuming=False,
                body=_process_payment_body,
            ),
            "CreateMI": ChoiceDescriptor(
                name="CreateMI",
                controllers=lambda p, a: {a["creator"]},
                consuming=False,
                body=_create_mi_body,
            ),
            "InvokeArbitrators": ChoiceDescriptor(
                name="InvokeArbitrators",
                controllers=lambda p, a: {a["caller"]},
                consuming=False,
                body=_invoke_arbitrators_body,
            ),
        },
    )


def iou_template() -> TemplateDescriptor:
    def validate(p):
        if p["amount"] < 0:
            raise ValidationError("IOU.amount: cannot be negative")
        if p["owner"] == p["debtor"]:
            raise ValidationError("IOU: owner and debtor must differ")

    return TemplateDescriptor(
        name=IOU,
        schema={
            "owner": "party",
            "debtor": "party",
            "amount": "int",
            "dueDate": "date",
            "laKey": "record",
        },
        signatories=lambda p: {p["debtor"]},
        observers=lambda p: {p["owner"]},
        validate=validate,
    )


def templates() -> list:
    return [proposal_template(), la_request_template(), lease_agreement_template(), iou_template()]


# --- workflow helpers --------------------------------------------------------


def submit_proposal(engine: LedgerEngine, tenant: str, landlord: str, operator: str,
                    house, terms) -> str:
    house_payload = house.payload() if isinstance(house, House) else dict(house)
    terms_payload = terms.payload() if isinstance(terms, LeaseTerms) else dict(terms)
    rec = engine.create(
        tenant,
        PROPOSAL,
        {
            "tenant": tenant,
            "landlord": landlord,
            "operator": operator,
            "house": house_payload,
            "terms": terms_payload,
        },
    )
    return rec.contract_id


def withdraw(engine: LedgerEngine, tenant: str, proposal_cid: str) -> None:
    engine.exercise(tenant, proposal_cid, "Withdraw")


def decline(engine: LedgerEngine, landlord: str, proposal_cid: str) -> None:
    engine.exercise(landlord, proposal_cid, "Decline")


def accept(engine: LedgerEngine, landlord: str, proposal_cid: str) -> str:
    return engine.exercise(landlord, proposal_cid, "Accept").result


def approve(engine: LedgerEngine, operator: str, request_cid: str) -> str:
    return engine.exercise(operator, request_cid, "Approve").result


def create_lease_direct(engine: LedgerEngine, tenant: str, landlord: str, operator: str,
                        house, terms) -> str:
    """Create an agreement by joint multi-party submission and register it.

    Needs all three signatories in actAs; used by the benchmark and tests
    to seed ledgers without walking the proposal chain.
    """
    house_payload = house.payload() if isinstance(house, House) else dict(house)
    terms_payload = terms.payload() if isinstance(terms, LeaseTerms) else dict(terms)
    rec = engine.create(
        {tenant, landlord, operator},
        LEASE_AGREEMENT,
        {
            "tenant": tenant,
            "landlord": landlord,
            "operator": operator,
            "house": house_payload,
            "terms": terms_payload,
            "remainingPaymentDates": terms_payload["paymentDates"],
        },
    )
    registry = engine.lookup_by_key("Evolve", {"operator": operator}, operator)
    engine.exercise(
        operator,
        registry.contract_id,
        "AddLA",
        {"laKey": la_key(tenant, landlord, house_payload["houseId"])},
    )
    return rec.contract_id
