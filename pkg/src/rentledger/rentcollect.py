"""Rent-collection oracle: date clock advance and daily rent lifecycling.

Two contracts split the trust surface. DateClock is private to the
operator and its providers, so outsiders cannot race or spam the advance
path. DateClockUpdate is the public, read-only proof of the current date;
workflows reference it instead of reading wall-clock time, which keeps
dates monotone across back-to-back transactions at midnight.

Lifecycling walks the Evolve registry's lease keys and exercises
ProcessPayment on each agreement, producing one IOU per overdue payment
date. Running it again with the same update is a no-op.
"""

from __future__ import annotations

import bisect
import time
from .ledger import (
    AuthorizationError,
    ChoiceDescriptor,
    ContractRecord,
    LedgerEngine,
    LedgerError,
    NotFound,
    TemplateDescriptor,
    ValidationError,
    canonical_json,
)
from .ledger.model import PUBLIC

DATE_CLOCK = "DateClock"
CLOCK_UPDATE = "DateClockUpdate"
EVOLVE = "Evolve"


class StaleUpdate(LedgerError):
    """A superseded DateClockUpdate was offered as proof of the date."""


def clock_key(operator: str) -> dict:
    return {"operator": operator}


def _advance_body(ctx, payload, args):
    """Advance the clock to the transaction date if it moved forward.

    A zero or negative offset leaves everything untouched and reports the
    current update, so scheduler retries and provider races are harmless.
    """
    actor = args["actor"]
    if actor not in payload["providers"]:
        raise AuthorizationError("only a clock provider may advance the date")
    today = ctx.ledger_date
    current = ctx.lookup_by_key(CLOCK_UPDATE, clock_key(payload["operator"]))
    if current is None:
        raise NotFound("no DateClockUpdate instance exists for this operator")
    if today <= payload["date"]:
        return {"advanced": False, "date": payload["date"], "update": current.contract_id}
    ctx.archive(ctx.self_id)
    ctx.archive(current.contract_id)
    ctx.create(DATE_CLOCK, {**payload, "date": today, "creator": actor})
    update = ctx.create(
        CLOCK_UPDATE,
        {"operator": payload["operator"], "date": today, "clockProviders": payload["providers"]},
    )
    return {"advanced": True, "date": today, "update": update}


def _add_provider_body(ctx, payload, args):
    party = args["party"]
    waiting = sorted(set(payload["waitingAccept"]) | {party})
    return ctx.create(DATE_CLOCK, {**payload, "waitingAccept": waiting})


def _accept_provider_body(ctx, payload, args):
    actor = args["actor"]
    if actor not in payload["waitingAccept"]:
        raise AuthorizationError("party was not offered the provider role")
    return ctx.create(
        DATE_CLOCK,
        {
            **payload,
            "providers": sorted(set(payload["providers"]) | {actor}),
            "waitingAccept": sorted(set(payload["waitingAccept"]) - {actor}),
        },
    )


def date_clock_template() -> TemplateDescriptor:
    def validate(p):
        if p["creator"] not in p["providers"]:
            raise ValidationError("DateClock.creator must be one of the providers")
        if not p["providers"]:
            raise ValidationError("DateClock.providers must not be empty")
        if PUBLIC in p["providers"] or PUBLIC in p["waitingAccept"]:
            raise ValidationError("the public party cannot hold the provider role")

    return TemplateDescriptor(
        name=DATE_CLOCK,
        schema={
            "operator": "party",
            "providers": "parties",
            "creator": "party",
            "waitingAccept": "parties",
            "date": "date",
        },
        signatories=lambda p: {p["operator"]},
        observers=lambda p: set(p["providers"]) | set(p["waitingAccept"]),
        key=lambda p: clock_key(p["operator"]),
        validate=validate,
        choices={
            "Advance": ChoiceDescriptor(
                name="Advance",
                controllers=lambda p, a: {a["actor"]},
                consuming=False,
                body=_advance_body,
            ),
            "AddProvider": ChoiceDescriptor(
                name="AddProvider",
                controllers=lambda p, a: {p["operator"]},
                consuming=True,
                body=_add_provider_body,
            ),
            "AcceptProvider": ChoiceDescriptor(
                name="AcceptProvider",
                controllers=lambda p, a: {a["actor"]},
                consuming=True,
                body=_accept_provider_body,
            ),
        },
    )


def clock_update_template() -> TemplateDescriptor:
    return TemplateDescriptor(
        name=CLOCK_UPDATE,
        schema={"operator": "party", "date": "date", "clockProviders": "parties"},
        signatories=lambda p: {p["operator"]},
        observers=lambda p: {PUBLIC},
        key=lambda p: clock_key(p["operator"]),
    )


def _add_la_body(ctx, payload, args):
    key = args["laKey"]
    if not isinstance(key, dict):
        raise ValidationError("laKey: expected a lease key object")
    keys = list(payload["laKeys"])
    encoded = canonical_json(key)
    at = bisect.bisect_left(keys, encoded, key=canonical_json)  # list kept sorted
    if at < len(keys) and canonical_json(keys[at]) == encoded:
        return ctx.self_id  # idempotent: the set is unchanged
    keys.insert(at, key)
    ctx.archive(ctx.self_id)
    return ctx.create(EVOLVE, {**payload, "laKeys": keys})


def _process_event_body(ctx, payload, args):
    actor = args["actor"]
    if actor not in payload["lifecyclers"]:
        raise AuthorizationError("only a lifecycler may process rent collection")
    update_cid = args["update"]
    if not ctx.is_active(update_cid):
        raise StaleUpdate("the referenced DateClockUpdate has been superseded")
    update = ctx.fetch(update_cid)
    if update.template != CLOCK_UPDATE:
        raise ValidationError("ProcessEvent requires a DateClockUpdate as date proof")
    ious = []
    for key in payload["laKeys"]:
        lease = ctx.lookup_by_key("LeaseAgreement", key)
        if lease is None:
            continue  # agreement gone; keep the key for bookkeeping
        ious.extend(ctx.exercise(lease.contract_id, "ProcessPayment", {"update": update_cid}))
    return ious


def evolve_template() -> TemplateDescriptor:
    return TemplateDescriptor(
        name=EVOLVE,
        schema={"operator": "party", "lifecyclers": "parties", "laKeys": "records"},
        signatories=lambda p: {p["operator"]},
        observers=lambda p: set(p["lifecyclers"]),
        key=lambda p: clock_key(p["operator"]),
        choices={
            "AddLA": ChoiceDescriptor(
                name="AddLA",
                controllers=lambda p, a: {p["operator"]},
                consuming=False,
                body=_add_la_body,
            ),
            "ProcessEvent": ChoiceDescriptor(
                name="ProcessEvent",
                controllers=lambda p, a: {a["actor"]},
                consuming=False,
                body=_process_event_body,
            ),
        },
    )


def templates() -> list:
    return [date_clock_template(), clock_update_template(), evolve_template()]


# --- oracle-side helpers -----------------------------------------------------


def current_clock(engine: LedgerEngine, operator: str, act_as) -> ContractRecord:
    return engine.lookup_by_key(DATE_CLOCK, clock_key(operator), act_as)


def current_update(engine: LedgerEngine, operator: str, act_as=PUBLIC):
    """The active date proof; readable by anyone via the public party."""
    actors = {act_as} if isinstance(act_as, str) else set(act_as)
    return engine.lookup_by_key(CLOCK_UPDATE, clock_key(operator), actors | {PUBLIC})


def advance(engine: LedgerEngine, provider: str, operator: str) -> dict:
    """Racing providers are benign: the loser lands on the no-op branch."""
    tx = engine.exercise_by_key(
        provider, DATE_CLOCK, clock_key(operator), "Advance", {"actor": provider}
    )
    return tx.result


def add_provider(engine: LedgerEngine, operator: str, party: str) -> str:
    tx = engine.exercise_by_key(
        operator, DATE_CLOCK, clock_key(operator), "AddProvider", {"party": party}
    )
    return tx.result


def accept_provider(engine: LedgerEngine, party: str, operator: str) -> str:
    tx = engine.exercise_by_key(
        party, DATE_CLOCK, clock_key(operator), "AcceptProvider", {"actor": party}
    )
    return tx.result


def add_lease(engine: LedgerEngine, operator: str, key: dict) -> str:
    tx = engine.exercise_by_key(operator, EVOLVE, clock_key(operator), "AddLA", {"laKey": key})
    return tx.result


def process_event(engine: LedgerEngine, lifecycler: str, operator: str) -> list:
    """One lifecycling run: returns the contract ids of the IOUs created.

    The current update is read first and passed as the date proof; if an
    advance lands in between, the run rejects with StaleUpdate and the
    caller simply retries against the fresh update.
    """
    update = current_update(engine, operator, lifecycler)
    tx = engine.exercise_by_key(
        lifecycler,
        EVOLVE,
        clock_key(operator),
        "ProcessEvent",
        {"actor": lifecycler, "update": update.contract_id},
    )
    return tx.result


def run_tick(engine: LedgerEngine, provider: str, lifecycler: str, operator: str) -> dict:
    """Advance then lifecycle, timing both submissions (milliseconds)."""
    t0 = time.perf_counter()
    advanced = advance(engine, provider, operator)
    t1 = time.perf_counter()
    ious = process_event(engine, lifecycler, operator)
    t2 = time.perf_counter()
    return {
        "advanced": advanced["advanced"],
        "date": advanced["date"],
        "ious": ious,
        "advance_ms": (t1 - t0) * 1000.0,
        "lifecycle_ms": (t2 - t1) * 1000.0,
    }
