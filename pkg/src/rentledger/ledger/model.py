"""Data model of the permissioned ledger.

Contracts are instances of registered templates. A template names its
payload schema, derives signatories and observers from the payload, and
carries the choices that may be exercised on it. Committed submissions
become transaction trees of create / exercise / fetch / archive nodes;
per-party event streams (and therefore all privacy semantics) are derived
from those trees.

Visibility capacities:
  S - signatory: authority was required to create/archive the contract
  O - observer: may see the contract and actions on it
  W - witness: saw the creation only because it was a consequence of an
      action on a contract they hold a stake in
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Optional

from .canon import canonical_json, is_iso_date
from .errors import ValidationError

#: The distinguished party anyone may read as (and use for the
#: observer-registration flow). It never holds signing authority.
PUBLIC = "public"

# Payload field kinds understood by the schema validator.
FIELD_KINDS = ("party", "parties", "text", "int", "bool", "date", "dates", "record", "records")

CAP_SIGNATORY = "S"
CAP_OBSERVER = "O"
CAP_WITNESS = "W"


@dataclass(frozen=True)
class ChoiceDescriptor:
    """A named action on a template.

    `controllers` maps (payload, args) to the parties whose joint authority
    is required to exercise the choice. `body` runs inside the transaction
    with the union of the contract's signatories and the controllers as its
    available authority; it must be deterministic given payload, args,
    ledger state, and ledger time.
    """

    name: str
    controllers: Callable[[dict, dict], set]
    body: Callable[["ChoiceContext", dict, dict], Any]
    consuming: bool = False


@dataclass(frozen=True)
class TemplateDescriptor:
    name: str
    schema: dict  # field name -> kind from FIELD_KINDS
    signatories: Callable[[dict], set]
    observers: Callable[[dict], set]
    choices: dict = field(default_factory=dict)  # name -> ChoiceDescriptor
    key: Optional[Callable[[dict], Any]] = None  # payload -> JSON key value
    validate: Optional[Callable[[dict], None]] = None  # extra invariants

    def choice(self, name: str) -> ChoiceDescriptor:
        return self.choices[name]


@dataclass(frozen=True)
class ContractRecord:
    contract_id: str
    template: str
    payload: dict  # JSON values only; never mutated after creation
    signatories: frozenset
    observers: frozenset
    key: Any = None  # canonical key payload, or None

    @property
    def stakeholders(self) -> frozenset:
        return self.signatories | self.observers

    def capacity_of(self, party: str) -> Optional[str]:
        if party in self.signatories:
            return CAP_SIGNATORY
        if party in self.observers:
            return CAP_OBSERVER
        return None

    def to_json(self) -> dict:
        return {
            "contract_id": self.contract_id,
            "template": self.template,
            "payload": self.payload,
            "signatories": sorted(self.signatories),
            "observers": sorted(self.observers),
            "key": self.key,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ContractRecord":
        return cls(
            contract_id=data["contract_id"],
            template=data["template"],
            payload=data["payload"],
            signatories=frozenset(data["signatories"]),
            observers=frozenset(data["observers"]),
            key=data.get("key"),
        )


# --- transaction nodes -----------------------------------------------------


@dataclass
class CreateNode:
    kind = "create"
    contract: ContractRecord
    actors: frozenset  # authority under which the create ran
    witnesses: frozenset  # stakeholders plus stakeholders of ancestor exercises

    def to_json(self) -> dict:
        return {
            "kind": "create",
            "contract": self.contract.to_json(),
            "actors": sorted(self.actors),
            "witnesses": sorted(self.witnesses),
        }


@dataclass
class ExerciseNode:
    kind = "exercise"
    contract_id: str
    template: str
    choice: str
    consuming: bool
    actors: frozenset
    signatories: frozenset  # of the exercised contract, frozen at exercise time
    observers: frozenset
    children: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "kind": "exercise",
            "contract_id": self.contract_id,
            "template": self.template,
            "choice": self.choice,
            "consuming": self.consuming,
            "actors": sorted(self.actors),
            "signatories": sorted(self.signatories),
            "observers": sorted(self.observers),
            "children": [c.to_json() for c in self.children],
        }


@dataclass
class FetchNode:
    kind = "fetch"
    contract_id: str
    template: str
    actors: frozenset

    def to_json(self) -> dict:
        return {
            "kind": "fetch",
            "contract_id": self.contract_id,
            "template": self.template,
            "actors": sorted(self.actors),
        }


@dataclass
class ArchiveNode:
    kind = "archive"
    contract_id: str
    template: str
    actors: frozenset
    signatories: frozenset
    observers: frozenset

    def to_json(self) -> dict:
        return {
            "kind": "archive",
            "contract_id": self.contract_id,
            "template": self.template,
            "actors": sorted(self.actors),
            "signatories": sorted(self.signatories),
            "observers": sorted(self.observers),
        }


def node_from_json(data: dict):
    kind = data["kind"]
    if kind == "create":
        return CreateNode(
            contract=ContractRecord.from_json(data["contract"]),
            actors=frozenset(data["actors"]),
            witnesses=frozenset(data["witnesses"]),
        )
    if kind == "exercise":
        return ExerciseNode(
            contract_id=data["contract_id"],
            template=data["template"],
            choice=data["choice"],
            consuming=data["consuming"],
            actors=frozenset(data["actors"]),
            signatories=frozenset(data["signatories"]),
            observers=frozenset(data["observers"]),
            children=[node_from_json(c) for c in data["children"]],
        )
    if kind == "fetch":
        return FetchNode(
            contract_id=data["contract_id"],
            template=data["template"],
            actors=frozenset(data["actors"]),
        )
    if kind == "archive":
        return ArchiveNode(
            contract_id=data["contract_id"],
            template=data["template"],
            actors=frozenset(data["actors"]),
            signatories=frozenset(data["signatories"]),
            observers=frozenset(data["observers"]),
        )
    raise ValueError(f"unknown node kind {kind!r}")


@dataclass
class Transaction:
    tx_id: str
    offset: int
    ledger_time: str
    record_time: str
    act_as: frozenset
    roots: list
    result: Any = None  # return value of the root command body; not persisted

    def iter_nodes(self) -> Iterator:
        stack = list(reversed(self.roots))
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, ExerciseNode):
                stack.extend(reversed(node.children))

    @property
    def created(self) -> list:
        return [n.contract for n in self.iter_nodes() if isinstance(n, CreateNode)]

    @property
    def archived_ids(self) -> list:
        out = []
        for n in self.iter_nodes():
            if isinstance(n, ArchiveNode) or (isinstance(n, ExerciseNode) and n.consuming):
                out.append(n.contract_id)
        return out

    def to_json(self) -> dict:
        return {
            "id": self.tx_id,
            "offset": self.offset,
            "ledger_time": self.ledger_time,
            "record_time": self.record_time,
            "act_as": sorted(self.act_as),
            "nodes": [n.to_json() for n in self.roots],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Transaction":
        return cls(
            tx_id=data["id"],
            offset=data["offset"],
            ledger_time=data["ledger_time"],
            record_time=data["record_time"],
            act_as=frozenset(data["act_as"]),
            roots=[node_from_json(n) for n in data["nodes"]],
        )


# --- per-party events ------------------------------------------------------


@dataclass(frozen=True)
class CreateEvent:
    offset: int
    tx_id: str
    contract_id: str
    template: str
    payload: dict
    signatories: frozenset
    observers: frozenset
    capacity: str  # S, O, or W

    kind = "create"


@dataclass(frozen=True)
class ArchiveEvent:
    offset: int
    tx_id: str
    contract_id: str
    template: str
    capacity: str  # S or O; witnesses never see consequences

    kind = "archive"


def events_for_party(tx: Transaction, party: str) -> list:
    """Project one transaction onto a party, in node pre-order.

    A party receives a contract's create event iff it is a signatory,
    observer, or witness of the create node; witness events carry the
    payload read-only and are never followed by the contract's archive.
    Archive events go to stakeholders only.
    """
    events = []
    for node in tx.iter_nodes():
        if isinstance(node, CreateNode):
            c = node.contract
            cap = c.capacity_of(party)
            if cap is None and party in node.witnesses:
                cap = CAP_WITNESS
            if cap is not None:
                events.append(
                    CreateEvent(
                        offset=tx.offset,
                        tx_id=tx.tx_id,
                        contract_id=c.contract_id,
                        template=c.template,
                        payload=c.payload,
                        signatories=c.signatories,
                        observers=c.observers,
                        capacity=cap,
                    )
                )
        elif isinstance(node, ArchiveNode) or (isinstance(node, ExerciseNode) and node.consuming):
            if party in node.signatories:
                cap = CAP_SIGNATORY
            elif party in node.observers:
                cap = CAP_OBSERVER
            else:
                continue
            events.append(
                ArchiveEvent(
                    offset=tx.offset,
                    tx_id=tx.tx_id,
                    contract_id=node.contract_id,
                    template=node.template,
                    capacity=cap,
                )
            )
    return events


# --- payload validation ----------------------------------------------------


def validate_payload(template: TemplateDescriptor, payload: dict, known_parties) -> dict:
    """Check a payload against the template schema and return its normal form.

    Party sets and date sets come back sorted and de-duplicated so that the
    committed form is canonical regardless of how the caller built it.
    """
    if not isinstance(payload, dict):
        raise ValidationError(f"{template.name}: payload must be an object")
    extra = set(payload) - set(template.schema)
    if extra:
        raise ValidationError(f"{template.name}: unknown fields {sorted(extra)}")
    missing = set(template.schema) - set(payload)
    if missing:
        raise ValidationError(f"{template.name}: missing fields {sorted(missing)}")

    normalized = {}
    for name, kind in template.schema.items():
        value = payload[name]
        normalized[name] = _check_field(template.name, name, kind, value, known_parties)
    if template.validate is not None:
        template.validate(normalized)
    return normalized


def _check_field(tname, fname, kind, value, known_parties):
    where = f"{tname}.{fname}"
    if kind == "party":
        if not isinstance(value, str) or not value:
            raise ValidationError(f"{where}: expected a party id")
        if value not in known_parties:
            raise ValidationError(f"{where}: unknown party {value!r}")
        return value
    if kind == "parties":
        if not isinstance(value, (list, tuple, set, frozenset)):
            raise ValidationError(f"{where}: expected a party set")
        parties = sorted(set(value))
        for p in parties:
            if not isinstance(p, str) or p not in known_parties:
                raise ValidationError(f"{where}: unknown party {p!r}")
        return parties
    if kind == "text":
        if not isinstance(value, str):
            raise ValidationError(f"{where}: expected text")
        return value
    if kind == "int":
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValidationError(f"{where}: expected an integer")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise ValidationError(f"{where}: expected a boolean")
        return value
    if kind == "date":
        if not is_iso_date(value):
            raise ValidationError(f"{where}: expected an ISO date")
        return value
    if kind == "dates":
        if not isinstance(value, (list, tuple, set, frozenset)):
            raise ValidationError(f"{where}: expected a date set")
        days = sorted(set(value))
        for d in days:
            if not is_iso_date(d):
                raise ValidationError(f"{where}: expected ISO dates, got {d!r}")
        return days
    if kind == "record":
        if not isinstance(value, dict):
            raise ValidationError(f"{where}: expected an object")
        _require_json(where, value)
        return value
    if kind == "records":
        if not isinstance(value, (list, tuple)):
            raise ValidationError(f"{where}: expected a list of objects")
        items = list(value)
        for item in items:
            if not isinstance(item, dict):
                raise ValidationError(f"{where}: expected a list of objects")
            _require_json(where, item)
        return items
    raise ValidationError(f"{where}: unknown schema kind {kind!r}")


def _require_json(where, value):
    try:
        canonical_json(value)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: not JSON-serializable ({exc})") from exc
