"""Deterministic single-node permissioned ledger engine.

One engine process plays the synchronization domain: it serializes
submissions into a total order, assigns record times, and enforces the
authorization, key-uniqueness, and visibility rules. Submissions either
commit atomically or reject with no state change.

Authorization model:
  * top-level Create requires actAs to cover the new contract's signatories;
  * top-level Exercise requires actAs to cover the choice's controllers;
  * inside a choice body the available authority is the union of the
    exercised contract's signatories and the choice's controllers, and the
    same rules recurse for nested creates / exercises / archives.

The commit log persists as newline-delimited JSON (one transaction per
line after a header record); replaying it reproduces the active contract
set byte for byte.
"""

from __future__ import annotations

import itertools
import json
import threading
from datetime import timedelta
from typing import Any, Callable, Iterable, Optional

from .canon import canonical_json, format_ts, parse_ts, ts_date
from .clock import utc_now
from .errors import (
    AuthorizationError,
    ContractNotActive,
    KeyCollision,
    LedgerError,
    NotFound,
    NotVisible,
    TimeOutOfSkew,
    UnknownChoice,
    UnknownParty,
    UnknownTemplate,
    ValidationError,
)
from .model import (
    PUBLIC,
    ArchiveNode,
    ContractRecord,
    CreateNode,
    ExerciseNode,
    FetchNode,
    TemplateDescriptor,
    Transaction,
    events_for_party,
    validate_payload,
)

DEFAULT_SKEW_SECONDS = 60.0


class Command:
    pass


class Create(Command):
    def __init__(self, template: str, payload: dict):
        self.template = template
        self.payload = payload


class Exercise(Command):
    def __init__(self, contract_id: str, choice: str, args: Optional[dict] = None):
        self.contract_id = contract_id
        self.choice = choice
        self.args = args or {}


class ExerciseByKey(Command):
    """Resolve the active contract for a key and exercise it, atomically.

    Removes the lookup/exercise race when several nodes drive the same
    keyed contract (e.g. clock providers racing the daily advance).
    """

    def __init__(self, template: str, key, choice: str, args: Optional[dict] = None):
        self.template = template
        self.key = key
        self.choice = choice
        self.args = args or {}


class _TxState:
    """Uncommitted overlay over the engine's active set and key index."""

    def __init__(self, engine: "LedgerEngine"):
        self.engine = engine
        self.created: dict = {}  # cid -> ContractRecord, in creation order
        self.archived: set = set()
        self.key_overrides: dict = {}  # canonical (template, key) -> holder cid | None
        self._cid_counter = itertools.count(engine._next_cid)

    def next_cid(self) -> str:
        return f"c-{next(self._cid_counter):08d}"

    def record(self, cid: str) -> Optional[ContractRecord]:
        if cid in self.created:
            return self.created[cid]
        return self.engine._contracts.get(cid)

    def is_active(self, cid: str) -> bool:
        if cid in self.archived:
            return False
        if cid in self.created:
            return True
        return cid in self.engine._active

    def active_record(self, cid: str) -> ContractRecord:
        rec = self.record(cid)
        if rec is None:
            raise NotFound(f"unknown contract {cid}")
        if not self.is_active(cid):
            raise ContractNotActive(cid)
        return rec

    def key_holder(self, ckey) -> Optional[str]:
        if ckey in self.key_overrides:
            return self.key_overrides[ckey]
        return self.engine._keys.get(ckey)

    def add(self, rec: ContractRecord) -> None:
        if rec.key is not None:
            ckey = (rec.template, canonical_json(rec.key))
            if self.key_holder(ckey) is not None:
                raise KeyCollision(f"{rec.template} key {canonical_json(rec.key)} already active")
            self.key_overrides[ckey] = rec.contract_id
        self.created[rec.contract_id] = rec

    def drop(self, cid: str) -> None:
        rec = self.active_record(cid)
        self.archived.add(cid)
        if rec.key is not None:
            ckey = (rec.template, canonical_json(rec.key))
            if self.key_holder(ckey) == cid:
                self.key_overrides[ckey] = None


class ChoiceContext:
    """Execution context handed to choice bodies.

    All operations append consequence nodes to the enclosing exercise and
    are checked against the context's available authority.
    """

    def __init__(self, executor: "_Executor", authority: frozenset, children: list,
                 ancestors: frozenset, self_id: str):
        self._ex = executor
        self.authority = authority
        self._children = children
        self._ancestors = ancestors  # stakeholders of enclosing exercised contracts
        self.self_id = self_id  # the exercised contract

    # -- time ---------------------------------------------------------------

    @property
    def ledger_time(self) -> str:
        return self._ex.ledger_time

    @property
    def ledger_date(self) -> str:
        return ts_date(self._ex.ledger_time)

    # -- state --------------------------------------------------------------

    def is_active(self, cid: str) -> bool:
        return self._ex.state.is_active(cid)

    def create(self, template: str, payload: dict) -> str:
        node = self._ex.run_create(template, payload, self.authority, self._ancestors)
        self._children.append(node)
        return node.contract.contract_id

    def exercise(self, cid: str, choice: str, args: Optional[dict] = None) -> Any:
        node, result = self._ex.run_exercise(cid, choice, args or {}, self.authority, self._ancestors)
        self._children.append(node)
        return result

    def fetch(self, cid: str) -> ContractRecord:
        rec = self._ex.state.active_record(cid)
        if not (self.authority & rec.stakeholders):
            raise NotVisible(f"{cid} is not visible to {sorted(self.authority)}")
        self._children.append(FetchNode(contract_id=cid, template=rec.template, actors=self.authority))
        return rec

    def archive(self, cid: str) -> None:
        rec = self._ex.state.active_record(cid)
        missing = rec.signatories - self.authority
        if missing:
            raise AuthorizationError(
                f"archiving {rec.template} requires signatories {sorted(missing)}"
            )
        self._ex.state.drop(cid)
        self._children.append(
            ArchiveNode(
                contract_id=cid,
                template=rec.template,
                actors=self.authority,
                signatories=rec.signatories,
                observers=rec.observers,
            )
        )

    def lookup_by_key(self, template: str, key) -> Optional[ContractRecord]:
        rec = self._ex.lookup(template, key)
        if rec is None:
            return None
        if not (self.authority & rec.stakeholders):
            raise NotVisible(f"{template} key holder is not visible to {sorted(self.authority)}")
        return rec


class _Executor:
    """Builds one transaction tree against a _TxState overlay."""

    def __init__(self, engine: "LedgerEngine", state: _TxState, ledger_time: str):
        self.engine = engine
        self.state = state
        self.ledger_time = ledger_time

    def lookup(self, template: str, key) -> Optional[ContractRecord]:
        if template not in self.engine._templates:
            raise UnknownTemplate(template)
        cid = self.state.key_holder((template, canonical_json(key)))
        return self.state.record(cid) if cid else None

    def run_create(self, template: str, payload: dict, authority: frozenset, ancestors: frozenset) -> CreateNode:
        td = self.engine._templates.get(template)
        if td is None:
            raise UnknownTemplate(template)
        normalized = validate_payload(td, payload, self.engine._parties)
        signatories = frozenset(td.signatories(normalized))
        if not signatories:
            raise ValidationError(f"{template}: a contract must have at least one signatory")
        observers = frozenset(td.observers(normalized)) - signatories
        missing = signatories - authority
        if missing:
            raise AuthorizationError(f"creating {template} requires signatories {sorted(missing)}")
        key = td.key(normalized) if td.key is not None else None
        rec = ContractRecord(
            contract_id=self.state.next_cid(),
            template=template,
            payload=normalized,
            signatories=signatories,
            observers=observers,
            key=key,
        )
        self.state.add(rec)
        return CreateNode(contract=rec, actors=authority, witnesses=rec.stakeholders | ancestors)

    def run_exercise(self, cid: str, choice: str, args: dict, authority: frozenset, ancestors: frozenset):
        rec = self.state.active_record(cid)
        td = self.engine._templates.get(rec.template)
        if td is None:
            raise UnknownTemplate(rec.template)
        if choice not in td.choices:
            raise UnknownChoice(f"{rec.template} has no choice {choice!r}")
        ch = td.choices[choice]
        controllers = frozenset(ch.controllers(rec.payload, args))
        if not controllers:
            raise AuthorizationError(f"{rec.template}.{choice}: no controllers resolved")
        unknown = controllers - self.engine._parties
        if unknown:
            raise UnknownParty(f"{rec.template}.{choice}: unknown controllers {sorted(unknown)}")
        missing = controllers - authority
        if missing:
            raise AuthorizationError(
                f"{rec.template}.{choice} requires controllers {sorted(missing)}"
            )
        node = ExerciseNode(
            contract_id=cid,
            template=rec.template,
            choice=choice,
            consuming=ch.consuming,
            actors=authority,
            signatories=rec.signatories,
            observers=rec.observers,
        )
        if ch.consuming:
            self.state.drop(cid)
        body_authority = rec.signatories | controllers
        ctx = ChoiceContext(self, body_authority, node.children, ancestors | rec.stakeholders, cid)
        result = ch.body(ctx, rec.payload, args)
        return node, result


class LedgerEngine:
    """Single-process ledger: total order, privacy projection, commit log.

    Thread-safe: submissions serialize through one lock, reads take the
    same lock and therefore observe committed state only.
    """

    def __init__(self, clock: Callable = None, skew: float = DEFAULT_SKEW_SECONDS):
        self._clock = clock or utc_now
        self.skew = timedelta(seconds=float(skew))
        self._lock = threading.RLock()
        self._parties = {PUBLIC}
        self._templates: dict = {}
        self._contracts: dict = {}  # cid -> ContractRecord (kept after archive)
        self._active: dict = {}  # cid -> ContractRecord, insertion ordered
        self._keys: dict = {}  # (template, canonical key) -> cid
        self._log: list = []
        self._subscribers: list = []
        self._next_cid = 0
        self._last_record = None

    # -- registry -----------------------------------------------------------

    def now(self):
        """Current engine clock reading as an aware UTC datetime."""
        return parse_ts(self._clock())

    def register_party(self, *party_ids: str) -> None:
        with self._lock:
            for pid in party_ids:
                if not pid or not isinstance(pid, str):
                    raise ValidationError("party ids must be non-empty strings")
                self._parties.add(pid)

    def has_party(self, party_id: str) -> bool:
        with self._lock:
            return party_id in self._parties

    @property
    def parties(self) -> frozenset:
        with self._lock:
            return frozenset(self._parties)

    def register_template(self, template: TemplateDescriptor) -> None:
        with self._lock:
            self._templates[template.name] = template

    def template(self, name: str) -> TemplateDescriptor:
        td = self._templates.get(name)
        if td is None:
            raise UnknownTemplate(name)
        return td

    # -- submission ---------------------------------------------------------

    def submit(self, act_as, command: Command, ledger_time=None) -> Transaction:
        actors = frozenset([act_as]) if isinstance(act_as, str) else frozenset(act_as)
        if not actors:
            raise AuthorizationError("actAs must name at least one party")
        with self._lock:
            unknown = actors - self._parties
            if unknown:
                raise UnknownParty(f"unknown parties {sorted(unknown)}")
            now = self._clock()
            lt = now if ledger_time is None else parse_ts(ledger_time)
            record = now
            if self._last_record is not None and record <= self._last_record:
                record = self._last_record + timedelta(microseconds=1)
            if abs(record - lt) > self.skew:
                raise TimeOutOfSkew(
                    f"ledger time {format_ts(lt)} deviates from record time "
                    f"{format_ts(record)} by more than {self.skew.total_seconds()}s"
                )

            state = _TxState(self)
            executor = _Executor(self, state, format_ts(lt))
            if isinstance(command, Create):
                node = executor.run_create(command.template, command.payload, actors, frozenset())
                result = node.contract.contract_id
            elif isinstance(command, Exercise):
                node, result = executor.run_exercise(
                    command.contract_id, command.choice, command.args, actors, frozenset()
                )
            elif isinstance(command, ExerciseByKey):
                target = executor.lookup(command.template, command.key)
                if target is None:
                    raise NotFound(
                        f"no active {command.template} for key {canonical_json(command.key)}"
                    )
                if not (actors & target.stakeholders):
                    raise NotVisible(
                        f"{command.template} key holder is not visible to {sorted(actors)}"
                    )
                node, result = executor.run_exercise(
                    target.contract_id, command.choice, command.args, actors, frozenset()
                )
            else:
                raise ValidationError(f"unknown command type {type(command).__name__}")

            tx = Transaction(
                tx_id=f"tx-{len(self._log):06d}",
                offset=len(self._log),
                ledger_time=format_ts(lt),
                record_time=format_ts(record),
                act_as=actors,
                roots=[node],
                result=result,
            )
            self._apply(tx, state, record)
        return tx

    def _apply(self, tx: Transaction, state: _TxState, record_dt) -> None:
        for cid, rec in state.created.items():
            self._contracts[cid] = rec
            if cid not in state.archived:
                self._active[cid] = rec
        for cid in state.archived:
            self._active.pop(cid, None)
        for ckey, cid in state.key_overrides.items():
            if cid is None:
                self._keys.pop(ckey, None)
            else:
                self._keys[ckey] = cid
        self._next_cid += len(state.created)
        self._last_record = record_dt
        self._log.append(tx)
        for callback in list(self._subscribers):
            callback(tx)

    # -- convenience wrappers -----------------------------------------------

    def create(self, act_as, template: str, payload: dict, ledger_time=None) -> ContractRecord:
        tx = self.submit(act_as, Create(template, payload), ledger_time=ledger_time)
        return tx.roots[0].contract

    def exercise(self, act_as, contract_id: str, choice: str, args=None, ledger_time=None) -> Transaction:
        return self.submit(act_as, Exercise(contract_id, choice, args), ledger_time=ledger_time)

    def exercise_by_key(self, act_as, template: str, key, choice: str, args=None,
                        ledger_time=None) -> Transaction:
        return self.submit(act_as, ExerciseByKey(template, key, choice, args), ledger_time=ledger_time)

    # -- reads --------------------------------------------------------------

    def project_for(self, party: str, start_offset: int = 0) -> list:
        """Per-party event stream (creates and archives) from the commit log."""
        with self._lock:
            if party not in self._parties:
                raise UnknownParty(party)
            events = []
            for tx in self._log[start_offset:]:
                events.extend(events_for_party(tx, party))
            return events

    def lookup_by_key(self, template: str, key, act_as) -> ContractRecord:
        actors = frozenset([act_as]) if isinstance(act_as, str) else frozenset(act_as)
        with self._lock:
            if template not in self._templates:
                raise UnknownTemplate(template)
            cid = self._keys.get((template, canonical_json(key)))
            if cid is None:
                raise NotFound(f"no active {template} for key {canonical_json(key)}")
            rec = self._active[cid]
            if not (actors & rec.stakeholders):
                raise NotVisible(f"{template} key holder is not visible to {sorted(actors)}")
            return rec

    def fetch(self, contract_id: str) -> ContractRecord:
        """Record by id regardless of status; NotFound if it never existed."""
        with self._lock:
            rec = self._contracts.get(contract_id)
            if rec is None:
                raise NotFound(f"unknown contract {contract_id}")
            return rec

    def is_active(self, contract_id: str) -> bool:
        with self._lock:
            return contract_id in self._active

    def active_contracts(self, template: Optional[str] = None) -> list:
        with self._lock:
            recs = list(self._active.values())
        if template is not None:
            recs = [r for r in recs if r.template == template]
        return recs

    def visible_active(self, party: str) -> dict:
        """Active contracts the party holds a stake in (signatory or observer)."""
        with self._lock:
            if party not in self._parties:
                raise UnknownParty(party)
            return {
                cid: rec for cid, rec in self._active.items() if party in rec.stakeholders
            }

    @property
    def log(self) -> list:
        with self._lock:
            return list(self._log)

    @property
    def offset(self) -> int:
        with self._lock:
            return len(self._log)

    def transactions_since(self, offset: int) -> list:
        with self._lock:
            return list(self._log[offset:])

    # -- change feed ----------------------------------------------------------

    def subscribe(self, callback: Callable) -> Callable:
        """Register a post-commit callback; returns an unsubscribe function.

        Callbacks run inside the commit pipeline, in commit order. They must
        be quick and must not submit.
        """
        with self._lock:
            self._subscribers.append(callback)

        def unsubscribe():
            with self._lock:
                if callback in self._subscribers:
                    self._subscribers.remove(callback)

        return unsubscribe

    def attach(self, callback: Callable, from_offset: int = 0) -> Callable:
        """Replay the log from an offset through `callback`, then subscribe it.

        Replay and subscription happen atomically with respect to commits,
        so the callback sees every transaction exactly once and in order.
        """
        with self._lock:
            for tx in self._log[from_offset:]:
                callback(tx)
            self._subscribers.append(callback)

        def unsubscribe():
            with self._lock:
                if callback in self._subscribers:
                    self._subscribers.remove(callback)

        return unsubscribe

    # -- persistence ----------------------------------------------------------

    def active_snapshot_json(self) -> str:
        """Canonical serialization of the active contract set."""
        with self._lock:
            records = [self._active[cid].to_json() for cid in sorted(self._active)]
        return canonical_json(records)

    def dump_log(self, path) -> None:
        with self._lock, open(path, "w", encoding="utf-8") as fh:
            header = {
                "header": {
                    "version": 1,
                    "skew_seconds": self.skew.total_seconds(),
                    "parties": sorted(self._parties),
                }
            }
            fh.write(canonical_json(header) + "\n")
            for tx in self._log:
                fh.write(canonical_json(tx.to_json()) + "\n")

    @classmethod
    def load_log(cls, path, templates: Iterable[TemplateDescriptor] = (), clock: Callable = None) -> "LedgerEngine":
        """Rebuild an engine by structural replay of a dumped commit log."""
        with open(path, encoding="utf-8") as fh:
            lines = [line for line in fh.read().splitlines() if line.strip()]
        if not lines:
            raise ValidationError("empty commit log")
        header = json.loads(lines[0]).get("header")
        if header is None:
            raise ValidationError("commit log is missing its header record")
        engine = cls(clock=clock, skew=header["skew_seconds"])
        engine._parties.update(header["parties"])
        for td in templates:
            engine.register_template(td)
        max_cid = -1
        for line in lines[1:]:
            tx = Transaction.from_json(json.loads(line))
            for node in tx.iter_nodes():
                if isinstance(node, CreateNode):
                    rec = node.contract
                    engine._contracts[rec.contract_id] = rec
                    engine._active[rec.contract_id] = rec
                    if rec.key is not None:
                        engine._keys[(rec.template, canonical_json(rec.key))] = rec.contract_id
                    max_cid = max(max_cid, int(rec.contract_id.split("-")[1]))
                elif isinstance(node, ArchiveNode) or (
                    isinstance(node, ExerciseNode) and node.consuming
                ):
                    engine._active.pop(node.contract_id, None)
                    rec = engine._contracts.get(node.contract_id)
                    if rec is not None and rec.key is not None:
                        ckey = (rec.template, canonical_json(rec.key))
                        if engine._keys.get(ckey) == node.contract_id:
                            del engine._keys[ckey]
            engine._log.append(tx)
            engine._last_record = parse_ts(tx.record_time)
        engine._next_cid = max_cid + 1
        return engine
