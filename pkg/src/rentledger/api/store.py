"""Live per-party contract store mapping external ids to active contracts.

The store subscribes to the engine's commit pipeline and is updated
synchronously with each commit, so a command submitter sees its own
writes reflected before the submit call returns. External ids are
allocated monotonically per store, never reused, and form a bijection
with contract ids among live entries.

Event feeds hang off the store as bounded queues: ingestion never drops
an event, it blocks the producer instead; a consumer that stays stalled
past the timeout is disconnected rather than losing data silently.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass
from typing import Optional

from ..ledger import CAP_WITNESS, LedgerEngine, Transaction, UnknownParty, events_for_party
from ..maintenance import INVITE, MI_RESULT, POLL
from ..rental import IOU

LIVE = "live"
GONE = "gone"
UNKNOWN = "unknown"

FEED_MAXSIZE = 4096
FEED_PUT_TIMEOUT = 10.0


@dataclass(frozen=True)
class StoreEntry:
    external_id: int
    contract_id: str
    template: str
    payload: dict

    def to_json(self) -> dict:
        return {
            "externalId": self.external_id,
            "contractId": self.contract_id,
            "template": self.template,
            "payload": self.payload,
        }


class ContractStore:
    def __init__(self, engine: LedgerEngine, party: str):
        if not engine.has_party(party):
            raise UnknownParty(party)
        self.engine = engine
        self.party = party
        self._lock = threading.RLock()
        self._entries: dict = {}  # external_id -> StoreEntry
        self._by_cid: dict = {}  # contract_id -> external_id
        self._gone: set = set()  # external ids whose contracts were archived
        self._next_external = 1
        self._offset = 0  # number of transactions applied
        self._feeds: list = []
        self._unsubscribe = None

    # -- lifecycle ------------------------------------------------------------

    def start(self) -> "ContractStore":
        """Catch up with the log, then follow commits synchronously.

        Lock order is always engine -> store: the engine replays and
        subscribes under its commit lock, and each callback then takes the
        store lock. The store never takes the engine lock while holding its
        own.
        """
        self.resync()
        return self

    def close(self) -> None:
        self.detach()
        with self._lock:
            feeds, self._feeds = self._feeds, []
        for q in feeds:
            q.put_nowait(None)  # sentinel: feed closed

    def detach(self) -> None:
        """Stop following commits (simulates a dropped event stream)."""
        unsubscribe = self._unsubscribe
        self._unsubscribe = None
        if unsubscribe is not None:
            unsubscribe()

    def resync(self) -> None:
        """Re-apply any commits missed while detached; ids are never reissued."""
        if self._unsubscribe is None:
            self._unsubscribe = self.engine.attach(self._on_commit, from_offset=self._offset)

    # -- ingestion ------------------------------------------------------------

    def _on_commit(self, tx: Transaction) -> None:
        with self._lock:
            if tx.offset < self._offset:
                return  # already applied during resync
            self._apply(tx)

    def _apply(self, tx: Transaction) -> None:
        events = events_for_party(tx, self.party)
        self._offset = tx.offset + 1
        for ev in events:
            if ev.kind == "create":
                if ev.capacity == CAP_WITNESS:
                    self._publish(self._notification("witness", ev, payload=ev.payload))
                    continue
                entry = StoreEntry(
                    external_id=self._next_external,
                    contract_id=ev.contract_id,
                    template=ev.template,
                    payload=dict(ev.payload),
                )
                self._next_external += 1
                self._entries[entry.external_id] = entry
                self._by_cid[ev.contract_id] = entry.external_id
                self._publish(self._notification("store-add", ev, entry=entry))
                for note in self._domain_notifications(ev, entry):
                    self._publish(note)
            else:  # archive
                xid = self._by_cid.pop(ev.contract_id, None)
                if xid is not None:
                    self._entries.pop(xid, None)
                    self._gone.add(xid)
                    self._publish(self._notification("store-remove", ev, external_id=xid))

    def _notification(self, type_: str, ev, entry: Optional[StoreEntry] = None,
                      external_id: Optional[int] = None, payload: Optional[dict] = None) -> dict:
        note = {
            "type": type_,
            "offset": ev.offset,
            "contractId": ev.contract_id,
            "template": ev.template,
        }
        if entry is not None:
            note["externalId"] = entry.external_id
            note["payload"] = entry.payload
        if external_id is not None:
            note["externalId"] = external_id
        if payload is not None:
            note["payload"] = payload
        return note

    def _domain_notifications(self, ev, entry: StoreEntry) -> list:
        """Role-relevant alerts: new invitation, new poll, poll result, new IOU."""
        notes = []
        p = ev.payload
        if ev.template == INVITE and self.party in p["invited"] and self.party not in p["confirmed"]:
            notes.append(self._notification("invitation", ev, entry=entry))
        elif ev.template == POLL and self.party in p["voters"] and self.party not in p["alreadyVoted"]:
            notes.append(self._notification("poll", ev, entry=entry))
        elif ev.template == MI_RESULT:
            notes.append(self._notification("result", ev, entry=entry))
        elif ev.template == IOU:
            notes.append(self._notification("iou", ev, entry=entry))
        return notes

    def _publish(self, note: dict) -> None:
        dead = []
        for q in self._feeds:
            try:
                q.put(note, timeout=FEED_PUT_TIMEOUT)
            except queue.Full:
                dead.append(q)  # consumer stalled beyond the backpressure window
        for q in dead:
            self._feeds.remove(q)

    # -- reads ----------------------------------------------------------------

    def entries(self, template: Optional[str] = None) -> list:
        with self._lock:
            out = list(self._entries.values())
        if template is not None:
            out = [e for e in out if e.template == template]
        return out

    def get(self, external_id: int) -> Optional[StoreEntry]:
        with self._lock:
            return self._entries.get(external_id)

    def status(self, external_id: int) -> str:
        with self._lock:
            if external_id in self._entries:
                return LIVE
            if external_id in self._gone:
                return GONE
            return UNKNOWN

    def external_for(self, contract_id: str) -> Optional[int]:
        with self._lock:
            return self._by_cid.get(contract_id)

    def entry_for(self, contract_id: str) -> Optional[StoreEntry]:
        with self._lock:
            xid = self._by_cid.get(contract_id)
            return self._entries.get(xid) if xid is not None else None

    def snapshot(self) -> dict:
        """contract id -> payload for every live entry (equivalence checks)."""
        with self._lock:
            return {e.contract_id: e.payload for e in self._entries.values()}

    @property
    def offset(self) -> int:
        with self._lock:
            return self._offset

    # -- feeds ------------------------------------------------------------------

    def listen(self, maxsize: int = FEED_MAXSIZE):
        """Attach a bounded event feed; returns (queue, detach-callable)."""
        q = queue.Queue(maxsize=maxsize)
        with self._lock:
            self._feeds.append(q)

        def stop():
            with self._lock:
                if q in self._feeds:
                    self._feeds.remove(q)

        return q, stop
