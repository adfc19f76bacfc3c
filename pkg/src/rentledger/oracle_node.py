"""Rent-collection node: periodic trigger driving the gateway's oracle endpoints.

A node is configured with the gateway address, the provider and lifecycler
party ids, and a tick period. Each tick advances the date clock and runs
one lifecycling pass; both calls are idempotent server-side, so retrying
after a transport failure never double-charges. Latencies append to a CSV
log (`run_id, n_leases, n_due, advance_ms, lifecycle_ms`).
"""

from __future__ import annotations

import csv
import json
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

import httpx

from .bench import CSV_COLUMNS

DEFAULT_TICK_SECONDS = 86400.0  # one rent cycle per day
DEFAULT_RETRIES = 5
DEFAULT_BACKOFF_SECONDS = 0.25


@dataclass
class NodeConfig:
    service_url: str
    provider: str = "TimeProvider"
    lifecycler: str = "Lifecycler"
    tick_seconds: float = DEFAULT_TICK_SECONDS
    latency_csv: Optional[str] = None
    retries: int = DEFAULT_RETRIES
    backoff_seconds: float = DEFAULT_BACKOFF_SECONDS

    @classmethod
    def from_file(cls, path) -> "NodeConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(
            service_url=data["serviceUrl"],
            provider=data.get("provider", "TimeProvider"),
            lifecycler=data.get("lifecycler", "Lifecycler"),
            tick_seconds=float(data.get("tickSeconds", DEFAULT_TICK_SECONDS)),
            latency_csv=data.get("latencyCsv"),
            retries=int(data.get("retries", DEFAULT_RETRIES)),
            backoff_seconds=float(data.get("backoffSeconds", DEFAULT_BACKOFF_SECONDS)),
        )


class NodeUnavailable(Exception):
    """The gateway stayed unreachable across every retry."""


@dataclass
class TickOutcome:
    run_id: str
    advanced: bool
    date: str
    n_leases: int
    n_due: int
    advance_ms: float
    lifecycle_ms: float


class RentCollectionNode:
    def __init__(self, config: NodeConfig, client: Optional[httpx.Client] = None):
        self.config = config
        self._client = client or httpx.Client(base_url=config.service_url, timeout=30.0)
        self._sessions: dict = {}
        self._tick_count = 0
        self._stop = threading.Event()

    # -- plumbing -------------------------------------------------------------

    def _with_retries(self, fn):
        last = None
        for attempt in range(self.config.retries):
            try:
                return fn()
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                if isinstance(exc, httpx.HTTPStatusError) and exc.response.status_code < 500:
                    raise
                last = exc
                time.sleep(self.config.backoff_seconds * (2**attempt))
        raise NodeUnavailable(f"gateway unreachable after {self.config.retries} attempts: {last}")

    def _session(self, party: str) -> str:
        if party in self._sessions:
            return self._sessions[party]

        def open_session():
            resp = self._client.post("/v1/sessions", json={"party": party, "role": "oracle"})
            resp.raise_for_status()
            return resp.json()["session"]

        sid = self._with_retries(open_session)
        self._sessions[party] = sid
        return sid

    def _post(self, party: str, path: str) -> dict:
        def call():
            sid = self._session(party)
            resp = self._client.post(f"/v1/sessions/{sid}{path}")
            if resp.status_code == 404:  # gateway restarted: session is gone
                self._sessions.pop(party, None)
            resp.raise_for_status()
            return resp.json()

        return self._with_retries(call)

    # -- the trigger ------------------------------------------------------------

    def tick(self, run_id: Optional[str] = None) -> TickOutcome:
        run_id = run_id or f"tick-{self._tick_count:06d}"
        self._tick_count += 1
        advanced = self._post(self.config.provider, "/oracle/advance")
        processed = self._post(self.config.lifecycler, "/oracle/process")
        outcome = TickOutcome(
            run_id=run_id,
            advanced=advanced["advanced"],
            date=advanced["date"],
            n_leases=processed["leases"],
            n_due=processed["iousCreated"],
            advance_ms=advanced["advanceMs"],
            lifecycle_ms=processed["lifecycleMs"],
        )
        if self.config.latency_csv:
            self._append_latency(outcome)
        return outcome

    def _append_latency(self, outcome: TickOutcome) -> None:
        path = self.config.latency_csv
        fresh = not os.path.exists(path) or os.path.getsize(path) == 0
        with open(path, "a", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            if fresh:
                writer.writeheader()
            writer.writerow(
                {
                    "run_id": outcome.run_id,
                    "n_leases": outcome.n_leases,
                    "n_due": outcome.n_due,
                    "advance_ms": f"{outcome.advance_ms:.3f}",
                    "lifecycle_ms": f"{outcome.lifecycle_ms:.3f}",
                }
            )

    def run_forever(self) -> None:
        while not self._stop.is_set():
            self.tick()
            self._stop.wait(self.config.tick_seconds)

    def stop(self) -> None:
        self._stop.set()

    def close(self) -> None:
        self._client.close()
