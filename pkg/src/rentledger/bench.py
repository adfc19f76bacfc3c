"""Latency benchmark for the rent-collection oracle.

Each grid cell builds a fresh ledger with `n_leases` agreements whose
payment dates put the requested fraction into arrears once a month. Every
repetition moves the clock past the next month's rent day, advances the
date clock, and runs one lifecycling pass, timing both submissions.

Absolute numbers depend on the host; the benchmark's contract is the
qualitative ordering: more due payments, more latency.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass

from . import rental, rentcollect
from .ledger import ManualClock, ValidationError
from .ledger.canon import add_months
from .platform import new_platform

BASE_DATE = "2024-05-20"
FIRST_RENT_DAY = "2024-06-25"  # rents habitually fall due on the 25th
FAR_FUTURE_DAY = "2099-01-25"

CSV_COLUMNS = ("run_id", "n_leases", "n_due", "advance_ms", "lifecycle_ms")


@dataclass(frozen=True)
class BenchRow:
    run_id: str
    n_leases: int
    n_due: int
    advance_ms: float
    lifecycle_ms: float

    def to_csv(self) -> dict:
        return {
            "run_id": self.run_id,
            "n_leases": self.n_leases,
            "n_due": self.n_due,
            "advance_ms": f"{self.advance_ms:.3f}",
            "lifecycle_ms": f"{self.lifecycle_ms:.3f}",
        }


def _seed_platform(n_leases: int, n_due: int, reps: int):
    clock = ManualClock(BASE_DATE)
    platform = new_platform(
        clock=clock,
        skew=120.0,
        users=("BenchTenant", "BenchLandlord"),
        initial_date=BASE_DATE,
    )
    engine = platform.engine
    due_dates = [add_months(FIRST_RENT_DAY, m) for m in range(reps)]
    for i in range(n_leases):
        dates = due_dates if i < n_due else [FAR_FUTURE_DAY]
        terms = rental.LeaseTerms(
            rent=80000, begin_date=BASE_DATE, payment_dates=tuple(dates), num_arbitrators=1
        )
        house = rental.House(f"house-{i:05d}", f"Street {i}", "BenchLandlord")
        rental.create_lease_direct(
            engine, "BenchTenant", "BenchLandlord", platform.operator, house, terms
        )
    return platform, clock


def run_bench(n_leases: int, due_fraction: float, reps: int = 10) -> list:
    """One grid cell; returns a BenchRow per repetition."""
    if n_leases < 1:
        raise ValidationError("n_leases must be at least 1")
    if not 0.0 <= due_fraction <= 1.0:
        raise ValidationError("due_fraction must lie in [0, 1]")
    if reps < 1:
        raise ValidationError("reps must be at least 1")
    n_due = int(n_leases * due_fraction)
    platform, clock = _seed_platform(n_leases, n_due, reps)
    rows = []
    for rep in range(reps):
        # the day after this month's rent day: exactly the seeded fraction is overdue
        clock.set(add_months("2024-06-26", rep))
        tick = rentcollect.run_tick(
            platform.engine, platform.provider, platform.lifecycler, platform.operator
        )
        if len(tick["ious"]) != n_due:
            raise AssertionError(
                f"expected {n_due} IOUs for fraction {due_fraction}, got {len(tick['ious'])}"
            )
        rows.append(
            BenchRow(
                run_id=f"L{n_leases}-F{due_fraction:g}-R{rep}",
                n_leases=n_leases,
                n_due=n_due,
                advance_ms=tick["advance_ms"],
                lifecycle_ms=tick["lifecycle_ms"],
            )
        )
    return rows


def run_grid(leases=(10, 100, 1000), fractions=(0.0, 0.5, 1.0), reps: int = 10) -> list:
    rows = []
    for n in leases:
        for f in fractions:
            rows.extend(run_bench(n, f, reps))
    return rows


def median_lifecycle_ms(rows, n_leases: int, due_fraction: float) -> float:
    n_due = int(n_leases * due_fraction)
    sample = [r.lifecycle_ms for r in rows if r.n_leases == n_leases and r.n_due == n_due]
    return statistics.median(sample)


def write_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.to_csv())
