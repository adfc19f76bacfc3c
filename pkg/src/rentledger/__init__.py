"""rentledger: a permissioned smart-contract ledger for property rental.

The package bundles a deterministic single-node contract engine, the lease
and maintenance-issue workflows built on it, two oracles (automated rent
collection and human arbitration), an HTTP gateway with live per-party
contract stores, and a scenario/benchmark harness.
"""

from .ledger import (
    AuthorizationError,
    ContractNotActive,
    Create,
    Exercise,
    ExerciseByKey,
    KeyCollision,
    LedgerEngine,
    LedgerError,
    ManualClock,
    NotFound,
    NotVisible,
    TimeOutOfSkew,
    UnknownParty,
    ValidationError,
)
from .platform import Platform, PlatformConfig, bootstrap, new_platform

__version__ = "0.1.0"

__all__ = [
    "AuthorizationError",
    "ContractNotActive",
    "Create",
    "Exercise",
    "ExerciseByKey",
    "KeyCollision",
    "LedgerEngine",
    "LedgerError",
    "ManualClock",
    "NotFound",
    "NotVisible",
    "Platform",
    "PlatformConfig",
    "TimeOutOfSkew",
    "UnknownParty",
    "ValidationError",
    "bootstrap",
    "new_platform",
    "__version__",
]
