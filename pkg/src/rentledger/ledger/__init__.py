from .canon import canonical_json, digest
from .clock import ManualClock, utc_now
from .engine import ChoiceContext, Create, Exercise, ExerciseByKey, LedgerEngine
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
    CAP_OBSERVER,
    CAP_SIGNATORY,
    CAP_WITNESS,
    PUBLIC,
    ArchiveEvent,
    ChoiceDescriptor,
    ContractRecord,
    CreateEvent,
    TemplateDescriptor,
    Transaction,
    events_for_party,
)

__all__ = [
    "AuthorizationError",
    "ArchiveEvent",
    "CAP_OBSERVER",
    "CAP_SIGNATORY",
    "CAP_WITNESS",
    "ChoiceContext",
    "ChoiceDescriptor",
    "ContractNotActive",
    "ContractRecord",
    "Create",
    "CreateEvent",
    "Exercise",
    "ExerciseByKey",
    "KeyCollision",
    "LedgerEngine",
    "LedgerError",
    "ManualClock",
    "NotFound",
    "NotVisible",
    "PUBLIC",
    "TemplateDescriptor",
    "TimeOutOfSkew",
    "Transaction",
    "UnknownChoice",
    "UnknownParty",
    "UnknownTemplate",
    "ValidationError",
    "canonical_json",
    "digest",
    "events_for_party",
    "utc_now",
]
