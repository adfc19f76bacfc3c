"""Rejection types raised by the ledger engine.

Every rejection aborts the whole submission; nothing is committed. The
`code` attribute is the machine-readable name carried through the HTTP
layer, so workflow modules subclass LedgerError for their own rule
violations (duplicate vote, stale clock update, ...) and get the same
transport behaviour for free.
"""


class LedgerError(Exception):
    """Base class for every rejection the engine can produce."""

    code = "LedgerError"

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        cls.code = cls.__name__


class AuthorizationError(LedgerError):
    """actAs does not carry the authority the command needs."""


class ContractNotActive(LedgerError):
    """The referenced contract exists but was archived."""


class NotFound(LedgerError):
    """No contract (or key) matches the reference."""


class NotVisible(LedgerError):
    """The contract exists but none of the acting parties may see it."""


class KeyCollision(LedgerError):
    """An active contract with the same contract key already exists."""


class TimeOutOfSkew(LedgerError):
    """Submitted ledger time is too far from the domain's record time."""


class UnknownParty(LedgerError):
    """Party id was never registered on this ledger."""


class UnknownTemplate(LedgerError):
    """Template name was never registered on this ledger."""


class UnknownChoice(LedgerError):
    """The template does not define the requested choice."""


class ValidationError(LedgerError):
    """Payload or argument violates the template's schema or invariants."""
