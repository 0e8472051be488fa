"""Error taxonomy shared across the toolkit.

Two failure families matter to callers: the input broke a documented
contract (caller's fault, CLI exit code 2), or an internal invariant was
violated (our fault, CLI exit code 3).
"""


class AuditError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 2


class ContractError(AuditError):
    """Raised when an input violates a documented precondition or schema."""

    exit_code = 2


class InvariantError(AuditError):
    """Raised when an internal consistency check fails; indicates a bug."""

    exit_code = 3
