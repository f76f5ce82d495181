"""Exception hierarchy shared across the package."""


class TorsynthError(Exception):
    """Base class for all torsynth errors."""


class MalformedDocumentError(TorsynthError):
    """The consensus document as a whole cannot be parsed."""


class RelayParseError(TorsynthError):
    """A single relay entry is malformed; the message names the relay."""


class SerializationError(TorsynthError):
    """A relay violates field invariants and cannot be emitted."""


class TableLoadError(TorsynthError):
    """A sidecar table (ASN prefixes, family declarations) has a bad line."""


class ParameterError(TorsynthError):
    """A scaling or CLI parameter is out of its valid range."""


class InfeasibleBalanceError(TorsynthError):
    """Role-factor balancing would move weight onto an empty relay group."""


class UnknownAsnError(TorsynthError):
    """An AS number has no prefixes in the loaded table."""


class AddressExhaustionError(TorsynthError):
    """No unused address is left in the candidate address space."""
