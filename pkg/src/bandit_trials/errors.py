"""Exception hierarchy shared by the library and the CLI."""


class BanditTrialsError(Exception):
    """Base class; ``kind`` is echoed in the CLI's JSON error payload."""

    kind = "error"


class ConfigError(BanditTrialsError, ValueError):
    kind = "config"


class DomainError(BanditTrialsError, ValueError):
    kind = "domain"


class CapacityError(BanditTrialsError, RuntimeError):
    kind = "capacity"
