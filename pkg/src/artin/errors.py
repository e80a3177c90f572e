"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside a function's mathematical domain."""


class ConfigError(ValueError):
    """An estimator or run configuration violates its invariants."""


class NotReadyError(RuntimeError):
    """No qualifying primes have been ingested yet, so no estimate exists."""


class BoundExceededError(RuntimeError):
    """A requested prime range exceeds the configured stream ceiling."""
