"""Shared error types mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Bad user-supplied configuration (exit code 2)."""


class InfeasibleError(RuntimeError):
    """Requested computation exceeds a stated budget (exit code 3)."""
