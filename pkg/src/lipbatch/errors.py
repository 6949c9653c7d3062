"""Exception and warning types raised by lipbatch."""


class LipbatchError(Exception):
    """Base class for all lipbatch errors."""


class SingularKernel(LipbatchError):
    """The kernel matrix could not be factorized even after jitter escalation."""


class DegenerateData(UserWarning):
    """All observed values are identical; the GP fit falls back to the noise floor."""


class NonPositiveValue(LipbatchError):
    """A log-space quantity was requested for a non-positive value."""


class ObjectiveFailure(LipbatchError):
    """The objective raised during a run.

    The partial trace collected before the failure is kept on ``record``.
    """

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class ConfigError(LipbatchError):
    """An experiment configuration is malformed or references unknown names."""


class SchemaError(LipbatchError):
    """Record files passed to ``summarize`` have incompatible columns."""
