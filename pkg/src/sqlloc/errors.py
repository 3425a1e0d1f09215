"""Exception hierarchy shared by every stage of the localization toolkit."""

from __future__ import annotations


class LocalizationError(Exception):
    """Base class for all toolkit errors."""


# schema catalog
class FileNotReadable(LocalizationError):
    pass


class CorruptDatabase(LocalizationError):
    pass


class EmptySchema(LocalizationError):
    pass


# identifier mapping
class EmptyIdentifier(LocalizationError, ValueError):
    pass


class UnresolvableCollision(LocalizationError):
    pass


class NotInjective(LocalizationError):
    pass


# translator / judge ports
class TranslatorUnavailable(LocalizationError):
    pass


class MalformedTranslatorReply(LocalizationError):
    pass


# SQL
class SQLSyntaxError(LocalizationError):
    def __init__(self, message: str, position: int, expected: str | None = None):
        self.position = position
        self.expected = expected
        detail = f"{message} at position {position}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class UnsupportedConstruct(LocalizationError):
    def __init__(self, name: str, position: int | None = None):
        self.name = name
        self.position = position
        super().__init__(f"unsupported construct: {name}")


class UnmappedIdentifier(LocalizationError):
    def __init__(self, name: str, kind: str = "identifier"):
        self.name = name
        self.kind = kind
        super().__init__(f"{kind} {name!r} has no mapping entry")


# database localization
class MappingIncomplete(LocalizationError):
    def __init__(self, missing: list[str]):
        self.missing = list(missing)
        super().__init__("mapping does not cover: " + ", ".join(self.missing))


class RenameFailure(LocalizationError):
    pass


class OutputExists(LocalizationError):
    pass


# natural-language localization
class UnbalancedBackticks(LocalizationError, ValueError):
    pass


class FrozenContentViolated(LocalizationError):
    def __init__(self, violations: list, candidate: tuple = None):
        self.violations = list(violations)
        self.candidate = candidate  # rejected (question, evidence), kept for review
        super().__init__("frozen content changed: " + "; ".join(str(v) for v in self.violations))


# verification
class ExecutionError(LocalizationError):
    def __init__(self, side: str, message: str):
        self.side = side
        self.message = message
        super().__init__(f"{side}: {message}")


class QueryTimeout(LocalizationError):
    def __init__(self, side: str, seconds: float):
        self.side = side
        self.seconds = seconds
        super().__init__(f"{side}: exceeded {seconds:g}s")


class ParseFailure(LocalizationError):
    pass


class SchemaViolation(LocalizationError, ValueError):
    def __init__(self, field: str, message: str = ""):
        self.field = field
        super().__init__(f"{field}: {message}" if message else field)


class ConsistencyViolation(LocalizationError, ValueError):
    pass


# sampling
class InvalidParameter(LocalizationError, ValueError):
    pass


class SampleTooLarge(LocalizationError, ValueError):
    pass


# corpus / metrics / orchestration
class EmptyCorpus(LocalizationError, ValueError):
    pass


class MissingPrediction(LocalizationError):
    def __init__(self, item_id):
        self.item_id = item_id
        super().__init__(f"no prediction for item {item_id}")


class UnknownItem(LocalizationError):
    def __init__(self, item_id):
        self.item_id = item_id
        super().__init__(f"prediction references unknown item {item_id}")


class ConfigInvalid(LocalizationError):
    pass
