"""Exception hierarchy shared by every subjdb module."""


class SubjDBError(Exception):
    """Base class for all errors raised by subjdb."""


class DataError(SubjDBError):
    """Malformed input data. Carries the file and 1-based line when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class AllTokensOutOfVocabulary(SubjDBError):
    pass


class EmptyCorpus(SubjDBError):
    pass


class UnknownDocument(SubjDBError, KeyError):
    pass


class UnknownEntity(SubjDBError, KeyError):
    pass


class DomainTooSmall(SubjDBError, ValueError):
    pass


class AttributeMismatch(SubjDBError, ValueError):
    pass


class DegenerateLabels(SubjDBError, ValueError):
    pass


class Infeasible(SubjDBError):
    """No rewriter assignment fits inside the time budget."""


class FuzzyDomainError(SubjDBError, ValueError):
    """A fuzzy operand fell outside [0, 1]."""


class QuerySyntaxError(SubjDBError):
    def __init__(self, message, position):
        self.position = position
        super().__init__(f"{message} (at position {position})")


class UnknownRelation(SubjDBError):
    pass


class UnknownObjectiveAttribute(SubjDBError):
    pass


class MissingTruth(SubjDBError, KeyError):
    pass


class InvalidSpec(SubjDBError, ValueError):
    pass


class InvariantViolation(SubjDBError):
    """An internal consistency check failed; indicates a bug, not bad input."""
