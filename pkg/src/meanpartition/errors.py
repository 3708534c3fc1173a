"""Exception hierarchy shared by all modules."""


class PartitionError(ValueError):
    """Base class for every error raised by this package."""

    code = "error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class InvalidMatrixError(PartitionError):
    code = "invalid-matrix"


class DimensionMismatchError(PartitionError):
    code = "dimension-mismatch"


class SymmetricCenterError(PartitionError):
    code = "symmetric-center"


class BudgetExceededError(PartitionError):
    code = "budget-exceeded"

    def __init__(self, required, budget):
        super().__init__(f"enumeration needs {required} alignments, budget is {budget}")
        self.required = required
        self.budget = budget

    def to_dict(self):
        d = super().to_dict()
        d.update(required=self.required, budget=self.budget)
        return d


class IndexOutOfRangeError(PartitionError, IndexError):
    code = "index-out-of-range"


class EllTooLargeError(PartitionError):
    code = "ell-too-large"


class RejectionExhaustedError(PartitionError):
    code = "rejection-exhausted"


class EmptySetError(PartitionError):
    code = "empty-set"


class ParseError(PartitionError):
    code = "parse-error"

    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line

    def to_dict(self):
        d = super().to_dict()
        d["line"] = self.line
        return d


class LabelOutOfRangeError(ParseError):
    code = "label-out-of-range"


class ConfigError(PartitionError):
    code = "invalid-config"


class UnknownCommandError(PartitionError):
    code = "unknown-command"
