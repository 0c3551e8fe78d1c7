"""Exception hierarchy.

The CLI maps these to exit codes: ConfigError -> 1, DataError -> 2,
TrainingError -> 3.
"""


class CsxmlError(Exception):
    pass


class ConfigError(CsxmlError):
    """Invalid configuration or incompatible inputs."""


class DataError(CsxmlError):
    """Problems with input data files or their contents."""


class TrainingError(CsxmlError):
    """Model fitting failed or was given degenerate targets."""


# --- data errors -----------------------------------------------------------

class EmptyFile(DataError):
    pass


class MissingColumn(DataError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"missing column: {column!r}")


class UnparsableValue(DataError):
    def __init__(self, row, column, value):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"unparsable value {value!r} at row {row}, column {column!r}")


class UnknownClassName(DataError):
    pass


class SeriesTooShort(DataError):
    pass


class SingleClassDataset(DataError):
    pass


class LeakageError(DataError):
    """A training-only transform received rows tagged as test data."""


# --- model/usage errors ----------------------------------------------------

class ArityMismatch(ConfigError):
    pass


class SchemaMismatch(ConfigError):
    pass


class InvalidDistribution(ConfigError):
    pass


class PartitionMismatch(ConfigError):
    pass


class EmptyNode(ConfigError):
    pass


class EmptyDataset(TrainingError):
    pass


class DegenerateTargets(TrainingError):
    pass


class NonFinite(TrainingError):
    pass


class EmptyCounts(ConfigError):
    pass


class LengthMismatch(ConfigError):
    pass


class EmptyInput(ConfigError):
    pass


class SingleClassLabels(ConfigError):
    pass


class NoSuchSample(ConfigError):
    pass


class IncompleteRun(ConfigError):
    def __init__(self, stage):
        self.stage = stage
        super().__init__(f"missing output of stage: {stage}")
