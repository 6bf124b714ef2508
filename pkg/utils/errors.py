class TabgraphError(Exception):
    """Base class for every error raised by tabgraph."""


class TableError(TabgraphError, ValueError):
    pass


class RaggedRowError(TableError):
    def __init__(self, line, expected, found):
        self.line = line
        self.expected = expected
        self.found = found
        super().__init__(
            f"Ragged row at line {line}: expected {expected} cells, found {found}"
        )


class MissingCellError(TableError):
    def __init__(self, row, column):
        self.row = row
        self.column = column
        super().__init__(f"Missing cell at row {row}, column '{column}'")


class FitError(TabgraphError, ValueError):
    pass


class GraphError(TabgraphError, ValueError):
    pass


class GraphFormatError(GraphError):
    def __init__(self, fmt, location, message):
        self.format = fmt
        self.location = location
        super().__init__(f"Malformed {fmt} input at {location}: {message}")


class SpectralError(TabgraphError, ValueError):
    pass


class CentralityError(TabgraphError, ValueError):
    pass


class PartitionError(TabgraphError, ValueError):
    pass


class EmbeddingError(TabgraphError, ValueError):
    pass


class ConfigError(TabgraphError, ValueError):
    pass


class StageError(TabgraphError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"Stage '{stage}' failed: {cause}")
