"""Exception types shared across the pipeline."""


class PipelineError(Exception):
    """Base class for recoverable pipeline failures (bad inputs, missing files)."""


class SchemaError(PipelineError):
    """Input file does not match the documented schema."""


class InsufficientDataError(PipelineError):
    """A worker or dataset is too small for the requested computation."""
