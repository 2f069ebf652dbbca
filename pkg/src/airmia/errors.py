"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An operation received arguments outside its contract."""


class InvalidConfigError(ValueError):
    """A configuration document or object is inconsistent or out of range."""


class ArtifactError(RuntimeError):
    """A persisted artifact is missing, corrupt, or of an unknown version."""


class PipelineStageError(RuntimeError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
