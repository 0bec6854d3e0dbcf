class ConeFlowsError(Exception):
    pass


class InvalidInputError(ConeFlowsError, ValueError):
    pass


class UnsupportedOrderError(InvalidInputError):
    pass


class DegenerateCurvatureError(InvalidInputError):
    pass


class BoundaryViolationError(ConeFlowsError):
    pass


class TipCollisionError(ConeFlowsError):
    pass


class StepperFailureError(ConeFlowsError):
    pass


class SchemaVersionError(ConeFlowsError):
    pass


class InvalidConfigError(ConeFlowsError):
    def __init__(self, errors: list[str]) -> None:
        super().__init__("; ".join(errors))
        self.errors = errors


class RunAbortedError(ConeFlowsError):
    # the partial series survives the abort so it can still be written out
    def __init__(self, cause: ConeFlowsError, result) -> None:
        super().__init__(f"run aborted at t={result.state.time:.6g}: {cause}")
        self.cause = cause
        self.result = result
