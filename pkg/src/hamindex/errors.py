"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration and input validation
problems exit with 2, admissibility failures with 3, numerical failures
(refinement exhaustion, Newton stagnation, step ceilings) with 4.  Every
error carries a machine-readable ``reason`` tag used in JSON reports.
"""


class HamindexError(Exception):
    """Base class for all package errors."""

    reason = "error"


class ExpressionError(HamindexError):
    reason = "expression"


class ParseError(ExpressionError):
    """Syntax or name error while parsing an expression, with byte offset."""

    reason = "parse"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalError(ExpressionError):
    """Evaluation left the real domain (division by zero, sqrt of a negative)."""

    reason = "evaluation"


class ConfigError(HamindexError):
    reason = "config"


class FamilyValidationError(HamindexError):
    reason = "family-invalid"


class AdmissibilityError(HamindexError):
    reason = "not-admissible"


class EndpointDegenerateError(AdmissibilityError):
    reason = "endpoint degenerate"


class EverywhereDegenerateError(AdmissibilityError):
    reason = "everywhere-degenerate"


class DegeneratePathError(AdmissibilityError):
    reason = "degenerate-path"


class NumericalError(HamindexError):
    reason = "numerical"


class StepCeilingError(NumericalError):
    """Integrator hit the step ceiling before meeting the error tolerance."""

    reason = "integrator-step-ceiling"

    def __init__(self, message: str, achieved_estimate: float):
        super().__init__(message)
        self.achieved_estimate = achieved_estimate


class DegenerateCurveError(NumericalError):
    reason = "degenerate-curve"


class RefinementExhaustedError(NumericalError):
    reason = "refinement-exhausted"


class DegenerateCrossingError(NumericalError):
    reason = "degenerate-crossing"


class NewtonError(NumericalError):
    reason = "newton-stagnation"
