"""Integer indices of families of 2pi-periodic linear Hamiltonian systems.

The library computes and cross-validates four integers attached to a
one-parameter family of linear periodic Hamiltonian systems: the winding
number of the monodromy determinant field, the spectral flows of the
differential-operator and variational-Hessian truncations, and the
Conley-Zehnder index of the monodromy path.  It also ships the
Sturm-chain winding formula for homogeneous analytic germs and
bifurcation tooling for two-parameter and nonlinear families.
"""

from .bifurcation import (
    BifurcationCandidate,
    CandidateScan,
    NoBranch,
    OrbitBranch,
    PathRestrictedFamily,
    candidate_scan,
    d_gamma,
    disconnection_report,
    newton_orbit,
)
from .errors import (
    AdmissibilityError,
    ConfigError,
    DegenerateCrossingError,
    DegenerateCurveError,
    DegeneratePathError,
    EndpointDegenerateError,
    EvalError,
    EverywhereDegenerateError,
    ExpressionError,
    FamilyValidationError,
    HamindexError,
    NewtonError,
    NumericalError,
    ParseError,
    RefinementExhaustedError,
    StepCeilingError,
)
from .expressions import evaluate, parse_expression, to_text
from .families import BUILTIN_FAMILIES, NONLINEAR_BUILTINS, builtin, random_trig_family
from .integrator import (
    FundamentalSolution,
    fundamental_solution,
    fundamental_solutions,
    standard_symplectic_matrix,
    symplectic_residual,
)
from .model import (
    Circle,
    CoefficientFamily,
    Interval,
    NonlinearFamily,
    ParameterPath,
    Rectangle,
    eval_S,
    validate_family,
)
from .monodromy import (
    MonodromyField,
    kernel_scan,
    lambda_matrix,
    monodromy_index,
    rho,
)
from .spectral import (
    FourierTruncation,
    GalerkinAssembly,
    assemble_A,
    assemble_A_complex,
    assemble_L,
    default_cutoff,
    spectral_flow,
    spectral_flow_along,
)
from .sturm import (
    HomogeneousPair,
    Poly,
    SturmChain,
    homogeneous_index,
    infinity_sign_changes,
    isolated_zero_check,
    oracle_winding,
    sturm_chain,
)
from .symplectic import (
    Crossing,
    SymplecticPath,
    conley_zehnder,
    crossing_signature,
    find_crossings,
    symplectic_path,
)
from .theorem import IndexReport, theorem_check
from .winding import WindingResult, rectangle_curve, winding_number

__version__ = "0.1.0"
