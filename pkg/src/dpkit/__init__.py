"""Finite-element toolkit for double-phase problems with variable exponents.

The package discretizes the operator

    u -> -div( |grad u|^{p(x)-2} grad u + mu(x) |grad u|^{q(x)-2} grad u )

with P1 finite elements, provides the Musielak-Orlicz modular/norm machinery
behind it, checks the structural hypotheses on the exponents, and solves the
associated equations (with and without convection terms) together with the
first eigenvalue problems used by the solvability margins.
"""

from .eigen import (
    EigenResult,
    coercivity_margin,
    first_eigenvalue,
    mass_matrix,
    rayleigh_quotient,
    stiffness_matrix,
    uniqueness_margin,
)
from .errors import ConfigError, DpkitError, NumericError, PreconditionError
from .fem import (
    DiscreteFunction,
    Mesh,
    Quadrature,
    build_interval_mesh,
    build_rect_mesh,
    integrate,
    interpolate,
)
from .fields import (
    ConditionCheck,
    ConditionReport,
    DoublePhase,
    ScalarField,
    check_A1_characterization,
    check_A1_sufficient,
    check_condition_H,
    check_condition_Hpp,
    check_condition_Hprime,
    check_condition_base,
    constant_phase,
    critical_exponent,
    critical_exponent_field,
    estimate_holder,
    estimate_log_holder,
    field_bounds,
)
from .modular import (
    LuxemburgResult,
    ModularReport,
    NormModularReport,
    check_norm_modular,
    luxemburg_norm,
    luxemburg_report,
    modular,
    modular_sobolev,
    poincare_ratio,
    reverse_holder_check,
    sobolev_conjugate_inverse,
    truncate,
    uniform_convexity_probe,
    weighted_seminorm,
)
from .operator import (
    DualBoundResult,
    SimonResult,
    apply_operator,
    assemble_jacobian,
    assemble_load,
    assemble_residual,
    boundedness_estimate,
    energy,
    gradient_check,
    monotonicity_probe,
    simon_inequality,
)
from .problems import (
    ManufacturedCase,
    case_names,
    growth_example_term,
    manufactured_case,
)
from .solve import (
    ConvectionTerm,
    SolveReport,
    SolverOptions,
    UniquenessReport,
    check_growth,
    solve_convection,
    solve_monotone,
    verify_uniqueness,
    weak_residual,
)

__version__ = "0.1.0"
