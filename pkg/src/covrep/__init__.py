"""Numerical checks and constructions for covariance relations AB = B F(A)
between integral and differential operators on an interval."""

from .checks import (
    DEFAULT_TOL,
    ResidualReport,
    SupportReport,
    covariance_defect,
    residual_direct,
    residual_eq3,
    residual_eq4,
    residual_eq5,
    residual_eq14,
    support_sets,
)
from .constructors import (
    ConstructionParams,
    OdeProfile,
    Xi0Outcome,
    build_b_from_a,
    build_c_from_a,
    build_final_example,
    construct_case1_pair,
    construct_separable_representation,
    phi_gamma_xi,
    solve_xi0_closed_form,
    solve_xi0_general,
)
from .errors import (
    ConstructionError,
    CovrepError,
    GridMismatch,
    InfeasibleConstruction,
    InternalConsistencyError,
    InvalidArgument,
    NumericError,
    PreconditionError,
    UnsupportedBranch,
)
from .grid import FunctionSample, Grid, TestFamily, build_grid, make_test_family, sample
from .operators import (
    DenseKernel,
    DiffOp,
    IntegralOp,
    PolynomialSpec,
    SeparableKernel,
    apply,
    apply_poly,
    ba_n_expansion,
    iterate_kernel_derivative,
    iterate_kernel_integral,
    poly_kernel,
)

__version__ = "0.1.0"
