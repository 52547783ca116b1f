"""Certified exponential decay rates for Lur'e loops via rho-IQCs and the KYP lemma."""

from .certify import CertificateResult, certify_at, minimize_rho, sweep_gain
from .errors import (
    AlgebraicLoopError,
    PreconditionError,
    RhoIqcError,
    RhoValidityError,
    SingularityError,
)
from .iqc import (
    IqcFactorization,
    NonlinearityModel,
    StackedIqc,
    make_norm_bounded,
    make_off_by_k,
    make_sector,
    make_zames_falb_fir,
    pi_eval,
    stack,
    time_domain_check,
    validate_rho_zf,
)
from .kyp import AffineMatrixInequality, AugmentedSystem, build_augmented, build_lmi, grid_fdi_check
from .lmi import FeasibilityResult, max_eig_sym, solve_feasibility
from .lti import (
    StateSpace,
    TransferFunction,
    is_minimal,
    linearized_closed_loop,
    spectral_radius,
    ss_eval,
    ss_from_tf,
    ss_scale_rho,
)
from .simulate import Trajectory, fit_decay_rate, simulate

__version__ = "0.1.0"
