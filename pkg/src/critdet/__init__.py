"""Verified enclosures of Cohn's critical-determinant function for |x|^p + |y|^p < 1."""

__version__ = "0.1.0"

from .cohn import (
    Box,
    DerivativeSet,
    TauEnclosure,
    delta_endpoints,
    delta_enclose,
    derivatives_enclose,
    g_enclose,
    h_enclose,
    l0_enclose,
    l1_enclose,
    minkowski_constant,
    sigma_p,
    tau_enclose,
    tau_p_enclose,
)
from .errors import (
    ConvergenceError,
    DomainError,
    InconsistencyError,
    InvalidRegion,
    OracleError,
    SingularityError,
)
from .interval import Interval
from .oracle import OracleConfig, delta_point, fd_derivative, min_parallelogram_area, tau_point
from .verifier import (
    NoRootEvidence,
    RootEnclosure,
    SignCertificate,
    SignClaim,
    VerifyConfig,
    enclose_root,
    prove_sign,
    replay,
    verify_mas_part,
)

