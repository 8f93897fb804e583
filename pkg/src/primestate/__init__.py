"""Prime-number states: sieves, Hardy-Littlewood constants, reduced density
matrices and their entanglement spectra."""

from .errors import DivergenceError, DomainError, RangeError
from .primes import PrimeTable, Verdict, is_prime, mertens, miller_rabin, mobius, sieve, totient
from .counting import CountingQuery, asymptotic_ratio, li, li2, pi, pi2, pi_ab, pi_abb
from .hardylittlewood import HLConstants, C, alpha_m, beta, euler_product, sum_C, sum_C2
from .statebuilder import (
    AmplitudeVector,
    DensityMatrix,
    PartitionMask,
    build_state,
    dirichlet_norm,
    mertens_overlap,
    psi_matrix,
    reduce_mask,
    rho_exact,
    rho_model,
    rho_odd,
    rho_truncated,
    toeplitz_C,
    toy_rho,
)
from .spectra import (
    ScalingFit,
    Spectrum,
    analytic_entropy,
    eig_sym,
    ent_spectrum,
    entropy_scaling_fit,
    majorization,
    model_spectrum,
    purity,
    random_partition_survey,
    renyi,
    trace_power_C,
    vn_entropy,
)

__version__ = "0.1.0"
