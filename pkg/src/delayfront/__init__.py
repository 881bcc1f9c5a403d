"""Semi-wavefronts of the delayed Fisher-KPP equation: profiles, certificates, evolution."""
from ._backend import BACKEND
from .dispersion import (
    Certificate,
    InfeasibleCertificateError,
    Params,
    SubcriticalSpeedError,
    certify_stability,
    char_roots,
    kappa_crit,
    q_eval,
    region_classify,
    region_map,
    uniqueness_threshold,
)
from .evolution import CFLError, EvolutionConfig, NumericalAbort, linearized_run, run
from .grid import Field, Grid
from .norms import fit_decay_rate, m_function_check, verify_iterative_bound, weighted_norm
from .picard import KernelTable, heat_convolve, lipschitz_growth_check, picard_solve
from .profile import (
    Profile,
    ProfileError,
    TailFit,
    align_profiles,
    compute_profile,
    integrate_steps,
    relax_profile,
    tail_fit,
    tail_init,
)

__version__ = "0.1.0"
