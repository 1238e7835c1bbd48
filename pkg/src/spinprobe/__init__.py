"""Ancilla-assisted measurement of two-time spin correlations: exact dynamics,
Born-rule protocol statistics, correlation extraction and sampling error bars."""

__version__ = "0.1.0"

from .coupled import (
    CGPair,
    GammaTable,
    cg_coefficients,
    coupled_basis_matrix,
    coupled_basis_vector,
    coupling_unitary_coupled_diag,
    gamma_coefficients,
    j_populations,
    slow_variation_metric,
)
from .errors import (
    ConfigError,
    ContractViolation,
    ExtractionError,
    InvalidSpinError,
    LayoutError,
    SpinProbeError,
)
from .models import (
    ANCILLA_STATE,
    ModelSpec,
    heisenberg_two_spin,
    initial_state,
    maximally_magnetized_state,
    one_axis_twisting,
    ramp_state,
    uniform_state,
    with_ancilla,
)
from .oracle import (
    DeviationReport,
    exact_series,
    exact_two_time,
    ising_xx_closed_form,
    ising_zz_closed_form,
    normalized_correlation,
    systematic_deviation,
)
from .protocol import (
    CorrelationEstimate,
    OutcomeDistribution,
    ProtocolConfig,
    coupling_unitary,
    extract_correlation,
    lambdas_for,
    outcome_grid,
    response_model,
    run_protocol,
    script_c_direct,
    script_c_from_distribution,
    sweep,
)
from .sampling import (
    ErrorEstimate,
    SampleConfig,
    derive_rng,
    error_bars,
    estimate_script_c,
    sample_outcomes,
    sampled_extraction,
    sampled_sweep,
    scaling_exponent,
)
from .spin import (
    HalfInt,
    Operator,
    SiteLayout,
    SpinOps,
    StateVector,
    apply,
    evolution_unitary,
    expectation,
    kron,
    spin_operators,
    tensor_embed,
)
