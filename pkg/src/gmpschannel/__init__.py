"""Transmission rates of Gaussian bosonic memory channels with GMPS inputs."""

from .capacity import RateReport, coherent_rate, g_entropy, gaussian_capacity, optimal_input_spectrum
from .core import (
    BelowThreshold,
    BlockCovariance,
    ChannelConfig,
    Custom,
    Gibbs,
    Markov,
    NonMarkov,
    NumericalError,
    QuadratureSpectrum,
    UnsupportedNoise,
    assemble_full,
    validate_quantum,
)
from .gmps_build import (
    BuildingBlock,
    assemble_gmps,
    building_block_cm,
    convergence_study,
    extract_phi_in,
    phi_in_from_squeezing,
    squeezing_for_phi_in,
    squeezing_to_db,
)
from .gmps_rate import (
    approx_phi_in,
    feasible_phi_max,
    optimize_phi_in,
    rate_ratio_sweep,
    stationarity_residual,
)
from .gibbs import HarmonicChainNoise, verify_exact_optimality
from .spectra import (
    gmps_general_spectrum,
    gmps_nn_spectrum,
    input_threshold,
    markov_spectrum,
    mean_noise_energy,
    noise_spectrum,
    nonmarkov_spectrum,
)

__version__ = "0.1.0"
