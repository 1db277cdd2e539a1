"""Monte-Carlo achievable-rate bounds for coherent impulse-radio UWB links
with impulsive multi-user interference.

The library estimates a random-coding lower bound (threshold decoding on the
pairwise codeword overlap) and a genie-aided mutual-information upper bound
for a binary duty-cycled PPM-style link whose interferers share the same
radio. All randomness is counter-based: results are reproducible bit-for-bit
from a single seed regardless of worker count.
"""

from .bounds import (BoundEstimate, DistanceDistribution, ErrorProbabilityBound,
                     LowerBoundProfile, distance_distribution, draw_h1,
                     error_probability_bound, estimate_pd, estimate_theta,
                     lower_bound, upper_bound)
from .cli import ResultRow, figure_ratios, read_result_csv, run_sweep, sweep_points
from .config import (PRESETS, ConfigError, SweepSpec, effective_config,
                     load_config, spec_from_mapping)
from .gaussian import (OracleEstimate, OutputDistribution, log_density,
                       log_density_dense, oracle_J, output_moments, overlap_J,
                       overlap_J_dense)
from .mc import (LogAccumulator, gaussian_ci, lognormal_ci, normal_qq_corr,
                 pairwise_logsumexp, substream)
from .model import (H1_MODES, InvalidParameterError, ScenarioConfig,
                    TapCovariance, build_tap_covariance, pulse_amplitude,
                    received_power, sample_channel, sample_symbols,
                    simulate_output)

__version__ = "0.1.0"

__all__ = [
    "BoundEstimate", "ConfigError", "DistanceDistribution",
    "ErrorProbabilityBound", "H1_MODES", "InvalidParameterError",
    "LogAccumulator", "LowerBoundProfile", "OracleEstimate",
    "OutputDistribution", "PRESETS", "ResultRow", "ScenarioConfig",
    "SweepSpec", "TapCovariance", "build_tap_covariance",
    "distance_distribution", "draw_h1", "effective_config",
    "error_probability_bound", "estimate_pd", "estimate_theta",
    "figure_ratios", "gaussian_ci", "load_config", "log_density",
    "log_density_dense", "lognormal_ci", "lower_bound", "normal_qq_corr",
    "oracle_J", "output_moments", "overlap_J", "overlap_J_dense",
    "pairwise_logsumexp", "pulse_amplitude", "read_result_csv",
    "received_power", "run_sweep", "sample_channel", "sample_symbols",
    "simulate_output", "spec_from_mapping", "substream", "sweep_points",
    "upper_bound", "__version__",
]
