"""Inhomogeneous J-, empty-space, nearest-neighbour and K-statistics for planar point patterns."""

from .geometry import UNIT_SQUARE, Window, distance, erode, lattice_points
from .pattern import PointPattern, ThinningSpec, read_pattern, scale_pattern, thin_pattern, write_pattern
from .intensity import (
    Constant,
    ExponentialGradient,
    KernelEstimate,
    Raster,
    kernel_estimate,
    scale_intensity,
    thin_intensity,
)
from .simulate import (
    ExponentialCorrelation,
    GaussianFieldSpec,
    HardCoreSpec,
    sim_gaussian_field,
    sim_hardcore,
    sim_lgcp,
    sim_poisson,
    sim_thinned_hardcore,
)

from .estimate import (
    EstimateTable,
    EstimatorConfig,
    empty_space_functional_hat,
    envelope,
    j_inhom_hat,
    k_inhom_hat,
    nn_functional_hat,
    read_table,
    write_table,
)
from .moments import (
    CorrelationStack,
    NormalizedDensityStack,
    ci_weighted_j_oracle,
    j_second_order,
    j_series,
    lgcp_j_oracle,
    rho_from_xi,
    xi_from_rho,
)

__version__ = "0.1.0"
