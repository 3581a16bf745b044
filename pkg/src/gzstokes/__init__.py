"""Stokes data of irregular connections and the Gelfand-Zeitlin compatible map ``Gamma``."""

from .config import DEFAULT, Tolerances
from .connection import (
    ConnectionSpec,
    SolverConfig,
    StokesData,
    check_nonresonant,
    connection_matrix,
    connection_matrix_oracle,
    default_sector,
    h_infinity_series,
    stokes_factors,
    stokes_rays,
)
from .errors import GZError
from .gz import (
    GZChainConfig,
    GZPattern,
    composite_c,
    cone_margin,
    gamma,
    gz_map,
    log_gz_map,
    principal_submatrix,
    torus_action,
)

__all__ = [
    "DEFAULT",
    "Tolerances",
    "ConnectionSpec",
    "SolverConfig",
    "StokesData",
    "check_nonresonant",
    "connection_matrix",
    "connection_matrix_oracle",
    "default_sector",
    "h_infinity_series",
    "stokes_factors",
    "stokes_rays",
    "GZError",
    "GZChainConfig",
    "GZPattern",
    "composite_c",
    "cone_margin",
    "gamma",
    "gz_map",
    "log_gz_map",
    "principal_submatrix",
    "torus_action",
]
