"""Numerics for the Whittaker kernels of the open quantum Toda chain."""

from .errors import (
    BudgetExceeded,
    DegenerateInput,
    DimensionMismatch,
    NonConvergence,
    PoleError,
    PreconditionViolated,
    SmallDenominator,
    TailTooLarge,
    TodaSovError,
)
from .gammaplex import BACKEND, GammaProductSpec, LogComplex, eval_product, log_gamma
from .kernels import ChainParams
from .quadrature import ContourPlan, QuadResult
from .whittaker import Positions, Rapidities, phi_gg, phi_gg_recursive, phi_mb
from .transforms import IdentityReport, TestFunction, isometry_u, isometry_v, h_isometry
from .identities import CaseSpec, run_suite

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BudgetExceeded",
    "CaseSpec",
    "ChainParams",
    "ContourPlan",
    "DegenerateInput",
    "DimensionMismatch",
    "GammaProductSpec",
    "IdentityReport",
    "LogComplex",
    "NonConvergence",
    "PoleError",
    "Positions",
    "PreconditionViolated",
    "QuadResult",
    "Rapidities",
    "SmallDenominator",
    "TailTooLarge",
    "TestFunction",
    "TodaSovError",
    "eval_product",
    "h_isometry",
    "isometry_u",
    "isometry_v",
    "log_gamma",
    "phi_gg",
    "phi_gg_recursive",
    "phi_mb",
    "run_suite",
]
