"""Finite-volume solvers for special relativistic hydrodynamics."""

from .state import (
    DEN,
    ENE,
    MX,
    MY,
    PRE,
    RHO,
    VX,
    VY,
    AdmissibilityError,
    DomainError,
    EosConfig,
    RootSolveError,
    ThermoQuantities,
    admissibility_margin,
    cons_to_prim,
    flux,
    is_admissible,
    lorentz_factor,
    prim_to_cons,
    sound_speed,
    thermo,
)

__all__ = [
    "RHO",
    "VX",
    "VY",
    "PRE",
    "DEN",
    "MX",
    "MY",
    "ENE",
    "DomainError",
    "AdmissibilityError",
    "RootSolveError",
    "EosConfig",
    "ThermoQuantities",
    "lorentz_factor",
    "thermo",
    "sound_speed",
    "prim_to_cons",
    "admissibility_margin",
    "is_admissible",
    "cons_to_prim",
    "flux",
]
