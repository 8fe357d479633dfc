"""Pseudospectral simulation and verification harness for the generalized
derivative nonlinear Schrodinger equation on the circle."""

from .integrator import SolverConfig, Termination, Trajectory, duhamel_residual, evolve, step
from .invariants import InvariantRecord, energy, hamiltonian, mass, momentum
from .model import ModelParams, nonlinearity, rhs_mollified
from .spectral import Cutoff, SpectralField, free_semigroup, hs_norm, project, to_physical

__all__ = [
    "Cutoff",
    "InvariantRecord",
    "ModelParams",
    "SolverConfig",
    "SpectralField",
    "Termination",
    "Trajectory",
    "duhamel_residual",
    "energy",
    "evolve",
    "free_semigroup",
    "hamiltonian",
    "hs_norm",
    "mass",
    "momentum",
    "nonlinearity",
    "project",
    "rhs_mollified",
    "step",
    "to_physical",
]
