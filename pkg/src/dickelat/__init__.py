"""Exact diagonalization of the Dicke model in Fock and displaced-shell bases,
with per-state convergence certificates, Peres lattices and chaos diagnostics."""

from .basis import BasisIndex, BasisSpec, enumerate_basis
from .hamiltonian import (
    ModelParams,
    SymmetricMatrix,
    build_coherent,
    build_coherent_parity,
    build_fock,
    build_tc_block,
)
from .observables import (
    ConvergenceReport,
    delta_p,
    expectation,
    parity_expectation,
    parity_labels,
    peres_matrix,
)
from .pipeline import RunConfig, run, sweep
from .solver import Spectrum, eigh, residuals

__all__ = [
    "BasisIndex",
    "BasisSpec",
    "ConvergenceReport",
    "ModelParams",
    "RunConfig",
    "Spectrum",
    "SymmetricMatrix",
    "build_coherent",
    "build_coherent_parity",
    "build_fock",
    "build_tc_block",
    "delta_p",
    "eigh",
    "enumerate_basis",
    "expectation",
    "parity_expectation",
    "parity_labels",
    "peres_matrix",
    "residuals",
    "run",
    "sweep",
]

__version__ = "0.1.0"
