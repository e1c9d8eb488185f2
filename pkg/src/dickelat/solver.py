"""Full dense real-symmetric eigendecomposition with an auditable accuracy report.

The heavy lifting is delegated to LAPACK through scipy; the contract here is
the residual bound (max ||H v - E v|| <= 1e-10 ||H||_F) and the orthonormality
defect (<= 1e-10), both recorded on every Spectrum.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import BasisSpec
from .errors import SolverError
from .hamiltonian import SymmetricMatrix

RESIDUAL_BOUND = 1e-10
ORTHO_BOUND = 1e-10


@dataclass
class ResidualReport:
    max_residual: float
    max_ortho_defect: float
    h_frobenius: float

    def within_bounds(self):
        return (
            self.max_residual <= RESIDUAL_BOUND * self.h_frobenius
            and self.max_ortho_defect <= ORTHO_BOUND
        )


@dataclass
class Spectrum:
    """Ascending eigenvalues with the orthonormal eigenvector matrix (column k
    pairs with energy k) and the solver accuracy report."""

    energies: np.ndarray
    vectors: np.ndarray
    basis: BasisSpec | None
    residual_report: ResidualReport

    @property
    def dim(self):
        return self.energies.size


def _fix_signs(vectors, rel_tol=1e-12):
    """Deterministic gauge: make the first non-negligible component of every
    column positive (ties inside degenerate clusters become reproducible)."""
    scale = np.abs(vectors).max(axis=0)
    mask = np.abs(vectors) > rel_tol * scale[None, :]
    first = mask.argmax(axis=0)
    signs = np.sign(vectors[first, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    vectors *= signs[None, :]
    return vectors


def residual_report_for(hmat: np.ndarray, energies, vectors) -> ResidualReport:
    h_frob = float(np.linalg.norm(hmat))
    resid = hmat @ vectors - vectors * energies[None, :]
    max_resid = float(np.sqrt((resid**2).sum(axis=0)).max())
    gram = vectors.T @ vectors
    gram[np.diag_indices_from(gram)] -= 1.0
    max_ortho = float(np.abs(gram).max())
    return ResidualReport(max_resid, max_ortho, h_frob)


def eigh(matrix: SymmetricMatrix, driver="evd") -> Spectrum:
    """All eigenpairs of a SymmetricMatrix, ascending, with sign-fixed vectors.

    Raises SolverError if the LAPACK iteration fails to converge.
    """
    try:
        energies, vectors = scipy.linalg.eigh(
            matrix.data, driver=driver, check_finite=False
        )
    except scipy.linalg.LinAlgError as exc:
        raise SolverError(
            f"dense eigensolver ({driver}, dim={matrix.dim}) did not converge: {exc}"
        ) from exc
    vectors = _fix_signs(vectors)
    report = residual_report_for(matrix.data, energies, vectors)
    return Spectrum(energies, vectors, matrix.basis, report)


def residuals(matrix: SymmetricMatrix, spectrum: Spectrum) -> ResidualReport:
    """Recompute the accuracy report for `spectrum` against `matrix`."""
    if matrix.dim != spectrum.dim:
        raise ValueError("matrix and spectrum dimensions differ")
    return residual_report_for(matrix.data, spectrum.energies, spectrum.vectors)
