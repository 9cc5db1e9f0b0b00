"""Dense symmetric/positive-definite linear algebra for the strategy solver.

Everything here operates on small dense matrices (portfolio-scale, N <= 100).
Square roots go through the symmetric eigendecomposition, which yields the
unique symmetric PD root and lets us invert by taking reciprocal eigenvalues
instead of a general matrix inverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite, NotSymmetric, SingularSystem

SYMMETRY_TOL = 1e-12
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class SymmetricPDMatrix:
    """A validated symmetric positive-definite matrix with its eigendecomposition.

    Construct through :func:`validate_pd`; the stored eigenpairs are reused by
    pd_sqrt / inverse roots so each matrix is factored exactly once.
    """

    values: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def _rebuild(self, eigenvalues: np.ndarray) -> "SymmetricPDMatrix":
        v = self.eigenvectors
        m = (v * eigenvalues) @ v.T
        m = 0.5 * (m + m.T)
        return SymmetricPDMatrix(m, eigenvalues, v)

    def sqrt(self) -> "SymmetricPDMatrix":
        return self._rebuild(np.sqrt(self.eigenvalues))

    def inv(self) -> "SymmetricPDMatrix":
        return self._rebuild(1.0 / self.eigenvalues)

    def inv_sqrt(self) -> "SymmetricPDMatrix":
        return self._rebuild(1.0 / np.sqrt(self.eigenvalues))


def _as_square(matrix) -> np.ndarray:
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


def validate_pd(matrix, tol: float = SYMMETRY_TOL) -> SymmetricPDMatrix:
    """Validate symmetry and positive definiteness, returning the wrapper.

    Asymmetry below ``tol`` (relative, max |A_ij - A_ji| / (1 + max|A|)) is
    repaired by averaging A with its transpose.  The smallest eigenvalue must
    exceed ``dim * 1e-12 *`` largest eigenvalue.
    """
    a = _as_square(matrix)
    scale = 1.0 + np.max(np.abs(a))
    asym = np.abs(a - a.T)
    if asym.size and asym.max() / scale > tol:
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        raise NotSymmetric(
            f"entries ({i},{j})/({j},{i}) differ by {asym[i, j]:.3e} "
            f"(relative {asym[i, j] / scale:.3e} > tol {tol:.3e})"
        )
    a = 0.5 * (a + a.T)
    w, v = np.linalg.eigh(a)
    if w[0] <= a.shape[0] * 1e-12 * w[-1] or w[0] <= 0.0:
        k = int(np.argmin(w))
        raise NotPositiveDefinite(f"eigenvalue {k} is {w[k]:.6e} (largest {w[-1]:.6e})")
    return SymmetricPDMatrix(a, w, v)


def pd_sqrt(matrix: SymmetricPDMatrix) -> SymmetricPDMatrix:
    """Unique symmetric PD square root via eigenvalue-wise square root."""
    return matrix.sqrt()


def rate_matrix(
    kappa: float,
    lam: SymmetricPDMatrix,
    omega: SymmetricPDMatrix,
    residual_tol: float = RESIDUAL_TOL,
) -> np.ndarray:
    """Stable rate matrix G with G @ G = kappa * inv(lam) @ omega.

    Computed through the symmetrized route
    ``inv_sqrt(lam) @ pd_sqrt(kappa * inv_sqrt(lam) @ omega @ inv_sqrt(lam)) @ sqrt(lam)``
    so only symmetric PD matrices are ever square-rooted.  The risk-aversion
    factor sits inside the square root, which is the placement consistent with
    the scalar reduction sqrt(kappa * sigma^2 / lam).
    """
    if kappa <= 0.0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if lam.dim != omega.dim:
        raise DimensionMismatch(f"impact dim {lam.dim} != covariance dim {omega.dim}")
    lam_is = lam.inv_sqrt().values
    lam_s = lam.sqrt().values
    inner = validate_pd(kappa * lam_is @ omega.values @ lam_is, tol=1e-10)
    gamma = lam_is @ inner.sqrt().values @ lam_s
    resid = lam.values @ gamma @ gamma - kappa * omega.values
    rel = np.linalg.norm(resid) / (kappa * np.linalg.norm(omega.values))
    if rel > residual_tol:
        raise SingularSystem(f"rate-matrix residual {rel:.3e} exceeds {residual_tol:.1e}")
    return gamma


def _spectrum_positive(a: np.ndarray) -> bool:
    return bool(np.all(np.linalg.eigvals(a).real > 0.0))


def solve_sylvester(a, b, c, residual_tol: float = RESIDUAL_TOL) -> np.ndarray:
    """Solve a X + X b = c for spectra of a, b in the open right half-plane.

    Equivalently evaluates the convergent integral of expm(-a u) c expm(-b u)
    over u in [0, inf).  Scalars are accepted and handled as 1x1 systems.
    """
    a = _as_square(a)
    b = _as_square(b)
    c = np.atleast_2d(np.asarray(c, dtype=float))
    if c.shape != (a.shape[0], b.shape[0]):
        raise DimensionMismatch(
            f"rhs shape {c.shape} incompatible with ({a.shape[0]}, {b.shape[0]})"
        )
    if not (_spectrum_positive(a) and _spectrum_positive(b)):
        raise SingularSystem("operand spectrum not in the open right half-plane")
    x = scipy.linalg.solve_sylvester(a, b, c)
    resid = np.linalg.norm(a @ x + x @ b - c)
    denom = np.linalg.norm(c)
    if denom > 0.0 and resid / denom > residual_tol:
        raise SingularSystem(f"sylvester residual {resid / denom:.3e} exceeds {residual_tol:.1e}")
    return x
