"""Principal eigenvalue of the linearization around semi-trivial states.

The eigenproblem  D psi + q * psi = sigma * psi  (D the dispersal operator
built on profile R, q the growth potential) is self-adjoint in the inner
product weighted by 1/R. Substituting phi = psi / sqrt(R) turns it into a
standard symmetric tridiagonal problem, solved by power iteration on the
inverse of the positive definite shift (s*I - H) with s above the spectrum.
Each iterate is one Thomas solve, and the iteration preserves positivity,
so it converges to the principal pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import get_lapack_funcs

from .errors import ConfigurationError, ConvergenceError
from .grid import Field, as_field
from .operators import DiffusionOperator

_gttrf, _gttrs = get_lapack_funcs(("gttrf", "gttrs"), (np.zeros(3),))

#: Below this magnitude the principal eigenvalue is reported as neutral.
NEUTRAL_TOL = 1e-8


@dataclass(frozen=True)
class EigenResult:
    """Principal eigenpair: psi is positive and normalized so that the
    quadrature of psi^2 / R equals one."""

    sigma1: float
    psi: Field
    iterations: int
    residual: float

    def is_neutral(self) -> bool:
        return abs(self.sigma1) < NEUTRAL_TOL


def _symmetrized_bands(op: DiffusionOperator, potential: Field) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of H = S^-1 (D + diag(q)) S, S = diag(sqrt(R))."""
    R = op.P
    off = op.sup[:-1] * np.sqrt(R[1:] / R[:-1])
    diag = op.diag + potential
    return diag, off


def principal_eigen(
    op: DiffusionOperator,
    potential: Field,
    R: Field,
    tol: float = 1e-12,
    max_iter: int = 100_000,
) -> EigenResult:
    """Largest eigenvalue and positive eigenfunction of D + diag(potential).

    R must be the dispersal profile the operator was built with; it defines
    the weighted inner product and the eigenfunction normalization.
    """
    R = as_field(R, op.grid)
    potential = as_field(potential, op.grid)
    if not np.array_equal(R, op.P):
        raise ConfigurationError("R must be the dispersal profile of the operator")

    diag, off = _symmetrized_bands(op, potential)
    # any shift above max(potential) clears the spectrum: the dispersal part
    # is negative semidefinite, so sigma1 <= max(potential)
    shift = float(np.max(potential)) + 1.0
    dl_f, d_f, du_f, du2, ipiv, info = _gttrf(-off, shift - diag, -off)
    if info != 0:
        raise ConvergenceError("failed to factor the shifted eigenproblem")

    phi = np.sqrt(R)
    phi /= np.linalg.norm(phi)
    rho_prev = math.inf
    rho = 0.0
    for k in range(1, max_iter + 1):
        phi, info = _gttrs(dl_f, d_f, du_f, du2, ipiv, phi)
        if info != 0:
            raise ConvergenceError("shifted eigenproblem solve failed")
        phi /= np.linalg.norm(phi)
        # Rayleigh quotient of the symmetrized operator
        h_phi = diag * phi
        h_phi[:-1] += off * phi[1:]
        h_phi[1:] += off * phi[:-1]
        rho = float(phi @ h_phi)
        if abs(rho - rho_prev) <= tol * max(1.0, abs(rho)):
            break
        rho_prev = rho
    else:
        residual = float(np.linalg.norm(h_phi - rho * phi))
        raise ConvergenceError(
            f"power iteration did not converge in {max_iter} iterations "
            f"(Rayleigh residual {residual:.3e})"
        )

    residual = float(np.linalg.norm(h_phi - rho * phi))
    phi = np.abs(phi)  # iterates keep one sign; fix it to the positive one
    phi /= math.sqrt(op.grid.h * float(phi @ phi))
    psi = phi * np.sqrt(R)
    return EigenResult(sigma1=rho, psi=psi, iterations=k, residual=residual)


def rayleigh_lower_bound(
    op: DiffusionOperator,
    potential: Field,
    R: Field,
    trial: Field,
) -> float:
    """Rayleigh quotient of a trial field; never exceeds sigma1.

    Matches the variational form: flux energy of trial/R against the face
    diffusivities plus the potential term, over the weighted norm.
    """
    R = as_field(R, op.grid)
    potential = as_field(potential, op.grid)
    trial = as_field(trial, op.grid)
    if not np.array_equal(R, op.P):
        raise ConfigurationError("R must be the dispersal profile of the operator")
    if not np.any(trial != 0):
        raise ConfigurationError("trial field must be nonzero")

    h = op.grid.h
    g = trial / R
    a_face = 0.5 * (op.a[:-1] + op.a[1:])
    flux_energy = float(np.sum(a_face * np.diff(g) ** 2)) / h
    weighted_sq = trial**2 / R
    num = -flux_energy + h * float(np.sum(potential * weighted_sq))
    den = h * float(np.sum(weighted_sq))
    return num / den
