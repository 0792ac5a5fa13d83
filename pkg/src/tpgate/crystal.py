"""Classical equilibrium of a linear ion crystal.

Positions are dimensionless, ``u_n = z_n / l`` with
``l = (e^2 / (4 pi eps0 M w_z^2))**(1/3)``.  In these units the axial force
on ion ``j`` is ``u_j - sum_{n != j} sign(u_j - u_n) / (u_j - u_n)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .errors import SolverFailure, ValidationError

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class TrapConfig:
    """Trap and thermal parameters in simulation units (w_z = 1).

    ``eta_ref`` is the Lamb-Dicke parameter of a mode at frequency w_z;
    a mode at frequency w has ``eta = eta_ref / sqrt(w)``.
    """

    n_ions: int = 10
    beta_x: float = 10.0
    eta_ref: float = 0.1
    nbar_cm: float = 3.0

    def __post_init__(self):
        if int(self.n_ions) != self.n_ions or self.n_ions < 1:
            raise ValidationError(f"n_ions must be a positive integer, got {self.n_ions!r}")
        if not self.beta_x > 0:
            raise ValidationError(f"beta_x must be positive, got {self.beta_x!r}")
        if not self.eta_ref > 0:
            raise ValidationError(f"eta_ref must be positive, got {self.eta_ref!r}")
        if not self.nbar_cm >= 0:
            raise ValidationError(f"nbar_cm must be non-negative, got {self.nbar_cm!r}")

    @property
    def tau0(self):
        """Axial trap period 2*pi/w_z in internal time units."""
        return 2.0 * math.pi


@dataclass(frozen=True)
class IonChain:
    positions: np.ndarray
    residual_norm: float
    iterations: int = 0

    @property
    def n_ions(self):
        return len(self.positions)


def force_residual(u):
    """Dimensionless axial force on every ion at positions ``u``."""
    u = np.asarray(u, dtype=float)
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return u - np.sum(np.sign(d) / d**2, axis=1)


def _force_jacobian(u):
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    jac = -2.0 / d**3
    np.fill_diagonal(jac, 1.0 + np.sum(2.0 / d**3, axis=1))
    return jac


def _initial_guess(n):
    # minimum spacing of a long chain scales roughly as 2.018 / n**0.559
    spacing = 2.018 / n**0.559 if n > 2 else 1.26
    return (np.arange(n) - 0.5 * (n - 1)) * spacing


def solve_equilibrium(n_ions, tol=RESIDUAL_TOL, max_iter=200):
    """Equilibrium positions of ``n_ions`` ions in a harmonic axial well.

    Damped Newton iteration on the force balance with the analytic
    Jacobian; the step is halved until the residual decreases.  The result
    is symmetrised about the origin.
    """
    if int(n_ions) != n_ions or n_ions < 1:
        raise ValidationError(f"n_ions must be a positive integer, got {n_ions!r}")
    n = int(n_ions)
    if n == 1:
        return IonChain(np.zeros(1), 0.0, 0)

    u = _initial_guess(n)
    res = force_residual(u)
    norm = np.max(np.abs(res))
    for it in range(1, max_iter + 1):
        step = np.linalg.solve(_force_jacobian(u), res)
        lam = 1.0
        while True:
            trial = u - lam * step
            if np.all(np.diff(trial) > 0):
                trial_res = force_residual(trial)
                trial_norm = np.max(np.abs(trial_res))
                if trial_norm < norm or lam < 1e-6:
                    break
            lam *= 0.5
            if lam < 1e-12:
                raise SolverFailure("line search failed in equilibrium solver", residual=norm)
        u, res, norm = trial, trial_res, trial_norm
        if norm <= 0.01 * tol:
            break
    # exact mirror symmetry, then one polishing step
    u = 0.5 * (u - u[::-1])
    res = force_residual(u)
    norm = float(np.max(np.abs(res)))
    if norm > tol:
        raise SolverFailure(f"equilibrium solver did not converge (residual {norm:.3e})", residual=norm)
    return IonChain(u, norm, it)


def length_scale(mass, omega_z):
    """Ion-spacing length scale in metres for ion mass (kg) and axial angular frequency (rad/s)."""
    if not mass > 0 or not omega_z > 0:
        raise ValidationError("mass and omega_z must be positive")
    k = constants.e**2 / (4.0 * math.pi * constants.epsilon_0)
    return (k / (mass * omega_z**2)) ** (1.0 / 3.0)


def critical_beta(n_ions):
    """Empirical transverse/axial ratio above which the chain stays linear."""
    return 0.73 * n_ions**0.86


def linearity_check(config):
    """Return ``(is_linear, margin)`` with ``margin = beta_x - 0.73 N^0.86``."""
    margin = config.beta_x - critical_beta(config.n_ions)
    return (config.n_ions == 1 or margin > 0), margin
