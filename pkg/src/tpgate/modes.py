"""Harmonic normal modes of a linear chain along the axial and transverse axes."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .crystal import IonChain
from .errors import DegenerateChainError, InstabilityError, ValidationError


class Axis(str, enum.Enum):
    LONGITUDINAL = "z"
    TRANSVERSE = "x"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).lower()
        aliases = {"z": cls.LONGITUDINAL, "longitudinal": cls.LONGITUDINAL, "axial": cls.LONGITUDINAL,
                   "x": cls.TRANSVERSE, "transverse": cls.TRANSVERSE}
        try:
            return aliases[key]
        except KeyError:
            raise ValidationError(f"unknown axis {value!r}") from None


# Coulomb curvature coefficient per axis
_COULOMB_COEFF = {Axis.LONGITUDINAL: 2.0, Axis.TRANSVERSE: -1.0}


@dataclass(frozen=True)
class ModeTable:
    """Normal modes of one axis, sorted by descending frequency.

    ``eigenvalues`` are eigenvalues of the curvature matrix in units of
    w_z**2, so ``frequencies = sqrt(eigenvalues)`` in units of w_z.
    Column ``k`` of ``eigenvectors`` is mode ``k``; row ``j`` is ion ``j``.
    """

    axis: Axis
    eigenvalues: np.ndarray
    frequencies: np.ndarray
    eigenvectors: np.ndarray
    eta_ref: float = 1.0

    @property
    def n_modes(self):
        return len(self.eigenvalues)

    @property
    def lamb_dicke(self):
        return lamb_dicke_params(self, self.eta_ref)

    @property
    def cm_index(self):
        """Index of the centre-of-mass mode (highest for x, lowest for z)."""
        return 0 if self.axis is Axis.TRANSVERSE else self.n_modes - 1

    @property
    def cm_frequency(self):
        return float(self.frequencies[self.cm_index])

    def with_eta_ref(self, eta_ref):
        return ModeTable(self.axis, self.eigenvalues, self.frequencies, self.eigenvectors, float(eta_ref))

    def coupling(self, ion):
        """Coupling constants ``g_k = eta_k * b_ion^k`` for 0-based ``ion``."""
        return self.lamb_dicke * self.eigenvectors[ion]


def build_matrix(chain, beta=1.0, axis=Axis.TRANSVERSE):
    """Curvature matrix of the potential expanded about the equilibrium.

    Diagonal ``beta**2 + a * sum_p 1/|u_j - u_p|**3``, off-diagonal
    ``-a/|u_j - u_n|**3`` with ``a = 2`` axially and ``a = -1``
    transversely.  ``beta`` is ignored for the axial axis.
    """
    axis = Axis.parse(axis)
    u = chain.positions if isinstance(chain, IonChain) else np.asarray(chain, dtype=float)
    if axis is Axis.LONGITUDINAL:
        beta = 1.0
    elif not beta > 0:
        raise ValidationError(f"beta must be positive, got {beta!r}")
    a = _COULOMB_COEFF[axis]
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    if np.any(d == 0):
        raise DegenerateChainError("coincident ion positions")
    inv3 = 1.0 / d**3
    mat = -a * inv3
    np.fill_diagonal(mat, beta**2 + a * inv3.sum(axis=1))
    return 0.5 * (mat + mat.T)


def _fix_sign(vec):
    mag = np.abs(vec)
    # first component within rounding of the maximum decides the sign
    lead = np.flatnonzero(mag >= mag.max() - 1e-9)[0]
    return -vec if vec[lead] < 0 else vec


def normal_modes(matrix, axis=Axis.TRANSVERSE, eta_ref=1.0):
    axis = Axis.parse(axis)
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError("mode matrix must be square")
    if not np.allclose(matrix, matrix.T, rtol=0, atol=1e-12 * max(1.0, np.abs(matrix).max())):
        raise ValidationError("mode matrix must be symmetric")
    vals, vecs = np.linalg.eigh(0.5 * (matrix + matrix.T))
    vecs = np.column_stack([_fix_sign(vecs[:, k]) for k in range(vecs.shape[1])])

    scale = max(1.0, np.abs(vals).max())
    keys = []
    for k in range(len(vals)):
        # group numerically equal eigenvalues, then lexicographic on eigenvector
        keys.append((-round(vals[k] / (1e-10 * scale)), tuple(-vecs[:, k])))
    order = sorted(range(len(vals)), key=lambda k: keys[k])
    vals = vals[order]
    vecs = vecs[:, order]

    bad = np.flatnonzero(vals <= 0)
    if bad.size:
        k = int(bad[0])
        raise InstabilityError(
            f"mode {k + 1} on axis {axis.value} has non-positive eigenvalue {vals[k]:.6g}; "
            "the linear chain is unstable",
            mode_index=k + 1,
            eigenvalue=float(vals[k]),
        )
    return ModeTable(axis, vals, np.sqrt(vals), vecs, float(eta_ref))


def lamb_dicke_params(table, eta_ref):
    """``eta_k = eta_ref * w_k**-1/2`` with ``w_k`` in units of w_z."""
    if not eta_ref > 0:
        raise ValidationError("eta_ref must be positive")
    return eta_ref / np.sqrt(table.frequencies)


def chain_modes(config, axis=Axis.TRANSVERSE, chain=None):
    """Solve the crystal for ``config`` and return the ModeTable of ``axis``."""
    from .crystal import solve_equilibrium

    if chain is None:
        chain = solve_equilibrium(config.n_ions)
    return normal_modes(build_matrix(chain, config.beta_x, axis), axis, config.eta_ref)
