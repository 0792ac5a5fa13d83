"""Phase-space displacements and conditional phase of a segmented spin-dependent force.

Conventions (units of w_z, times in 1/w_z):

    alpha_j^k(tau) = int_0^tau chi(t) g_j^k exp(i w_k t) dt
    phi_jn(tau)    = 2 int_0^tau dt2 int_0^t2 dt1 sum_k chi(t2) g_j^k g_n^k chi(t1) sin w_k (t2 - t1)

with ``chi(t) = Omega_p sin(mu t)`` on segment ``p`` and ``g_j^k = eta_k b_j^k``.
A gate is complete when ``|phi_jn| = pi/4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ValidationError
from .fidelity import DEFAULT_WEIGHT_CONVENTION, displacement_infidelity, mode_weights
from .modes import Axis

TARGET_PHASE = math.pi / 4
# below this |mu - w| * tau the textbook closed forms lose precision
_NEAR_RESONANCE = 0.5


@dataclass(frozen=True)
class PulseSequence:
    mu: float
    tau: float
    segments: tuple
    ion_pair: tuple = (1, 2)
    axis: Axis = Axis.TRANSVERSE

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(float(x) for x in np.atleast_1d(self.segments)))
        object.__setattr__(self, "ion_pair", tuple(int(i) for i in self.ion_pair))
        object.__setattr__(self, "axis", Axis.parse(self.axis))
        if not self.mu > 0:
            raise ValidationError(f"detuning mu must be positive, got {self.mu!r}")
        if not self.tau > 0:
            raise ValidationError(f"gate time tau must be positive, got {self.tau!r}")
        if len(self.segments) < 1:
            raise ValidationError("at least one segment is required")
        j, n = self.ion_pair
        if not 1 <= j < n:
            raise ValidationError(f"ion pair must satisfy 1 <= j < n, got {self.ion_pair}")

    @property
    def m(self):
        return len(self.segments)

    @property
    def amplitudes(self):
        return np.asarray(self.segments)

    @property
    def boundaries(self):
        return np.arange(self.m + 1) * (self.tau / self.m)

    def check_modes(self, modes):
        if self.ion_pair[1] > modes.n_modes:
            raise ValidationError(f"ion pair {self.ion_pair} out of range for {modes.n_modes} ions")


@dataclass(frozen=True)
class GateResult:
    alpha: np.ndarray
    phi: float
    infidelity: float
    phase_error: float
    weights: np.ndarray = field(repr=False, default=None)


# --------------------------------------------------------------------------
# constant drive: textbook closed forms
# --------------------------------------------------------------------------


def alpha_resonant(omega_k, g, omega_rabi, tau):
    """Displacement for ``mu == omega_k`` exactly."""
    w = omega_k
    two = 2.0 * w * tau
    return omega_rabi * g * ((1.0 - math.cos(two)) / (4.0 * w) + 1j * (0.5 * tau - math.sin(two) / (4.0 * w)))


def alpha_constant(omega_k, g, omega_rabi, mu, tau):
    """Displacement of one mode under a constant-amplitude drive."""
    if abs(mu - omega_k) * tau < 1e-9:
        return alpha_resonant(omega_k, g, omega_rabi, tau)
    if abs(mu - omega_k) * tau < _NEAR_RESONANCE:
        ii, _ = kernels.segment_integrals(mu, [omega_k], tau, 1)
        return complex(omega_rabi * g * ii[0, 0])
    w = omega_k
    num = mu + np.exp(1j * w * tau) * (-mu * math.cos(mu * tau) + 1j * w * math.sin(mu * tau))
    return complex(omega_rabi * g * num / (mu**2 - w**2))


def phi_mode_resonant(omega_k, tau):
    """Single-mode phase kernel at ``mu == omega_k`` (unit couplings and amplitudes)."""
    w = omega_k
    return (2 * w * tau * math.cos(2 * w * tau) + 4 * w * tau - 3 * math.sin(2 * w * tau)) / (8 * w * w)


def phi_mode_constant(omega_k, mu, tau):
    """Single-mode phase kernel for constant drive with unit couplings and amplitudes."""
    if abs(mu - omega_k) * tau < 1e-9:
        return phi_mode_resonant(omega_k, tau)
    if abs(mu - omega_k) * tau < _NEAR_RESONANCE:
        _, tt = kernels.segment_integrals(mu, [omega_k], tau, 1)
        return 2.0 * float(tt[0, 0].imag)
    w = omega_k
    d = mu**2 - w**2
    first = w * (-2 * mu * tau + math.sin(2 * mu * tau)) / (4 * mu)
    second = mu * (w * math.cos(w * tau) * math.sin(mu * tau) - mu * math.cos(mu * tau) * math.sin(w * tau)) / d
    return 2.0 * (first + second) / d


def phi_constant(modes, pair, omega_rabi_j, omega_rabi_n, mu, tau):
    """Conditional phase for constant amplitudes, summed over all modes of ``modes``."""
    j, n = pair[0] - 1, pair[1] - 1
    gj = modes.coupling(j)
    gn = modes.coupling(n)
    total = 0.0
    for k in range(modes.n_modes):
        total += gj[k] * gn[k] * phi_mode_constant(float(modes.frequencies[k]), mu, tau)
    return omega_rabi_j * omega_rabi_n * total


def phi_single_mode(b_j, b_n, eta, omega_rabi, tau, l, l_prime):
    """Sideband-limit phase ``-(b_j b_n / 4 pi) eta^2 Omega^2 tau^2 / (1 + l/l')``.

    Exact for a lone mode driven at ``mu = w + 2 pi l / tau`` with
    ``tau = l' pi / w`` and ``|l| = 1``; for larger ``|l|`` the true phase is
    smaller by a further ``1/|l|``.
    """
    return -(b_j * b_n / (4.0 * math.pi)) * eta**2 * omega_rabi**2 * tau**2 / (1.0 + l / l_prime)


def rabi_single_mode(b_j, b_n, eta, tau, l, l_prime, target=TARGET_PHASE):
    """Rabi frequency giving ``|phi_single_mode| = target``."""
    unit = abs(phi_single_mode(b_j, b_n, eta, 1.0, tau, l, l_prime))
    if unit == 0:
        raise ValidationError("mode carries no conditional phase for this ion pair")
    return math.sqrt(target / unit)


# --------------------------------------------------------------------------
# segmented drive
# --------------------------------------------------------------------------


def segment_responses(sequence, omegas):
    """Per-unit-amplitude displacement integrals, shape ``(n_modes, m)``."""
    ii, _ = kernels.segment_integrals(sequence.mu, omegas, sequence.tau, sequence.m)
    return ii


def alpha_segmented(sequence, omega_k, g):
    """Displacement of one mode with coupling ``g`` under the segmented drive."""
    ii = segment_responses(sequence, [omega_k])[0]
    return complex(g * np.dot(ii, sequence.amplitudes))


def _pair_couplings(modes, pair):
    j, n = pair[0] - 1, pair[1] - 1
    eta = modes.lamb_dicke
    b = modes.eigenvectors
    return eta, b[j], b[n]


def phase_matrix(sequence, modes):
    """Symmetric ``G`` with ``phi_jn = Omega @ G @ Omega`` for the sequence's detuning and timing."""
    sequence.check_modes(modes)
    eta, bj, bn = _pair_couplings(modes, sequence.ion_pair)
    w_g = 2.0 * eta**2 * bj * bn
    _, gg = kernels.quadratic_forms([sequence.mu], modes.frequencies, np.zeros_like(w_g), w_g, sequence.tau, sequence.m)
    return gg[0]


def phi_segmented(sequence, modes):
    amp = sequence.amplitudes
    return float(amp @ phase_matrix(sequence, modes) @ amp)


def displacements(sequence, modes):
    """``alpha`` of shape ``(2, n_modes)`` for both target ions."""
    sequence.check_modes(modes)
    eta, bj, bn = _pair_couplings(modes, sequence.ion_pair)
    resp = segment_responses(sequence, modes.frequencies) @ sequence.amplitudes
    return np.vstack([eta * bj * resp, eta * bn * resp])


def gate_result(sequence, modes, nbar_cm, convention=DEFAULT_WEIGHT_CONVENTION):
    alpha = displacements(sequence, modes)
    phi = phi_segmented(sequence, modes)
    weights = mode_weights(modes, nbar_cm, convention)
    infid = displacement_infidelity(alpha, weights)
    return GateResult(alpha=alpha, phi=phi, infidelity=infid, phase_error=abs(phi) - TARGET_PHASE, weights=weights)
