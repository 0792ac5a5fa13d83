"""Gate infidelity models: thermal motion beyond Lamb-Dicke and residual displacement."""

from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import ValidationError

TAIL_TOL = 1e-13

# Reference frequency for the common temperature of the displacement weights.
#   "literal": coth(sqrt(lambda_k)/2 * ln(1 + 1/nbar)), lambda_k in units of w_z**2,
#              i.e. nbar fixes the occupation of a mode at w_z.
#   "cm":      lambda_k normalised by the gate-axis CM eigenvalue, so the CM mode
#              carries exactly 1 + 2*nbar.
WEIGHT_CONVENTIONS = ("literal", "cm")
DEFAULT_WEIGHT_CONVENTION = "literal"


class LambDickeWarning(UserWarning):
    """The lowest-order Lamb-Dicke series is used outside its regime."""


def thermal_cutoff(nbar):
    """Number of Fock terms needed so the thermal tail mass is below ``TAIL_TOL``."""
    n_max = max(50, int(math.ceil(40 * nbar)))
    if nbar > 0:
        ratio = nbar / (1.0 + nbar)
        # tail mass sum_{n > n_max} P_n = ratio**(n_max + 1)
        need = math.ceil(math.log(TAIL_TOL) / math.log(ratio)) - 1
        n_max = max(n_max, need)
    return n_max


def thermal_distribution(nbar, n_max=None):
    """Thermal Fock populations ``P_n = nbar**n / (1 + nbar)**(n + 1)`` for ``n <= n_max``."""
    if not nbar >= 0:
        raise ValidationError("nbar must be non-negative")
    if n_max is None:
        n_max = thermal_cutoff(nbar)
    n = np.arange(n_max + 1)
    if nbar == 0:
        return (n == 0).astype(float)
    log_p = n * math.log(nbar / (1.0 + nbar)) - math.log1p(nbar)
    return np.exp(log_p)


def fidelity_exact_sum(eta_p, nbar):
    """Thermally averaged gate fidelity ``1/2 + 1/2 sum_n P_n cos(pi/2 eta^2 (2n+1))``."""
    return float(min(1.0, max(0.0, 1.0 - infidelity_exact_sum(eta_p, nbar))))


def infidelity_exact_sum(eta_p, nbar):
    """``1 - fidelity_exact_sum`` computed without the cancellation in ``1 - F``."""
    if not eta_p >= 0:
        raise ValidationError("eta_p must be non-negative")
    p = thermal_distribution(nbar)
    # tail mass is below TAIL_TOL; renormalise so eta = 0 is exactly lossless
    p = p / p.sum()
    n = np.arange(p.size)
    half = 0.25 * math.pi * eta_p**2 * (2 * n + 1)
    # 1 - cos x = 2 sin^2(x/2)
    return float(np.sum(p * np.sin(half) ** 2))


def infidelity_lamb_dicke_series(eta_p, nbar):
    """Lowest-order series ``pi^2 eta^4 (nbar^2 + nbar + 1/8)``.

    Warns with :class:`LambDickeWarning` when ``eta^4 (nbar^2 + nbar)``
    exceeds 1e-2.
    """
    if eta_p**4 * (nbar**2 + nbar) > 1e-2:
        warnings.warn(
            f"eta={eta_p:g}, nbar={nbar:g} is outside the perturbative Lamb-Dicke regime",
            LambDickeWarning,
            stacklevel=2,
        )
    return math.pi**2 * eta_p**4 * (nbar**2 + nbar + 0.125)


def displacement_infidelity(alpha, weights):
    """Infidelity from residual displacements, ``sum_k w_k (|a_jk|^2 + |a_nk|^2) / 4``.

    ``alpha`` has shape ``(2, n_modes)``: row 0 for ion j, row 1 for ion n.
    """
    alpha = np.asarray(alpha)
    weights = np.asarray(weights, dtype=float)
    if alpha.ndim != 2 or alpha.shape[0] != 2 or alpha.shape[1] != weights.shape[0]:
        raise ValidationError(
            f"alpha must have shape (2, {weights.shape[0]}), got {alpha.shape}"
        )
    return float(np.sum(weights * np.sum(np.abs(alpha) ** 2, axis=0)) / 4.0)


def _reference_frequency(modes, convention):
    if convention == "literal":
        return 1.0
    if convention == "cm":
        return modes.cm_frequency
    raise ValidationError(f"unknown weight convention {convention!r}; use one of {WEIGHT_CONVENTIONS}")


def thermal_occupations(modes, nbar_cm, convention=DEFAULT_WEIGHT_CONVENTION):
    """Bose-Einstein occupation of each mode at the temperature fixed by ``nbar_cm``."""
    if not nbar_cm >= 0:
        raise ValidationError("nbar_cm must be non-negative")
    if nbar_cm == 0:
        return np.zeros(modes.n_modes)
    ref = _reference_frequency(modes, convention)
    x = modes.frequencies / ref * math.log1p(1.0 / nbar_cm)
    return 1.0 / np.expm1(x)


def mode_weights(modes, nbar_cm, convention=DEFAULT_WEIGHT_CONVENTION):
    """Per-mode thermal weights ``coth(sqrt(mu_k)/2 * ln(1 + 1/nbar_cm))``."""
    if not nbar_cm >= 0:
        raise ValidationError("nbar_cm must be non-negative")
    if nbar_cm == 0:
        return np.ones(modes.n_modes)
    ref = _reference_frequency(modes, convention)
    mu_k = modes.eigenvalues / ref**2
    return 1.0 / np.tanh(np.sqrt(mu_k / 4.0) * math.log1p(1.0 / nbar_cm))


def scaling_ratios(beta, gamma=1.0, gamma_prime=1.0, counter_propagating=True):
    """TP/LP infidelity ratio and laser-intensity ratio for CM-mode gates.

    Returns ``(beta**-(2 + gamma + gamma'), sqrt(beta/2) or sqrt(beta))``.
    """
    if not beta > 0:
        raise ValidationError("beta must be positive")
    for name, g in (("gamma", gamma), ("gamma_prime", gamma_prime)):
        if not 1.0 <= g <= 2.0:
            raise ValidationError(f"{name} must lie in [1, 2], got {g!r}")
    infid = beta ** -(2.0 + gamma + gamma_prime)
    intensity = math.sqrt(beta / 2.0) if counter_propagating else math.sqrt(beta)
    return infid, intensity
