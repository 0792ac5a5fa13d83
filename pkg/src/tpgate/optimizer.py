"""Optimal segmented pulses: detuning scan plus exact per-detuning quadratic minimisation.

At fixed detuning both the residual-displacement infidelity and the
conditional phase are quadratic forms in the amplitude vector,
``F = x M x`` and ``phi = x G x``.  Minimising ``F`` subject to
``|phi| = pi/4`` is a generalised symmetric eigenproblem: the optimum is
``F* = (pi/4) / max|nu|`` over the eigenvalues of ``G v = nu M v``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .crystal import TrapConfig
from .dynamics import TARGET_PHASE
from .errors import InfeasibleError, ValidationError
from .fidelity import DEFAULT_WEIGHT_CONVENTION, mode_weights

PHASE_FLOOR = 1e-12
REFINE_XTOL = 1e-6
DEFAULT_STEP = 1e-3
_CHUNK = 256


def scan_workers():
    """Worker threads for detuning scans, from ``TPGATE_WORKERS`` (unset or 0 = automatic)."""
    raw = os.environ.get("TPGATE_WORKERS", "").strip()
    if raw and int(raw) > 0:
        return int(raw)
    return min(8, os.cpu_count() or 1)


def default_mu_grid(modes, beta_x, step=DEFAULT_STEP):
    """``(lowest mode - 0.5, beta_x + 1, step)`` in units of w_z."""
    return (float(modes.frequencies.min()) - 0.5, float(beta_x) + 1.0, step)


def sideband_window(modes, tau, step=DEFAULT_STEP, order=1, half_width=0.5):
    """Detunings around the ``order``-th sideband of the top mode, ``w_max + 2 pi l / tau``."""
    w = float(modes.frequencies.max())
    unit = 2.0 * math.pi / tau
    return (w + (order - half_width) * unit, w + (order + half_width) * unit, step)


def grid_points(mu_grid):
    lo, hi, step = mu_grid
    if not step > 0 or not hi >= lo:
        raise ValidationError(f"invalid detuning grid {mu_grid}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    pts = lo + step * np.arange(n)
    pts = pts[pts > 0]
    if pts.size == 0:
        raise ValidationError(f"detuning grid {mu_grid} is empty")
    return pts


@dataclass
class OptimizationProblem:
    config: TrapConfig
    modes: object
    pair: tuple
    tau: float
    m: int
    mu_grid: tuple = None
    convention: str = DEFAULT_WEIGHT_CONVENTION

    def __post_init__(self):
        self.pair = tuple(int(i) for i in self.pair)
        j, n = self.pair
        if not 1 <= j < n <= self.modes.n_modes:
            raise ValidationError(f"ion pair {self.pair} invalid for {self.modes.n_modes} ions")
        if not self.tau > 0:
            raise ValidationError("tau must be positive")
        if int(self.m) != self.m or self.m < 1:
            raise ValidationError("segment count m must be a positive integer")
        self.m = int(self.m)
        if self.mu_grid is None:
            self.mu_grid = default_mu_grid(self.modes, self.config.beta_x)
        grid_points(self.mu_grid)

    def couplings(self):
        """Per-mode weights ``(w_m, w_g)`` feeding the M and G matrices."""
        j, n = self.pair[0] - 1, self.pair[1] - 1
        eta = self.modes.lamb_dicke
        bj = self.modes.eigenvectors[j]
        bn = self.modes.eigenvectors[n]
        beta_bar = mode_weights(self.modes, self.config.nbar_cm, self.convention)
        w_m = beta_bar * eta**2 * (bj**2 + bn**2) / 4.0
        w_g = 2.0 * eta**2 * bj * bn
        return w_m, w_g

    def forms(self, mus):
        w_m, w_g = self.couplings()
        return kernels.quadratic_forms(np.atleast_1d(mus), self.modes.frequencies, w_m, w_g, self.tau, self.m)


@dataclass
class OptimizationReport:
    best_mu: float
    best_amplitudes: np.ndarray
    best_infidelity: float
    phase_achieved: float
    scan_mu: np.ndarray = field(repr=False)
    scan_infidelity: np.ndarray = field(repr=False)

    @property
    def scan_curve(self):
        return list(zip(self.scan_mu.tolist(), self.scan_infidelity.tolist()))

    @property
    def max_amplitude(self):
        return float(np.max(np.abs(self.best_amplitudes)))


def _canonical_sign(vec):
    lead = np.flatnonzero(np.abs(vec) >= np.abs(vec).max() - 1e-12)[0]
    return -vec if vec[lead] < 0 else vec


def solve_pencil(mmat, gmat):
    """Minimise ``x M x`` subject to ``|x G x| = pi/4``.

    Returns ``(x, F)``; ``F`` is ``inf`` and ``x`` zero when no direction
    carries phase.
    """
    m = mmat.shape[0]
    d, v = np.linalg.eigh(mmat)
    scale = max(float(np.abs(d).max()), float(np.abs(gmat).max()), 1e-300)
    null = d <= 1e-13 * scale
    if np.any(null):
        z = v[:, null]
        nu, y = np.linalg.eigh(z.T @ gmat @ z)
        i = int(np.argmax(np.abs(nu)))
        if abs(nu[i]) > PHASE_FLOOR * scale:
            x = z @ y[:, i]
            x = x * math.sqrt(TARGET_PHASE / abs(x @ gmat @ x))
            x = _canonical_sign(x)
            return x, max(0.0, float(x @ mmat @ x))
    keep = ~null
    if not np.any(keep):
        return np.zeros(m), math.inf
    whiten = v[:, keep] / np.sqrt(d[keep])
    nu, y = np.linalg.eigh(whiten.T @ gmat @ whiten)
    i = int(np.argmax(np.abs(nu)))
    x = whiten @ y[:, i]
    phase = float(x @ gmat @ x)
    norm2 = float(x @ x)
    if abs(phase) <= PHASE_FLOOR * norm2 * scale:
        return np.zeros(m), math.inf
    x = _canonical_sign(x * math.sqrt(TARGET_PHASE / abs(phase)))
    return x, float(x @ mmat @ x)


def _batch_infidelity(mm, gg):
    """Optimal infidelity for a stack of (M, G) pairs, no eigenvectors."""
    out = np.empty(mm.shape[0])
    try:
        chol = np.linalg.cholesky(mm)
        linv = np.linalg.inv(chol)
        c = linv @ gg @ np.swapaxes(linv, 1, 2)
        nu = np.linalg.eigvalsh(0.5 * (c + np.swapaxes(c, 1, 2)))
        nu_max = np.max(np.abs(nu), axis=1)
        good = np.isfinite(nu_max) & (nu_max > 0)
        out[:] = np.where(good, TARGET_PHASE / np.where(good, nu_max, 1.0), math.inf)
        return out
    except np.linalg.LinAlgError:
        for q in range(mm.shape[0]):
            out[q] = solve_pencil(mm[q], gg[q])[1]
        return out


def scan_infidelity(problem, mus, workers=None):
    """Optimal infidelity at each detuning in ``mus``.

    Chunks are independent; results do not depend on the worker count.
    """
    mus = np.asarray(mus, dtype=float)
    chunks = [mus[i:i + _CHUNK] for i in range(0, mus.size, _CHUNK)]
    workers = scan_workers() if workers is None else workers

    def run(chunk):
        mm, gg = problem.forms(chunk)
        return _batch_infidelity(mm, gg)

    if workers <= 1 or len(chunks) == 1:
        parts = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    return np.concatenate(parts) if parts else np.empty(0)


def optimize_amplitudes_at_mu(problem, mu):
    """Best amplitude vector and its infidelity at fixed detuning ``mu``."""
    mm, gg = problem.forms([mu])
    return solve_pencil(mm[0], gg[0])


def optimize_gate(problem, refine=True, workers=None):
    mus = grid_points(problem.mu_grid)
    curve = scan_infidelity(problem, mus, workers)
    finite = np.isfinite(curve)
    if not np.any(finite):
        raise InfeasibleError("no detuning in the grid can reach the target phase")
    i = int(np.argmin(np.where(finite, curve, np.inf)))
    best_mu = float(mus[i])
    best_f = float(curve[i])
    if refine and mus.size > 1:
        step = problem.mu_grid[2]
        lo = max(mus[0], best_mu - step)
        hi = min(mus[-1], best_mu + step)

        def objective(mu):
            return float(scan_infidelity(problem, [mu], workers=1)[0])

        res = minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": REFINE_XTOL})
        if res.fun < best_f:
            best_mu, best_f = float(res.x), float(res.fun)
            pos = np.searchsorted(mus, best_mu)
            mus = np.insert(mus, pos, best_mu)
            curve = np.insert(curve, pos, best_f)
    amps, f = optimize_amplitudes_at_mu(problem, best_mu)
    mm, gg = problem.forms([best_mu])
    phase = float(amps @ gg[0] @ amps)
    # the eigenvector route is the reference value at the optimum
    curve[np.searchsorted(mus, best_mu)] = f
    return OptimizationReport(best_mu, amps, f, phase, mus, curve)
