"""Numerical-integration oracles for the displacement and conditional phase.

These evaluate the defining integrals directly and share no code with
:mod:`tpgate.kernels`; they exist to validate the closed forms.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import dblquad, quad


def _segment_edges(tau, m):
    return np.arange(m + 1) * (tau / m)


def alpha_quadrature(omega_k, g, amplitudes, mu, tau, epsabs=1e-13):
    """Adaptive Gauss-Kronrod evaluation of ``int_0^tau chi(t) g e^{i w t} dt``.

    Each segment is cut into chunks of about four periods of the fastest
    oscillation before handing it to QUADPACK.
    """
    amplitudes = np.atleast_1d(np.asarray(amplitudes, dtype=float))
    edges = _segment_edges(tau, amplitudes.size)
    chunk = 8.0 * math.pi / (abs(mu) + abs(omega_k))

    def re(t):
        return math.sin(mu * t) * math.cos(omega_k * t)

    def im(t):
        return math.sin(mu * t) * math.sin(omega_k * t)

    total = 0.0j
    for p, amp in enumerate(amplitudes):
        if amp == 0:
            continue
        a, b = edges[p], edges[p + 1]
        cuts = np.append(np.arange(a, b, chunk), b)
        part = 0.0j
        for x, y in zip(cuts[:-1], cuts[1:]):
            if y <= x:
                continue
            part += quad(re, x, y, epsabs=epsabs, epsrel=1e-12, limit=200)[0]
            part += 1j * quad(im, x, y, epsabs=epsabs, epsrel=1e-12, limit=200)[0]
        total += amp * part
    return g * total


def _gauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def phi_mode_quadrature(omega_k, amplitudes, mu, tau, order=20, panels_per_period=4):
    """Nested composite Gauss-Legendre quadrature of the single-mode phase kernel.

    Returns ``2 int_0^tau dt2 int_0^t2 dt1 chi(t2) chi(t1) sin w (t2 - t1)``
    for unit coupling.  The inner integral to each outer node is a prefix
    sum over whole panels plus a Gauss rule on the partial panel.
    """
    amplitudes = np.atleast_1d(np.asarray(amplitudes, dtype=float))
    m = amplitudes.size
    edges = _segment_edges(tau, m)
    seg = tau / m
    period = 2.0 * math.pi / (abs(mu) + abs(omega_k))
    n_sub = max(1, int(math.ceil(seg / period * panels_per_period)))
    starts, ends, amps = [], [], []
    for p in range(m):
        sub = np.linspace(edges[p], edges[p + 1], n_sub + 1)
        starts.append(sub[:-1])
        ends.append(sub[1:])
        amps.append(np.full(n_sub, amplitudes[p]))
    s = np.concatenate(starts)
    e = np.concatenate(ends)
    amp = np.concatenate(amps)
    x, w = _gauss(order)
    half = 0.5 * (e - s)
    t = (s + e)[:, None] * 0.5 + half[:, None] * x[None, :]
    wt = half[:, None] * w[None, :]
    chi = amp[:, None] * np.sin(mu * t)

    # whole-panel integrals of chi cos(w t) and chi sin(w t)
    pc = np.sum(wt * chi * np.cos(omega_k * t), axis=1)
    ps = np.sum(wt * chi * np.sin(omega_k * t), axis=1)
    prefix_c = np.concatenate([[0.0], np.cumsum(pc)[:-1]])
    prefix_s = np.concatenate([[0.0], np.cumsum(ps)[:-1]])

    # partial panel: [s_i, t_ir]
    hp = 0.5 * (t - s[:, None])
    tp = s[:, None, None] + hp[:, :, None] * (x[None, None, :] + 1.0)
    wp = hp[:, :, None] * w[None, None, :]
    chip = amp[:, None, None] * np.sin(mu * tp)
    cc = prefix_c[:, None] + np.sum(wp * chip * np.cos(omega_k * tp), axis=2)
    cs = prefix_s[:, None] + np.sum(wp * chip * np.sin(omega_k * tp), axis=2)

    inner = np.sin(omega_k * t) * cc - np.cos(omega_k * t) * cs
    return 2.0 * float(np.sum(wt * chi * inner))


def phi_quadrature(frequencies, g_j, g_n, amplitudes, mu, tau, order=20):
    """Conditional phase summed over modes, each mode by nested quadrature."""
    total = 0.0
    for w, a, b in zip(frequencies, g_j, g_n):
        total += a * b * phi_mode_quadrature(float(w), amplitudes, mu, tau, order=order)
    return total


def phi_mode_dblquad(omega_k, amplitudes, mu, tau):
    """Adaptive 2-D quadrature of the phase kernel; only practical for short gates."""
    amplitudes = np.atleast_1d(np.asarray(amplitudes, dtype=float))
    m = amplitudes.size
    edges = _segment_edges(tau, m)

    total = 0.0
    # integrate segment pairs separately so each integrand is smooth
    for p in range(m):
        for q in range(p + 1):
            a2, b2 = edges[p], edges[p + 1]
            a1 = edges[q]
            if q < p:
                hi = lambda t2, b1=edges[q + 1]: b1
            else:
                hi = lambda t2: t2
            val, _ = dblquad(
                lambda t1, t2: amplitudes[p] * math.sin(mu * t2) * amplitudes[q] * math.sin(mu * t1)
                * math.sin(omega_k * (t2 - t1)),
                a2, b2, lambda t2, a1=a1: a1, hi, epsabs=1e-13, epsrel=1e-12,
            )
            total += val
    return 2.0 * total
