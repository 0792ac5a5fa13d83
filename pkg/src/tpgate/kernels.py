"""Hot numeric kernels: segment integrals of the state-dependent force.

Every quantity the optimizer needs reduces to integrals of
``f(t) = sin(mu t) exp(i w t)`` over pulse segments.  Writing
``f = sum_r c_r exp(i nu_r t)`` with ``nu = (w + mu, w - mu)`` turns the
single integral into a first-order divided difference of ``exp`` and the
triangular double integral into a second-order one.  Divided differences
are evaluated in a form that stays exact through ``mu -> w`` (resonance),
so no special-case branch is needed downstream.

Two interchangeable backends are provided.  The numba path compiles the
scalar loops; the numpy path is fully vectorised.  Set
``TPGATE_DISABLE_NUMBA=1`` to force the numpy path.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("TPGATE_DISABLE_NUMBA", "0") not in ("1", "true", "yes")

# sinh(h)/h switches to its Taylor series below this |h|
_SINHC_SERIES = 1e-3
# second divided difference switches to the centred series when all three
# nodes lie within this distance of each other
_DD3_SERIES = 1.0
_DD3_TERMS = 28


def _maybe_njit(func):
    if HAVE_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func


# --------------------------------------------------------------------------
# scalar kernels (compiled by numba when available)
# --------------------------------------------------------------------------


def _expdd2_py(x, y):
    h = 0.5 * (y - x)
    if abs(h) < _SINHC_SERIES:
        h2 = h * h
        r = 1.0 + h2 / 6.0 + h2 * h2 / 120.0
    else:
        r = np.sinh(h) / h
    return np.exp(0.5 * (x + y)) * r


_expdd2 = _maybe_njit(_expdd2_py)


def _expdd3_py(z0, z1, z2):
    d01 = abs(z0 - z1)
    d02 = abs(z0 - z2)
    d12 = abs(z1 - z2)
    if max(d01, max(d02, d12)) <= _DD3_SERIES:
        c = (z0 + z1 + z2) / 3.0
        w0 = z0 - c
        w1 = z1 - c
        w2 = z2 - c
        # complete homogeneous symmetric polynomials h_n(w0, w1, w2)
        h1 = 1.0 + 0.0j
        h2 = 1.0 + 0.0j
        h3 = 1.0 + 0.0j
        fact = 2.0
        total = h3 / fact
        for n in range(1, _DD3_TERMS):
            h1 = h1 * w0
            h2 = h2 * w1 + h1
            h3 = h3 * w2 + h2
            fact *= n + 2
            total += h3 / fact
        return np.exp(c) * total
    # order nodes so the outer pair is the farthest apart
    if d01 >= d02 and d01 >= d12:
        a, b, e = z0, z2, z1
    elif d12 >= d02 and d12 >= d01:
        a, b, e = z1, z0, z2
    else:
        a, b, e = z0, z1, z2
    return (_expdd2(b, e) - _expdd2(a, b)) / (e - a)


_expdd3 = _maybe_njit(_expdd3_py)


def _segment_integrals_py(mu, omegas, tau, m, out_i, out_t):
    seg = tau / m
    nus = np.empty(2)
    cs = np.empty(2, dtype=np.complex128)
    cs[0] = -0.5j
    cs[1] = 0.5j
    base_i = np.empty(2, dtype=np.complex128)
    base_t = np.empty((2, 2), dtype=np.complex128)
    for k in range(omegas.shape[0]):
        nus[0] = omegas[k] + mu
        nus[1] = omegas[k] - mu
        # divided differences depend on the segment length only
        for r in range(2):
            zr = 1j * nus[r] * seg
            base_i[r] = cs[r] * seg * _expdd2(0.0j, zr)
            for s in range(2):
                dnu = nus[r] - nus[s]
                base_t[r, s] = cs[r] * np.conj(cs[s]) * seg * seg * _expdd3(0.0j, zr, 1j * dnu * seg)
        for p in range(m):
            a = p * seg
            acc_i = 0.0j
            acc_t = 0.0j
            for r in range(2):
                acc_i += base_i[r] * np.exp(1j * nus[r] * a)
                for s in range(2):
                    if r == s:
                        acc_t += base_t[r, s]
                    else:
                        acc_t += base_t[r, s] * np.exp(1j * (nus[r] - nus[s]) * a)
            out_i[k, p] = acc_i
            out_t[k, p] = acc_t


_segment_integrals_nb = _maybe_njit(_segment_integrals_py)


def _quadratic_forms_py(mus, omegas, w_m, w_g, tau, m, out_m, out_g):
    n_modes = omegas.shape[0]
    ii = np.empty((n_modes, m), dtype=np.complex128)
    tt = np.empty((n_modes, m), dtype=np.complex128)
    for q in range(mus.shape[0]):
        _segment_integrals_nb(mus[q], omegas, tau, m, ii, tt)
        for p in range(m):
            for r in range(p + 1):
                acc_m = 0.0
                acc_g = 0.0
                for k in range(n_modes):
                    prod = np.conj(ii[k, p]) * ii[k, r]
                    acc_m += w_m[k] * prod.real
                    if r == p:
                        acc_g += w_g[k] * tt[k, p].imag
                    else:
                        # Im[I_p conj(I_r)] for the later segment p > r
                        acc_g += 0.5 * w_g[k] * (-prod.imag)
                out_m[q, p, r] = acc_m
                out_m[q, r, p] = acc_m
                out_g[q, p, r] = acc_g
                out_g[q, r, p] = acc_g


_quadratic_forms_nb = _maybe_njit(_quadratic_forms_py)


# --------------------------------------------------------------------------
# vectorised numpy kernels
# --------------------------------------------------------------------------


def expdd2_numpy(x, y):
    """First divided difference ``(e^y - e^x)/(y - x)``, elementwise."""
    x, y = np.broadcast_arrays(np.asarray(x, complex), np.asarray(y, complex))
    h = 0.5 * (y - x)
    small = np.abs(h) < _SINHC_SERIES
    hs = np.where(small, 1.0, h)
    h2 = h * h
    r = np.where(small, 1.0 + h2 / 6.0 + h2 * h2 / 120.0, np.sinh(hs) / hs)
    return np.exp(0.5 * (x + y)) * r


def expdd3_numpy(z0, z1, z2):
    """Second divided difference of ``exp`` at three (possibly equal) nodes."""
    z0, z1, z2 = np.broadcast_arrays(*(np.asarray(z, complex) for z in (z0, z1, z2)))
    d01 = np.abs(z0 - z1)
    d02 = np.abs(z0 - z2)
    d12 = np.abs(z1 - z2)
    sel01 = (d01 >= d02) & (d01 >= d12)
    sel12 = ~sel01 & (d12 >= d02) & (d12 >= d01)
    a = np.where(sel01, z0, np.where(sel12, z1, z0))
    b = np.where(sel01, z2, np.where(sel12, z0, z1))
    e = np.where(sel01, z1, np.where(sel12, z2, z2))
    spread = np.abs(e - a)
    series = spread <= _DD3_SERIES
    den = np.where(series, 1.0, e - a)
    general = (expdd2_numpy(b, e) - expdd2_numpy(a, b)) / den

    c = (z0 + z1 + z2) / 3.0
    w0, w1, w2 = z0 - c, z1 - c, z2 - c
    h1 = np.ones_like(c)
    h2 = np.ones_like(c)
    h3 = np.ones_like(c)
    fact = 2.0
    total = h3 / fact
    for n in range(1, _DD3_TERMS):
        h1 = h1 * w0
        h2 = h2 * w1 + h1
        h3 = h3 * w2 + h2
        fact *= n + 2
        total = total + h3 / fact
    return np.where(series, np.exp(c) * total, general)


def segment_integrals_numpy(mus, omegas, tau, m):
    """Segment integrals for a batch of detunings.

    Returns ``(I, T)`` of shape ``(len(mus), len(omegas), m)`` with
    ``I[q,k,p] = int_p sin(mu t) e^{i w_k t} dt`` and ``T`` the ordered
    double integral ``int_p dt2 f(t2) int_{t_{p-1}}^{t2} conj f(t1) dt1``.
    """
    mus = np.atleast_1d(np.asarray(mus, float))[:, None, None]
    omegas = np.asarray(omegas, float)[None, :, None]
    seg = tau / m
    a = (np.arange(m) * seg)[None, None, :]
    nus = (omegas + mus, omegas - mus)
    cs = (-0.5j, 0.5j)
    ii = 0.0
    tt = 0.0
    for cr, nr in zip(cs, nus):
        zr = 1j * nr * seg
        ii = ii + cr * seg * np.exp(1j * nr * a) * expdd2_numpy(0.0, zr)
        for cq, nq in zip(cs, nus):
            dnu = nr - nq
            tt = tt + cr * np.conj(cq) * np.exp(1j * dnu * a) * seg * seg * expdd3_numpy(0.0, zr, 1j * dnu * seg)
    shape = (mus.shape[0], omegas.shape[1], m)
    return np.broadcast_to(ii, shape).copy(), np.broadcast_to(tt, shape).copy()


def quadratic_forms_numpy(mus, omegas, w_m, w_g, tau, m):
    ii, tt = segment_integrals_numpy(mus, omegas, tau, m)
    prod = np.conj(ii)[:, :, :, None] * ii[:, :, None, :]
    mm = np.einsum("k,qkpr->qpr", w_m, prod.real)
    # entry (p, r) with p > r couples the later segment p to the earlier r
    off = np.einsum("k,qkpr->qpr", w_g, -prod.imag)
    gg = 0.5 * (np.tril(off, -1) + np.swapaxes(np.tril(off, -1), 1, 2))
    diag = np.einsum("k,qkp->qp", w_g, tt.imag)
    idx = np.arange(m)
    gg[:, idx, idx] = diag
    return mm, gg


def quadratic_forms_numba(mus, omegas, w_m, w_g, tau, m):
    if not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    mus = np.ascontiguousarray(np.atleast_1d(mus), dtype=np.float64)
    out_m = np.empty((mus.shape[0], m, m))
    out_g = np.empty((mus.shape[0], m, m))
    _quadratic_forms_nb(
        mus,
        np.ascontiguousarray(omegas, dtype=np.float64),
        np.ascontiguousarray(w_m, dtype=np.float64),
        np.ascontiguousarray(w_g, dtype=np.float64),
        float(tau),
        int(m),
        out_m,
        out_g,
    )
    return out_m, out_g


def quadratic_forms(mus, omegas, w_m, w_g, tau, m, backend=None):
    """Infidelity and phase matrices for every detuning in ``mus``.

    With amplitude vector ``x`` the residual-displacement cost is
    ``x @ M[q] @ x`` and the conditional phase is ``x @ G[q] @ x``, where
    ``w_m[k]`` and ``w_g[k]`` carry the per-mode couplings.

    ``backend`` is ``"numba"``, ``"numpy"`` or ``None`` (module default).
    """
    if backend is None:
        backend = "numba" if USE_NUMBA else "numpy"
    if backend == "numba":
        return quadratic_forms_numba(mus, omegas, w_m, w_g, tau, m)
    if backend == "numpy":
        return quadratic_forms_numpy(mus, omegas, np.asarray(w_m, float), np.asarray(w_g, float), tau, m)
    raise ValueError(f"unknown backend {backend!r}")


def segment_integrals(mu, omegas, tau, m, backend=None):
    """``(I, T)`` with shape ``(n_modes, m)`` for a single detuning."""
    if backend is None:
        backend = "numba" if USE_NUMBA else "numpy"
    omegas = np.ascontiguousarray(np.atleast_1d(omegas), dtype=np.float64)
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba is not installed")
        ii = np.empty((omegas.shape[0], m), dtype=np.complex128)
        tt = np.empty((omegas.shape[0], m), dtype=np.complex128)
        _segment_integrals_nb(float(mu), omegas, float(tau), int(m), ii, tt)
        return ii, tt
    if backend == "numpy":
        ii, tt = segment_integrals_numpy([mu], omegas, tau, m)
        return ii[0], tt[0]
    raise ValueError(f"unknown backend {backend!r}")
