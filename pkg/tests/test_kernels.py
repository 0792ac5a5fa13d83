import cmath

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tpgate import kernels


def dd2_oracle(x, y):
    mpmath.mp.dps = 40
    x, y = mpmath.mpc(x), mpmath.mpc(y)
    if x == y:
        return complex(mpmath.exp(x))
    return complex((mpmath.exp(y) - mpmath.exp(x)) / (y - x))


def dd3_oracle(z0, z1, z2):
    # Hermite-Genocchi: integral over the simplex
    mpmath.mp.dps = 30
    f = lambda s, t: mpmath.exp(z0 + s * (z1 - z0) + t * (z2 - z0))
    return complex(mpmath.quad(lambda s: mpmath.quad(lambda t: f(s, t), [0, 1 - s]), [0, 1]))


nodes = st.complex_numbers(max_magnitude=30, allow_nan=False, allow_infinity=False).map(lambda z: 1j * z.imag)


@settings(max_examples=60, deadline=None)
@given(nodes, nodes)
def test_expdd2_against_mpmath(x, y):
    got = complex(kernels.expdd2_numpy(x, y))
    assert abs(got - dd2_oracle(x, y)) <= 1e-12 * max(1.0, abs(got))


@pytest.mark.parametrize(
    "z",
    [
        (0, 0, 0),
        (0, 1e-7j, 2e-7j),
        (0, 0.3j, 0.3j),
        (0, 5j, 5j + 1e-9j),
        (0, 12j, -7j),
        (0, 40j, 39.5j),
        (0, 0.9j, -0.05j),
        (0, 2j, 0),
    ],
)
def test_expdd3_against_mpmath(z):
    z = tuple(complex(v) for v in z)
    ref = dd3_oracle(*z)
    np_val = complex(kernels.expdd3_numpy(*z))
    nb_val = complex(kernels._expdd3(*z))
    assert abs(np_val - ref) <= 1e-12 * max(1.0, abs(ref))
    assert abs(nb_val - ref) <= 1e-12 * max(1.0, abs(ref))


def test_backends_agree(modes_x, rng):
    mus = rng.uniform(8.0, 11.0, 40)
    w_m = rng.uniform(0.1, 1.0, modes_x.n_modes)
    w_g = rng.normal(size=modes_x.n_modes)
    for m in (1, 3, 8):
        a = kernels.quadratic_forms(mus, modes_x.frequencies, w_m, w_g, 31.4, m, backend="numba")
        b = kernels.quadratic_forms(mus, modes_x.frequencies, w_m, w_g, 31.4, m, backend="numpy")
        for x, y in zip(a, b):
            np.testing.assert_allclose(x, y, rtol=1e-11, atol=1e-13 * np.abs(y).max())


def test_segment_integrals_backends(modes_x):
    a = kernels.segment_integrals(10.01, modes_x.frequencies, 40.0, 5, backend="numba")
    b = kernels.segment_integrals(10.01, modes_x.frequencies, 40.0, 5, backend="numpy")
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-14)


def test_single_integral_direct():
    mu, w, tau = 3.1, 2.2, 4.0
    ii, _ = kernels.segment_integrals(mu, [w], tau, 1, backend="numpy")
    # elementary antiderivative for comparison
    def prim(t):
        return (cmath.exp(1j * (w + mu) * t) / (1j * (w + mu)) - cmath.exp(1j * (w - mu) * t) / (1j * (w - mu))) / 2j
    assert abs(ii[0, 0] - (prim(tau) - prim(0))) < 1e-13


def test_continuous_across_resonance():
    w, tau = 10.0, 2 * np.pi * 5
    mus = w + np.array([0.0, -1e-12, 1e-12, -1e-9, 1e-9])
    for backend in ("numpy", "numba"):
        vals = [kernels.segment_integrals(mu, [w], tau, 3, backend=backend) for mu in mus]
        for ii, tt in vals[1:]:
            # derivative in mu is O(tau * |I|), so the change stays below ~1e-6
            np.testing.assert_allclose(ii, vals[0][0], atol=1e-6)
            np.testing.assert_allclose(tt, vals[0][1], atol=1e-5)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.quadratic_forms([1.0], [1.0], [1.0], [1.0], 1.0, 1, backend="fortran")


@pytest.mark.parametrize("flag,expected", [("1", "False"), ("0", "True")])
def test_env_flag_selects_backend(flag, expected):
    import os
    import subprocess
    import sys

    env = dict(os.environ, TPGATE_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "from tpgate import kernels; print(kernels.USE_NUMBA)"],
                         capture_output=True, text=True, env=env, check=True).stdout.strip()
    assert out == expected


def test_numpy_fallback_end_to_end():
    import os
    import subprocess
    import sys

    code = ("from tpgate import *; import math\n"
            "cfg = TrapConfig(); modes = chain_modes(cfg)\n"
            "r = optimize_gate(OptimizationProblem(cfg, modes, (1, 2), 10 * math.pi, 3))\n"
            "print(repr(r.best_infidelity))")
    vals = []
    for flag in ("0", "1"):
        env = dict(os.environ, TPGATE_DISABLE_NUMBA=flag)
        vals.append(float(subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                                         env=env, check=True).stdout))
    assert vals[0] == pytest.approx(vals[1], rel=1e-10)
