import math

import numpy as np
import pytest

from tpgate import PulseSequence, gate_result, phi_segmented
from tpgate import dynamics as D
from tpgate import quadrature as Q
from tpgate.errors import ValidationError

TAU0 = 2 * math.pi


def random_constant_case(rng):
    w = rng.uniform(0.8, 20.0)
    mu = w * rng.uniform(0.5, 1.5)
    tau = rng.uniform(1.0, 40.0) * TAU0
    return w, rng.uniform(-0.2, 0.2), rng.uniform(0.1, 3.0), mu, tau


def test_alpha_zero_drive():
    assert D.alpha_constant(10.0, 0.03, 0.0, 10.1, 30.0) == 0


def test_alpha_closed_loop():
    # mu tau = 2 pi l, w tau = 2 pi l'
    tau = TAU0 * 5
    assert abs(D.alpha_constant(3.0, 1.0, 1.0, 2.2, tau)) < 1e-12


def test_alpha_resonant_limit():
    w, tau = 4.0, 7.3
    a = D.alpha_resonant(w, 1.0, 1.0, tau)
    assert a == pytest.approx(Q.alpha_quadrature(w, 1.0, [1.0], w, tau), rel=1e-10)
    assert D.alpha_constant(w, 1.0, 1.0, w, tau) == a
    near = D.alpha_constant(w, 1.0, 1.0, w + 1e-7, tau)
    assert abs(near - a) < 1e-5


def test_phi_resonant_limit():
    w, tau = 4.0, 7.3
    p = D.phi_mode_resonant(w, tau)
    assert p == pytest.approx(Q.phi_mode_quadrature(w, [1.0], w, tau), rel=1e-10)
    assert D.phi_mode_constant(w, w + 1e-8, tau) == pytest.approx(p, rel=1e-6)


@pytest.mark.parametrize("seed", range(20))
def test_alpha_constant_vs_quadrature(seed):
    w, g, om, mu, tau = random_constant_case(np.random.default_rng(seed))
    ref = Q.alpha_quadrature(w, g, [om], mu, tau)
    assert abs(D.alpha_constant(w, g, om, mu, tau) - ref) <= 1e-8 * abs(ref)


@pytest.mark.parametrize("seed", range(20))
def test_phi_constant_vs_quadrature(seed):
    w, _, _, mu, tau = random_constant_case(np.random.default_rng(100 + seed))
    ref = Q.phi_mode_quadrature(w, [1.0], mu, tau)
    assert D.phi_mode_constant(w, mu, tau) == pytest.approx(ref, rel=1e-7)


@pytest.mark.parametrize("offset", [1e-3, 1e-2, 0.3])
def test_closed_form_near_resonance(offset):
    w, tau = 10.0, 5 * TAU0
    mu = w + offset / tau
    ref_a = Q.alpha_quadrature(w, 1.0, [1.0], mu, tau)
    ref_p = Q.phi_mode_quadrature(w, [1.0], mu, tau)
    assert abs(D.alpha_constant(w, 1.0, 1.0, mu, tau) - ref_a) <= 1e-8 * abs(ref_a)
    assert D.phi_mode_constant(w, mu, tau) == pytest.approx(ref_p, rel=1e-7)


def test_dblquad_agrees_with_nested():
    amps = [1.0, -0.5]
    assert Q.phi_mode_quadrature(9.9, amps, 10.3, 5.0) == pytest.approx(Q.phi_mode_dblquad(9.9, amps, 10.3, 5.0), rel=1e-9)


def test_m1_segmented_equals_constant(modes_x):
    seq = PulseSequence(10.03, 5 * TAU0, [0.7], (1, 2))
    g = modes_x.coupling(0)
    for k in range(modes_x.n_modes):
        w = float(modes_x.frequencies[k])
        assert D.alpha_segmented(seq, w, g[k]) == pytest.approx(D.alpha_constant(w, g[k], 0.7, 10.03, 5 * TAU0), rel=1e-10)
    assert phi_segmented(seq, modes_x) == pytest.approx(D.phi_constant(modes_x, (1, 2), 0.7, 0.7, 10.03, 5 * TAU0), rel=1e-9)


@pytest.mark.parametrize("m", [3, 4])
def test_segmented_vs_quadrature(modes_x, rng, m):
    amps = rng.normal(size=m)
    seq = PulseSequence(9.97, 3 * TAU0, amps, (1, 3))
    w = float(modes_x.frequencies[2])
    g = float(modes_x.coupling(0)[2])
    ref = Q.alpha_quadrature(w, g, amps, seq.mu, seq.tau)
    assert abs(D.alpha_segmented(seq, w, g) - ref) <= 1e-8 * abs(ref)
    gj, gn = modes_x.coupling(0), modes_x.coupling(2)
    ref_phi = Q.phi_quadrature(modes_x.frequencies, gj, gn, amps, seq.mu, seq.tau)
    assert phi_segmented(seq, modes_x) == pytest.approx(ref_phi, rel=1e-7)


def test_linearity(modes_x, rng):
    amps = rng.normal(size=5)
    a = PulseSequence(9.9, 20.0, amps)
    b = PulseSequence(9.9, 20.0, 2 * amps)
    np.testing.assert_allclose(D.displacements(b, modes_x), 2 * D.displacements(a, modes_x), rtol=1e-13)
    assert phi_segmented(b, modes_x) == pytest.approx(4 * phi_segmented(a, modes_x), rel=1e-12)


def test_phase_matrix_symmetric(modes_x):
    g = D.phase_matrix(PulseSequence(10.2, 25.0, np.ones(6), (2, 7)), modes_x)
    np.testing.assert_array_equal(g, g.T)


def test_zero_amplitudes(modes_x):
    res = gate_result(PulseSequence(10.1, 31.4, [0.0, 0.0, 0.0]), modes_x, 3.0)
    assert np.all(res.alpha == 0)
    assert res.phi == 0 and res.infidelity == 0
    assert res.phase_error == pytest.approx(-math.pi / 4)


def test_eta_gauge(modes_x, rng):
    amps = rng.normal(size=4)
    seq = PulseSequence(9.95, 4 * TAU0, amps, (1, 2))
    base = gate_result(seq, modes_x.with_eta_ref(0.1), 3.0)
    for c in (0.5, 2.0):
        other = gate_result(PulseSequence(9.95, 4 * TAU0, amps / c, (1, 2)), modes_x.with_eta_ref(0.1 * c), 3.0)
        np.testing.assert_allclose(other.alpha, base.alpha, rtol=1e-12, atol=1e-16)
        assert other.phi == pytest.approx(base.phi, rel=1e-12)
        assert other.infidelity == pytest.approx(base.infidelity, rel=1e-12)


def test_replayed_slow_gate(modes_x, slow_gate):
    mu, amp = slow_gate
    res = gate_result(PulseSequence(mu, 37 * TAU0, [amp], (1, 2)), modes_x, 3.0)
    assert res.infidelity <= 0.0099
    assert abs(abs(res.phi) - math.pi / 4) < 1e-9


@pytest.mark.parametrize(
    "kwargs",
    [dict(mu=0.0), dict(tau=-1.0), dict(segments=()), dict(ion_pair=(2, 2)), dict(ion_pair=(0, 1))],
)
def test_sequence_validation(kwargs):
    base = dict(mu=10.0, tau=1.0, segments=(1.0,), ion_pair=(1, 2))
    base.update(kwargs)
    with pytest.raises(ValidationError):
        PulseSequence(**base)


def test_pair_out_of_range(modes_x):
    with pytest.raises(ValidationError):
        gate_result(PulseSequence(10.0, 1.0, [1.0], (1, 11)), modes_x, 3.0)


@pytest.mark.parametrize("tcycles,l", [(37, 1), (37, -1), (100, 1)])
def test_single_mode_formula_exact_for_unit_sideband(tcycles, l):
    w = 10.0
    tau = tcycles * TAU0
    mu = w + 2 * math.pi * l / tau
    exact = D.phi_mode_constant(w, mu, tau)
    approx = D.phi_single_mode(1.0, 1.0, 1.0, 1.0, tau, l, w * tau / math.pi)
    assert abs(exact) == pytest.approx(abs(approx), rel=1e-10)


def test_rabi_single_mode_inverts_phase():
    om = D.rabi_single_mode(0.3, 0.3, 0.03, 200.0, 1, 600.0)
    assert abs(D.phi_single_mode(0.3, 0.3, 0.03, om, 200.0, 1, 600.0)) == pytest.approx(math.pi / 4, rel=1e-14)
    with pytest.raises(ValidationError):
        D.rabi_single_mode(0.0, 0.3, 0.03, 200.0, 1, 600.0)
