import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from vibcoh import hilbert as H
from vibcoh.transfer import (
    DEFAULT_PSI,
    PulseSchedule,
    literal_me_rhs,
    pulse_area,
    pulse_gamma,
    reduced_me_generator,
    run_transfer,
    rwa_bs_transfer,
)

from oracles import PULSE_AREA_WINDOW, TRANSFER_F0


def dissipator(J, rho):
    Jd = J.conj().T
    return 2 * J @ rho @ Jd - Jd @ J @ rho - rho @ Jd @ J


@pytest.fixture(scope="module")
def default_run():
    return run_transfer()


# ---------------------------------------------------------------------------
# pulse shapes


@given(t=st.floats(-500, 500), g=st.floats(0.001, 1.0))
def test_pulse_identities(t, g):
    # beyond |g t| ~ 350 the rates leave double range
    assume(abs(g * t) < 300)
    g1, g2 = pulse_gamma(t, g)
    assert g1 + g2 == pytest.approx(g, rel=1e-12)
    assert np.sqrt(g1) * np.sqrt(g2) == pytest.approx(g / (2 * np.cosh(g * t)), rel=1e-6, abs=1e-300)
    r1, r2 = pulse_gamma(-t, g)
    assert r1 == pytest.approx(g2, rel=1e-12, abs=1e-300)


def test_pulse_ordering():
    g1, g2 = pulse_gamma(-100.0, 0.03)
    assert g2 > g1
    r1, r2 = pulse_gamma(-100.0, 0.03, "reversed")
    assert (r1, r2) == pytest.approx((g2, g1))
    with pytest.raises(ValueError):
        pulse_gamma(0.0, 0.03, "sideways")
    with pytest.raises(ValueError):
        pulse_gamma(0.0, 0.0)


def test_pulse_area_oracle():
    assert pulse_area(PulseSchedule()) == pytest.approx(PULSE_AREA_WINDOW, rel=1e-8)
    wide = PulseSchedule(t_open=-5000, t_close=5000)
    assert pulse_area(wide) == pytest.approx(np.pi / 2, rel=1e-8)


def test_schedule_outside_window_is_zero():
    s = PulseSchedule()
    assert s.rates(-250.0) == (0.0, 0.0)
    assert s.rates(250.0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        PulseSchedule(t_open=10, t_close=0)


def test_sampler_override():
    s = PulseSchedule(sampler=lambda t: (0.01, 0.02))
    assert s.rates(0.0) == (0.01, 0.02)


# ---------------------------------------------------------------------------
# generator


@pytest.mark.parametrize("phi", [0.0, np.pi, 0.7])
def test_literal_rhs_matches_collective_jump(phi):
    sp = H.ModeSpace((3, 3))
    rng = np.random.default_rng(3)
    A = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    rho = A @ A.conj().T
    rho /= np.trace(rho)
    sched = PulseSchedule()
    jumps = reduced_me_generator(sched, phi, sp)
    for t in (-50.0, 0.0, 37.0):
        g1, g2 = sched.rates(t)
        (J,) = jumps(t)
        np.testing.assert_allclose(literal_me_rhs(rho, g1, g2, sp, phi), dissipator(J, rho), atol=1e-14)


def test_generator_single_mode_limit():
    sp = H.ModeSpace((3, 3))
    sched = PulseSchedule(sampler=lambda t: (0.05, 0.0))
    (J,) = reduced_me_generator(sched, np.pi, sp)(0.0)
    np.testing.assert_allclose(J, np.sqrt(0.05) * H.annihilation(sp, 0).mat)


def test_generator_vibrational_damping():
    sp = H.ModeSpace((3, 3))
    js = reduced_me_generator(PulseSchedule(), np.pi, sp, gamma_v=0.01)(0.0)
    assert len(js) == 3
    np.testing.assert_allclose(js[2], 0.1 * H.annihilation(sp, 1).mat)


# ---------------------------------------------------------------------------
# full transfer


def test_initial_fidelity(default_run):
    assert default_run.fidelity[0] == pytest.approx(TRANSFER_F0, abs=1e-12)
    assert default_run.s_lin[0] == pytest.approx(0.0, abs=1e-12)


def test_trace_and_positivity(default_run):
    assert np.max(np.abs(default_run.trace - 1)) <= 1e-6
    assert default_run.diagnostics["min_eigenvalue"] >= -1e-7


def test_no_evolution_after_close(default_run):
    late = default_run.times >= 200
    assert np.ptp(default_run.fidelity[late]) <= 1e-6


def test_transfer_improves_fidelity(default_run):
    f = default_run.fidelity
    assert f[-1] > 0.8
    assert default_run.quasi_norm[-1] > 0.99
    assert np.all(default_run.s_lin >= -1e-10)


def test_vacuum_transfers_trivially():
    rep = run_transfer([1.0, 0.0, 0.0], dt=20.0)
    np.testing.assert_allclose(rep.fidelity, 1.0, atol=1e-10)


def test_phi_zero_gives_parity_phased_copy():
    rep = run_transfer(dt=25.0, phi=0.0)
    rho = rep.final_state.mat
    sp = rep.final_state.space
    flipped = np.kron(np.eye(4)[0], np.pad(DEFAULT_PSI, (0, 1)) * np.array([1, -1, 1, -1]))
    assert np.real(flipped.conj() @ rho @ flipped) > rep.fidelity[-1]
    assert sp.dims == (4, 4)


def test_truncation_guard():
    with pytest.raises(H.TruncationError):
        run_transfer(DEFAULT_PSI, dims=(3, 3))


def test_columns_shape(default_run):
    cols = default_run.columns()
    assert list(cols) == ["kappa_t", "fidelity", "quasi_norm", "s_lin", "trace"]
    assert all(len(v) == 501 for v in cols.values())


# ---------------------------------------------------------------------------
# unitary exchange


def test_rwa_identity():
    out = rwa_bs_transfer(DEFAULT_PSI, 0.0)
    np.testing.assert_allclose(out.amps, np.kron(np.pad(DEFAULT_PSI, (0, 1)), np.eye(4)[0]), atol=1e-14)


def test_rwa_swap_phases():
    out = rwa_bs_transfer(DEFAULT_PSI, np.pi / 2)
    ref = np.kron(np.eye(4)[0], np.pad(DEFAULT_PSI, (0, 1)) * (1j) ** np.arange(4))
    np.testing.assert_allclose(out.amps, ref, atol=1e-12)


def test_rwa_half_split():
    out = rwa_bs_transfer([0.0, 1.0], np.pi / 4, dims=(3, 3))
    p = np.abs(out.amps.reshape(3, 3)) ** 2
    assert p[1, 0] == pytest.approx(0.5, abs=1e-12)
    assert p[0, 1] == pytest.approx(0.5, abs=1e-12)
