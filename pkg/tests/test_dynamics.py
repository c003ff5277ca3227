import numpy as np
import pytest

from vibcoh import hilbert as H
from vibcoh.dynamics import (
    NonHermitianError,
    evolve_lindblad,
    evolve_schrodinger,
    expectation,
    fidelity_with,
    linear_entropy_of,
    observable_series,
    trace_of,
)
from vibcoh.hamiltonian import compile_terms, preset


@pytest.fixture(scope="module")
def fig2_true():
    c, tl = preset("displacement", eta=0.4, gamma=20.0)
    sp = H.ModeSpace((6, 2))
    return sp, compile_terms(tl.select("true"), sp)


def test_zero_hamiltonian_identity():
    sp = H.ModeSpace((4,))
    psi = H.coherent_state(sp, 0, 0.5)
    tr = evolve_schrodinger(np.zeros((4, 4)), psi, np.linspace(0, 5, 6))
    for s in tr.states:
        np.testing.assert_allclose(s, psi.amps, atol=1e-14)


def test_non_hermitian_rejected():
    sp = H.ModeSpace((3,))
    with pytest.raises(NonHermitianError):
        evolve_schrodinger(H.annihilation(sp, 0), H.fock_state(sp, (0,)), [0.0, 1.0])


def test_bad_grid():
    sp = H.ModeSpace((3,))
    with pytest.raises(ValueError):
        evolve_schrodinger(np.eye(3), H.fock_state(sp, (0,)), [1.0, 0.5])


def test_stationary_displacement_reaches_alpha():
    c, tl = preset("displacement", eta=0.4)
    sp = H.ModeSpace((12, 2))
    tr = evolve_schrodinger(compile_terms(tl.select("ideal"), sp), H.fock_state(sp, (0, 0)), [0.0, 6.25])
    assert abs(H.overlap(H.coherent_state(sp, 0, 1.0), tr.state(1))) >= 1 - 1e-6


def test_true_displacement_against_reference(fig2_true):
    sp, Hm = fig2_true
    grid = np.linspace(0, 12.5, 101)
    psi0 = H.fock_state(sp, (0, 0))
    target = H.coherent_state(sp, 0, 1.0)
    a = observable_series(evolve_schrodinger(Hm, psi0, grid), {"o": target})["o"]
    b = observable_series(evolve_schrodinger(Hm, psi0, grid, method="magnus4", max_step=0.005), {"o": target})["o"]
    assert np.max(np.abs(a - b)) < 1e-4
    assert a[50] >= 0.98
    assert a[0] == pytest.approx(np.exp(-0.5), abs=2e-4)


def test_step_halving_convergence(fig2_true):
    sp, Hm = fig2_true
    grid = np.linspace(0, 6.25, 11)
    psi0 = H.fock_state(sp, (0, 0))
    f = fidelity_with(H.coherent_state(sp, 0, 1.0))
    a = f(evolve_schrodinger(Hm, psi0, grid, method="magnus4", max_step=0.01).states, "ket")
    b = f(evolve_schrodinger(Hm, psi0, grid, method="magnus4", max_step=0.005).states, "ket")
    assert np.max(np.abs(a - b)) < 1e-5


def test_energy_conservation_static():
    c, tl = preset("kerr")
    sp = H.ModeSpace((6,))
    Hm = compile_terms(tl.select("ideal"), sp)
    tr = evolve_schrodinger(Hm, H.coherent_state(sp, 0, 0.7), np.linspace(0, 30, 7), method="dop853")
    E = expectation(Hm.static)(tr.states, "ket")
    assert np.max(np.abs(E - E[0])) <= 1e-7 * abs(E[0])
    assert tr.diagnostics["norm_drift"] <= 1e-8


def test_time_dependent_norm_drift(fig2_true):
    sp, Hm = fig2_true
    tr = evolve_schrodinger(Hm, H.fock_state(sp, (0, 0)), np.linspace(0, 12.5, 26))
    assert tr.diagnostics["norm_drift"] <= 1e-8


def test_lindblad_unitary_limit():
    sp = H.ModeSpace((6,))
    c, tl = preset("kerr")
    Hm = compile_terms(tl.select("ideal"), sp).static
    psi = H.coherent_state(sp, 0, 0.8)
    grid = np.linspace(0, 20, 5)
    a = evolve_schrodinger(Hm, psi, grid).states
    rho = evolve_lindblad(Hm, [], psi, grid).states
    for k in range(len(grid)):
        assert np.real(np.vdot(a[k], rho[k] @ a[k])) >= 1 - 1e-6


def test_single_mode_damping_rate():
    sp = H.ModeSpace((3,))
    gamma = 0.2
    b = H.annihilation(sp, 0).mat
    grid = np.linspace(0, 5, 11)
    tr = evolve_lindblad(None, [np.sqrt(gamma) * b], H.fock_state(sp, (1,)), grid)
    np.testing.assert_allclose(tr.states[:, 1, 1].real, np.exp(-2 * gamma * grid), atol=1e-8)


def test_vacuum_fixed_point():
    sp = H.ModeSpace((4, 4))
    b1, b2 = H.annihilation(sp, 0).mat, H.annihilation(sp, 1).mat
    tr = evolve_lindblad(None, lambda t: [0.3 * b1 + 0.2j * b2, 0.1 * b2], H.fock_state(sp, (0, 0)), [0, 10, 20])
    np.testing.assert_allclose(tr.states[-1], tr.states[0], atol=1e-14)


def test_lindblad_dimension_mismatch():
    sp = H.ModeSpace((3,))
    with pytest.raises(ValueError):
        evolve_lindblad(None, [np.eye(4)], H.fock_state(sp, (0,)), [0, 1])


def test_lindblad_diagnostics_and_series():
    sp = H.ModeSpace((3, 3))
    b1 = H.annihilation(sp, 0).mat
    rho0 = H.StateVector(sp, (H.fock_state(sp, (1, 0)).amps + H.fock_state(sp, (0, 1)).amps) / np.sqrt(2))
    tr = evolve_lindblad(None, [0.3 * b1], rho0, np.linspace(0, 10, 21))
    d = tr.diagnostics
    assert d["trace_drift"] <= 1e-6 and d["hermiticity"] <= 1e-8 and d["min_eigenvalue"] >= -1e-7
    obs = observable_series(tr, {"trace": trace_of, "F": rho0, "S": linear_entropy_of(sp)})
    np.testing.assert_allclose(obs["trace"], 1.0, atol=1e-6)
    assert np.all((obs["F"] ** 2 >= -1e-12) & (obs["F"] ** 2 <= 1 + 1e-12))
    assert obs["S"][0] < 1e-10
    cols = tr.with_observables(obs).columns("kappa_t")
    assert list(cols)[0] == "kappa_t"
