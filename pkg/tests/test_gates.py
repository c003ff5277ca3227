import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from vibcoh import gates as G
from vibcoh import symbolic as S

from oracles import CNOT_CHI, ROTZ_BRANCH_OVERLAP

ALPHA = 2.0
CZ2 = np.diag([1, 1, -1, -1]).astype(complex)


def cat_state(sign):
    return (S.ket([ALPHA]) + S.ket([-ALPHA]) * sign).normalize()


@pytest.fixture(scope="module")
def cnot_report():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", G.GuardWarning)
        return G.bs_cnot(None, None, ALPHA)


# ---------------------------------------------------------------------------
# logical frame


@settings(max_examples=40)
@given(
    re=st.lists(st.floats(-1, 1), min_size=4, max_size=4),
    im=st.lists(st.floats(-1, 1), min_size=4, max_size=4),
    alpha=st.floats(0.4, 3.0),
)
def test_encode_decode_roundtrip(re, im, alpha):
    c = np.array(re) + 1j * np.array(im)
    assume(np.linalg.norm(c) > 1e-3)
    f = G.LogicalFrame(alpha)
    np.testing.assert_allclose(f.decode(f.encode(c)), c, atol=1e-10)


def test_frame_gram_and_errors():
    f = G.LogicalFrame(0.5)
    np.testing.assert_allclose(f.inv_sqrt @ f.gram @ f.inv_sqrt, np.eye(2), atol=1e-14)
    with pytest.raises(ValueError):
        G.LogicalFrame(0.0)
    with pytest.raises(ValueError):
        f.encode(np.ones(3))
    with pytest.raises(ValueError):
        f.decode(S.ket([0.5], electronic="g"))


def test_apply_logical_hadamard():
    f = G.LogicalFrame(1.2)
    out = G.apply_logical(f.encode([1, 0]), 0, G.HADAMARD, 1.2)
    np.testing.assert_allclose(f.decode(out), [1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-12)


def test_logical_qubit_state():
    s = G.LogicalQubitState(S.ecs("phi+", ALPHA), ALPHA, (0, 1))
    assert s.in_code_space()
    assert np.linalg.norm(s.coords()) == pytest.approx(1.0, abs=1e-10)
    assert not G.LogicalQubitState(S.ket([ALPHA + 0.1j, ALPHA]), ALPHA, (0, 1)).in_code_space()


def test_process_fidelity_identity():
    assert G.process_fidelity([np.eye(2)], np.eye(2)) == pytest.approx(1.0)
    assert G.process_fidelity([np.eye(2)], G.PAULI["X"]) == pytest.approx(0.0)
    assert G.process_fidelity([np.zeros((2, 2))], np.eye(2)) == 0.0


# ---------------------------------------------------------------------------
# single-qubit rotations


def test_rot_z_zero_is_identity():
    rep = G.rot_z(cat_state(1), 0, 0.0, ALPHA)
    assert rep.fidelity == pytest.approx(1.0, abs=1e-12)
    assert rep.process_fidelity == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("theta", [np.pi, np.pi / 3, -0.7])
def test_rot_z_branch_phases(theta):
    rep = G.rot_z(None, 0, theta, ALPHA)
    o_plus, o_minus = rep.extra["branch_overlaps"]
    eps = rep.extra["eps"]
    assert abs(o_plus) == pytest.approx(np.exp(-eps**2 / 2), abs=1e-12)
    assert np.angle(o_plus / o_minus) == pytest.approx(np.angle(np.exp(1j * theta)), abs=1e-9)
    assert np.angle(o_plus) == pytest.approx(theta / 2, abs=1e-9)


def test_rot_z_pi_alpha2():
    rep = G.rot_z(cat_state(1), 0, np.pi, ALPHA)
    assert rep.extra["eps"] == pytest.approx(np.pi / 8)
    assert abs(rep.extra["branch_overlaps"][0]) == pytest.approx(ROTZ_BRANCH_OVERLAP, abs=1e-12)
    assert abs(rep.extra["branch_overlaps"][0]) == pytest.approx(0.926, abs=1e-3)
    assert 0.99 <= rep.process_fidelity <= 1.0
    assert 0.0 <= rep.fidelity <= 1.0


def test_rot_z_small_alpha_warns():
    with pytest.warns(G.GuardWarning):
        G.rot_z(None, 0, 0.3, 0.5)


def test_rot_z_composition():
    t1, t2 = 0.6, 1.1
    f1 = G.rot_z(None, 0, t1, ALPHA).process_fidelity
    f2 = G.rot_z(None, 0, t2, ALPHA).process_fidelity
    e1, e2 = t1 / (4 * ALPHA), t2 / (4 * ALPHA)
    K = G.single_qubit_map(lambda s: S.apply_displacement(S.apply_displacement(s, 0, 1j * e1), 0, 1j * e2), ALPHA)
    fc = G.process_fidelity([K], G.rot_z_matrix(t1 + t2))
    assert fc == pytest.approx(G.rot_z(None, 0, t1 + t2, ALPHA).process_fidelity, abs=1e-12)
    # loss grows as theta^4, so the quartic roots of the losses add
    assert (1 - fc) ** 0.25 <= (1 - f1) ** 0.25 + (1 - f2) ** 0.25 + 1e-6


def test_rot_x_yurke_stoler():
    rep = G.rot_x_pi4(S.ket([ALPHA]), 0, ALPHA)
    target = (S.ket([ALPHA]) + S.ket([-ALPHA]) * 1j).normalize()
    assert abs(S.inner(target, rep.output)) ** 2 >= 1 - 1e-12
    assert rep.process_fidelity == pytest.approx(1.0, abs=1e-12)


def test_rot_x_twice_is_not():
    def twice(s):
        return S.apply_kerr_pi_half(S.apply_kerr_pi_half(s, 0), 0)

    K = G.single_qubit_map(twice, ALPHA)
    assert G.process_fidelity([K], G.PAULI["X"]) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("sign", [1, -1])
def test_rot_x_keeps_parity_sectors(sign):
    out = G.rot_x_pi4(cat_state(sign), 0, ALPHA).output
    assert abs(S.inner(cat_state(sign), out)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("sign", [1, -1])
def test_hadamard_maps_to_cats(sign):
    rep = G.hadamard(S.ket([sign * ALPHA]), 0, ALPHA)
    assert rep.fidelity >= 0.98
    assert rep.process_fidelity >= 0.98
    # bare-ket overlap carries the code-space leakage the frame metric removes
    overlap = abs(S.inner(cat_state(sign), rep.output.normalize())) ** 2
    assert overlap == pytest.approx(rep.extra["raw_fidelity"], abs=1e-4)
    assert overlap < rep.fidelity


def test_hadamard_squared():
    def hh(s):
        return G.hadamard(G.hadamard(s, 0, ALPHA).output, 0, ALPHA).output

    K = G.single_qubit_map(hh, ALPHA)
    assert G.process_fidelity([K], np.eye(2)) >= 0.98


# ---------------------------------------------------------------------------
# entangled resources


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_anc_channel_matches_literal(alpha):
    a = G.prepare_anc_channel(alpha)
    b = G.anc_channel_literal(alpha)
    assert abs(S.inner(a, b)) == pytest.approx(1.0, abs=1e-10)


def test_anc_channel_steps():
    s, steps = G.prepare_anc_channel(ALPHA, return_steps=True)
    assert set(steps) == {"cross_phase", "split", "cross_parity"}
    # a1 and a2 always carry equal kets |+-a, +-a>
    np.testing.assert_allclose(s.amps[:, 0], s.amps[:, 1], atol=1e-12)
    np.testing.assert_allclose(np.abs(s.amps), ALPHA, atol=1e-12)


def test_anc_channel_small_alpha_is_vacuum():
    s = G.prepare_anc_channel(1e-4)
    assert abs(S.inner(S.vacuum(4), s)) == pytest.approx(1.0, abs=1e-6)


def test_eta_channel():
    a = G.prepare_eta_channel(ALPHA)
    b = G.eta_channel_literal(ALPHA)
    assert abs(S.inner(a, b)) ** 2 >= 1 - 1e-6
    ghz = G.ghz_state(ALPHA)
    lit = (S.ket([ALPHA] * 3) + S.ket([-ALPHA] * 3)).normalize()
    assert abs(S.inner(lit, ghz)) == pytest.approx(1.0, abs=1e-12)


def test_bell_projectors_orthonormal():
    P = G.bell_projectors(1.0)
    M = S.gram_matrix([P[k] for k in G.ECS_KINDS])
    np.testing.assert_allclose(M, np.eye(4), atol=1e-12)


# ---------------------------------------------------------------------------
# controlled i sigma_y


@pytest.mark.parametrize("alpha", [2.0, 1.5])
def test_correction_table_derivation(alpha):
    assert G.derive_cisy_corrections(alpha) == G.CISY_CORRECTIONS
    assert len(G.CISY_CORRECTIONS) == 16


def test_teleport_corrections_derivation():
    assert G.derive_teleport_corrections(ALPHA) == G.TELEPORT_CORRECTIONS


@pytest.mark.parametrize("basis", ["lowdin", "raw"])
def test_cisy_truth_table(basis):
    rows = G.c_isigma_y_truth_table(ALPHA, basis=basis)
    assert len(rows) == 4
    assert all(r["fidelity"] >= 0.9999 for r in rows)


def test_cisy_flips_target_when_control_is_minus():
    C, D = 0.6, 0.8j
    rep = G.c_isigma_y(S.ket([-ALPHA]), S.ket([ALPHA]) * C + S.ket([-ALPHA]) * D, ALPHA)
    target = (S.ket([-ALPHA, ALPHA]) * D + S.ket([-ALPHA, -ALPHA]) * (-C)).normalize()
    assert rep.fidelity >= 0.9999
    assert abs(S.inner(target, rep.output)) ** 2 >= 0.9999
    assert rep.success_probability == pytest.approx(1.0)


def test_cisy_identity_block():
    rep = G.c_isigma_y(S.ket([ALPHA]), S.ket([ALPHA]), ALPHA)
    assert abs(S.inner(S.ket([ALPHA, ALPHA]), rep.output)) ** 2 >= 0.9999


def test_cisy_squares_to_z_on_control():
    kraus = G.c_isigma_y(None, None, ALPHA).extra["kraus"]
    double = [A @ B for A in kraus for B in kraus]
    assert G.process_fidelity(double, CZ2) >= 0.9999
    assert np.allclose(G.C_ISIGMA_Y @ G.C_ISIGMA_Y, CZ2)


def test_cisy_process_fidelity():
    rep = G.c_isigma_y(None, None, ALPHA, bell_policy="ideal-projector")
    assert rep.process_fidelity >= 0.9999
    assert rep.extra["flagged_probability"] == 0.0
    assert 0 <= rep.success_probability <= 1


def test_cisy_entangling_witness():
    assert G.entangling_witness(ALPHA) > 0.4
    # a basis-state control leaves the target product
    assert G.entangling_witness(ALPHA, control=np.array([1.0, 0.0])) < 1e-6


def test_cisy_flags_missing_corrections(monkeypatch):
    table = dict(G.CISY_CORRECTIONS)
    table.pop(("phi+", "phi+"))
    monkeypatch.setattr(G, "CISY_CORRECTIONS", table)
    rep = G.c_isigma_y(None, None, ALPHA)
    flagged = [r for r in rep.branches if r.get("flag") == "uncorrectable"]
    assert len(flagged) == 1
    assert rep.extra["flagged_probability"] == pytest.approx(1 / 16, abs=1e-3)
    assert rep.success_probability == pytest.approx(15 / 16, abs=1e-3)


def test_cisy_input_validation():
    with pytest.raises(ValueError):
        G.c_isigma_y(S.ket([ALPHA, ALPHA]), S.ket([ALPHA]), ALPHA)


# ---------------------------------------------------------------------------
# beam-splitter CNOT


def test_bs_cnot_default_warns():
    with pytest.warns(G.GuardWarning):
        rep = G.bs_cnot(None, None, ALPHA)
    assert rep.extra["guard"] == pytest.approx((np.pi / 16) ** 2 * 4)


def test_bs_cnot_success_and_truth(cnot_report):
    rep = cnot_report
    assert rep.extra["theta"] == pytest.approx(np.pi / 16)
    assert rep.extra["chi"] == pytest.approx(CNOT_CHI["pi/16"], abs=1e-12)
    assert rep.success_probability == pytest.approx(0.92, abs=0.03)
    assert all(row["fidelity"] >= 0.98 for row in rep.extra["truth_table"])
    assert rep.process_fidelity >= 0.98
    assert 0 <= rep.success_probability <= 1


def test_bs_cnot_with_input(cnot_report):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", G.GuardWarning)
        rep = G.bs_cnot(S.ket([-ALPHA]), S.ket([ALPHA]), ALPHA)
    assert rep.fidelity >= 0.98
    assert abs(S.inner(S.ket([-ALPHA, -ALPHA]), rep.output)) ** 2 >= 0.98


def test_bs_cnot_zero_angle_is_teleportation():
    rep = G.bs_cnot(None, None, ALPHA, theta=0.0)
    assert rep.extra["core_process_fidelity"] == pytest.approx(1.0, abs=1e-6)
    assert rep.success_probability == pytest.approx(1.0, abs=1e-6)


def test_bs_cnot_alternate_angle():
    rep = G.bs_cnot(None, None, ALPHA, theta=np.pi / 36)
    assert rep.extra["chi"] == pytest.approx(CNOT_CHI["pi/36"], abs=1e-12)
    assert rep.success_probability > 0.95
    assert rep.process_fidelity < 0.9


def test_bs_cnot_guard_error():
    with pytest.raises(G.GuardError):
        G.bs_cnot(None, None, ALPHA, theta=1.0)
