"""Logical gates on coherent-state qubits ``|0_L> ~ |alpha>``, ``|1_L> ~ |-alpha>``.

Because ``<alpha|-alpha> = exp(-2|alpha|^2)`` is not zero, logical quantities
are evaluated in the symmetric (Lowdin) orthonormalization of each qubit's
``{|alpha>, |-alpha>}`` pair. Two-qubit gates are characterized through a Choi
state: the input qubits are maximally entangled with reference qubits that
never take part in the protocol, and the output is compared with the ideal
gate applied to that state.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Sequence

import numpy as np

from . import symbolic as sym
from .bell import ECS_KINDS, discriminate_ecs
from .symbolic import CoherentSuperposition

__all__ = [
    "PAULI",
    "C_ISIGMA_Y",
    "CNOT",
    "HADAMARD",
    "CISY_CORRECTIONS",
    "TELEPORT_CORRECTIONS",
    "GuardWarning",
    "GuardError",
    "LogicalFrame",
    "LogicalQubitState",
    "GateReport",
    "apply_logical",
    "bell_projectors",
    "process_fidelity",
    "rot_z_matrix",
    "rot_z",
    "rot_x_pi4",
    "hadamard",
    "single_qubit_map",
    "prepare_anc_channel",
    "anc_channel_literal",
    "ghz_state",
    "prepare_eta_channel",
    "eta_channel_literal",
    "c_isigma_y",
    "c_isigma_y_truth_table",
    "bs_cnot",
    "derive_cisy_corrections",
    "derive_teleport_corrections",
    "entangling_witness",
]

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}
PAULI["XZ"] = PAULI["X"] @ PAULI["Z"]

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S_GATE = np.diag([1.0, 1j])
C_ISIGMA_Y = np.block([[np.eye(2), np.zeros((2, 2))], [np.zeros((2, 2)), np.array([[0, 1], [-1, 0]])]]).astype(complex)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)

# Pauli frame corrections (first output, second output) for each pair of
# Bell outcomes, found by exhaustive search; see derive_cisy_corrections.
CISY_CORRECTIONS = {
    ("phi+", "phi+"): ("Z", "I"),
    ("phi+", "phi-"): ("I", "Z"),
    ("phi+", "psi+"): ("I", "X"),
    ("phi+", "psi-"): ("Z", "XZ"),
    ("phi-", "phi+"): ("I", "I"),
    ("phi-", "phi-"): ("Z", "Z"),
    ("phi-", "psi+"): ("Z", "X"),
    ("phi-", "psi-"): ("I", "XZ"),
    ("psi+", "phi+"): ("X", "XZ"),
    ("psi+", "phi-"): ("XZ", "X"),
    ("psi+", "psi+"): ("XZ", "Z"),
    ("psi+", "psi-"): ("X", "I"),
    ("psi-", "phi+"): ("XZ", "XZ"),
    ("psi-", "phi-"): ("X", "X"),
    ("psi-", "psi+"): ("X", "Z"),
    ("psi-", "psi-"): ("XZ", "I"),
}

# single-mode teleportation through |phi+>: Bell outcome -> Pauli correction
TELEPORT_CORRECTIONS = {"phi+": "I", "phi-": "Z", "psi+": "X", "psi-": "XZ"}


class GuardWarning(UserWarning):
    """A parameter sits outside the regime where an approximation is accurate."""


class GuardError(ValueError):
    """A parameter is far outside the regime where a construction is valid."""


# ---------------------------------------------------------------------------
# logical frame


class LogicalFrame:
    """Lowdin-orthonormalized qubit basis built from ``|alpha>`` and ``|-alpha>``.

    Raw coefficients ``r`` (on the kets) and Lowdin coordinates ``c`` are
    related per qubit by ``r = G^{-1/2} c`` with ``G`` the 2x2 Gram matrix.
    """

    def __init__(self, alpha: float):
        if alpha == 0:
            raise ValueError("alpha must be nonzero")
        self.alpha = complex(alpha)
        s = np.exp(-2 * abs(alpha) ** 2)
        self.overlap = s
        self.gram = np.array([[1.0, s], [s, 1.0]])
        w, V = np.linalg.eigh(self.gram)
        self.inv_sqrt = (V * w**-0.5) @ V.T
        self.sqrt = (V * w**0.5) @ V.T

    @property
    def kets(self) -> tuple[complex, complex]:
        return self.alpha, -self.alpha

    def raw_map(self, U: np.ndarray) -> np.ndarray:
        """Matrix acting on raw ket coefficients that realizes ``U`` in the Lowdin frame."""
        return self.inv_sqrt @ np.asarray(U) @ self.sqrt

    def encode(self, coords: np.ndarray) -> CoherentSuperposition:
        """State with Lowdin coordinates ``coords`` (length ``2**n``) on ``n`` modes."""
        coords = np.asarray(coords, dtype=complex).reshape(-1)
        n = int(round(np.log2(len(coords))))
        if 2**n != len(coords):
            raise ValueError("coordinate vector length must be a power of two")
        raw = reduce(np.kron, [self.inv_sqrt] * n) @ coords
        amps = [[self.kets[b] for b in bits] for bits in itertools.product((0, 1), repeat=n)]
        return CoherentSuperposition(raw, amps).merge()

    def decode(self, state: CoherentSuperposition, modes: Sequence[int] | None = None) -> np.ndarray:
        """Lowdin coordinates ``<e_x|state>``; ``modes`` must be all of the state's modes."""
        if state.has_electronic:
            raise ValueError("remove the electronic factor before decoding")
        modes = list(range(state.n_modes)) if modes is None else list(modes)
        if sorted(modes) != list(range(state.n_modes)):
            raise ValueError("decode needs every mode of the state; project others out first")
        T = state.n_terms
        C = state.weights.reshape(T, 1)
        ref = np.array(self.kets).reshape(2, 1)
        for m in modes:
            K = sym.kernel(ref, state.amps[:, [m]])  # (2, T): <s alpha|beta_t>
            M = (self.inv_sqrt.T @ K).T  # (T, 2): <e_b|beta_t>
            C = (C[:, :, None] * M[:, None, :]).reshape(T, -1)
        return C.sum(axis=0)


@dataclass(frozen=True, eq=False)
class LogicalQubitState:
    """Coherent-state register: which modes carry qubits, at which amplitude."""

    state: CoherentSuperposition
    alpha: float
    qubit_modes: tuple[int, ...]

    def in_code_space(self, tol: float = 1e-9) -> bool:
        a = self.state.amps[:, list(self.qubit_modes)]
        return bool(np.all(np.minimum(np.abs(a - self.alpha), np.abs(a + self.alpha)) < tol))

    def coords(self) -> np.ndarray:
        return LogicalFrame(self.alpha).decode(self.state, self.qubit_modes)


def apply_logical(state: CoherentSuperposition, mode: int, U: np.ndarray, alpha: float) -> CoherentSuperposition:
    """Apply a logical 2x2 matrix to a qubit mode whose kets are exactly ``|+-alpha>``."""
    f = LogicalFrame(alpha)
    M = f.raw_map(U)
    a = f.alpha
    image = {a: [(M[0, 0], a), (M[1, 0], -a)], -a: [(M[0, 1], a), (M[1, 1], -a)]}
    return sym.apply_mode_map(state, mode, image)


def process_fidelity(kraus: Sequence[np.ndarray], U: np.ndarray, normalize: bool = True) -> float:
    """``sum_b |Tr(U^dag K_b)|^2 / d^2``, optionally divided by the success probability."""
    U = np.asarray(U)
    d = U.shape[0]
    num = sum(abs(np.trace(U.conj().T @ K)) ** 2 for K in kraus) / d**2
    if not normalize:
        return float(num)
    p = sum(np.trace(K.conj().T @ K).real for K in kraus) / d
    return float(num / p) if p > 0 else 0.0


@dataclass(frozen=True, eq=False)
class GateReport:
    """Result of a gate run.

    ``fidelity`` refers to the supplied input state, ``process_fidelity`` to
    the logical channel (both conditioned on success and in the Lowdin frame).
    """

    output: CoherentSuperposition | None
    fidelity: float | None
    process_fidelity: float | None
    success_probability: float = 1.0
    branches: tuple = ()
    logical_map: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# single-qubit gates


def single_qubit_map(op, alpha: float) -> np.ndarray:
    """Logical 2x2 matrix ``K[a, b] = <e_a| op |e_b>`` in the Lowdin frame."""
    f = LogicalFrame(alpha)
    K = np.zeros((2, 2), dtype=complex)
    for b in range(2):
        e = np.zeros(2, dtype=complex)
        e[b] = 1
        K[:, b] = f.decode(op(f.encode(e)))
    return K


def rot_z_matrix(theta: float) -> np.ndarray:
    """``diag(exp(i theta/2), exp(-i theta/2))``."""
    return np.diag([np.exp(0.5j * theta), np.exp(-0.5j * theta)])


def _single_report(state, qubit, alpha, op, U, extra=None) -> GateReport:
    f = LogicalFrame(alpha)
    out = op(state) if state is not None else None
    K = single_qubit_map(op, alpha)
    fid = None
    if state is not None and state.n_modes == 1:
        cin = f.decode(state)
        cout = f.decode(out)
        target = U @ cin
        n_out = np.vdot(cout, cout).real
        fid = float(abs(np.vdot(target, cout)) ** 2 / (n_out * np.vdot(target, target).real))
        tgt_state = f.encode(target)
        extra = dict(extra or {})
        extra["code_space_norm"] = float(n_out / sym.inner(out, out).real)
        extra["raw_fidelity"] = float(abs(sym.inner(tgt_state, out)) ** 2 / (sym.inner(out, out).real * sym.inner(tgt_state, tgt_state).real))
    return GateReport(out, fid, process_fidelity([K], U, normalize=True), 1.0, (), K, dict(extra or {}))


def rot_z(state: CoherentSuperposition, qubit: int, theta: float, alpha: float) -> GateReport:
    """Logical ``diag(e^{i theta/2}, e^{-i theta/2})`` by the displacement ``D(i theta / (4 alpha))``.

    ``D(i eps)|+-alpha> = exp(+-i eps alpha)|+-alpha + i eps>`` and the overlap
    with ``|+-alpha>`` adds another ``exp(+-i eps alpha)``, giving the logical
    phase ``exp(+-2 i eps alpha) = exp(+-i theta/2)``.
    """
    if abs(alpha) < 1:
        warnings.warn("rot_z is accurate only for |alpha| >= 1", GuardWarning, stacklevel=2)
    eps = theta / (4 * alpha)

    def op(s):
        return sym.apply_displacement(s, qubit if s.n_modes > qubit else 0, 1j * eps)

    a = complex(alpha)
    phases = (
        sym.inner(sym.ket([a]), sym.apply_displacement(sym.ket([a]), 0, 1j * eps)),
        sym.inner(sym.ket([-a]), sym.apply_displacement(sym.ket([-a]), 0, 1j * eps)),
    )
    return _single_report(state, qubit, alpha, op, rot_z_matrix(theta),
                          {"eps": eps, "branch_overlaps": phases})


def rot_x_pi4(state: CoherentSuperposition, qubit: int, alpha: float) -> GateReport:
    """Logical ``exp(i pi X / 4)`` (times ``exp(-i pi/4)``) from the ``n^2`` Kerr kernel at ``pi/2``.

    A physical ``n^2 - n`` Kerr evolution realizes this kernel followed by a
    quarter-turn phase-space rotation, which the caller must account for.
    """
    def op(s):
        return sym.apply_kerr_pi_half(s, qubit if s.n_modes > qubit else 0)

    U = np.exp(-0.25j * np.pi) * (np.cos(np.pi / 4) * np.eye(2) + 1j * np.sin(np.pi / 4) * PAULI["X"])
    return _single_report(state, qubit, alpha, op, U)


def hadamard(state: CoherentSuperposition, qubit: int, alpha: float) -> GateReport:
    """``U^z(pi/4) U^x(pi/4) U^z(pi/4)``, equal to ``i H`` on the code space."""
    eps = np.pi / 2 / (4 * alpha)

    def op(s):
        m = qubit if s.n_modes > qubit else 0
        s = sym.apply_displacement(s, m, 1j * eps)
        s = sym.apply_kerr_pi_half(s, m)
        return sym.apply_displacement(s, m, 1j * eps)

    return _single_report(state, qubit, alpha, op, HADAMARD, {"eps": eps})


# ---------------------------------------------------------------------------
# entangled resources


@lru_cache(maxsize=64)
def _bell_projectors_cached(alpha: complex) -> tuple:
    ecs = [sym.ecs(k, alpha) for k in ECS_KINDS]
    M = sym.gram_matrix(ecs)
    w, V = np.linalg.eigh(M)
    W = (V * w**-0.5) @ V.conj().T
    out = []
    for k in range(4):
        s = ecs[0] * W[0, k]
        for j in range(1, 4):
            s = s + ecs[j] * W[j, k]
        out.append(s)
    return tuple(out)


def bell_projectors(alpha: float) -> dict:
    """Orthonormalized versions of the four normalized ECS (only phi+ and psi+ overlap)."""
    return dict(zip(ECS_KINDS, _bell_projectors_cached(complex(alpha))))


def prepare_anc_channel(alpha: float, normalize: bool = True, return_steps: bool = False):
    """Four-mode channel ``|a,a>|phi+> + |-a,-a>|psi->`` on modes (a1, a2, a3, a4).

    Cross parity between a1 and a3 prepared in ``|sqrt2 a>``, 50:50 splitting
    of a1 with a2 and of a3 with a4 (both vacuum), cross parity on (a3, a4),
    then a logical NOT on a2.
    """
    b = np.sqrt(2) * alpha
    steps = {}
    s = sym.ket([b, 0.0, b, 0.0])
    s = sym.apply_cross_parity(s, 0, 2)
    steps["cross_phase"] = s
    s = sym.apply_beamsplitter(s, 0, 1, np.pi / 2)
    s = sym.apply_beamsplitter(s, 2, 3, np.pi / 2)
    steps["split"] = s
    s = sym.apply_cross_parity(s, 2, 3)
    steps["cross_parity"] = s
    s = sym.apply_phase_rotation(s, 1, np.pi)
    if normalize:
        s = s.normalize()
    return (s, steps) if return_steps else s


def anc_channel_literal(alpha: float, normalized_ecs: bool = False) -> CoherentSuperposition:
    """Direct ket expansion of ``|a,a>|phi+> + |-a,-a>|psi->``."""
    a = alpha
    phi = sym.ecs("phi+", a) if normalized_ecs else CoherentSuperposition([1, 1], [[a, a], [-a, -a]])
    psi = sym.ecs("psi-", a) if normalized_ecs else CoherentSuperposition([1, -1], [[a, -a], [-a, a]])
    return (sym.tensor(sym.ket([a, a]), phi) + sym.tensor(sym.ket([-a, -a]), psi)).normalize()


def ghz_state(alpha: float) -> CoherentSuperposition:
    """``|a,a,a> + |-a,-a,-a>`` from an even cat at ``sqrt3 a`` and two beam splitters."""
    s = sym.tensor(sym.cat(np.sqrt(3) * alpha, 1), sym.vacuum(2))
    s = sym.apply_beamsplitter(s, 0, 1, 2 * np.arccos(1 / np.sqrt(3)))  # |sqrt3 a,0> -> |a,-sqrt2 a>
    s = sym.apply_beamsplitter(s, 1, 2, np.pi / 2)  # |-sqrt2 a,0> -> |-a,a>
    s = sym.apply_phase_rotation(s, 1, np.pi)
    return s.normalize()


def prepare_eta_channel(alpha: float) -> CoherentSuperposition:
    """``|a,a>|phi+> + |-a,-a>|psi+>`` on (a1, a2, a4, a5).

    Two GHZ states, the second rotated to the logical X basis by ideal
    Hadamards, with modes a0 and a3 projected onto the phi+ Bell state.
    """
    z = ghz_state(alpha)
    x = z
    for m in range(3):
        x = apply_logical(x, m, HADAMARD, alpha)
    both = sym.tensor(z, x)  # a0 a1 a2 a3 a4 a5
    return sym.project(both, [0, 3], bell_projectors(alpha)["phi+"]).normalize()


def eta_channel_literal(alpha: float) -> CoherentSuperposition:
    a = alpha
    phi = CoherentSuperposition([1, 1], [[a, a], [-a, -a]])
    psi = CoherentSuperposition([1, 1], [[a, -a], [-a, a]])
    return (sym.tensor(sym.ket([a, a]), phi) + sym.tensor(sym.ket([-a, -a]), psi)).normalize()


# ---------------------------------------------------------------------------
# two-qubit protocols


def _choi_input(alpha: float, pre: np.ndarray | None = None) -> CoherentSuperposition:
    """``(pre x 1)|Phi>`` on modes (q0, q1, r0, r1) with ``|Phi> = sum_x |x>|x> / 2``."""
    f = LogicalFrame(alpha)
    c = np.zeros(16, dtype=complex)
    for x in range(4):
        c[x * 4 + x] = 0.5
    if pre is not None:
        c = (np.kron(pre, np.eye(4)) @ c)
    return f.encode(c)


def _product_input(control: CoherentSuperposition, target: CoherentSuperposition) -> CoherentSuperposition:
    for s in (control, target):
        if s.n_modes != 1 or s.has_electronic:
            raise ValueError("control and target must be single-mode label-free states")
    return sym.tensor(control.normalize(), target.normalize())


@dataclass(frozen=True, eq=False)
class _Branch:
    outcomes: tuple
    state: CoherentSuperposition
    out_modes: tuple[int, int]
    probability: float


def _teleport(state: CoherentSuperposition, pairs, out_modes, alpha, policy) -> list:
    """Measure the mode ``pairs`` in the ECS basis.

    Returns unnormalized branch states. With ideal projectors the measured
    modes are removed and ``out_modes`` are re-indexed accordingly.
    """
    (c1, a1), (c2, a2) = pairs
    if policy == "ideal":
        P = bell_projectors(alpha)
        rest = [m for m in range(state.n_modes) if m not in (c1, a1, c2, a2)]
        new_out = tuple(rest.index(m) for m in out_modes)
        out = []
        for k1, k2 in itertools.product(ECS_KINDS, repeat=2):
            bra = sym.tensor(P[k1], P[k2])
            psi = sym.project(state, [c1, a1, c2, a2], bra)
            out.append(_Branch((k1, k2), psi, new_out, float(sym.inner(psi, psi).real)))
        return out
    if policy == "protocol":
        out = []
        norm0 = sym.inner(state, state).real
        st = state.normalize()
        first = discriminate_ecs(st, alpha, modes=(c1, a1))
        for b1 in first.branches:
            second = discriminate_ecs(b1.state, alpha, modes=(c2, a2))
            for b2 in second.branches:
                p = b1.probability * b2.probability * norm0
                psi = b2.state.with_electronic(None) * np.sqrt(p)
                out.append(_Branch((b1.label, b2.label), psi, tuple(out_modes), float(p)))
        return out
    raise ValueError(f"unknown bell_policy {policy!r}")


def _apply_corrections(br: _Branch, corr: tuple[str, str], alpha) -> CoherentSuperposition:
    s = br.state
    for m, name in zip(br.out_modes, corr):
        if name != "I":
            s = apply_logical(s, m, PAULI[name], alpha)
    return s


def _branch_fidelity(state: CoherentSuperposition, target: CoherentSuperposition, modes) -> float:
    """``|| (<target| x 1) state ||^2`` with ``target`` on ``modes``."""
    r = sym.project(state, list(modes), target)
    if isinstance(r, complex):
        return abs(r) ** 2
    return float(sym.inner(r, r).real)


def _cisy_layout(inp: CoherentSuperposition, alpha: float) -> CoherentSuperposition:
    """Place ``inp`` (c, t, refs...) next to the channel: (c, t, a1, a2, a3, a4, refs...)."""
    anc = prepare_anc_channel(alpha)
    full = sym.tensor(inp, anc)
    n_ref = inp.n_modes - 2
    order = [0, 1] + [inp.n_modes + k for k in range(4)] + [2 + k for k in range(n_ref)]
    return full.permute(order)


def _logical_kraus(branches, corrections, alpha, n_in_modes=2) -> list:
    """Logical 4x4 maps from Choi-state branches whose kept modes are (o0, o1, r0, r1)."""
    f = LogicalFrame(alpha)
    out = []
    for br in branches:
        s = _apply_corrections(br, corrections(br.outcomes), alpha) if corrections else br.state
        if s.n_terms == 0:
            out.append(np.zeros((4, 4), dtype=complex))
            continue
        order = list(br.out_modes) + [m for m in range(s.n_modes) if m not in br.out_modes]
        c = f.decode(s.permute(order))
        out.append(2 * c.reshape(4, 4))
    return out


def _best_pauli_pair(K: np.ndarray, U: np.ndarray) -> tuple[tuple[str, str], float]:
    best, val = None, -1.0
    for p, q in itertools.product(PAULI, repeat=2):
        C = np.kron(PAULI[p], PAULI[q])
        v = abs(np.trace(U.conj().T @ C @ K)) ** 2
        if v > val + 1e-12:
            best, val = (p, q), v
    return best, val


def derive_cisy_corrections(alpha: float = 2.0) -> dict:
    """Exhaustive search of the Pauli corrections for each Bell outcome pair."""
    choi = _choi_input(alpha)
    br = _teleport(_cisy_layout(choi, alpha), [(0, 2), (1, 4)], (3, 5), alpha, "ideal")
    kraus = _logical_kraus(br, None, alpha)
    return {b.outcomes: _best_pauli_pair(K, C_ISIGMA_Y)[0] for b, K in zip(br, kraus)}


def c_isigma_y(control: CoherentSuperposition | None, target: CoherentSuperposition | None, alpha: float,
               bell_policy: str = "ideal") -> GateReport:
    """Controlled ``i sigma_y`` by gate teleportation through the four-mode channel.

    Parameters
    ----------
    control, target : single-mode states, or None to characterize the channel only
    bell_policy : {"ideal", "protocol"}
        ``ideal`` projects onto orthonormalized ECS; ``protocol`` runs the
        parity-readout discrimination, whose undetermined records are kept
        and flagged as uncorrectable.
    """
    policy = {"ideal-projector": "ideal", "full-protocol": "protocol"}.get(bell_policy, bell_policy)
    f = LogicalFrame(alpha)

    def corr(outs):
        return CISY_CORRECTIONS.get(tuple(outs))

    # process fidelity from the Choi state
    choi = _choi_input(alpha)
    tgt_choi = f.encode(np.kron(C_ISIGMA_Y, np.eye(4)) @ f.decode(choi))
    branches = _teleport(_cisy_layout(choi, alpha), [(0, 2), (1, 4)], (3, 5), alpha, policy)
    fid_num, p_ok, flagged, records = 0.0, 0.0, 0.0, []
    for br in branches:
        c = corr(br.outcomes)
        if c is None:
            flagged += br.probability
            records.append({"outcomes": br.outcomes, "probability": br.probability, "correction": None,
                            "flag": "uncorrectable"})
            continue
        s = _apply_corrections(br, c, alpha)
        keep = list(br.out_modes) + [m for m in range(s.n_modes) if m >= s.n_modes - 2]
        fid_num += _branch_fidelity(s, tgt_choi, keep)
        p_ok += br.probability
        records.append({"outcomes": br.outcomes, "probability": br.probability, "correction": c})
    total = sum(b.probability for b in branches)
    proc = fid_num / total
    kraus = _logical_kraus(branches, lambda o: corr(o) or ("I", "I"), alpha) if policy == "ideal" else None

    out_state, fid = None, None
    if control is not None and target is not None:
        inp = _product_input(control, target)
        cin = f.decode(inp)
        tgt = f.encode(C_ISIGMA_Y @ cin).normalize()
        brs = _teleport(_cisy_layout(inp, alpha), [(0, 2), (1, 4)], (3, 5), alpha, policy)
        num, tot, best = 0.0, 0.0, None
        for br in brs:
            tot += br.probability
            c = corr(br.outcomes)
            if c is None:
                continue
            s = _apply_corrections(br, c, alpha)
            num += _branch_fidelity(s, tgt, br.out_modes)
            if best is None or br.probability > best[0]:
                best = (br.probability, s)
        fid = num / tot
        if best is not None and best[1].n_modes == 2:
            out_state = best[1].normalize()
    extra = {"flagged_probability": flagged, "policy": policy}
    if kraus is not None:
        extra["kraus"] = kraus
    return GateReport(out_state, fid, float(proc), float(p_ok / total), tuple(records), None, extra)


def c_isigma_y_truth_table(alpha: float, bell_policy: str = "ideal", basis: str = "lowdin") -> list[dict]:
    """Output fidelity for each of the four logical basis inputs.

    ``basis="lowdin"`` uses the orthonormal frame; ``basis="raw"`` uses the
    bare product kets ``|+-a, +-a>`` and the raw-coefficient target.
    """
    f = LogicalFrame(alpha)
    rows = []
    labels = ["(+a,+a)", "(+a,-a)", "(-a,+a)", "(-a,-a)"]
    for x in range(4):
        bits = ((x >> 1) & 1, x & 1)
        if basis == "lowdin":
            e = np.zeros(2)
            e[bits[0]] = 1
            cs = f.encode(e)
            e2 = np.zeros(2)
            e2[bits[1]] = 1
            ts = f.encode(e2)
            rep = c_isigma_y(cs, ts, alpha, bell_policy)
        else:
            a = alpha
            cs = sym.ket([a if bits[0] == 0 else -a])
            ts = sym.ket([a if bits[1] == 0 else -a])
            rep = _raw_truth_row(cs, ts, alpha, bell_policy)
        rows.append({"input": labels[x], "fidelity": rep.fidelity if hasattr(rep, "fidelity") else rep})
    return rows


def _raw_truth_row(cs, ts, alpha, bell_policy) -> float:
    policy = {"ideal-projector": "ideal", "full-protocol": "protocol"}.get(bell_policy, bell_policy)
    inp = _product_input(cs, ts)
    raw = np.array([inp.weights[0]])
    a = alpha
    idx = (0 if abs(cs.amps[0, 0] - a) < 1e-9 else 1) * 2 + (0 if abs(ts.amps[0, 0] - a) < 1e-9 else 1)
    vec = np.zeros(4, dtype=complex)
    vec[idx] = raw[0]
    out = C_ISIGMA_Y @ vec
    amps = [[a if (k >> 1) == 0 else -a, a if (k & 1) == 0 else -a] for k in range(4)]
    tgt = CoherentSuperposition(out, amps).merge().normalize()
    num, tot = 0.0, 0.0
    for br in _teleport(_cisy_layout(inp, alpha), [(0, 2), (1, 4)], (3, 5), alpha, policy):
        tot += br.probability
        c = CISY_CORRECTIONS.get(tuple(br.outcomes))
        if c is None:
            continue
        num += _branch_fidelity(_apply_corrections(br, c, alpha), tgt, br.out_modes)
    return num / tot


def _symmetric_bs(state: CoherentSuperposition, i: int, j: int, theta: float) -> CoherentSuperposition:
    """Beam splitter with a quarter-turn on ``j`` before and after.

    Maps ``|s a, s' a>`` to ``|s a e^{+-i theta/2}, s' a e^{+-i theta/2}>``, the
    sign being + for equal and - for opposite logical values.
    """
    s = sym.apply_phase_rotation(state, j, np.pi / 2)
    s = sym.apply_beamsplitter(s, i, j, theta)
    return sym.apply_phase_rotation(s, j, -np.pi / 2)


def _cnot_layout(inp: CoherentSuperposition, alpha: float) -> CoherentSuperposition:
    """(c, t, refs...) -> (c, t, p1a, p1b, p2a, p2b, refs...) with two phi+ channels."""
    ch = sym.tensor(sym.ecs("phi+", alpha), sym.ecs("phi+", alpha))
    full = sym.tensor(inp, ch)
    n_ref = inp.n_modes - 2
    order = [0, 1] + [inp.n_modes + k for k in range(4)] + [2 + k for k in range(n_ref)]
    return full.permute(order)


def _zz_phase(alpha: float, theta: float) -> float:
    return 2 * abs(alpha) ** 2 * np.sin(theta / 2)


def _zz_gate(chi: float) -> np.ndarray:
    return np.diag(np.exp(1j * chi * np.array([1, -1, -1, 1])))


def derive_teleport_corrections(alpha: float = 2.0) -> dict:
    """Exhaustive search of single-mode teleportation corrections (theta = 0)."""
    choi = _choi_input(alpha)
    br = _teleport(_cnot_layout(choi, alpha), [(0, 2), (1, 4)], (3, 5), alpha, "ideal")
    kraus = _logical_kraus(br, None, alpha)
    table = {}
    for b, K in zip(br, kraus):
        (p, q), _ = _best_pauli_pair(K, np.eye(4))
        table.setdefault(b.outcomes[0], set()).add(p)
        table.setdefault(b.outcomes[1], set()).add(q)
    if any(len(v) != 1 for v in table.values()):
        raise RuntimeError("teleportation corrections are not outcome-local")
    return {k: v.pop() for k, v in table.items()}


def bs_cnot(control: CoherentSuperposition | None, target: CoherentSuperposition | None, alpha: float,
            theta: float | None = None) -> GateReport:
    """Probabilistic CNOT from a beam splitter and two teleportations through ``|phi+>``.

    The beam splitter imprints ``exp(i chi Z Z)`` with ``chi = 2 alpha^2 sin(theta/2)``
    once the outputs are projected back onto the code space (``chi ~ pi/4`` at
    ``theta = pi/(4 alpha^2)``). Success means that both ideal Bell projections
    land in the code space. Local gates ``S x S`` and Hadamards on the target
    turn the ZZ phase into a CNOT; they are applied as ideal logical operations.
    """
    if theta is None:
        theta = np.pi / (4 * alpha**2)
    guard = theta**2 * alpha**2
    if guard > 1:
        raise GuardError(f"theta^2 alpha^2 = {guard:.3g} is far outside the small-angle regime")
    if guard > 0.1:
        warnings.warn(f"theta^2 alpha^2 = {guard:.3g} > 0.1; the small-angle condition is marginal",
                      GuardWarning, stacklevel=2)
    f = LogicalFrame(alpha)
    chi = _zz_phase(alpha, theta)
    core_U = _zz_gate(chi)
    pre = np.kron(np.eye(2), HADAMARD)
    post = np.kron(np.eye(2), HADAMARD) @ np.kron(S_GATE, S_GATE)

    def corr(outs):
        return TELEPORT_CORRECTIONS[outs[0]], TELEPORT_CORRECTIONS[outs[1]]

    def run(inp):
        s = _symmetric_bs(_cnot_layout(inp, alpha), 0, 1, theta)
        return _teleport(s, [(0, 2), (1, 4)], (3, 5), alpha, "ideal")

    choi = _choi_input(alpha)
    branches = run(choi)
    core = _logical_kraus(branches, corr, alpha)
    kraus = [post @ K @ pre for K in core]
    p_succ = float(sum(np.trace(K.conj().T @ K).real for K in core) / 4)
    records = tuple({"outcomes": b.outcomes, "probability": b.probability / 1.0, "correction": corr(b.outcomes)}
                    for b in branches)
    truth = []
    for x in range(4):
        e = np.zeros(4, dtype=complex)
        e[x] = 1
        outs = [K @ e for K in kraus]
        p = sum(np.vdot(o, o).real for o in outs)
        t = CNOT @ e
        truth.append({"input": x, "fidelity": float(sum(abs(np.vdot(t, o)) ** 2 for o in outs) / p),
                      "success_probability": float(p)})

    out_state, fid = None, None
    if control is not None and target is not None:
        inp = _product_input(control, target)
        cin = f.decode(inp)
        outs = [K @ cin for K in kraus]
        p = sum(np.vdot(o, o).real for o in outs)
        t = CNOT @ cin
        fid = float(sum(abs(np.vdot(t, o)) ** 2 for o in outs) / (p * np.vdot(t, t).real))
        best = max(outs, key=lambda o: np.vdot(o, o).real)
        out_state = f.encode(best / np.linalg.norm(best))
    extra = {
        "theta": theta,
        "chi": chi,
        "guard": guard,
        "core_process_fidelity": process_fidelity(core, core_U),
        "truth_table": truth,
        "kraus": kraus,
    }
    return GateReport(out_state, fid, process_fidelity(kraus, CNOT), p_succ, records, None, extra)


def entangling_witness(alpha: float, control: np.ndarray | None = None, target: np.ndarray | None = None) -> float:
    """Linearized entropy of the control after ``c_isigma_y`` on a product input.

    ``control`` and ``target`` are raw ket coefficients on ``(|a>, |-a>)``; the
    default is the even cat on the control and ``|a>`` on the target. The
    output is averaged over the ideal-projector branches.
    """
    f = LogicalFrame(alpha)
    rc = np.array([1.0, 1.0]) if control is None else np.asarray(control, dtype=complex)
    rt = np.array([1.0, 0.0]) if target is None else np.asarray(target, dtype=complex)
    cin = np.kron(f.sqrt @ rc, f.sqrt @ rt)
    cin = cin / np.linalg.norm(cin)
    rep = c_isigma_y(None, None, alpha)
    rho = sum(np.outer(K @ cin, (K @ cin).conj()) for K in rep.extra["kraus"])
    rho = rho / np.trace(rho).real
    rc_red = np.einsum("ajbj->ab", rho.reshape(2, 2, 2, 2))
    return float(2 * (1 - np.trace(rc_red @ rc_red).real))
