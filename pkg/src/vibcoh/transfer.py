"""Motional state transfer between two ions through a damped cavity bus.

After eliminating the cavity, the two motional modes ``y1`` (sender) and
``y2`` (receiver) see a single collective jump operator

    J(t) = sqrt(G1(t)) b1 + exp(i phi) sqrt(G2(t)) b2

in the dissipator ``2 J rho J^dag - {J^dag J, rho}``. The dark state of ``J``
moves from ``b1`` to ``b2`` as the rates are swept counter-intuitively,
carrying the sender's state to the receiver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm
from scipy.special import expit

from .dynamics import Trajectory, evolve_lindblad
from .hilbert import DensityMatrix, ModeSpace, StateVector, TruncationError, annihilation, linearized_entropy

__all__ = [
    "PulseSchedule",
    "TransferReport",
    "pulse_gamma",
    "pulse_area",
    "reduced_me_generator",
    "literal_me_rhs",
    "run_transfer",
    "rwa_bs_transfer",
    "DEFAULT_PSI",
]

DEFAULT_PSI = np.array([np.sqrt(2 / 5), -np.sqrt(2 / 5), np.sqrt(1 / 5)], dtype=complex)


def pulse_gamma(t, gamma_tilde: float = 0.03, ordering: str = "counterintuitive"):
    """Rates ``(G1, G2)`` at time ``t`` with ``G2(t) = G1(-t)`` and ``G1 + G2 = gamma_tilde``.

    ``ordering="counterintuitive"`` switches the receiver (``G2``) on first,
    ``G1 = gamma_tilde exp(g t) / (exp(g t) + exp(-g t))``. ``"reversed"`` swaps
    the roles, i.e. ``G1 = gamma_tilde exp(-g t) / (exp(g t) + exp(-g t))``.
    """
    if gamma_tilde <= 0:
        raise ValueError("gamma_tilde must be positive")
    t = np.asarray(t, dtype=float)
    s = 1.0 if ordering == "counterintuitive" else -1.0
    if ordering not in ("counterintuitive", "reversed"):
        raise ValueError(f"unknown pulse ordering {ordering!r}")
    # G e^{x} / (e^{x} + e^{-x}) = G / (1 + e^{-2x}), written to avoid overflow
    g1 = gamma_tilde * expit(2 * s * gamma_tilde * t)
    g2 = gamma_tilde * expit(-2 * s * gamma_tilde * t)
    if g1.ndim == 0:
        return float(g1), float(g2)
    return g1, g2


@dataclass(frozen=True)
class PulseSchedule:
    """Rates switched on over ``[t_open, t_close]`` (units of ``1/kappa``)."""

    gamma_tilde: float = 0.03
    t_open: float = -200.0
    t_close: float = 200.0
    ordering: str = "counterintuitive"
    sampler: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.gamma_tilde <= 0:
            raise ValueError("gamma_tilde must be positive")
        if not self.t_close > self.t_open:
            raise ValueError("t_close must exceed t_open")

    def rates(self, t: float) -> tuple[float, float]:
        if t < self.t_open or t > self.t_close:
            return 0.0, 0.0
        if self.sampler is not None:
            g1, g2 = self.sampler(t)
        else:
            g1, g2 = pulse_gamma(t, self.gamma_tilde, self.ordering)
        return max(float(g1), 0.0), max(float(g2), 0.0)


def pulse_area(schedule: PulseSchedule) -> float:
    """``int sqrt(G1 G2) dt`` over the switching window."""
    val, _ = quad(lambda t: np.sqrt(np.prod(schedule.rates(t))), schedule.t_open, schedule.t_close,
                  limit=200, points=[0.0] if schedule.t_open < 0 < schedule.t_close else None)
    return float(val)


def reduced_me_generator(schedule: PulseSchedule, phi: float = np.pi, space: ModeSpace | None = None,
                         gamma_v: float = 0.0) -> Callable:
    """Return ``t -> [J(t), ...]`` on ``space`` (default 4x4).

    ``gamma_v > 0`` adds independent jumps ``sqrt(gamma_v) b_i`` on both modes.
    """
    space = space or ModeSpace((4, 4))
    b1 = annihilation(space, 0).mat
    b2 = annihilation(space, 1).mat
    extra = [np.sqrt(gamma_v) * b1, np.sqrt(gamma_v) * b2] if gamma_v > 0 else []

    def jumps(t):
        g1, g2 = schedule.rates(t)
        return [np.sqrt(g1) * b1 + np.exp(1j * phi) * np.sqrt(g2) * b2] + extra

    return jumps


def literal_me_rhs(rho: np.ndarray, g1: float, g2: float, space: ModeSpace, phi: float = 0.0) -> np.ndarray:
    """Term-by-term right-hand side of the two-mode reduced master equation."""
    b1 = annihilation(space, 0).mat
    b2 = annihilation(space, 1).mat
    d1, d2 = b1.conj().T, b2.conj().T
    n1, n2 = d1 @ b1, d2 @ b2
    e, ec = np.exp(1j * phi), np.exp(-1j * phi)
    out = g1 * (2 * b1 @ rho @ d1 - n1 @ rho - rho @ n1)
    out += g2 * (2 * b2 @ rho @ d2 - n2 @ rho - rho @ n2)
    c = np.sqrt(g1 * g2)
    out += c * (2 * ec * b1 @ rho @ d2 + 2 * e * b2 @ rho @ d1)
    out -= c * (e * d1 @ b2 @ rho + ec * d2 @ b1 @ rho + e * rho @ d1 @ b2 + ec * rho @ d2 @ b1)
    return out


@dataclass(frozen=True, eq=False)
class TransferReport:
    times: np.ndarray
    fidelity: np.ndarray
    quasi_norm: np.ndarray
    s_lin: np.ndarray
    trace: np.ndarray
    final_state: DensityMatrix
    trajectory: Trajectory
    diagnostics: dict

    def columns(self) -> dict:
        return {
            "kappa_t": self.times,
            "fidelity": self.fidelity,
            "quasi_norm": self.quasi_norm,
            "s_lin": self.s_lin,
            "trace": self.trace,
        }


def _pad(psi_in, dim: int) -> np.ndarray:
    psi = np.asarray(psi_in.amps if isinstance(psi_in, StateVector) else psi_in, dtype=complex).reshape(-1)
    if len(psi) > dim:
        if np.any(np.abs(psi[dim:]) > 0):
            raise TruncationError(f"input state occupies levels beyond the cutoff {dim}")
        psi = psi[:dim]
    if len(psi) == dim and abs(psi[-1]) > 1e-12:
        raise TruncationError("input state populates the top Fock level; increase the cutoff")
    out = np.zeros(dim, dtype=complex)
    out[: len(psi)] = psi
    n = np.linalg.norm(out)
    if n == 0:
        raise ValueError("input state is zero")
    return out / n


def run_transfer(psi_in=DEFAULT_PSI, schedule: PulseSchedule | None = None, dims=(4, 4), phi: float = np.pi,
                 t_start: float = -200.0, t_end: float = 300.0, dt: float = 1.0, gamma_v: float = 0.0,
                 tol: float = 1e-10) -> TransferReport:
    """Transfer ``psi_in`` from mode 0 to mode 1 and record the diagnostics.

    Fidelity is ``<0,psi|rho|0,psi>``; the quasi-norm sums ``<0,i|rho|0,i>``
    over the levels ``i`` spanned by ``psi_in``.
    """
    schedule = schedule or PulseSchedule()
    space = ModeSpace(tuple(dims))
    d1, d2 = space.dims
    psi1 = _pad(psi_in, d1)
    psi2 = _pad(psi1, d2) if d2 != d1 else psi1
    vac1 = np.eye(d1)[0]
    rho0 = StateVector(space, np.kron(psi1, np.eye(d2)[0])).to_density()
    target = np.kron(vac1, psi2)
    support = int(np.max(np.flatnonzero(np.abs(psi2) > 0))) + 1
    n_steps = int(round((t_end - t_start) / dt))
    times = t_start + dt * np.arange(n_steps + 1)
    jumps = reduced_me_generator(schedule, phi, space, gamma_v)
    traj = evolve_lindblad(None, jumps, rho0, times, tol=tol,
                           breakpoints=[schedule.t_open, schedule.t_close])
    S = traj.states
    fid = np.real(np.einsum("i,tij,j->t", target.conj(), S, target))
    qn = np.zeros(len(times))
    for i in range(support):
        v = np.kron(vac1, np.eye(d2)[i])
        qn += np.real(np.einsum("i,tij,j->t", v, S, v))
    tr = np.real(np.einsum("tii->t", S))
    sl = np.array([linearized_entropy(DensityMatrix(space, s)) for s in S])
    return TransferReport(times, fid, qn, sl, tr, DensityMatrix(space, S[-1]), traj, dict(traj.diagnostics))


def rwa_bs_transfer(psi_in, theta: float, dims=(4, 4), phi: float = 0.0) -> StateVector:
    """Unitary beam-splitter exchange ``exp(i theta (e^{i phi} b1^dag b2 + h.c.))``.

    At ``theta = pi/2`` the sender's amplitudes arrive on the receiver with
    the phase ``i^n`` per phonon number (for ``phi = 0``).
    """
    space = ModeSpace(tuple(dims))
    psi1 = _pad(psi_in, space.dims[0])
    b1 = annihilation(space, 0).mat
    b2 = annihilation(space, 1).mat
    X = np.exp(1j * phi) * b1.conj().T @ b2
    U = expm(1j * theta * (X + X.conj().T))
    return StateVector(space, U @ np.kron(psi1, np.eye(space.dims[1])[0]))
