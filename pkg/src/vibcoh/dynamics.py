"""Schrodinger and Lindblad integrators on truncated Fock spaces."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh, expm

from .hilbert import DensityMatrix, ModeSpace, Operator, StateVector, linearized_entropy, partial_trace

__all__ = [
    "IntegrationError",
    "NonHermitianError",
    "Trajectory",
    "evolve_schrodinger",
    "evolve_lindblad",
    "observable_series",
    "overlap_with",
    "fidelity_with",
    "expectation",
    "trace_of",
    "linear_entropy_of",
    "lindblad_rhs",
]


class IntegrationError(RuntimeError):
    """The ODE solver failed to complete a step."""


class NonHermitianError(ValueError):
    """A Hamiltonian supplied to the integrator is not Hermitian."""


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution.

    ``states`` has shape ``(T, D)`` for kets and ``(T, D, D)`` for density
    matrices. ``diagnostics`` records conservation checks of the run.
    """

    times: np.ndarray
    states: np.ndarray
    space: ModeSpace
    kind: str
    observables: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int):
        if self.kind == "ket":
            return StateVector(self.space, self.states[i])
        return DensityMatrix(self.space, self.states[i])

    def with_observables(self, series: Mapping[str, np.ndarray]) -> "Trajectory":
        obs = dict(self.observables)
        obs.update({k: np.asarray(v) for k, v in series.items()})
        return Trajectory(self.times, self.states, self.space, self.kind, obs, dict(self.diagnostics))

    def columns(self, time_name: str = "t") -> dict:
        cols = {time_name: self.times}
        cols.update(self.observables)
        return cols


def _as_matrix(h, t=None) -> np.ndarray:
    if isinstance(h, Operator):
        return h.mat
    if callable(h):
        return _as_matrix(h(t))
    return np.asarray(h, dtype=complex)


def _check_hermitian(H, times, tol=1e-10) -> None:
    for t in times:
        m = _as_matrix(H, t)
        dev = np.max(np.abs(m - m.conj().T))
        if dev > tol * max(1.0, np.max(np.abs(m))):
            raise NonHermitianError(f"Hamiltonian is not Hermitian at t={t} (deviation {dev:.3e})")


def _is_static(H) -> bool:
    if isinstance(H, Operator) or isinstance(H, np.ndarray):
        return True
    return bool(getattr(H, "time_independent", False))


def evolve_schrodinger(H, psi0: StateVector, t_grid, tol: float = 1e-10, method: str = "dop853",
                       max_step: float | None = None) -> Trajectory:
    """Solve ``i dpsi/dt = H(t) psi`` and sample on ``t_grid``.

    Parameters
    ----------
    H : Operator, ndarray, or callable ``t -> Operator | ndarray``
    psi0 : StateVector
        State at ``t_grid[0]``.
    tol : float
        Relative tolerance for the adaptive method.
    method : {"dop853", "magnus4", "exact"}
        ``dop853`` is adaptive Runge-Kutta of order 8; ``magnus4`` is the
        fourth-order two-point Gauss Magnus propagator with a fixed step
        ``max_step`` (default 0.01); ``exact`` diagonalizes a time-independent ``H``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 1 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    D = psi0.space.dim
    probe = _as_matrix(H, t_grid[0])
    if probe.shape != (D, D):
        raise ValueError(f"Hamiltonian shape {probe.shape} does not match state dimension {D}")
    _check_hermitian(H, [t_grid[0], 0.5 * (t_grid[0] + t_grid[-1]), t_grid[-1]])
    y0 = psi0.amps.astype(complex)

    if method == "exact" or (method == "dop853" and _is_static(H)):
        if not _is_static(H):
            raise ValueError("method='exact' needs a time-independent Hamiltonian")
        w, V = eigh(probe)
        c0 = V.conj().T @ y0
        dt = t_grid - t_grid[0]
        states = (V @ (np.exp(-1j * np.outer(w, dt)) * c0[:, None])).T
    elif method == "dop853":
        def rhs(t, y):
            return -1j * (_as_matrix(H, t) @ y)

        kw = {} if max_step is None else {"max_step": max_step}
        if len(t_grid) == 1:
            states = y0[None, :]
        else:
            sol = solve_ivp(rhs, (t_grid[0], t_grid[-1]), y0, method="DOP853", t_eval=t_grid,
                            rtol=tol, atol=tol * 1e-2, **kw)
            if sol.status != 0:
                raise IntegrationError(sol.message)
            states = sol.y.T
    elif method == "magnus4":
        states = _magnus4(H, y0, t_grid, 0.01 if max_step is None else max_step)
    else:
        raise ValueError(f"unknown method {method!r}")

    norms = np.linalg.norm(states, axis=1)
    diag = {"norm_drift": float(np.max(np.abs(norms - np.linalg.norm(y0)))), "method": method}
    return Trajectory(t_grid, states, psi0.space, "ket", {}, diag)


def _magnus4(H, y0, t_grid, h_max):
    c1, c2 = 0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6
    y = y0.copy()
    out = [y.copy()]
    for a, b in zip(t_grid[:-1], t_grid[1:]):
        n = max(1, int(np.ceil((b - a) / h_max - 1e-12)))
        h = (b - a) / n
        for k in range(n):
            t = a + k * h
            H1 = _as_matrix(H, t + c1 * h)
            H2 = _as_matrix(H, t + c2 * h)
            omega = -0.5j * h * (H1 + H2) - (np.sqrt(3) / 12) * h * h * (H2 @ H1 - H1 @ H2)
            y = expm(omega) @ y
        out.append(y.copy())
    return np.array(out)


def lindblad_rhs(rho: np.ndarray, H: np.ndarray | None, jumps: Sequence[np.ndarray]) -> np.ndarray:
    """``-i[H, rho] + sum_k (2 J rho J^dag - {J^dag J, rho})``.

    This dissipator has no factor 1/2, so ``D[sqrt(G) b]`` damps ``<n>`` at rate ``2G``.
    """
    out = np.zeros_like(rho) if H is None else -1j * (H @ rho - rho @ H)
    for J in jumps:
        Jd = J.conj().T
        JdJ = Jd @ J
        out += 2 * J @ rho @ Jd - JdJ @ rho - rho @ JdJ
    return out


def evolve_lindblad(H, jumps, rho0, t_grid, tol: float = 1e-10, max_step: float | None = None,
                    breakpoints: Sequence[float] = ()) -> Trajectory:
    """Integrate the master equation with time-dependent jump operators.

    Parameters
    ----------
    H : Operator, ndarray, callable or None
    jumps : list of Operator/ndarray, or callable ``t -> list``
    rho0 : DensityMatrix or StateVector
    breakpoints : sequence of float
        Times where the generator is discontinuous; the solver restarts there.
    """
    if isinstance(rho0, StateVector):
        rho0 = rho0.to_density()
    space = rho0.space
    D = space.dim
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 2 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing with at least two points")

    def H_at(t):
        if H is None:
            return None
        return _as_matrix(H, t)

    def J_at(t):
        js = jumps(t) if callable(jumps) else jumps
        return [_as_matrix(j) for j in js]

    for m in [H_at(t_grid[0])] + J_at(t_grid[0]):
        if m is not None and m.shape != (D, D):
            raise ValueError(f"operator shape {m.shape} does not match density dimension {D}")
    if H is not None:
        _check_hermitian(H, [t_grid[0], t_grid[-1]])

    def rhs(t, y):
        rho = y.reshape(D, D)
        return lindblad_rhs(rho, H_at(t), J_at(t)).ravel()

    cuts = [t_grid[0]] + [b for b in sorted(breakpoints) if t_grid[0] < b < t_grid[-1]] + [t_grid[-1]]
    y = rho0.mat.ravel().astype(complex)
    states = []
    kw = {} if max_step is None else {"max_step": max_step}
    for k, (a, b) in enumerate(zip(cuts[:-1], cuts[1:])):
        last = k == len(cuts) - 2
        sel = (t_grid >= a) & ((t_grid <= b) if last else (t_grid < b))
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", t_eval=np.concatenate([t_grid[sel], [b]]) if not last else t_grid[sel],
                        rtol=tol, atol=tol * 1e-2, **kw)
        if sol.status != 0:
            raise IntegrationError(sol.message)
        ys = sol.y.T
        if not last:
            y = ys[-1]
            ys = ys[:-1]
        states.append(ys)
    states = np.concatenate(states).reshape(-1, D, D)

    traces = np.real(np.einsum("tii->t", states))
    herm = np.max(np.abs(states - np.conj(np.transpose(states, (0, 2, 1)))))
    sample = np.unique(np.linspace(0, len(t_grid) - 1, min(len(t_grid), 25)).astype(int))
    min_eig = min(np.linalg.eigvalsh(0.5 * (states[i] + states[i].conj().T)).min() for i in sample)
    diag = {
        "trace_drift": float(np.max(np.abs(traces - traces[0]))),
        "hermiticity": float(herm),
        "min_eigenvalue": float(min_eig),
    }
    return Trajectory(t_grid, states, space, "density", {}, diag)


# ---------------------------------------------------------------------------
# observables


def overlap_with(target: StateVector) -> Callable:
    """``|<target|psi>|`` for kets, ``sqrt(<target|rho|target>)`` for densities."""
    t = target.amps.conj()

    def f(states, kind):
        if kind == "ket":
            return np.abs(states @ t)
        return np.sqrt(np.clip(np.real(np.einsum("i,tij,j->t", t, states, t.conj())), 0, None))

    return f


def fidelity_with(target: StateVector) -> Callable:
    """``|<target|psi>|^2`` or ``<target|rho|target>``."""
    ov = overlap_with(target)
    return lambda states, kind: ov(states, kind) ** 2


def expectation(op) -> Callable:
    m = _as_matrix(op)

    def f(states, kind):
        if kind == "ket":
            vals = np.einsum("ti,ij,tj->t", states.conj(), m, states)
        else:
            vals = np.einsum("ij,tji->t", m, states)
        return vals.real if np.allclose(m, m.conj().T) else vals

    return f


def trace_of(states, kind):
    if kind == "ket":
        return np.sum(np.abs(states) ** 2, axis=1)
    return np.real(np.einsum("tii->t", states))


def linear_entropy_of(space: ModeSpace, keep=None) -> Callable:
    """Linearized entropy of the (optionally reduced) state."""

    def f(states, kind):
        out = []
        for s in states:
            rho = DensityMatrix(space, np.outer(s, s.conj()) if kind == "ket" else s)
            if keep is not None:
                rho = partial_trace(rho, keep)
            out.append(linearized_entropy(rho))
        return np.array(out)

    return f


def observable_series(traj: Trajectory, funcs: Mapping[str, object]) -> dict:
    """Evaluate named observables along a trajectory.

    Values of ``funcs`` may be an ``Operator`` (expectation value), a
    ``StateVector`` (overlap magnitude) or a callable ``(states, kind) -> array``.
    """
    out = {}
    for name, f in funcs.items():
        if isinstance(f, Operator):
            if f.space != traj.space:
                raise ValueError(f"observable {name!r} lives on a different space")
            f = expectation(f)
        elif isinstance(f, StateVector):
            if f.space != traj.space:
                raise ValueError(f"target {name!r} lives on a different space")
            f = overlap_with(f)
        out[name] = np.asarray(f(traj.states, traj.kind))
    return out
