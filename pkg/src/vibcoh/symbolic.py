"""Exact arithmetic on finite superpositions of multimode coherent kets.

A state is ``sum_k w_k |beta_k1, ..., beta_kM> (x) |l_k>`` where ``l_k`` is an
optional electronic label (0 = g, 1 = e). Inner products use the coherent
kernel ``<b|c> = exp(-|b|^2/2 - |c|^2/2 + conj(b) c)`` so no truncation enters.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .hilbert import ModeSpace, StateVector, check_truncation, coherent_amplitudes

__all__ = [
    "MERGE_TOL",
    "CoherentSuperposition",
    "ket",
    "vacuum",
    "cat",
    "ecs",
    "inner",
    "norm",
    "gram_matrix",
    "kernel",
    "apply_displacement",
    "apply_beamsplitter",
    "apply_kerr_pi_half",
    "apply_cross_parity",
    "apply_phase_rotation",
    "apply_mode_map",
    "parity_expectation",
    "project",
    "tensor",
    "to_fock",
]

MERGE_TOL = 1e-9
_DROP_REL = 1e-13
_LABELS = {"g": 0, "e": 1, 0: 0, 1: 1}


@dataclass(frozen=True, eq=False)
class CoherentSuperposition:
    """Weighted sum of coherent product kets.

    Attributes
    ----------
    weights : (T,) complex array
    amps : (T, M) complex array of per-mode coherent amplitudes
    labels : (T,) int array of electronic labels, or None if no electronic factor
    """

    weights: np.ndarray
    amps: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=complex).reshape(-1)
        a = np.array(self.amps, dtype=complex)
        if a.ndim == 1:
            a = a.reshape(len(w), -1) if len(w) else a.reshape(0, 0)
        if a.ndim != 2 or a.shape[0] != w.shape[0]:
            raise ValueError("amps must have one row per weight")
        lab = None
        if self.labels is not None:
            lab = np.array([_LABELS[x] if not isinstance(x, (int, np.integer)) else int(x) for x in self.labels], dtype=int)
            if lab.shape != w.shape or np.any((lab < 0) | (lab > 1)):
                raise ValueError("labels must be one of g/e per term")
            lab.setflags(write=False)
        w.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "amps", a)
        object.__setattr__(self, "labels", lab)

    @property
    def n_modes(self) -> int:
        return self.amps.shape[1]

    @property
    def n_terms(self) -> int:
        return self.weights.shape[0]

    @property
    def has_electronic(self) -> bool:
        return self.labels is not None

    def __repr__(self) -> str:
        return f"CoherentSuperposition(n_modes={self.n_modes}, n_terms={self.n_terms}, electronic={self.has_electronic})"

    def terms(self):
        """Yield ``(weight, amplitudes, label)`` triples."""
        for k in range(self.n_terms):
            lab = None if self.labels is None else "ge"[self.labels[k]]
            yield self.weights[k], tuple(self.amps[k]), lab

    def _with(self, weights=None, amps=None, labels=...):
        return CoherentSuperposition(
            self.weights if weights is None else weights,
            self.amps if amps is None else amps,
            self.labels if labels is ... else labels,
        )

    def norm(self) -> float:
        return norm(self)

    def normalize(self) -> "CoherentSuperposition":
        n = norm(self)
        if n == 0.0:
            raise ValueError("cannot normalize the zero state")
        return self._with(weights=self.weights / n)

    def __mul__(self, c) -> "CoherentSuperposition":
        return self._with(weights=self.weights * c)

    __rmul__ = __mul__

    def __add__(self, other: "CoherentSuperposition") -> "CoherentSuperposition":
        _check_structure(self, other)
        labels = None if self.labels is None else np.concatenate([self.labels, other.labels])
        out = CoherentSuperposition(
            np.concatenate([self.weights, other.weights]),
            np.vstack([self.amps, other.amps]),
            labels,
        )
        return out.merge()

    def __sub__(self, other):
        return self + (-1.0) * other

    def merge(self, tol: float = MERGE_TOL) -> "CoherentSuperposition":
        """Combine kets whose amplitudes agree within ``tol`` and drop cancelled terms."""
        return _merge(self, tol, drop=None)

    def prune(self, tau: float = 1e-12, tol: float = MERGE_TOL) -> "CoherentSuperposition":
        """Merge coincident kets and remove terms with ``|w| < tau``."""
        return _merge(self, tol, drop=tau)

    def with_electronic(self, label: str | None) -> "CoherentSuperposition":
        """Attach (or with ``None`` remove) a common electronic label."""
        if label is None:
            return self._with(labels=None).merge()
        return self._with(labels=np.full(self.n_terms, _LABELS[label], dtype=int))

    def electronic_component(self, label: str) -> "CoherentSuperposition":
        """Unnormalized projection onto one electronic level."""
        if self.labels is None:
            raise ValueError("state has no electronic factor")
        keep = self.labels == _LABELS[label]
        return CoherentSuperposition(self.weights[keep], self.amps[keep], self.labels[keep])

    def permute(self, order: Sequence[int]) -> "CoherentSuperposition":
        """Reorder modes; new mode ``k`` is old mode ``order[k]``."""
        order = list(order)
        if sorted(order) != list(range(self.n_modes)):
            raise ValueError("order must be a permutation of the modes")
        return self._with(amps=self.amps[:, order])

    def amplitudes_on(self, mode: int) -> np.ndarray:
        _check_mode(self, mode)
        return self.amps[:, mode]


def _check_mode(state: CoherentSuperposition, mode: int) -> None:
    if not 0 <= mode < state.n_modes:
        raise IndexError(f"mode {mode} out of range for {state.n_modes} modes")


def _check_structure(a: CoherentSuperposition, b: CoherentSuperposition) -> None:
    if a.n_modes != b.n_modes:
        raise ValueError(f"mode count mismatch: {a.n_modes} vs {b.n_modes}")
    if a.has_electronic != b.has_electronic:
        raise ValueError("electronic structure mismatch")


def _merge(state: CoherentSuperposition, tol: float, drop: float | None) -> CoherentSuperposition:
    T = state.n_terms
    if T == 0:
        return state
    amps, w = state.amps, state.weights
    labels = state.labels if state.labels is not None else np.zeros(T, dtype=int)
    used = np.zeros(T, dtype=bool)
    out_w, out_a, out_l = [], [], []
    for i in range(T):
        if used[i]:
            continue
        same = ~used & (labels == labels[i])
        same &= np.max(np.abs(amps - amps[i]), axis=1, initial=0.0) < tol
        used |= same
        out_w.append(w[same].sum())
        out_a.append(amps[i])
        out_l.append(labels[i])
    out_w = np.array(out_w)
    keep = np.abs(out_w) > _DROP_REL * np.max(np.abs(out_w))
    if drop is not None:
        keep &= np.abs(out_w) >= drop
    if not np.any(keep):
        return CoherentSuperposition(np.zeros(0), np.zeros((0, state.n_modes)), None if state.labels is None else np.zeros(0, int))
    return CoherentSuperposition(
        out_w[keep],
        np.array(out_a)[keep],
        None if state.labels is None else np.array(out_l)[keep],
    )


# ---------------------------------------------------------------------------
# constructors


def ket(amps: Sequence[complex], weight: complex = 1.0, electronic: str | None = None) -> CoherentSuperposition:
    """Single product ket ``weight |amps[0], amps[1], ...>``."""
    labels = None if electronic is None else [electronic]
    return CoherentSuperposition([weight], [list(amps)], labels)


def vacuum(n_modes: int, electronic: str | None = None) -> CoherentSuperposition:
    return ket([0.0] * n_modes, electronic=electronic)


def cat(alpha: complex, sign: int = 1) -> CoherentSuperposition:
    """Normalized single-mode cat ``N(|a> + sign |-a>)``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if sign == -1 and alpha == 0:
        raise ValueError("the odd cat state is undefined at alpha = 0")
    return CoherentSuperposition([1.0, sign], [[alpha], [-alpha]]).normalize()


_ECS = {"phi+": (1, 1), "phi-": (1, -1), "psi+": (-1, 1), "psi-": (-1, -1)}


def ecs(kind: str, alpha: complex) -> CoherentSuperposition:
    """Normalized two-mode entangled coherent state of the given kind."""
    if kind not in _ECS:
        raise ValueError(f"unknown ECS kind {kind!r}")
    second, rel = _ECS[kind]
    return CoherentSuperposition([1.0, rel], [[alpha, second * alpha], [-alpha, -second * alpha]]).normalize()


# ---------------------------------------------------------------------------
# inner products


def kernel(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix of products of single-mode overlaps between ket rows of ``a`` and ``b``."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    log = (
        -0.5 * np.sum(np.abs(a) ** 2, axis=1)[:, None]
        - 0.5 * np.sum(np.abs(b) ** 2, axis=1)[None, :]
        + a.conj() @ b.T
    )
    return np.exp(log)


def _label_mask(a: CoherentSuperposition, b: CoherentSuperposition) -> np.ndarray | float:
    if a.labels is None:
        return 1.0
    return (a.labels[:, None] == b.labels[None, :]).astype(float)


def inner(a: CoherentSuperposition, b: CoherentSuperposition) -> complex:
    """``<a|b>`` via the coherent kernel."""
    _check_structure(a, b)
    if a.n_terms == 0 or b.n_terms == 0:
        return 0j
    K = kernel(a.amps, b.amps) * _label_mask(a, b)
    return complex(a.weights.conj() @ K @ b.weights)


def norm(state: CoherentSuperposition) -> float:
    return float(np.sqrt(max(inner(state, state).real, 0.0)))


def gram_matrix(states: Iterable[CoherentSuperposition]) -> np.ndarray:
    """Gram matrix ``G_ij = <s_i|s_j>``."""
    states = list(states)
    n = len(states)
    G = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            G[i, j] = inner(states[i], states[j])
            G[j, i] = np.conj(G[i, j])
    return G


# ---------------------------------------------------------------------------
# gate rules


def apply_displacement(state: CoherentSuperposition, mode: int, delta: complex) -> CoherentSuperposition:
    """``D(delta)|b> = exp((delta conj(b) - conj(delta) b)/2) |b + delta>``."""
    _check_mode(state, mode)
    b = state.amps[:, mode]
    phase = np.exp(0.5 * (delta * b.conj() - np.conj(delta) * b))
    amps = state.amps.copy()
    amps[:, mode] = b + delta
    return state._with(weights=state.weights * phase, amps=amps).merge()


def apply_beamsplitter(state: CoherentSuperposition, mode_i: int, mode_j: int, theta: float) -> CoherentSuperposition:
    """``|b>_i|c>_j -> |b cos(t/2) + c sin(t/2)>_i |-b sin(t/2) + c cos(t/2)>_j``."""
    if mode_i == mode_j:
        raise ValueError("beam splitter needs two distinct modes")
    _check_mode(state, mode_i)
    _check_mode(state, mode_j)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    b, g = state.amps[:, mode_i], state.amps[:, mode_j]
    amps = state.amps.copy()
    amps[:, mode_i] = b * c + g * s
    amps[:, mode_j] = -b * s + g * c
    return state._with(amps=amps).merge()


def apply_phase_rotation(state: CoherentSuperposition, mode: int, theta: float) -> CoherentSuperposition:
    """``exp(i theta n)``: ``|b> -> |exp(i theta) b>``."""
    _check_mode(state, mode)
    amps = state.amps.copy()
    amps[:, mode] = amps[:, mode] * np.exp(1j * theta)
    return state._with(amps=amps).merge()


def apply_kerr_pi_half(state: CoherentSuperposition, mode: int) -> CoherentSuperposition:
    """``exp(-i pi n^2 / 2)``: ``|b> -> (e^{-i pi/4}|b> + e^{i pi/4}|-b>)/sqrt 2``."""
    _check_mode(state, mode)
    flipped = state.amps.copy()
    flipped[:, mode] = -flipped[:, mode]
    w = state.weights / np.sqrt(2)
    labels = None if state.labels is None else np.concatenate([state.labels, state.labels])
    return CoherentSuperposition(
        np.concatenate([w * np.exp(-0.25j * np.pi), w * np.exp(0.25j * np.pi)]),
        np.vstack([state.amps, flipped]),
        labels,
    ).merge()


def apply_cross_parity(state: CoherentSuperposition, mode_i: int, mode_j: int) -> CoherentSuperposition:
    """``(-1)^(n_i n_j)`` via the parity decomposition of mode ``i``.

    ``|b>|c> -> (|b,c> + |-b,c> + |b,-c> - |-b,-c>) / 2``.
    """
    if mode_i == mode_j:
        raise ValueError("cross parity needs two distinct modes")
    _check_mode(state, mode_i)
    _check_mode(state, mode_j)
    parts_w, parts_a = [], []
    for si, sj, sgn in ((1, 1, 1), (-1, 1, 1), (1, -1, 1), (-1, -1, -1)):
        a = state.amps.copy()
        a[:, mode_i] *= si
        a[:, mode_j] *= sj
        parts_a.append(a)
        parts_w.append(0.5 * sgn * state.weights)
    labels = None if state.labels is None else np.tile(state.labels, 4)
    return CoherentSuperposition(np.concatenate(parts_w), np.vstack(parts_a), labels).merge()


def apply_mode_map(state: CoherentSuperposition, mode: int, image: dict) -> CoherentSuperposition:
    """Linear map on one mode given by its action on individual kets.

    ``image`` maps an amplitude to a list of ``(coefficient, new amplitude)``.
    Amplitudes are looked up within the merge tolerance.
    """
    _check_mode(state, mode)
    keys = list(image)
    keyarr = np.array(keys, dtype=complex)
    ws, amps, labs = [], [], []
    for k in range(state.n_terms):
        b = state.amps[k, mode]
        hit = np.flatnonzero(np.abs(keyarr - b) < 1e-7)
        if hit.size == 0:
            raise ValueError(f"amplitude {b} on mode {mode} is not in the map domain")
        for coeff, new in image[keys[hit[0]]]:
            a = state.amps[k].copy()
            a[mode] = new
            ws.append(state.weights[k] * coeff)
            amps.append(a)
            if state.labels is not None:
                labs.append(state.labels[k])
    if not ws:
        return CoherentSuperposition(np.zeros(0), np.zeros((0, state.n_modes)), None if state.labels is None else [])
    return CoherentSuperposition(ws, amps, None if state.labels is None else labs).merge()


def parity_expectation(state: CoherentSuperposition, mode: int) -> float:
    """``<(-1)^n>`` of one mode (``state`` need not be normalized)."""
    return float(inner(state, apply_phase_rotation(state, mode, np.pi)).real / inner(state, state).real)


# ---------------------------------------------------------------------------
# composition and contraction


def tensor(a: CoherentSuperposition, b: CoherentSuperposition) -> CoherentSuperposition:
    """Product state with ``a``'s modes first. At most one factor may carry labels."""
    if a.has_electronic and b.has_electronic:
        raise ValueError("only one factor may carry an electronic label")
    w = np.outer(a.weights, b.weights).reshape(-1)
    amps = np.hstack(
        [np.repeat(a.amps, b.n_terms, axis=0), np.tile(b.amps, (a.n_terms, 1))]
    )
    labels = None
    if a.has_electronic:
        labels = np.repeat(a.labels, b.n_terms)
    elif b.has_electronic:
        labels = np.tile(b.labels, a.n_terms)
    return CoherentSuperposition(w, amps, labels)


def project(state: CoherentSuperposition, modes: Sequence[int], bra: CoherentSuperposition):
    """Contract ``modes`` of ``state`` with ``<bra|``.

    Returns the unnormalized state on the remaining modes (in their original
    order), or a complex number when no mode remains.
    """
    modes = list(modes)
    if len(set(modes)) != len(modes):
        raise ValueError("repeated mode in projection")
    for m in modes:
        _check_mode(state, m)
    if bra.n_modes != len(modes) or bra.has_electronic:
        raise ValueError("bra must be label-free and cover exactly the projected modes")
    rest = [m for m in range(state.n_modes) if m not in modes]
    K = kernel(bra.amps, state.amps[:, modes])  # (B, T)
    coeff = (bra.weights.conj() @ K) * state.weights
    if not rest:
        if state.has_electronic:
            raise ValueError("cannot fully contract a state that carries electronic labels")
        return complex(coeff.sum())
    return CoherentSuperposition(coeff, state.amps[:, rest], state.labels).merge()


def to_fock(state: CoherentSuperposition, space: ModeSpace) -> StateVector:
    """Expand into a truncated Fock space (not renormalized)."""
    if space.n_modes != state.n_modes:
        raise ValueError("space mode count differs from the state's")
    if space.electronic != state.has_electronic:
        raise ValueError("electronic structure differs between state and space")
    out = np.zeros(space.dim, dtype=complex)
    for k in range(state.n_terms):
        vecs = []
        for m, d in enumerate(space.dims):
            check_truncation(d, state.amps[k, m])
            vecs.append(coherent_amplitudes(d, state.amps[k, m], normalize=False))
        if state.has_electronic:
            el = np.zeros(2, dtype=complex)
            el[state.labels[k]] = 1.0
            vecs.insert(0, el)
        out += state.weights[k] * reduce(np.kron, vecs)
    return StateVector(space, out)
