"""Lamb-Dicke expansion of the bichromatic two-mode effective Hamiltonian.

Each term is ``c b_x^dag^n b_x^m b_y^dag^p b_y^q exp(i f t) + h.c.`` with

    c = -(g1 g2 / D1) (i eta_x)^(n+m) (i eta_y)^(p+q) exp(-i phi) / (n! m! p! q!)
    f = (n - m) w_x + (p - q) w_y - d12

in the interaction picture of the trap motion. Stationary terms have ``f = 0``.
Every listed term is paired with its Hermitian conjugate when assembled, so
self-adjoint monomials such as ``n_x`` appear with coefficient ``2 Re c``.
"""

from __future__ import annotations

import io
import itertools
import warnings
from dataclasses import dataclass, field, replace
from math import factorial
from typing import Iterable

import numpy as np

from .hilbert import ModeSpace, Operator, annihilation

__all__ = [
    "STATIONARY_TOL",
    "LaserConfig",
    "HamiltonianTerm",
    "TermList",
    "CompiledHamiltonian",
    "expand",
    "classify",
    "operator_at",
    "compile_terms",
    "preset",
    "engineered_rate",
    "PRESET_KINDS",
]

STATIONARY_TOL = 1e-9


@dataclass(frozen=True)
class LaserConfig:
    """Laser and trap parameters, all frequencies in units of ``g``.

    ``eta_x`` and ``eta_y`` are the effective Lamb-Dicke parameters of the
    beat note projected on each mode.
    """

    g1: float = 1.0
    g2: float = 1.0
    delta1: float = 5.0
    delta12: float = 0.0
    eta_x: float = 0.8
    eta_y: float = 0.0
    phi: float = 0.0
    omega_x: float = 20.0
    omega_y: float = 5.0

    def __post_init__(self):
        if not self.omega_x > self.omega_y:
            raise ValueError(f"omega_x ({self.omega_x}) must exceed omega_y ({self.omega_y})")
        if self.delta1 <= 0:
            raise ValueError("delta1 must be positive")
        if not self.far_detuned:
            warnings.warn(
                f"delta1 = {self.delta1} is not >= 5 max(g1, g2); the effective model is outside its regime",
                stacklevel=3,
            )

    @property
    def far_detuned(self) -> bool:
        return self.delta1 >= 5.0 * max(abs(self.g1), abs(self.g2))

    @property
    def coupling(self) -> float:
        """``g1 g2 / delta1``."""
        return self.g1 * self.g2 / self.delta1


@dataclass(frozen=True)
class HamiltonianTerm:
    """Non-conjugated member of a ``term + h.c.`` pair."""

    coeff: complex
    exps: tuple[int, int, int, int]
    freq: float

    @property
    def stationary(self) -> bool:
        return abs(self.freq) < STATIONARY_TOL

    @property
    def s_x(self) -> int:
        return self.exps[0] - self.exps[1]

    @property
    def s_y(self) -> int:
        return self.exps[2] - self.exps[3]


def _coefficient(cfg: LaserConfig, n, m, p, q) -> complex:
    return (
        -cfg.coupling
        * (1j * cfg.eta_x) ** (n + m)
        * (1j * cfg.eta_y) ** (p + q)
        * np.exp(-1j * cfg.phi)
        / (factorial(n) * factorial(m) * factorial(p) * factorial(q))
    )


def _frequency(cfg: LaserConfig, n, m, p, q) -> float:
    return (n - m) * cfg.omega_x + (p - q) * cfg.omega_y - cfg.delta12


@dataclass(frozen=True)
class TermList:
    """Expanded terms with a stationary / oscillating partition.

    ``engineered`` lists the exponent tuples forming the target interaction;
    other stationary terms are spectators and are only included in the true
    Hamiltonian on request.
    """

    terms: tuple[HamiltonianTerm, ...]
    max_order: int
    config: LaserConfig
    freq_cutoff: float
    engineered: tuple[tuple[int, int, int, int], ...] = ()

    @property
    def stationary(self) -> tuple[HamiltonianTerm, ...]:
        return tuple(t for t in self.terms if t.stationary)

    @property
    def nonstationary(self) -> tuple[HamiltonianTerm, ...]:
        """Oscillating terms retained under the cutoff."""
        return tuple(t for t in self.terms if not t.stationary and abs(t.freq) <= self.freq_cutoff + STATIONARY_TOL)

    @property
    def discarded(self) -> tuple[HamiltonianTerm, ...]:
        return tuple(t for t in self.terms if not t.stationary and abs(t.freq) > self.freq_cutoff + STATIONARY_TOL)

    @property
    def engineered_terms(self) -> tuple[HamiltonianTerm, ...]:
        eng = set(self.engineered)
        return tuple(t for t in self.stationary if t.exps in eng)

    @property
    def spectators(self) -> tuple[HamiltonianTerm, ...]:
        eng = set(self.engineered)
        return tuple(t for t in self.stationary if t.exps not in eng)

    def select(self, which: str = "true", include_spectators: bool = False) -> tuple[HamiltonianTerm, ...]:
        """Term subset.

        ``"ideal"``: engineered stationary terms only. ``"stationary"``: all
        stationary terms. ``"true"``: the stationary part plus the retained
        oscillating terms. ``"all"``: every expanded term.
        """
        if which == "all":
            return self.terms
        base = self.engineered_terms if self.engineered else self.stationary
        if include_spectators or which == "stationary":
            base = self.stationary
        if which in ("ideal", "stationary"):
            return base
        if which == "true":
            return base + self.nonstationary
        raise ValueError(f"unknown term selection {which!r}")

    def term(self, exps) -> HamiltonianTerm:
        for t in self.terms:
            if t.exps == tuple(exps):
                return t
        raise KeyError(exps)

    def to_table(self) -> str:
        """Plain-text table: coeff_re, coeff_im, n, m, p, q, freq, kind."""
        out = io.StringIO()
        out.write("coeff_re,coeff_im,n,m,p,q,freq,kind\n")
        eng = set(self.engineered)
        for t in self.terms:
            if t.stationary:
                kind = "engineered" if t.exps in eng else ("stationary" if not eng else "spectator")
            else:
                kind = "nonstationary" if abs(t.freq) <= self.freq_cutoff + STATIONARY_TOL else "discarded"
            out.write(
                f"{t.coeff.real:.12g},{t.coeff.imag:.12g},{t.exps[0]},{t.exps[1]},{t.exps[2]},{t.exps[3]},{t.freq:.12g},{kind}\n"
            )
        return out.getvalue()

    @staticmethod
    def from_table(text: str, config: LaserConfig, max_order: int, freq_cutoff: float) -> "TermList":
        rows = [r for r in text.strip().splitlines()[1:] if r.strip()]
        terms, eng = [], []
        for r in rows:
            f = r.split(",")
            exps = tuple(int(x) for x in f[2:6])
            terms.append(HamiltonianTerm(complex(float(f[0]), float(f[1])), exps, float(f[6])))
            if len(f) > 7 and f[7].strip() == "engineered":
                eng.append(exps)
        return TermList(tuple(terms), max_order, config, freq_cutoff, tuple(eng))


def expand(config: LaserConfig, max_order: int, freq_cutoff: float | None = None) -> TermList:
    """All terms with ``0 < n+m+p+q <= max_order``; zero coefficients are skipped."""
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    if freq_cutoff is None:
        freq_cutoff = config.omega_x + config.omega_y
    terms = []
    for order in range(1, max_order + 1):
        for n, m, p, q in itertools.product(range(order + 1), repeat=4):
            if n + m + p + q != order:
                continue
            c = _coefficient(config, n, m, p, q)
            if c == 0:
                continue
            terms.append(HamiltonianTerm(complex(c), (n, m, p, q), float(_frequency(config, n, m, p, q))))
    return TermList(tuple(terms), max_order, config, float(freq_cutoff))


def classify(terms: TermList, delta12: float | None = None, freq_cutoff: float | None = None) -> TermList:
    """Re-tune the beat note and/or cutoff and recompute every term's frequency."""
    if freq_cutoff is not None and freq_cutoff < 0:
        raise ValueError("freq_cutoff must be >= 0")
    cfg = terms.config if delta12 is None else replace(terms.config, delta12=delta12)
    new = tuple(replace(t, freq=float(_frequency(cfg, *t.exps))) for t in terms.terms)
    return TermList(
        new,
        terms.max_order,
        cfg,
        terms.freq_cutoff if freq_cutoff is None else float(freq_cutoff),
        terms.engineered,
    )


def _monomial(space: ModeSpace, exps, modes=(0, 1)) -> np.ndarray:
    n, m, p, q = exps
    mx, my = modes
    mat = np.eye(space.dim, dtype=complex)
    if n or m:
        bx = annihilation(space, mx).mat
        mat = np.linalg.matrix_power(bx.conj().T, n) @ np.linalg.matrix_power(bx, m)
    if p or q:
        by = annihilation(space, my).mat
        mat = mat @ np.linalg.matrix_power(by.conj().T, p) @ np.linalg.matrix_power(by, q)
    return mat


@dataclass(frozen=True, eq=False)
class CompiledHamiltonian:
    """``H(t) = H0 + sum_f [exp(i f t) A_f + h.c.]`` with terms grouped by frequency."""

    space: ModeSpace
    static: np.ndarray
    freqs: tuple[float, ...]
    blocks: tuple[np.ndarray, ...]
    _cache: dict = field(default_factory=dict, repr=False)

    def matrix(self, t: float) -> np.ndarray:
        h = self.static.copy()
        for f, A in zip(self.freqs, self.blocks):
            X = np.exp(1j * f * t) * A
            h += X + X.conj().T
        return h

    def __call__(self, t: float) -> Operator:
        return Operator(self.space, self.matrix(t))

    @property
    def time_independent(self) -> bool:
        return not self.freqs


def compile_terms(terms: Iterable[HamiltonianTerm], space: ModeSpace, modes=(0, 1)) -> CompiledHamiltonian:
    """Assemble matrices once so that ``H(t)`` is cheap to evaluate."""
    static = np.zeros((space.dim, space.dim), dtype=complex)
    groups: dict[float, np.ndarray] = {}
    for t in terms:
        if (t.exps[2] or t.exps[3]) and space.n_modes < 2:
            raise ValueError("term acts on the y mode but the space has one mode")
        M = t.coeff * _monomial(space, t.exps, modes)
        if t.stationary:
            static += M + M.conj().T
        else:
            key = round(t.freq, 9)
            groups[key] = groups.get(key, 0) + M
    freqs = tuple(sorted(groups))
    return CompiledHamiltonian(space, static, freqs, tuple(groups[f] for f in freqs))


def operator_at(terms, t: float, space: ModeSpace, which: str = "all") -> Operator:
    """Hermitian ``sum_k [c_k exp(i f_k t) O_k + h.c.]`` at time ``t``.

    ``terms`` may be a ``TermList`` (subset chosen by ``which``) or any
    iterable of ``HamiltonianTerm``.
    """
    if isinstance(terms, TermList):
        terms = terms.select(which) if which != "all" else terms.terms
    return compile_terms(terms, space)(t)


# ---------------------------------------------------------------------------
# presets

PRESET_KINDS = ("displacement", "kerr", "crossphase")

_ENGINEERED = {
    "displacement": ((1, 0, 0, 0),),
    "kerr": ((2, 2, 0, 0),),
    "crossphase": ((1, 1, 1, 1),),
}


def preset(kind: str, eta: float = 0.4, gamma: float = 20.0, delta1: float = 5.0, g: float = 1.0,
           trap_ratio: float = 4.0, max_order: int | None = None, eta_y: float | None = None,
           phi: float | None = None, freq_cutoff: float | None = None) -> tuple[LaserConfig, TermList]:
    """Laser geometries for the three engineered interactions.

    Parameters
    ----------
    kind : {"displacement", "kerr", "crossphase"}
    eta : float
        Bare Lamb-Dicke parameter. Counter-propagating beams along x give
        ``eta_x' = 2 eta``; beams at 45/225 degrees give ``eta_x' = eta_y' = sqrt(2) eta``.
    gamma : float
        ``omega_x / g``; ``omega_y = omega_x / trap_ratio``.
    max_order : int, optional
        Expansion order; defaults to 2 for displacement and 4 otherwise.
    eta_y : float, optional
        Bare y Lamb-Dicke parameter for the crossphase preset (defaults to ``eta``).
    phi : float, optional
        Laser phase difference. The displacement preset defaults to ``pi``
        so that the drift ``alpha(t) = (g^2 eta_x'/delta1) t`` is real positive.
    """
    if kind not in PRESET_KINDS:
        raise ValueError(f"unknown preset {kind!r}; expected one of {PRESET_KINDS}")
    omega_x = gamma * g
    omega_y = omega_x / trap_ratio
    if kind == "displacement":
        cfg = LaserConfig(g, g, delta1, omega_x, 2 * eta, 0.0, np.pi if phi is None else phi, omega_x, omega_y)
        order = 2 if max_order is None else max_order
    elif kind == "kerr":
        cfg = LaserConfig(g, g, delta1, 0.0, 2 * eta, 0.0, 0.0 if phi is None else phi, omega_x, omega_y)
        order = 4 if max_order is None else max_order
    else:
        ey = eta if eta_y is None else eta_y
        cfg = LaserConfig(g, g, delta1, 0.0, np.sqrt(2) * eta, np.sqrt(2) * ey, 0.0 if phi is None else phi,
                          omega_x, omega_y)
        order = 4 if max_order is None else max_order
    tl = expand(cfg, order, freq_cutoff)
    return cfg, replace(tl, engineered=_ENGINEERED[kind])


def engineered_rate(kind: str, cfg: LaserConfig) -> complex:
    """Effective rate of the engineered interaction from the expansion itself.

    displacement: ``H = i r b^dag + h.c.`` returns the drift ``r``
    (``exp(-iHt)|0> = |r t>``); kerr: ``H = -chi (n^2 - n)`` returns ``chi``;
    crossphase: ``H = -chi n_x n_y`` returns ``chi``. Each rate includes the
    Hermitian doubling.
    """
    if kind == "displacement":
        c = _coefficient(cfg, 1, 0, 0, 0)
        return complex(-1j * c)
    if kind == "kerr":
        return float(-2 * _coefficient(cfg, 2, 2, 0, 0).real)
    if kind == "crossphase":
        return float(-2 * _coefficient(cfg, 1, 1, 1, 1).real)
    raise ValueError(f"unknown preset {kind!r}")
