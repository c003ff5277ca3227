"""Truncated Fock-space engine.

Basis ordering: the optional two-level electronic factor is the slowest
index (``g`` = 0, ``e`` = 1), followed by the vibrational modes in declared
order, with the Fock index running fastest inside each mode. This is the
ordering produced by ``np.kron(electronic, mode0, mode1, ...)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import expm

__all__ = [
    "TruncationError",
    "SpaceMismatchError",
    "ModeSpace",
    "StateVector",
    "DensityMatrix",
    "Operator",
    "identity",
    "annihilation",
    "creation",
    "number_operator",
    "parity_operator",
    "sigma_plus",
    "sigma_minus",
    "sigma_z",
    "electronic_projector",
    "displacement_operator",
    "phase_rotation_operator",
    "beamsplitter_operator",
    "kerr_operator",
    "cross_parity_operator",
    "fock_state",
    "coherent_amplitudes",
    "coherent_state",
    "cat_state",
    "ecs_state",
    "product_state",
    "overlap",
    "fidelity",
    "linearized_entropy",
    "partial_trace",
    "check_truncation",
    "ELECTRONIC",
]

ELECTRONIC = "electronic"


class TruncationError(ValueError):
    """Raised when a coherent amplitude is too large for the Fock cutoff."""


class SpaceMismatchError(ValueError):
    """Raised when objects living on different spaces are combined."""


@dataclass(frozen=True)
class ModeSpace:
    """Product of truncated oscillator spaces, optionally times a qubit.

    Parameters
    ----------
    dims : tuple of int
        Fock cutoff of each vibrational mode (levels ``0 .. dim-1``).
    electronic : bool
        Whether a two-level internal factor ``{|g>, |e>}`` is attached.
    """

    dims: tuple[int, ...]
    electronic: bool = False

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ValueError("ModeSpace needs at least one mode")
        if any(d < 2 for d in dims):
            raise ValueError(f"every mode dimension must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    @property
    def factor_dims(self) -> tuple[int, ...]:
        """Dimensions of all tensor factors in basis order."""
        return ((2,) if self.electronic else ()) + self.dims

    @property
    def dim(self) -> int:
        return int(np.prod(self.factor_dims))

    def factor_index(self, mode: int) -> int:
        self._check_mode(mode)
        return mode + (1 if self.electronic else 0)

    def _check_mode(self, mode: int) -> None:
        if not isinstance(mode, (int, np.integer)) or not 0 <= mode < self.n_modes:
            raise IndexError(f"mode {mode!r} out of range for {self.n_modes} modes")

    def basis_index(self, occupations: Sequence[int], electronic: str | int = "g") -> int:
        """Flat index of ``|el, n_0, n_1, ...>``."""
        if len(occupations) != self.n_modes:
            raise ValueError("one occupation per mode is required")
        idx = 0
        for n, d in zip(occupations, self.dims):
            if not 0 <= n < d:
                raise IndexError(f"occupation {n} outside cutoff {d}")
            idx = idx * d + int(n)
        if self.electronic:
            idx += _el_index(electronic) * int(np.prod(self.dims))
        return idx


def _el_index(label) -> int:
    if label in ("g", 0):
        return 0
    if label in ("e", 1):
        return 1
    raise ValueError(f"electronic label must be 'g' or 'e', got {label!r}")


def _same_space(a, b) -> None:
    if a.space != b.space:
        raise SpaceMismatchError(f"space mismatch: {a.space} vs {b.space}")


@dataclass(frozen=True, eq=False)
class StateVector:
    space: ModeSpace
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.shape[0] != self.space.dim:
            raise ValueError(f"expected {self.space.dim} amplitudes, got {amps.shape[0]}")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalize(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.space, self.amps / n)

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.space, np.outer(self.amps, self.amps.conj()))

    def tensor_view(self) -> np.ndarray:
        return self.amps.reshape(self.space.factor_dims)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    space: ModeSpace
    mat: np.ndarray

    def __post_init__(self):
        mat = np.array(self.mat, dtype=complex)
        d = self.space.dim
        if mat.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got {mat.shape}")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def purity(self) -> float:
        return float(np.real(np.vdot(self.mat, self.mat)))

    def check(self, herm_tol=1e-10, trace_tol=1e-8, eig_tol=1e-8) -> None:
        """Raise ``ValueError`` if the matrix is not a valid state."""
        herm = np.max(np.abs(self.mat - self.mat.conj().T))
        if herm > herm_tol:
            raise ValueError(f"not Hermitian (max deviation {herm:.3e})")
        if abs(self.trace() - 1.0) > trace_tol:
            raise ValueError(f"trace {self.trace():.12g} differs from 1")
        lam = np.linalg.eigvalsh(0.5 * (self.mat + self.mat.conj().T)).min()
        if lam < -eig_tol:
            raise ValueError(f"negative eigenvalue {lam:.3e}")


@dataclass(frozen=True, eq=False)
class Operator:
    space: ModeSpace
    mat: np.ndarray

    def __post_init__(self):
        mat = np.array(self.mat, dtype=complex)
        d = self.space.dim
        if mat.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got {mat.shape}")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    def dag(self) -> "Operator":
        return Operator(self.space, self.mat.conj().T)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            _same_space(self, other)
            return Operator(self.space, self.mat @ other.mat)
        if isinstance(other, StateVector):
            _same_space(self, other)
            return StateVector(self.space, self.mat @ other.amps)
        if isinstance(other, DensityMatrix):
            _same_space(self, other)
            return DensityMatrix(self.space, self.mat @ other.mat @ self.mat.conj().T)
        return NotImplemented

    def __add__(self, other):
        _same_space(self, other)
        return Operator(self.space, self.mat + other.mat)

    def __sub__(self, other):
        _same_space(self, other)
        return Operator(self.space, self.mat - other.mat)

    def __mul__(self, scalar):
        return Operator(self.space, self.mat * scalar)

    __rmul__ = __mul__

    def expect(self, state) -> complex:
        if isinstance(state, StateVector):
            _same_space(self, state)
            return complex(np.vdot(state.amps, self.mat @ state.amps))
        _same_space(self, state)
        return complex(np.trace(self.mat @ state.mat))

    def is_hermitian(self, tol=1e-10) -> bool:
        return bool(np.max(np.abs(self.mat - self.mat.conj().T), initial=0.0) <= tol)


# ---------------------------------------------------------------------------
# operator constructors


def _embed(space: ModeSpace, factors: dict[int, np.ndarray]) -> np.ndarray:
    """Kronecker product with ``factors`` placed at tensor-factor positions."""
    mats = [factors.get(k, np.eye(d)) for k, d in enumerate(space.factor_dims)]
    return reduce(np.kron, mats)


def _ladder(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)


def identity(space: ModeSpace) -> Operator:
    return Operator(space, np.eye(space.dim))


def annihilation(space: ModeSpace, mode: int) -> Operator:
    k = space.factor_index(mode)
    return Operator(space, _embed(space, {k: _ladder(space.dims[mode])}))


def creation(space: ModeSpace, mode: int) -> Operator:
    return annihilation(space, mode).dag()


def number_operator(space: ModeSpace, mode: int) -> Operator:
    k = space.factor_index(mode)
    return Operator(space, _embed(space, {k: np.diag(np.arange(space.dims[mode], dtype=float))}))


def parity_operator(space: ModeSpace, mode: int) -> Operator:
    k = space.factor_index(mode)
    n = np.arange(space.dims[mode])
    return Operator(space, _embed(space, {k: np.diag((-1.0) ** n)}))


def _require_electronic(space: ModeSpace) -> None:
    if not space.electronic:
        raise ValueError("space has no electronic factor")


def sigma_plus(space: ModeSpace) -> Operator:
    """``|e><g|`` on the electronic factor."""
    _require_electronic(space)
    return Operator(space, _embed(space, {0: np.array([[0, 0], [1, 0]], dtype=complex)}))


def sigma_minus(space: ModeSpace) -> Operator:
    return sigma_plus(space).dag()


def sigma_z(space: ModeSpace) -> Operator:
    """``|e><e| - |g><g|``."""
    _require_electronic(space)
    return Operator(space, _embed(space, {0: np.diag([-1.0, 1.0]).astype(complex)}))


def electronic_projector(space: ModeSpace, label: str) -> Operator:
    _require_electronic(space)
    p = np.zeros((2, 2), dtype=complex)
    i = _el_index(label)
    p[i, i] = 1.0
    return Operator(space, _embed(space, {0: p}))


def displacement_operator(space: ModeSpace, mode: int, alpha: complex) -> Operator:
    """``exp(alpha b^dag - conj(alpha) b)`` from the truncated generator."""
    b = _ladder(space.dims[mode])
    gen = alpha * b.conj().T - np.conj(alpha) * b
    return Operator(space, _embed(space, {space.factor_index(mode): expm(gen)}))


def phase_rotation_operator(space: ModeSpace, mode: int, theta: float) -> Operator:
    """``exp(i theta n)``, mapping ``|beta>`` to ``|exp(i theta) beta>``."""
    n = np.arange(space.dims[mode])
    return Operator(space, _embed(space, {space.factor_index(mode): np.diag(np.exp(1j * theta * n))}))


def kerr_operator(space: ModeSpace, mode: int, angle: float = np.pi / 2) -> Operator:
    """``exp(-i angle n^2)`` on one mode."""
    n = np.arange(space.dims[mode])
    return Operator(space, _embed(space, {space.factor_index(mode): np.diag(np.exp(-1j * angle * n**2))}))


def cross_parity_operator(space: ModeSpace, mode_i: int, mode_j: int) -> Operator:
    """Diagonal operator ``(-1)^(n_i n_j)``."""
    if mode_i == mode_j:
        raise ValueError("cross parity needs two distinct modes")
    ni = np.diag(number_operator(space, mode_i).mat).real
    nj = np.diag(number_operator(space, mode_j).mat).real
    return Operator(space, np.diag((-1.0) ** np.rint(ni * nj)))


def beamsplitter_operator(space: ModeSpace, mode_i: int, mode_j: int, theta: float) -> Operator:
    """Beam splitter sending ``|b>_i|c>_j`` to
    ``|b cos(theta/2) + c sin(theta/2)>_i |-b sin(theta/2) + c cos(theta/2)>_j``.
    """
    if mode_i == mode_j:
        raise ValueError("beam splitter needs two distinct modes")
    bi = annihilation(space, mode_i).mat
    bj = annihilation(space, mode_j).mat
    gen = 0.5 * theta * (bi.conj().T @ bj - bj.conj().T @ bi)
    return Operator(space, expm(gen))


# ---------------------------------------------------------------------------
# state constructors


def check_truncation(dim: int, alpha: complex) -> None:
    """Enforce the cutoff guard ``|alpha|^2 <= dim / 4``."""
    if abs(alpha) ** 2 > dim / 4.0 + 1e-12:
        raise TruncationError(
            f"|alpha|^2 = {abs(alpha) ** 2:.6g} exceeds dim/4 = {dim / 4:.6g}; raise the Fock cutoff"
        )


def coherent_amplitudes(dim: int, alpha: complex, normalize: bool = True) -> np.ndarray:
    """Fock amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)`` for ``n < dim``."""
    # recursive a^n/sqrt(n!) avoids overflowing factorials
    c = np.ones(dim, dtype=complex)
    for k in range(1, dim):
        c[k] = c[k - 1] * alpha / np.sqrt(k)
    c *= np.exp(-abs(alpha) ** 2 / 2)
    if normalize:
        c /= np.linalg.norm(c)
    return c


def _vacuum(d: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[0] = 1.0
    return v


def product_state(space: ModeSpace, mode_vectors: dict[int, np.ndarray], electronic: str = "g") -> StateVector:
    """Product of single-mode vectors; unspecified modes are vacuum."""
    vecs = []
    if space.electronic:
        vecs.append(_vacuum(2) if _el_index(electronic) == 0 else np.array([0, 1], dtype=complex))
    for m, d in enumerate(space.dims):
        v = np.asarray(mode_vectors.get(m, _vacuum(d)), dtype=complex)
        if v.shape != (d,):
            raise ValueError(f"mode {m} vector must have length {d}")
        vecs.append(v)
    return StateVector(space, reduce(np.kron, vecs))


def fock_state(space: ModeSpace, occupations: Sequence[int], electronic: str = "g") -> StateVector:
    amps = np.zeros(space.dim, dtype=complex)
    amps[space.basis_index(occupations, electronic)] = 1.0
    return StateVector(space, amps)


def coherent_state(space: ModeSpace, mode: int, alpha: complex, electronic: str = "g") -> StateVector:
    """Normalized truncated coherent state on ``mode``, vacuum elsewhere."""
    space._check_mode(mode)
    d = space.dims[mode]
    check_truncation(d, alpha)
    return product_state(space, {mode: coherent_amplitudes(d, alpha)}, electronic)


def cat_state(space: ModeSpace, mode: int, alpha: complex, sign: int = 1, electronic: str = "g") -> StateVector:
    """Even (``sign=+1``) or odd (``sign=-1``) cat ``N(|a> +- |-a>)``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if sign == -1 and alpha == 0:
        raise ValueError("the odd cat state is undefined at alpha = 0")
    space._check_mode(mode)
    d = space.dims[mode]
    check_truncation(d, alpha)
    v = coherent_amplitudes(d, alpha, normalize=False) + sign * coherent_amplitudes(d, -alpha, normalize=False)
    return product_state(space, {mode: v / np.linalg.norm(v)}, electronic)


_ECS_SIGNS = {"phi+": (1, 1), "phi-": (1, -1), "psi+": (-1, 1), "psi-": (-1, -1)}


def ecs_state(space: ModeSpace, kind: str, alpha: complex, modes: tuple[int, int] = (0, 1)) -> StateVector:
    """Entangled coherent states.

    ``phi+- ~ |a,a> +- |-a,-a>`` and ``psi+- ~ |a,-a> +- |-a,a>``.
    """
    if kind not in _ECS_SIGNS:
        raise ValueError(f"unknown ECS kind {kind!r}; expected one of {sorted(_ECS_SIGNS)}")
    if space.n_modes < 2:
        raise ValueError("ECS needs at least two modes")
    i, j = modes
    if i == j:
        raise ValueError("ECS modes must differ")
    for m in modes:
        check_truncation(space.dims[m], alpha)
    second, rel = _ECS_SIGNS[kind]
    ci = coherent_amplitudes(space.dims[i], alpha, normalize=False)
    ci_m = coherent_amplitudes(space.dims[i], -alpha, normalize=False)
    cj = coherent_amplitudes(space.dims[j], second * alpha, normalize=False)
    cj_m = coherent_amplitudes(space.dims[j], -second * alpha, normalize=False)
    a = product_state(space, {i: ci, j: cj}).amps + rel * product_state(space, {i: ci_m, j: cj_m}).amps
    return StateVector(space, a).normalize()


# ---------------------------------------------------------------------------
# scalar diagnostics


def overlap(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``."""
    _same_space(a, b)
    return complex(np.vdot(a.amps, b.amps))


def fidelity(rho, target: StateVector) -> float:
    """``<target|rho|target>`` for a density matrix or pure state ``rho``."""
    _same_space(rho, target)
    if isinstance(rho, StateVector):
        return float(abs(np.vdot(target.amps, rho.amps)) ** 2)
    val = np.real(np.vdot(target.amps, rho.mat @ target.amps))
    return float(min(max(val, 0.0), 1.0))


def linearized_entropy(rho: DensityMatrix) -> float:
    """``d/(d-1) (1 - Tr rho^2)`` with ``d`` the dimension of ``rho``."""
    d = rho.mat.shape[0]
    if d < 2:
        raise ValueError("linearized entropy needs d >= 2")
    return float(d / (d - 1) * (1.0 - rho.purity()))


def partial_trace(rho, keep: Iterable) -> DensityMatrix:
    """Reduced state on the factors in ``keep``.

    ``keep`` holds mode indices and, optionally, the string ``"electronic"``.
    Kept factors stay in basis order regardless of the order given.
    """
    if isinstance(rho, StateVector):
        rho = rho.to_density()
    space = rho.space
    keep = list(keep)
    factors = []
    for k in keep:
        if k == ELECTRONIC:
            if not space.electronic:
                raise ValueError("space has no electronic factor")
            factors.append(0)
        else:
            factors.append(space.factor_index(k))
    n_factors = len(space.factor_dims)
    if not factors or len(set(factors)) != len(factors) or len(factors) >= n_factors:
        raise ValueError(f"keep must be a nonempty proper subset of the factors, got {keep}")
    factors_sorted = sorted(factors)
    dims = space.factor_dims
    t = rho.mat.reshape(dims + dims)
    traced = [k for k in range(n_factors) if k not in factors_sorted]
    # einsum over traced indices
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n_factors])
    col = list(letters[n_factors : 2 * n_factors])
    for k in traced:
        col[k] = row[k]
    out = "".join(row[k] for k in factors_sorted) + "".join(col[k] for k in factors_sorted)
    red = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d_keep = int(np.prod([dims[k] for k in factors_sorted]))
    off = 1 if space.electronic else 0
    kept_modes = tuple(space.dims[k - off] for k in factors_sorted if k >= off)
    keeps_el = space.electronic and factors_sorted[0] == 0
    if kept_modes:
        new_space = ModeSpace(kept_modes, electronic=keeps_el)
    else:
        # only the electronic factor survives; expose it as a two-level mode
        new_space = ModeSpace((2,))
    return DensityMatrix(new_space, red.reshape(d_keep, d_keep))
