"""Parity readout through the electronic level and ECS discrimination.

The detection of one mode is: pi/2 carrier, conditional rotation
``exp(+i chi n)`` on ``|g>`` and ``exp(-i chi n)`` on ``|e>`` with ``chi = pi/2``,
the inverse pi/2 carrier, then a projective electronic readout. Even phonon
parity ends in ``|g>`` and odd parity in ``|e>``; in both cases the mode is
rotated by ``pi/2``. After an ``e`` result a pi carrier pulse restores ``|g>``.

Both the symbolic coherent-ket engine and dense Fock vectors are accepted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import symbolic as sym
from .hilbert import StateVector, electronic_projector
from .symbolic import CoherentSuperposition

__all__ = [
    "ECS_KINDS",
    "TABLE_I",
    "Branch",
    "MeasurementRecord",
    "carrier_pulse",
    "qnd_evolution",
    "electronic_measure",
    "detect_parity",
    "disambiguation_shift",
    "discriminate_ecs",
    "efficiency_estimate",
    "label_from_outcomes",
]

ECS_KINDS = ("phi+", "phi-", "psi+", "psi-")

# first two detections for each input kind; phi+ and psi+ share (g, g)
TABLE_I = {"phi+": ("g", "g"), "phi-": ("e", "g"), "psi+": ("g", "g"), "psi-": ("g", "e")}


@dataclass(frozen=True, eq=False)
class Branch:
    """One measurement history.

    ``outcomes`` are the recorded readouts; ``actual`` the true projections
    (they differ only when readout errors are enabled).
    """

    outcomes: tuple[str, ...]
    probability: float
    state: object
    label: str | None = None
    actual: tuple[str, ...] | None = None


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    branches: tuple[Branch, ...]
    policy: str = "enumerate"
    meta: dict = field(default_factory=dict)

    @property
    def total_probability(self) -> float:
        return float(sum(b.probability for b in self.branches))

    def probability_of(self, outcomes) -> float:
        outcomes = tuple(outcomes)
        return float(sum(b.probability for b in self.branches if b.outcomes[: len(outcomes)] == outcomes))

    def label_probabilities(self) -> dict:
        out: dict = {}
        for b in self.branches:
            out[b.label] = out.get(b.label, 0.0) + b.probability
        return out

    def sample(self, size: int, seed=None, rng=None) -> np.ndarray:
        """Draw ``size`` branch indices with the record's probabilities."""
        gen = rng if rng is not None else np.random.default_rng(seed)
        return _draw(self.branches, gen, size)

    @property
    def outcomes(self) -> tuple[str, ...]:
        """Outcomes of the single branch of a sampled or deterministic record."""
        if len(self.branches) != 1:
            raise ValueError("record has several branches")
        return self.branches[0].outcomes


# ---------------------------------------------------------------------------
# primitive steps


def _draw(branches, gen, size=None):
    probs = np.array([b.probability for b in branches])
    return gen.choice(len(branches), size=size, p=probs / probs.sum())


def _require_labels(state: CoherentSuperposition) -> None:
    if not state.has_electronic:
        raise ValueError("state carries no electronic factor")


def carrier_pulse(state, angle: float):
    """Apply ``exp(-i angle (s+ + s-))`` to the electronic factor only.

    ``angle = pi/4`` is a pi/2 pulse, ``angle = pi/2`` a pi pulse.
    """
    c, s = np.cos(angle), np.sin(angle)
    if isinstance(state, StateVector):
        if not state.space.electronic:
            raise ValueError("state carries no electronic factor")
        t = state.tensor_view()
        out = np.stack([c * t[0] - 1j * s * t[1], -1j * s * t[0] + c * t[1]])
        return StateVector(state.space, out.reshape(-1))
    _require_labels(state)
    flipped = 1 - state.labels
    return CoherentSuperposition(
        np.concatenate([c * state.weights, -1j * s * state.weights]),
        np.vstack([state.amps, state.amps]),
        np.concatenate([state.labels, flipped]),
    ).merge()


def qnd_evolution(state, mode: int, chi_t: float):
    """Conditional rotation: ``|g>`` kets ``b -> e^{i chi_t} b``, ``|e>`` kets ``b -> e^{-i chi_t} b``."""
    if isinstance(state, StateVector):
        sp = state.space
        if not sp.electronic:
            raise ValueError("state carries no electronic factor")
        n = np.arange(sp.dims[mode])
        t = state.tensor_view().copy()
        shape = [1] * sp.n_modes
        shape[mode] = -1
        ph = np.exp(1j * chi_t * n).reshape(shape)
        t[0] = t[0] * ph
        t[1] = t[1] * ph.conj()
        return StateVector(sp, t.reshape(-1))
    _require_labels(state)
    amps = state.amps.copy()
    sign = np.where(state.labels == 0, 1.0, -1.0)
    amps[:, mode] = amps[:, mode] * np.exp(1j * chi_t * sign)
    return state._with(amps=amps).merge()


def _component(state, label: str):
    if isinstance(state, StateVector):
        return electronic_projector(state.space, label) @ state
    return state.electronic_component(label)


def _norm_sq(state) -> float:
    if isinstance(state, StateVector):
        return float(np.vdot(state.amps, state.amps).real)
    return float(sym.inner(state, state).real)


def _normalized(state, p):
    if p <= 0:
        return state
    if isinstance(state, StateVector):
        return StateVector(state.space, state.amps / np.sqrt(p))
    return state * (1 / np.sqrt(p))


def electronic_measure(state, policy: str = "enumerate", seed=None, rng=None,
                       p_dark: float = 0.0, p_bright: float = 0.0) -> MeasurementRecord:
    """Projective readout of the electronic level.

    Parameters
    ----------
    policy : {"enumerate", "sample"}
        ``enumerate`` returns every branch with its probability; ``sample``
        draws one branch using ``rng`` or ``np.random.default_rng(seed)``.
    p_dark, p_bright : float
        Probability of reading ``e`` when the ion is in ``g`` and of reading
        ``g`` when it is in ``e``.
    """
    total = _norm_sq(state)
    if total <= 0:
        raise ValueError("cannot measure the zero state")
    branches = []
    for actual in ("g", "e"):
        comp = _component(state, actual)
        p = _norm_sq(comp) / total
        if p <= 1e-15:
            continue
        post = _normalized(comp, _norm_sq(comp))
        flip = p_dark if actual == "g" else p_bright
        other = "e" if actual == "g" else "g"
        for read, q in ((actual, 1.0 - flip), (other, flip)):
            if q > 0:
                branches.append(Branch((read,), p * q, post, actual=(actual,)))
    if policy == "enumerate":
        return MeasurementRecord(tuple(branches), "enumerate")
    if policy == "sample":
        gen = rng if rng is not None else np.random.default_rng(seed)
        k = int(_draw(branches, gen))
        return MeasurementRecord((branches[k],), "sample")
    raise ValueError(f"unknown policy {policy!r}")


def detect_parity(state, mode: int, reset: bool = True, **measure_kw) -> MeasurementRecord:
    """Write the parity of ``mode`` onto the ion and read it out.

    With ``reset`` a pi carrier pulse returns ``e`` branches to ``g``.
    """
    s = carrier_pulse(state, np.pi / 4)
    s = qnd_evolution(s, mode, np.pi / 2)
    s = carrier_pulse(s, -np.pi / 4)
    rec = electronic_measure(s, **measure_kw)
    if not reset:
        return rec
    out = []
    for b in rec.branches:
        st = b.state
        if b.actual == ("e",):
            st = carrier_pulse(st, np.pi / 2)
            st = _component(st, "g")
        out.append(Branch(b.outcomes, b.probability, st, actual=b.actual))
    return MeasurementRecord(tuple(out), rec.policy)


def disambiguation_shift(alpha: float) -> float:
    """``eps`` with ``2 sqrt(2) alpha eps = pi/2``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return np.pi / (4 * np.sqrt(2) * alpha)


def label_from_outcomes(outcomes: tuple[str, ...]) -> str:
    table = {
        ("e", "g"): "phi-",
        ("g", "e"): "psi-",
        ("g", "g", "e"): "phi+",
        ("g", "g", "g"): "psi+",
    }
    return table.get(tuple(outcomes), "undetermined")


def discriminate_ecs(state: CoherentSuperposition, alpha: float, modes=(0, 1), policy: str = "enumerate",
                     seed=None, displacement: bool = True, p_dark: float = 0.0,
                     p_bright: float = 0.0) -> MeasurementRecord:
    """Run the quasi-Bell discrimination on ``modes`` of ``state``.

    Steps: 50:50 beam splitter; parity detection of the first mode; parity
    detection of the second; when both read ``g``, displace the first mode by
    ``-eps`` and detect it again. ``state`` may carry further modes, which are
    left untouched. A state without electronic labels is put in ``|g>``.
    """
    if not isinstance(state, CoherentSuperposition):
        raise TypeError("discriminate_ecs works on the symbolic engine")
    x, y = modes
    if x == y or not (0 <= x < state.n_modes and 0 <= y < state.n_modes):
        raise ValueError(f"invalid mode pair {modes}")
    if sym.norm(state) == 0:
        raise ValueError("input state is zero")
    if not state.has_electronic:
        state = state.with_electronic("g")
    elif np.any(state.labels != 0):
        raise ValueError("the ion must start in |g>")
    state = state.normalize()
    rng = np.random.default_rng(seed) if policy == "sample" else None
    mkw = dict(policy=policy, rng=rng, p_dark=p_dark, p_bright=p_bright)
    eps = disambiguation_shift(alpha)

    s = sym.apply_beamsplitter(state, x, y, np.pi / 2)
    pending = [((), (), 1.0, s)]
    final = []
    for step in ("x", "y", "x2"):
        nxt = []
        for outs, acts, p, st in pending:
            if step == "x2":
                if outs != ("g", "g") or not displacement:
                    final.append((outs, acts, p, st))
                    continue
                st = sym.apply_displacement(st, x, -eps)
            mode = y if step == "y" else x
            rec = detect_parity(st, mode, **mkw)
            for b in rec.branches:
                nxt.append((outs + b.outcomes, acts + b.actual, p * b.probability, b.state))
        pending = nxt
    final.extend(pending)
    branches = tuple(
        Branch(o, float(p), st, label_from_outcomes(o) if displacement or len(o) > 2 else _two_step_label(o), a)
        for o, a, p, st in final
    )
    return MeasurementRecord(branches, policy, {"eps": eps, "alpha": alpha})


def _two_step_label(outcomes) -> str:
    return {("e", "g"): "phi-", ("g", "e"): "psi-", ("g", "g"): "phi+/psi+"}.get(tuple(outcomes), "undetermined")


def efficiency_estimate(alpha: float, per_input: bool = False):
    """Worst-case probability of the correct label over the four ECS inputs."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    probs = {}
    for kind in ECS_KINDS:
        rec = discriminate_ecs(sym.ecs(kind, alpha), alpha)
        probs[kind] = rec.label_probabilities().get(kind, 0.0)
    worst = min(probs.values())
    return (worst, probs) if per_input else worst
