"""Exact two-qubit polarization quantum mechanics.

Basis convention: |H> = (1, 0) is the +1 eigenvector of sigma_z and the
two-photon basis is ordered (HH, HV, VH, VV), Alice's photon first.
Angles are plain radians and are never reduced modulo 2*pi here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidInputError, InvalidObservableError, InvalidStateError

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
PROJECTOR_TOL = 1e-10

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

BASIS_LABELS = ("HH", "HV", "VH", "VV")


class Outcome(enum.IntEnum):
    """Detector outcome of a dichotomic measurement, valued by its eigenvalue."""

    PLUS = 1
    MINUS = -1

    @property
    def symbol(self) -> str:
        return "+" if self is Outcome.PLUS else "-"

    @property
    def letter(self) -> str:
        return "p" if self is Outcome.PLUS else "m"


class OutcomePair(NamedTuple):
    """Joint outcome (Alice, Bob)."""

    a: Outcome
    b: Outcome

    @property
    def label(self) -> str:
        """Two-letter label such as ``"pm"`` (Alice +, Bob -)."""
        return self.a.letter + self.b.letter

    @property
    def sign(self) -> int:
        """Product of the two eigenvalues; the weight in the correlation."""
        return int(self.a) * int(self.b)

    def __str__(self) -> str:
        return self.a.symbol + self.b.symbol

    @classmethod
    def from_label(cls, label: str) -> "OutcomePair":
        try:
            return _BY_LABEL[label]
        except KeyError:
            raise InvalidInputError(f"unknown outcome label {label!r}") from None


PP = OutcomePair(Outcome.PLUS, Outcome.PLUS)
MP = OutcomePair(Outcome.MINUS, Outcome.PLUS)
PM = OutcomePair(Outcome.PLUS, Outcome.MINUS)
MM = OutcomePair(Outcome.MINUS, Outcome.MINUS)

# ++, -+, +-, -- : the order in which the correlation is usually written out
OUTCOME_PAIRS: tuple[OutcomePair, ...] = (PP, MP, PM, MM)
_BY_LABEL = {jk.label: jk for jk in OUTCOME_PAIRS}


def check_angle(value: float, name: str = "angle") -> float:
    """Return ``value`` as a float, rejecting NaN and infinities."""
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise InvalidInputError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(x):
        raise InvalidInputError(f"{name} must be finite, got {value!r}")
    return x


@dataclass(frozen=True)
class TwoQubitState:
    """Pure two-photon polarization state over (HH, HV, VH, VV)."""

    amplitudes: tuple[complex, complex, complex, complex]

    def __post_init__(self):
        amps = tuple(complex(a) for a in self.amplitudes)
        if len(amps) != 4:
            raise InvalidStateError(f"expected 4 amplitudes, got {len(amps)}")
        if not all(math.isfinite(a.real) and math.isfinite(a.imag) for a in amps):
            raise InvalidStateError("amplitudes must be finite")
        norm = math.fsum(abs(a) ** 2 for a in amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(f"state is not normalized: sum |a|^2 = {norm!r}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vec: Sequence[complex]) -> "TwoQubitState":
        return cls(tuple(complex(v) for v in vec))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.amplitudes, dtype=complex)

    def overlap(self, other: "TwoQubitState") -> complex:
        """Inner product <self|other>."""
        return complex(np.vdot(self.vector, other.vector))


def make_bell_state() -> TwoQubitState:
    """(|HH> + |VV>)/sqrt(2)."""
    r = math.sqrt(0.5)
    return TwoQubitState((r, 0.0, 0.0, r))


def make_product_hh() -> TwoQubitState:
    """The unentangled state |HH>."""
    return TwoQubitState((1.0, 0.0, 0.0, 0.0))


def make_product_state(alice: Sequence[complex], bob: Sequence[complex]) -> TwoQubitState:
    """Tensor product of two single-photon polarization vectors."""
    return TwoQubitState.from_vector(np.kron(np.asarray(alice, dtype=complex), np.asarray(bob, dtype=complex)))


def alice_observable(alpha: float) -> np.ndarray:
    """cos(alpha) sigma_z + sin(alpha) sigma_x."""
    alpha = check_angle(alpha, "alpha")
    return math.cos(alpha) * SIGMA_Z + math.sin(alpha) * SIGMA_X


def bob_observable(beta: float) -> np.ndarray:
    """cos(beta) sigma_z - sin(beta) sigma_x.

    Note the minus sign relative to Alice's analyser; with it the Bell-state
    correlation depends on alpha + beta rather than alpha - beta.
    """
    beta = check_angle(beta, "beta")
    return math.cos(beta) * SIGMA_Z - math.sin(beta) * SIGMA_X


def check_observable(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2) or not np.all(np.isfinite(m)):
        raise InvalidObservableError(f"observable must be a finite 2x2 matrix, got shape {m.shape}")
    (a, b), (c, d) = m.tolist()
    if max(abs(a - a.conjugate()), abs(d - d.conjugate()), abs(b - c.conjugate())) > HERMITIAN_TOL:
        raise InvalidObservableError("observable is not Hermitian")
    # a Hermitian 2x2 matrix has eigenvalues +-1 iff trace 0 and det -1
    if abs(a + d) > HERMITIAN_TOL or abs(a * d - b * c + 1.0) > HERMITIAN_TOL:
        raise InvalidObservableError("observable does not have eigenvalues {+1, -1}")
    return m


def eigenprojector(m: np.ndarray, outcome: Outcome) -> np.ndarray:
    """Projector onto the ``outcome`` eigenspace of a +-1 valued observable.

    Uses the closed form ``(I + s m) / 2`` with ``s = +-1``; no eigensolver.
    """
    m = check_observable(m)
    return 0.5 * (IDENTITY + int(Outcome(outcome)) * m)


def _born(psi: np.ndarray, pa: np.ndarray, pb: np.ndarray) -> float:
    # psi[i, j] = <i|_A <j|_B |s>, so (P_A (x) P_B)|s> reshapes to P_A psi P_B^T
    value = float(np.real(np.vdot(psi, pa @ psi @ pb.T)))
    # round-off can leave -1e-17 on outcomes that have zero probability
    return min(max(value, 0.0), 1.0)


def _check_state(state) -> np.ndarray:
    if not isinstance(state, TwoQubitState):
        raise InvalidStateError(f"expected a TwoQubitState, got {type(state).__name__}")
    return state.vector.reshape(2, 2)


def joint_probability(state: TwoQubitState, alpha: float, beta: float, jk: OutcomePair) -> float:
    """Born-rule probability <s| P_A(j) (x) P_B(k) |s>."""
    psi = _check_state(state)
    pa = eigenprojector(alice_observable(alpha), jk[0])
    pb = eigenprojector(bob_observable(beta), jk[1])
    return _born(psi, pa, pb)


def joint_distribution(state: TwoQubitState, alpha: float, beta: float) -> dict[OutcomePair, float]:
    """All four joint probabilities at one setting pair."""
    psi = _check_state(state)
    ma, mb = alice_observable(alpha), bob_observable(beta)
    pa = {o: eigenprojector(ma, o) for o in Outcome}
    pb = {o: eigenprojector(mb, o) for o in Outcome}
    return {jk: _born(psi, pa[jk.a], pb[jk.b]) for jk in OUTCOME_PAIRS}
