"""Analytic coincidence-rate generators for the idealized polarization experiments.

Four scenarios are modelled:

``standard``
    Maximally entangled pairs from a constant source, measured by two PBS
    analysers and four detectors.
``two-detector``
    The same physics, but only the (+,+) detector pair exists.
``source-modulated``
    Product pairs |HH> measured with both analysers fixed at 0; the source
    emits at N0 cos^2((a + b)/2) where (a, b) are knobs on the *source*.
``four-photon-effective``
    The postselected effective model of the four-photon experiment: an
    unentangled |VHHV> emitted at a rate proportional to cos^2((a + b)/2).
    At this level it is indistinguishable from ``source-modulated``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Optional

from .errors import InvalidInputError
from .quantum import (
    MM,
    MP,
    OUTCOME_PAIRS,
    PM,
    PP,
    OutcomePair,
    check_angle,
    joint_distribution,
    make_bell_state,
    make_product_hh,
)


class ScenarioKind(str, enum.Enum):
    STANDARD_BELL = "standard"
    TWO_DETECTOR = "two-detector"
    SOURCE_MODULATED = "source-modulated"
    FOUR_PHOTON_EFFECTIVE = "four-photon-effective"

    @property
    def source_controlled(self) -> bool:
        """True when the angle slots steer the source rather than the analysers."""
        return self in (ScenarioKind.SOURCE_MODULATED, ScenarioKind.FOUR_PHOTON_EFFECTIVE)


class Modulation(str, enum.Enum):
    NONE = "none"
    COS2_HALF_SUM = "cos2-half-sum"


class AngleRole(str, enum.Enum):
    """What the (alpha, beta) slots of a table physically mean."""

    MEASUREMENT_SETTINGS = "measurement-settings"
    SOURCE_CONTROLS = "source-controls"


@dataclass(frozen=True)
class SourceModel:
    """Pair source with base rate N0 and an optional setting-dependent modulation."""

    base_rate: float = 1.0
    modulation: Modulation = Modulation.NONE

    def __post_init__(self):
        rate = float(self.base_rate)
        if not math.isfinite(rate) or rate <= 0:
            raise InvalidInputError(f"base rate N0 must be finite and > 0, got {self.base_rate!r}")
        object.__setattr__(self, "base_rate", rate)
        object.__setattr__(self, "modulation", Modulation(self.modulation))

    def intensity(self, alpha: float, beta: float) -> float:
        """Emission rate in events per unit exposure, in [0, N0]."""
        if self.modulation is Modulation.NONE:
            return self.base_rate
        # (1 + cos s)/2 instead of cos^2(s/2): the excluded point s = pi gives an exact 0
        return self.base_rate * max(0.0, 0.5 * (1.0 + math.cos(alpha + beta)))


def default_source(kind: ScenarioKind, base_rate: float = 1.0) -> SourceModel:
    kind = ScenarioKind(kind)
    modulation = Modulation.COS2_HALF_SUM if kind.source_controlled else Modulation.NONE
    return SourceModel(base_rate, modulation)


@dataclass(frozen=True)
class RateTable:
    """Coincidence rate per outcome pair at one (alpha, beta).

    Outcomes without a detector pair still carry their physical rate but are
    flagged unobservable, so a table always shows what a four-detector
    experiment would have seen.
    """

    alpha: float
    beta: float
    rates: Mapping[OutcomePair, float]
    observable: Mapping[OutcomePair, bool]
    angle_role: AngleRole
    kind: ScenarioKind
    base_rate: float

    def __post_init__(self):
        rates = {jk: float(self.rates[jk]) for jk in OUTCOME_PAIRS}
        if any(r < 0 or not math.isfinite(r) for r in rates.values()):
            raise InvalidInputError(f"rates must be finite and >= 0, got {rates}")
        observable = {jk: bool(self.observable[jk]) for jk in OUTCOME_PAIRS}
        object.__setattr__(self, "rates", MappingProxyType(rates))
        object.__setattr__(self, "observable", MappingProxyType(observable))

    @property
    def total_rate(self) -> float:
        return math.fsum(self.rates.values())

    @property
    def observable_rate(self) -> float:
        return math.fsum(r for jk, r in self.rates.items() if self.observable[jk])

    @property
    def observable_outcomes(self) -> tuple[OutcomePair, ...]:
        return tuple(jk for jk in OUTCOME_PAIRS if self.observable[jk])

    def physical_content(self) -> tuple:
        """Everything except the scenario tag: used to compare scenarios."""
        return (
            self.alpha,
            self.beta,
            tuple(self.rates[jk] for jk in OUTCOME_PAIRS),
            tuple(self.observable[jk] for jk in OUTCOME_PAIRS),
            self.angle_role,
            self.base_rate,
        )


_ONLY_PP = {PP: True, MP: False, PM: False, MM: False}
_ALL = {jk: True for jk in OUTCOME_PAIRS}


def analytic_rates(
    kind: ScenarioKind, alpha: float, beta: float, src: Optional[SourceModel] = None
) -> RateTable:
    """Analytic rate table for ``kind`` at angles (alpha, beta).

    ``src`` defaults to the scenario's own source (constant N0 = 1 for the
    entangled scenarios, cos^2-modulated N0 = 1 for the source-controlled
    ones).  For the entangled pair N0 is the amplitude of each rate,
    N(++) = N(--) = N0 cos^2((a+b)/2) and N(-+) = N(+-) = N0 sin^2((a+b)/2),
    so the four rates add up to 2 N0 at every setting.
    """
    kind = ScenarioKind(kind)
    alpha = check_angle(alpha, "alpha")
    beta = check_angle(beta, "beta")
    if src is None:
        src = default_source(kind)
    if kind.source_controlled and src.modulation is Modulation.NONE:
        raise InvalidInputError(f"scenario {kind.value} needs a modulated source")

    intensity = src.intensity(alpha, beta)
    if kind.source_controlled:
        # analysers sit at 0, so |HH> (or |VHHV> after relabelling) always lands on ++
        probs = joint_distribution(make_product_hh(), 0.0, 0.0)
        role = AngleRole.SOURCE_CONTROLS
        observable = _ONLY_PP
    else:
        probs = joint_distribution(make_bell_state(), alpha, beta)
        role = AngleRole.MEASUREMENT_SETTINGS
        observable = _ALL if kind is ScenarioKind.STANDARD_BELL else _ONLY_PP
        # N0 is the prefactor in N(++) = N0 cos^2((a+b)/2), so pairs arrive at 2 N0
        intensity *= 2.0

    rates = {jk: intensity * probs[jk] for jk in OUTCOME_PAIRS}
    return RateTable(alpha, beta, rates, observable, role, kind, src.base_rate)


def shifted_setting_identities(alpha: float, beta: float) -> list[tuple[OutcomePair, tuple[float, float]]]:
    """Where each outcome's rate can be read off as a (+,+) rate.

    Flipping an analyser by pi swaps its two output ports, so
    N(-+|a, b) = N(++|a + pi, b), and likewise for Bob and for both.
    """
    alpha = check_angle(alpha, "alpha")
    beta = check_angle(beta, "beta")
    return [
        (PP, (alpha, beta)),
        (MP, (alpha + math.pi, beta)),
        (PM, (alpha, beta + math.pi)),
        (MM, (alpha + math.pi, beta + math.pi)),
    ]
