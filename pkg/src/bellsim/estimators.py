"""Normalization schemes, correlation functions and the CHSH Bell parameter.

Correlations are always computed from a :class:`ProbabilityTable`, never
from raw counts, so the normalization scheme is the only thing that can make
two analyses of the same data disagree.

Schemes
-------
standard
    Divide each coincidence rate by the sum over all four outcomes recorded
    at the *same* setting.
tilde
    Use only (+,+) counts, taken at the setting and at its three pi-shifted
    partners, and divide by their sum.  Valid when the angles really are
    analyser settings.
q
    The same arithmetic as ``tilde`` applied when the angles steer the
    source intensity.  The numbers mimic entangled-pair probabilities but
    label no events.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Optional, Sequence, Union

from .errors import DegenerateNormalizationError, InvalidInputError
from .quantum import MM, MP, OUTCOME_PAIRS, PM, PP, OutcomePair, check_angle
from .scenarios import RateTable, ScenarioKind, SourceModel, analytic_rates, shifted_setting_identities

SUM_TOL = 1e-9
CORRELATION_SLACK = 1e-9
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)


class NormalizationScheme(str, enum.Enum):
    STANDARD = "standard"
    TILDE = "tilde"
    Q = "q"


@dataclass(frozen=True)
class ProbabilityTable:
    values: Mapping[OutcomePair, float]
    scheme: NormalizationScheme
    alpha: float
    beta: float

    def __post_init__(self):
        values = {jk: float(self.values[jk]) for jk in OUTCOME_PAIRS}
        if any(not (0.0 <= v <= 1.0) for v in values.values()):
            raise InvalidInputError(f"probabilities must lie in [0, 1], got {values}")
        total = math.fsum(values.values())
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidInputError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "values", MappingProxyType(values))
        object.__setattr__(self, "scheme", NormalizationScheme(self.scheme))

    def __getitem__(self, jk: OutcomePair) -> float:
        return self.values[jk]

    def as_tuple(self) -> tuple[float, float, float, float]:
        """(pp, mp, pm, mm)."""
        return tuple(self.values[jk] for jk in OUTCOME_PAIRS)

    def alice_marginal(self, outcome) -> float:
        return math.fsum(v for jk, v in self.values.items() if jk.a == outcome)

    def bob_marginal(self, outcome) -> float:
        return math.fsum(v for jk, v in self.values.items() if jk.b == outcome)


@dataclass(frozen=True)
class BellSettings:
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "beta1", "beta2"):
            object.__setattr__(self, name, check_angle(getattr(self, name), name))

    def pairs(self) -> tuple[tuple[float, float], ...]:
        """Setting pairs in the order (a1,b1), (a1,b2), (a2,b1), (a2,b2)."""
        return (
            (self.alpha1, self.beta1),
            (self.alpha1, self.beta2),
            (self.alpha2, self.beta1),
            (self.alpha2, self.beta2),
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alpha1, self.alpha2, self.beta1, self.beta2)


CANONICAL_SETTINGS = BellSettings(math.pi / 2, 0.0, math.pi / 4, -math.pi / 4)


@dataclass(frozen=True)
class SettingQuadCounts:
    """(+,+) counts or rates at (a, b), (a+pi, b), (a, b+pi), (a+pi, b+pi).

    Stored per outcome pair each shifted setting stands in for, i.e.
    ``counts[MP]`` is the (+,+) count recorded at (a + pi, b).
    """

    alpha: float
    beta: float
    counts: Mapping[OutcomePair, Union[int, float]]

    def __post_init__(self):
        counts = {jk: self.counts[jk] for jk in OUTCOME_PAIRS}
        if any(not math.isfinite(c) or c < 0 for c in counts.values()):
            raise InvalidInputError(f"quad counts must be finite and >= 0, got {counts}")
        object.__setattr__(self, "counts", MappingProxyType(counts))

    @classmethod
    def from_sequence(cls, alpha: float, beta: float, values: Sequence[float]) -> "SettingQuadCounts":
        """Build from the four counts in the order (a,b), (a+pi,b), (a,b+pi), (a+pi,b+pi)."""
        if len(values) != 4:
            raise InvalidInputError("need exactly four counts")
        return cls(alpha, beta, dict(zip(OUTCOME_PAIRS, values)))

    @property
    def total(self) -> float:
        return math.fsum(self.counts.values())


def normalize_values(values: Mapping[OutcomePair, float], scheme, alpha, beta) -> ProbabilityTable:
    total = math.fsum(values.values())
    if not total > 0:
        raise DegenerateNormalizationError(
            f"cannot normalize at alpha={alpha!r}, beta={beta!r}: total is zero"
        )
    return ProbabilityTable({jk: values[jk] / total for jk in OUTCOME_PAIRS}, scheme, alpha, beta)


def normalize_standard(table) -> ProbabilityTable:
    """p(jk) = N(jk) / sum N at a single setting.

    Accepts a :class:`RateTable` (every outcome enters with its physical
    rate, observable or not) or sampled ``CoincidenceCounts`` (only the
    outcomes that have detectors are present; absent ones count as zero).
    """
    if isinstance(table, RateTable):
        values = dict(table.rates)
    else:
        values = {jk: table.counts.get(jk, 0) for jk in OUTCOME_PAIRS}
    return normalize_values(values, NormalizationScheme.STANDARD, table.alpha, table.beta)


def normalize_tilde(quad: SettingQuadCounts, scheme: NormalizationScheme = NormalizationScheme.TILDE) -> ProbabilityTable:
    """Probabilities rebuilt from (+,+) counts at the four pi-shifted settings."""
    scheme = NormalizationScheme(scheme)
    if scheme is NormalizationScheme.STANDARD:
        raise InvalidInputError("normalize_tilde produces tilde or q tables only")
    return normalize_values(dict(quad.counts), scheme, quad.alpha, quad.beta)


def q_functions(alpha_p: float, beta_p: float) -> ProbabilityTable:
    """Closed-form q table: ((1+c)/4, (1-c)/4, (1-c)/4, (1+c)/4), c = cos(a' + b')."""
    alpha_p = check_angle(alpha_p, "alpha'")
    beta_p = check_angle(beta_p, "beta'")
    c = math.cos(alpha_p + beta_p)
    same, diff = (1.0 + c) / 4.0, (1.0 - c) / 4.0
    return ProbabilityTable({PP: same, MP: diff, PM: diff, MM: same}, NormalizationScheme.Q, alpha_p, beta_p)


def analytic_quad(
    kind: ScenarioKind, alpha: float, beta: float, src: Optional[SourceModel] = None
) -> SettingQuadCounts:
    """Analytic (+,+) rates at the four shifted settings of (alpha, beta)."""
    counts = {
        jk: analytic_rates(kind, a, b, src).rates[PP] for jk, (a, b) in shifted_setting_identities(alpha, beta)
    }
    return SettingQuadCounts(alpha, beta, counts)


def probability_table(
    kind: ScenarioKind,
    scheme: NormalizationScheme,
    alpha: float,
    beta: float,
    src: Optional[SourceModel] = None,
) -> ProbabilityTable:
    """Analytic probability table of a scenario under a normalization scheme."""
    scheme = NormalizationScheme(scheme)
    if scheme is NormalizationScheme.STANDARD:
        return normalize_standard(analytic_rates(kind, alpha, beta, src))
    return normalize_tilde(analytic_quad(kind, alpha, beta, src), scheme)


def correlation(p: ProbabilityTable) -> float:
    """E = p(++) - p(-+) - p(+-) + p(--)."""
    e = p[PP] - p[MP] - p[PM] + p[MM]
    return min(1.0, max(-1.0, e))


def _check_correlation(e: float, name: str) -> float:
    e = float(e)
    if not math.isfinite(e) or abs(e) > 1.0 + CORRELATION_SLACK:
        raise InvalidInputError(f"correlation {name} = {e!r} is outside [-1, 1]")
    return e


def bell_parameter(e11: float, e12: float, e21: float, e22: float) -> float:
    """B = |-E(a1,b1) + E(a1,b2) + E(a2,b1) + E(a2,b2)|."""
    e11, e12, e21, e22 = (
        _check_correlation(e, n) for e, n in zip((e11, e12, e21, e22), ("e11", "e12", "e21", "e22"))
    )
    return abs(-e11 + e12 + e21 + e22)


def sign_placements(e11: float, e12: float, e21: float, e22: float) -> tuple[float, float, float, float]:
    """CHSH values with the minus sign on each of the four terms in turn."""
    es = [_check_correlation(e, "e") for e in (e11, e12, e21, e22)]
    total = math.fsum(es)
    return tuple(abs(total - 2.0 * e) for e in es)


def correlations_for(
    kind: ScenarioKind,
    scheme: NormalizationScheme,
    settings: BellSettings,
    src: Optional[SourceModel] = None,
) -> tuple[float, float, float, float]:
    """(E11, E12, E21, E22) for a scenario, scheme and setting quad."""
    return tuple(correlation(probability_table(kind, scheme, a, b, src)) for a, b in settings.pairs())


def bell_value(
    kind: ScenarioKind,
    scheme: NormalizationScheme,
    settings: BellSettings,
    src: Optional[SourceModel] = None,
) -> float:
    return bell_parameter(*correlations_for(kind, scheme, settings, src))
