"""Seeded event generation from analytic rate tables.

Every draw uses ``numpy.random.Generator(PCG64(seed))``; the same seed and
inputs give the same counts on every platform numpy supports.  Sub-stream
seeds are plain offsets of the configured seed (modulo 2**64).
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Optional

import numpy as np

from .errors import DegenerateNormalizationError, DegenerateSamplingError, InvalidInputError
from .estimators import SettingQuadCounts
from .quantum import OUTCOME_PAIRS, PP, OutcomePair
from .scenarios import AngleRole, RateTable, ScenarioKind, SourceModel, analytic_rates, shifted_setting_identities

SEED_MODULUS = 2**64


class SamplerMode(str, enum.Enum):
    FIXED_PAIRS = "fixed-pairs"
    POISSON_EXPOSURE = "poisson"


@dataclass(frozen=True)
class SamplerConfig:
    mode: SamplerMode
    seed: int = 0
    exposure: Optional[float] = None
    fixed_pairs: Optional[int] = None

    def __post_init__(self):
        mode = SamplerMode(self.mode)
        object.__setattr__(self, "mode", mode)
        if int(self.seed) != self.seed or not 0 <= self.seed < SEED_MODULUS:
            raise InvalidInputError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        if mode is SamplerMode.FIXED_PAIRS:
            if self.exposure is not None:
                raise InvalidInputError("fixed-pairs mode takes fixed_pairs, not exposure")
            if self.fixed_pairs is None or int(self.fixed_pairs) != self.fixed_pairs or self.fixed_pairs <= 0:
                raise InvalidInputError(f"fixed_pairs must be a positive integer, got {self.fixed_pairs!r}")
            object.__setattr__(self, "fixed_pairs", int(self.fixed_pairs))
        else:
            if self.fixed_pairs is not None:
                raise InvalidInputError("poisson mode takes exposure, not fixed_pairs")
            if self.exposure is None or not math.isfinite(self.exposure) or self.exposure <= 0:
                raise InvalidInputError(f"exposure must be a positive real, got {self.exposure!r}")
            object.__setattr__(self, "exposure", float(self.exposure))

    @classmethod
    def fixed(cls, pairs: int, seed: int = 0) -> "SamplerConfig":
        return cls(SamplerMode.FIXED_PAIRS, seed, fixed_pairs=pairs)

    @classmethod
    def poisson(cls, exposure: float, seed: int = 0) -> "SamplerConfig":
        return cls(SamplerMode.POISSON_EXPOSURE, seed, exposure=exposure)

    def with_seed_offset(self, offset: int) -> "SamplerConfig":
        return dataclasses.replace(self, seed=(self.seed + offset) % SEED_MODULUS)

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "seed": self.seed, "exposure": self.exposure, "fixed_pairs": self.fixed_pairs}


@dataclass(frozen=True)
class CoincidenceCounts:
    """Recorded counts at one setting.

    Only outcomes that have a detector pair appear in ``counts``; a missing
    key means "no detector", a zero means "detector saw nothing".
    """

    alpha: float
    beta: float
    counts: Mapping[OutcomePair, int]
    kind: ScenarioKind
    angle_role: AngleRole
    config: SamplerConfig

    def __post_init__(self):
        counts = {jk: int(self.counts[jk]) for jk in OUTCOME_PAIRS if jk in self.counts}
        if any(c < 0 for c in counts.values()):
            raise InvalidInputError("counts must be non-negative")
        object.__setattr__(self, "counts", MappingProxyType(counts))

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def exposure(self) -> Optional[float]:
        return self.config.exposure


def sample_counts(table: RateTable, cfg: SamplerConfig) -> CoincidenceCounts:
    """Draw counts for the observable outcomes of ``table``.

    Fixed-pairs mode emits exactly ``cfg.fixed_pairs`` pairs, distributed
    multinomially by rate over all four outcomes; events landing on outcomes
    without detectors are lost, so postselection shrinks the sample rather
    than reweighting it.  Poisson mode draws each observable outcome
    independently with mean ``rate * exposure``.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    observed = table.observable_outcomes
    if cfg.mode is SamplerMode.FIXED_PAIRS:
        if not table.observable_rate > 0:
            raise DegenerateSamplingError(
                f"no observable rate at alpha={table.alpha!r}, beta={table.beta!r}; cannot emit fixed pairs"
            )
        rates = np.array([table.rates[jk] for jk in OUTCOME_PAIRS])
        drawn = rng.multinomial(cfg.fixed_pairs, rates / rates.sum())
        counts = {jk: int(n) for jk, n in zip(OUTCOME_PAIRS, drawn) if jk in observed}
    else:
        means = np.array([table.rates[jk] * cfg.exposure for jk in observed])
        drawn = rng.poisson(means)
        counts = {jk: int(n) for jk, n in zip(observed, drawn)}
    return CoincidenceCounts(table.alpha, table.beta, counts, table.kind, table.angle_role, cfg)


def acquire_quad(
    kind: ScenarioKind,
    alpha: float,
    beta: float,
    cfg: SamplerConfig,
    src: Optional[SourceModel] = None,
) -> SettingQuadCounts:
    """Sample (+,+) at the four pi-shifted settings, equal exposure each.

    The acquisitions use seeds ``cfg.seed + 0..3`` in the order
    (a, b), (a+pi, b), (a, b+pi), (a+pi, b+pi).
    """
    counts = {}
    for offset, (jk, (a, b)) in enumerate(shifted_setting_identities(alpha, beta)):
        sample = sample_counts(analytic_rates(kind, a, b, src), cfg.with_seed_offset(offset))
        counts[jk] = sample.counts[PP]
    return SettingQuadCounts(alpha, beta, counts)


def _proportions(counts: CoincidenceCounts) -> dict[OutcomePair, float]:
    n = counts.total
    if n <= 0:
        raise DegenerateNormalizationError(f"no events recorded at alpha={counts.alpha!r}, beta={counts.beta!r}")
    return {jk: c / n for jk, c in counts.counts.items()}


def standard_error(counts: CoincidenceCounts) -> dict[OutcomePair, float]:
    """Binomial standard error sqrt(p(1-p)/n) per recorded outcome."""
    n = counts.total
    return {jk: math.sqrt(p * (1.0 - p) / n) for jk, p in _proportions(counts).items()}


def boundary_outcomes(counts: CoincidenceCounts) -> list[OutcomePair]:
    """Outcomes whose estimate sits at 0 or 1, where the binomial SE is 0 and uninformative."""
    return [jk for jk, p in _proportions(counts).items() if p in (0.0, 1.0)]


def correlation_estimate(counts: CoincidenceCounts) -> tuple[float, float]:
    """Sampled correlation and its standard error sqrt((1 - E^2)/n).

    Needs all four outcomes recorded; E is the mean of the +-1 product of
    the two outcomes, so its variance follows from a single binomial.
    """
    missing = [str(jk) for jk in OUTCOME_PAIRS if jk not in counts.counts]
    if missing:
        raise InvalidInputError(f"correlation needs all four outcomes; missing {', '.join(missing)}")
    n = counts.total
    p = _proportions(counts)
    e = math.fsum(jk.sign * p[jk] for jk in OUTCOME_PAIRS)
    return e, math.sqrt(max(0.0, 1.0 - e * e) / n)
