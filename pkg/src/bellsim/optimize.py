"""Deterministic CHSH maximization: coarse grid, then golden-section polishing."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateNormalizationError, InvalidInputError
from .estimators import BellSettings, NormalizationScheme, bell_parameter, correlation, probability_table
from .scenarios import ScenarioKind, SourceModel

log = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
MAX_SWEEPS = 100


@dataclass(frozen=True)
class OptimizeResult:
    settings: BellSettings
    bell: float
    grid_bell: float
    grid_density: int
    skipped_pairs: int
    skipped_quads: int
    skipped_evaluations: int
    evaluations: int
    sweeps: int


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on [lo, hi] down to a bracket narrower than ``tol``.

    Returns (x, f(x)) for the best point seen.
    """
    if not hi > lo:
        raise InvalidInputError("golden-section bracket must satisfy lo < hi")
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _correlation_grid(kind, scheme, angles, src) -> tuple[np.ndarray, int]:
    n = len(angles)
    grid = np.full((n, n), np.nan)
    skipped = 0
    for i, a in enumerate(angles):
        for j, b in enumerate(angles):
            try:
                grid[i, j] = correlation(probability_table(kind, scheme, a, b, src))
            except DegenerateNormalizationError:
                skipped += 1
    return grid, skipped


def chsh_optimize(
    kind: ScenarioKind,
    scheme: NormalizationScheme,
    grid_density: int = 32,
    refinement_tolerance: float = 1e-6,
    src: Optional[SourceModel] = None,
) -> OptimizeResult:
    """Maximize B over [0, 2pi)^4.

    All four angles share one grid of ``grid_density`` points.  The best
    grid quad is then refined coordinate by coordinate with golden-section
    searches over +-one grid step, sweeping until a sweep gains less than
    ``refinement_tolerance``.  Settings where a normalization degenerates
    are skipped and counted.
    """
    kind = ScenarioKind(kind)
    scheme = NormalizationScheme(scheme)
    if int(grid_density) != grid_density or grid_density < 8:
        raise InvalidInputError(f"grid_density must be an integer >= 8, got {grid_density!r}")
    if not (refinement_tolerance > 0 and math.isfinite(refinement_tolerance)):
        raise InvalidInputError("refinement_tolerance must be a positive real")
    grid_density = int(grid_density)

    step = 2.0 * math.pi / grid_density
    angles = [k * step for k in range(grid_density)]
    e, skipped_pairs = _correlation_grid(kind, scheme, angles, src)

    # axes (a1, a2, b1, b2)
    quad = np.abs(
        -e[:, None, :, None] + e[:, None, None, :] + e[None, :, :, None] + e[None, :, None, :]
    )
    skipped_quads = int(np.count_nonzero(np.isnan(quad)))
    if skipped_quads == quad.size:
        raise DegenerateNormalizationError(f"every grid point is degenerate for {kind.value}/{scheme.value}")
    if skipped_pairs:
        log.info("skipped %d degenerate setting pairs (%d quads) on the grid", skipped_pairs, skipped_quads)
    flat = int(np.nanargmax(quad))
    idx = np.unravel_index(flat, quad.shape)
    x = [angles[i] for i in idx]

    counters = {"evaluations": 0, "skipped": 0}

    def objective(point) -> float:
        counters["evaluations"] += 1
        s = BellSettings(*point)
        try:
            es = [correlation(probability_table(kind, scheme, a, b, src)) for a, b in s.pairs()]
        except DegenerateNormalizationError:
            counters["skipped"] += 1
            return -math.inf
        return bell_parameter(*es)

    best = objective(x)
    grid_best = best
    sweeps = 0
    while sweeps < MAX_SWEEPS:
        sweeps += 1
        before = best
        for i in range(4):
            def along(t, i=i):
                trial = list(x)
                trial[i] = t
                return objective(trial)

            t, value = golden_section_max(along, x[i] - step, x[i] + step, refinement_tolerance)
            if value > best:
                x[i] = t
                best = value
        if best - before < refinement_tolerance:
            break

    return OptimizeResult(
        settings=BellSettings(*x),
        bell=best,
        grid_bell=grid_best,
        grid_density=grid_density,
        skipped_pairs=skipped_pairs,
        skipped_quads=skipped_quads,
        skipped_evaluations=counters["skipped"],
        evaluations=counters["evaluations"],
        sweeps=sweeps,
    )
