"""Counts-file I/O and the normalization audit.

A counts file is UTF-8 CSV with the header ``alpha,beta,outcome,count,exposure``
and one row per (setting, outcome).  Outcome labels are ``pp``, ``pm``,
``mp`` and ``mm`` (Alice's sign first).  Outcomes without a detector are
simply absent.

The audit recomputes probability tables and B under a chosen scheme.  For
the tilde and q schemes it also checks whether the per-setting total
recorded rate stays flat across settings: if it does not, the angles may be
steering the source intensity, and B computed this way says nothing about
local hidden variables.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, TextIO

from .errors import BellSimError, InvalidInputError
from .estimators import (
    BellSettings,
    NormalizationScheme,
    ProbabilityTable,
    SettingQuadCounts,
    bell_parameter,
    correlation,
    normalize_tilde,
    normalize_values,
)
from .quantum import OUTCOME_PAIRS, PP, OutcomePair
from .scenarios import shifted_setting_identities

COUNTS_HEADER = ("alpha", "beta", "outcome", "count", "exposure")
DEFAULT_ANGLE_TOL = 1e-9
TWO_PI = 2.0 * math.pi


class MalformedCountsError(BellSimError, ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class MissingSettingError(BellSimError, LookupError):
    """A setting needed for the requested analysis is not in the file."""


@dataclass(frozen=True)
class CountsFileRow:
    alpha: float
    beta: float
    outcome: OutcomePair
    count: int
    exposure: float


def write_counts_rows(rows: Iterable[CountsFileRow], fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(COUNTS_HEADER)
    for r in rows:
        writer.writerow([repr(r.alpha), repr(r.beta), r.outcome.label, r.count, repr(r.exposure)])


def _finite(text: str, what: str, line: int) -> float:
    try:
        x = float(text)
    except ValueError:
        raise MalformedCountsError(line, f"{what} {text!r} is not a number") from None
    if not math.isfinite(x):
        raise MalformedCountsError(line, f"{what} must be finite")
    return x


def read_counts_rows(fh: TextIO) -> list[CountsFileRow]:
    """Parse a counts file, raising :class:`MalformedCountsError` with a 1-based line number."""
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedCountsError(1, "empty file, expected a header row") from None
    if tuple(h.strip() for h in header) != COUNTS_HEADER:
        raise MalformedCountsError(1, f"header must be {','.join(COUNTS_HEADER)}")
    rows = []
    seen = {}
    for fields in reader:
        line = reader.line_num
        if not fields or all(not f.strip() for f in fields):
            continue
        if len(fields) != len(COUNTS_HEADER):
            raise MalformedCountsError(line, f"expected {len(COUNTS_HEADER)} fields, got {len(fields)}")
        a_txt, b_txt, label, c_txt, t_txt = (f.strip() for f in fields)
        alpha = _finite(a_txt, "alpha", line)
        beta = _finite(b_txt, "beta", line)
        try:
            outcome = OutcomePair.from_label(label)
        except InvalidInputError:
            raise MalformedCountsError(line, f"outcome {label!r} not one of pp, pm, mp, mm") from None
        try:
            count = int(c_txt)
        except ValueError:
            raise MalformedCountsError(line, f"count {c_txt!r} is not an integer") from None
        if count < 0:
            raise MalformedCountsError(line, "count must be non-negative")
        exposure = _finite(t_txt, "exposure", line)
        if exposure <= 0:
            raise MalformedCountsError(line, "exposure must be positive")
        key = (alpha, beta, outcome)
        if key in seen:
            raise MalformedCountsError(line, f"duplicate row for {label} at ({a_txt}, {b_txt}), first on line {seen[key]}")
        seen[key] = line
        rows.append(CountsFileRow(alpha, beta, outcome, count, exposure))
    return rows


def same_angle(x: float, y: float, tol: float = DEFAULT_ANGLE_TOL) -> bool:
    """Equality modulo 2pi; analysers at x and x + 2pi are identical."""
    d = math.fmod(x - y, TWO_PI)
    return abs(d) <= tol or abs(abs(d) - TWO_PI) <= tol


@dataclass
class SettingData:
    alpha: float
    beta: float
    counts: dict = field(default_factory=dict)
    exposures: dict = field(default_factory=dict)

    def rate(self, jk: OutcomePair) -> float:
        return self.counts[jk] / self.exposures[jk]

    def rate_variance(self, jk: OutcomePair) -> float:
        return self.counts[jk] / self.exposures[jk] ** 2

    @property
    def total_rate(self) -> float:
        return math.fsum(self.rate(jk) for jk in self.counts)

    @property
    def total_rate_sigma(self) -> float:
        return math.sqrt(math.fsum(self.rate_variance(jk) for jk in self.counts))


def group_settings(rows: Sequence[CountsFileRow], tol: float = DEFAULT_ANGLE_TOL) -> list[SettingData]:
    """Group rows by setting, in order of first appearance."""
    settings: list[SettingData] = []
    for r in rows:
        for s in settings:
            if same_angle(s.alpha, r.alpha, tol) and same_angle(s.beta, r.beta, tol):
                break
        else:
            s = SettingData(r.alpha, r.beta)
            settings.append(s)
        if r.outcome in s.counts:
            raise InvalidInputError(f"two rows for {r.outcome.label} at setting ({r.alpha!r}, {r.beta!r})")
        s.counts[r.outcome] = r.count
        s.exposures[r.outcome] = r.exposure
    return settings


def find_setting(settings: Sequence[SettingData], alpha: float, beta: float, tol: float) -> Optional[SettingData]:
    for s in settings:
        if same_angle(s.alpha, alpha, tol) and same_angle(s.beta, beta, tol):
            return s
    return None


@dataclass(frozen=True)
class Estimate:
    table: ProbabilityTable
    correlation: float
    sigma: float


def _estimate(values: dict, variances: dict, scheme, alpha, beta) -> Estimate:
    table = normalize_values(values, scheme, alpha, beta)
    e = correlation(table)
    total = math.fsum(values.values())
    # first-order propagation: dE/dr_jk = (sign_jk - E) / total
    var = math.fsum(((jk.sign - e) / total) ** 2 * variances[jk] for jk in OUTCOME_PAIRS)
    return Estimate(table, e, math.sqrt(var))


def estimate_standard(setting: SettingData) -> Estimate:
    values = {jk: setting.rate(jk) if jk in setting.counts else 0.0 for jk in OUTCOME_PAIRS}
    variances = {jk: setting.rate_variance(jk) if jk in setting.counts else 0.0 for jk in OUTCOME_PAIRS}
    return _estimate(values, variances, NormalizationScheme.STANDARD, setting.alpha, setting.beta)


def estimate_shifted(
    settings: Sequence[SettingData], alpha: float, beta: float, scheme: NormalizationScheme, tol: float
) -> Estimate:
    values, variances = {}, {}
    for jk, (a, b) in shifted_setting_identities(alpha, beta):
        s = find_setting(settings, a, b, tol)
        if s is None or PP not in s.counts:
            raise MissingSettingError(
                f"no pp row at shifted partner ({a!r}, {b!r}) of setting ({alpha!r}, {beta!r})"
            )
        values[jk] = s.rate(PP)
        variances[jk] = s.rate_variance(PP)
    # validates the quad and raises on an all-zero total like the analytic path
    normalize_tilde(SettingQuadCounts(alpha, beta, values), scheme)
    return _estimate(values, variances, scheme, alpha, beta)


def infer_bell_settings(settings: Sequence[SettingData], tol: float = DEFAULT_ANGLE_TOL) -> BellSettings:
    """Recover (a1, a2, b1, b2) from the file, in order of first appearance.

    Each setting claims its three pi-shifted partners, so only the first
    member of every family counts as a base.
    """
    bases = []
    claimed: list[SettingData] = []
    for s in settings:
        if any(s is c for c in claimed):
            continue
        bases.append(s)
        for _, (a, b) in shifted_setting_identities(s.alpha, s.beta)[1:]:
            partner = find_setting(settings, a, b, tol)
            if partner is not None:
                claimed.append(partner)

    alphas: list[float] = []
    betas: list[float] = []
    for s in bases:
        if not any(same_angle(s.alpha, a, tol) for a in alphas):
            alphas.append(s.alpha)
        if not any(same_angle(s.beta, b, tol) for b in betas):
            betas.append(s.beta)
    if len(alphas) != 2 or len(betas) != 2:
        raise MissingSettingError(
            f"cannot infer a CHSH quad: found {len(alphas)} Alice and {len(betas)} Bob base angles; pass --angles"
        )
    return BellSettings(alphas[0], alphas[1], betas[0], betas[1])


@dataclass
class AuditReport:
    scheme: NormalizationScheme
    settings: BellSettings
    estimates: list[Estimate]
    bell: float
    bell_sigma: float
    best_relabeled_bell: float
    total_rates: list[tuple[float, float, float, float]]
    flatness_z: float
    flatness_sigma: float
    warning: bool

    def render(self) -> str:
        out = io.StringIO()
        w = out.write
        w(f"scheme: {self.scheme.value}\n")
        w("settings: alpha1={!r} alpha2={!r} beta1={!r} beta2={!r}\n".format(*self.settings.as_tuple()))
        w("per-setting recorded totals (alpha, beta, rate, sigma):\n")
        for a, b, r, sig in self.total_rates:
            w(f"  {a!r:>22} {b!r:>22} {r:.6g} {sig:.3g}\n")
        names = ("E11", "E12", "E21", "E22")
        for name, (a, b), est in zip(names, self.settings.pairs(), self.estimates):
            p = est.table.as_tuple()
            w(
                f"{name} at ({a:.6f}, {b:.6f}): p_pp={p[0]:.6f} p_mp={p[1]:.6f} "
                f"p_pm={p[2]:.6f} p_mm={p[3]:.6f} E={est.correlation:.6f} +- {est.sigma:.6f}\n"
            )
        w(f"B = {self.bell:.6f} +- {self.bell_sigma:.6f}\n")
        w(f"B (best relabeling of the quad) = {self.best_relabeled_bell:.6f}\n")
        w(f"total-rate flatness: max pairwise deviation {self.flatness_z:.2f} sigma (threshold {self.flatness_sigma:g})\n")
        if self.warning:
            w(
                "WARNING: the total recorded rate depends on the setting.\n"
                "WARNING: under the {} scheme the angles may be controlling the effective source\n"
                "WARNING: intensity rather than local measurements; the resulting B is not a test\n"
                "WARNING: of local hidden variable models.\n".format(self.scheme.value)
            )
        return out.getvalue()


def flatness_statistic(settings: Sequence[SettingData]) -> float:
    """Largest pairwise |r_i - r_j| / sqrt(s_i^2 + s_j^2) over per-setting total rates."""
    worst = 0.0
    for s, t in itertools.combinations(settings, 2):
        diff = abs(s.total_rate - t.total_rate)
        sigma = math.hypot(s.total_rate_sigma, t.total_rate_sigma)
        if sigma > 0:
            worst = max(worst, diff / sigma)
        elif diff > 0:
            return math.inf
    return worst


def audit(
    rows: Sequence[CountsFileRow],
    scheme: NormalizationScheme,
    angles: Optional[BellSettings] = None,
    flatness_sigma: float = 3.0,
    tol: float = DEFAULT_ANGLE_TOL,
) -> AuditReport:
    scheme = NormalizationScheme(scheme)
    settings = group_settings(rows, tol)
    if angles is None:
        angles = infer_bell_settings(settings, tol)

    estimates = []
    for a, b in angles.pairs():
        if scheme is NormalizationScheme.STANDARD:
            s = find_setting(settings, a, b, tol)
            if s is None:
                raise MissingSettingError(f"setting ({a!r}, {b!r}) not in counts file")
            estimates.append(estimate_standard(s))
        else:
            estimates.append(estimate_shifted(settings, a, b, scheme, tol))

    es = [e.correlation for e in estimates]
    bell = bell_parameter(*es)
    bell_sigma = math.sqrt(math.fsum(e.sigma**2 for e in estimates))
    # swapping a1<->a2 and/or b1<->b2 moves the minus sign to each term in turn
    total = math.fsum(es)
    best = max(abs(total - 2.0 * e) for e in es)

    z = flatness_statistic(settings)
    warn = scheme is not NormalizationScheme.STANDARD and z > flatness_sigma
    totals = [(s.alpha, s.beta, s.total_rate, s.total_rate_sigma) for s in settings]
    return AuditReport(scheme, angles, estimates, bell, bell_sigma, best, totals, z, flatness_sigma, warn)
