import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from bellsim.errors import DegenerateNormalizationError, InvalidInputError
from bellsim.estimators import (
    CANONICAL_SETTINGS,
    TSIRELSON_BOUND,
    BellSettings,
    NormalizationScheme,
    ProbabilityTable,
    SettingQuadCounts,
    analytic_quad,
    bell_parameter,
    bell_value,
    correlation,
    normalize_standard,
    normalize_tilde,
    probability_table,
    q_functions,
    sign_placements,
)
from bellsim.quantum import MM, MP, OUTCOME_PAIRS, PM, PP, Outcome
from bellsim.scenarios import RateTable, ScenarioKind, analytic_rates, default_source

angles = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)
correlations = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


def non_degenerate(a, b):
    return abs(math.cos((a + b) / 2)) > 1e-6


def test_scheme_enumeration():
    assert [s.value for s in NormalizationScheme] == ["standard", "tilde", "q"]


def test_probability_table_validation():
    with pytest.raises(InvalidInputError):
        ProbabilityTable({PP: 0.5, MP: 0.5, PM: 0.5, MM: 0.0}, "standard", 0, 0)
    with pytest.raises(InvalidInputError):
        ProbabilityTable({PP: 1.5, MP: -0.5, PM: 0.0, MM: 0.0}, "standard", 0, 0)


def test_normalize_standard_examples():
    p = normalize_standard(analytic_rates("standard", 0.3, 0.5))
    assert p[PP] == pytest.approx(0.42417667733679, abs=1e-12)
    p = normalize_standard(analytic_rates("source-modulated", 0.3, 0.5))
    assert p.as_tuple() == (1.0, 0.0, 0.0, 0.0)
    flat = RateTable(0.0, 0.0, dict.fromkeys(OUTCOME_PAIRS, 7.0), dict.fromkeys(OUTCOME_PAIRS, True), "measurement-settings", "standard", 1.0)
    assert normalize_standard(flat).as_tuple() == (0.25, 0.25, 0.25, 0.25)


def test_normalize_standard_degenerate():
    with pytest.raises(DegenerateNormalizationError):
        normalize_standard(analytic_rates("source-modulated", 0.3, math.pi - 0.3))
    with pytest.raises(DegenerateNormalizationError):
        normalize_standard(analytic_rates("source-modulated", math.pi / 2, math.pi / 2))


def test_normalize_tilde_examples():
    a, b = 0.3, 0.5
    t = normalize_tilde(analytic_quad("standard", a, b))
    assert t[PP] == pytest.approx(normalize_standard(analytic_rates("standard", a, b))[PP], abs=1e-12)
    t = normalize_tilde(analytic_quad("source-modulated", a, b))
    assert t[PP] == pytest.approx((1 + math.cos(a + b)) / 4, abs=1e-12)
    t = normalize_tilde(SettingQuadCounts.from_sequence(a, b, [9, 9, 9, 9]))
    assert t.as_tuple() == (0.25, 0.25, 0.25, 0.25)
    assert t.scheme is NormalizationScheme.TILDE


def test_normalize_tilde_degenerate_and_invalid():
    with pytest.raises(DegenerateNormalizationError):
        normalize_tilde(SettingQuadCounts.from_sequence(0, 0, [0, 0, 0, 0]))
    with pytest.raises(InvalidInputError):
        SettingQuadCounts.from_sequence(0, 0, [1, -1, 0, 0])
    with pytest.raises(InvalidInputError):
        normalize_tilde(SettingQuadCounts.from_sequence(0, 0, [1, 1, 1, 1]), "standard")


def test_q_functions_examples():
    assert q_functions(math.pi / 4, -math.pi / 4).as_tuple() == (0.5, 0.0, 0.0, 0.5)
    assert q_functions(0.3, 0.5)[PP] == pytest.approx(0.42417667733679, abs=1e-12)
    assert q_functions(0.3, 0.5).scheme is NormalizationScheme.Q


def test_q_functions_equal_tilde_of_source_modulated():
    rng = np.random.default_rng(5)
    for a, b in rng.uniform(-2 * math.pi, 2 * math.pi, size=(100, 2)):
        tilde = normalize_tilde(analytic_quad("source-modulated", a, b))
        assert tilde.as_tuple() == pytest.approx(q_functions(a, b).as_tuple(), abs=1e-12)


def test_correlation_examples():
    for a, b in [(0.0, 0.0), (0.3, 0.5), (1.2, -2.0)]:
        assert correlation(probability_table("standard", "standard", a, b)) == pytest.approx(math.cos(a + b), abs=1e-12)
        assert correlation(probability_table("source-modulated", "standard", a, b)) == 1.0
    uniform = ProbabilityTable(dict.fromkeys(OUTCOME_PAIRS, 0.25), "standard", 0, 0)
    assert correlation(uniform) == 0.0


def test_bell_parameter_examples():
    b = bell_value("standard", "standard", CANONICAL_SETTINGS)
    assert b == pytest.approx(2.8284271247461903, abs=1e-12)
    assert bell_value("source-modulated", "standard", CANONICAL_SETTINGS) == 2.0
    assert bell_value("source-modulated", "q", CANONICAL_SETTINGS) == pytest.approx(TSIRELSON_BOUND, abs=1e-12)


def test_bell_parameter_rejects_out_of_range():
    with pytest.raises(InvalidInputError):
        bell_parameter(1.1, 0, 0, 0)
    with pytest.raises(InvalidInputError):
        bell_parameter(math.nan, 0, 0, 0)
    assert bell_parameter(1 + 5e-10, 1, 1, 1) == pytest.approx(2.0)


@given(correlations, correlations, correlations, correlations)
def test_bell_parameter_matches_oracle(e11, e12, e21, e22):
    assert bell_parameter(e11, e12, e21, e22) == pytest.approx(oracles.chsh(e11, e12, e21, e22), abs=1e-12)


@given(angles, angles, angles, angles)
def test_sign_placements_equal_relabelings(a1, a2, b1, b2):
    s = BellSettings(a1, a2, b1, b2)
    es = [correlation(probability_table("standard", "standard", a, b)) for a, b in s.pairs()]
    placements = sorted(sign_placements(*es))
    relabeled = sorted(
        bell_value("standard", "standard", BellSettings(x1, x2, y1, y2))
        for (x1, x2), (y1, y2) in itertools.product([(a1, a2), (a2, a1)], [(b1, b2), (b2, b1)])
    )
    assert placements == pytest.approx(relabeled, abs=1e-12)
    assert max(placements) == pytest.approx(max(relabeled), abs=1e-12)


@settings(max_examples=150)
@given(
    st.sampled_from(list(ScenarioKind)),
    st.sampled_from(list(NormalizationScheme)),
    angles,
    angles,
)
def test_every_table_is_a_distribution(kind, scheme, a, b):
    try:
        p = probability_table(kind, scheme, a, b)
    except DegenerateNormalizationError:
        assert kind.source_controlled and scheme is NormalizationScheme.STANDARD
        return
    assert all(0.0 <= v <= 1.0 for v in p.as_tuple())
    assert math.fsum(p.as_tuple()) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=150)
@given(angles, angles)
def test_tilde_equals_standard_for_entangled_pairs(a, b):
    tilde = normalize_tilde(analytic_quad("standard", a, b))
    std = normalize_standard(analytic_rates("standard", a, b))
    assert tilde.as_tuple() == pytest.approx(std.as_tuple(), abs=1e-9)


@given(angles, angles)
def test_q_tables_do_not_signal(a, b):
    q = q_functions(a, b)
    assert q.alice_marginal(Outcome.PLUS) == pytest.approx(0.5, abs=1e-12)
    assert q.bob_marginal(Outcome.PLUS) == pytest.approx(0.5, abs=1e-12)


@settings(max_examples=150)
@given(
    st.sampled_from(list(ScenarioKind)),
    st.sampled_from(list(NormalizationScheme)),
    angles,
    angles,
    angles,
    angles,
)
def test_bell_never_exceeds_tsirelson(kind, scheme, a1, a2, b1, b2):
    try:
        b = bell_value(kind, scheme, BellSettings(a1, a2, b1, b2))
    except DegenerateNormalizationError:
        return
    assert b <= TSIRELSON_BOUND + 1e-9


def test_source_modulated_standard_is_always_two():
    rng = np.random.default_rng(11)
    done = 0
    while done < 100:
        quad = BellSettings(*rng.uniform(-math.pi, math.pi, 4))
        if not all(non_degenerate(a, b) for a, b in quad.pairs()):
            continue
        assert bell_value("source-modulated", "standard", quad) == 2.0
        done += 1


def test_two_detector_schemes():
    # the standard scheme on two-detector rates uses the flagged physical rates
    assert bell_value("two-detector", "standard", CANONICAL_SETTINGS) == pytest.approx(TSIRELSON_BOUND, abs=1e-12)
    assert bell_value("two-detector", "tilde", CANONICAL_SETTINGS) == pytest.approx(TSIRELSON_BOUND, abs=1e-12)


def test_settings_reject_non_finite():
    with pytest.raises(InvalidInputError):
        BellSettings(0, 0, 0, math.inf)
