"""Tests for growth, (A0), (A1), (VA1), (wVA1) checks and regularity classification.

The ball conditions are run on double phase functionals t² + |x1| t^q in the
plane, whose moduli behave like r^(1 − (q − 2)) near the line x1 = 0.
"""

import math

import numpy as np
import pytest

from orlicz_reg.conditions import (
    ConditionKind,
    ConditionReport,
    InconsistentReportsError,
    ModulusOfContinuity,
    RegularityClass,
    Verdict,
    check_a0,
    check_a1,
    check_derivative_rate,
    check_implication_chain,
    check_rate_condition,
    check_wva1,
    classify_regularity,
    closed_form_modulus,
    estimate_va1_modulus,
    fit_holder_rate,
    reproduce_witness,
)
from orlicz_reg.geometry import Domain, domain_samples
from orlicz_reg.phi import Family, PhiError, PhiSpec

SQUARE = Domain.rect([(-1.0, 1.0), (-1.0, 1.0)])
SMALL_RADII = [0.016, 0.008, 0.004, 0.002]
PLANE_POWER = PhiSpec.create(Family.POWER, {"p": 3.0}, domain=SQUARE)


def double_phase(q: float, beta: float = 1.0) -> PhiSpec:
    return PhiSpec.create(
        Family.DOUBLE_PHASE,
        {"p": 2.0, "q": q, "beta": beta},
        {"a": f"abs(x1)^{beta!r}"},
        domain=SQUARE,
    )


def power(p: float = 3.0, **params) -> PhiSpec:
    return PhiSpec.create(Family.POWER, {"p": p, **params}, domain=Domain.interval(-1, 1))


def variable_exponent() -> PhiSpec:
    # p(x) = 2 + |x1|^0.3 has modulus of continuity r^0.3 at x1 = 0
    return PhiSpec.create(
        Family.VARIABLE_EXPONENT,
        {"p": 2.0, "q": 3.0, "beta": 0.3},
        {"p": "2 + abs(x1)^0.3"},
        domain=SQUARE,
    )


def report(kind: ConditionKind, verdict: Verdict, rate=None) -> ConditionReport:
    return ConditionReport(condition=kind, verdict=verdict, holder_rate=rate)


# =============================================================================
# Rate conditions and (A0)
# =============================================================================


class TestRateConditions:

    SAMPLES = np.array([[0.0], [0.5]])

    @pytest.mark.parametrize(
        "kind, gamma, verdict",
        [
            ("aInc", 3.0, Verdict.HOLDS),
            ("aInc", 3.5, Verdict.FAILS),
            ("aDec", 3.0, Verdict.HOLDS),
            ("aDec", 2.5, Verdict.FAILS),
            ("Inc", 2.5, Verdict.HOLDS),
            ("Dec", 2.5, Verdict.FAILS),
            ("Dec", 3.5, Verdict.HOLDS),
        ],
        ids=["aInc3", "aInc3.5", "aDec3", "aDec2.5", "Inc2.5", "Dec2.5", "Dec3.5"],
    )
    def test_power(self, kind, gamma, verdict):
        rep = check_rate_condition(power(), kind, gamma, self.SAMPLES)
        assert rep.verdict is verdict
        assert rep.label == f"{kind}({gamma:g})"

    def test_failing_witness_reproduces(self):
        rep = check_rate_condition(power(), "aInc", 3.5, self.SAMPLES)
        # h(t)/h(s) over t ∈ [1e-2, 1e2] reaches (1e4)^0.5
        assert rep.constant_estimate == pytest.approx(100.0, rel=1e-9)
        assert reproduce_witness(power(), rep) == pytest.approx(rep.witness.ratio, rel=1e-9)

    def test_derivative_rate(self):
        rep = check_rate_condition(power(), "aInc", 2.0, self.SAMPLES, derivative=True)
        assert rep.holds

    def test_pointwise_derivative_form(self):
        assert check_derivative_rate(power(), 3.0, self.SAMPLES).holds
        failing = check_derivative_rate(power(), 3.5, self.SAMPLES)
        assert failing.verdict is Verdict.FAILS
        assert reproduce_witness(power(), failing) == pytest.approx(3.5 / 3.0)

    def test_plain_callable(self):
        rep = check_rate_condition(
            lambda x, t: t ** 2 * (1.0 + 0.0 * x[..., 0]), ConditionKind.DEC, 2.0, self.SAMPLES
        )
        assert rep.holds

    def test_callable_derivative_rejected(self):
        with pytest.raises(ValueError):
            check_rate_condition(lambda x, t: t, "aInc", 1.0, self.SAMPLES, derivative=True)

    def test_not_a_rate_condition(self):
        with pytest.raises(ValueError):
            check_rate_condition(power(), "A1", 2.0, self.SAMPLES)

    @pytest.mark.parametrize("scale, verdict", [(5.0, Verdict.HOLDS), (20.0, Verdict.FAILS)])
    def test_a0(self, scale, verdict):
        phi = power(2.0, scale=scale)
        rep = check_a0(phi, self.SAMPLES)
        assert rep.verdict is verdict
        assert rep.constant_estimate == pytest.approx(scale)
        assert reproduce_witness(phi, rep) == pytest.approx(scale)


# =============================================================================
# (A1)
# =============================================================================


class TestA1:

    def test_holds_for_small_gap(self):
        rep = check_a1(double_phase(2.2), SMALL_RADII[:3], ball_count=16)
        assert rep.holds
        assert rep.constant_estimate < 1.1

    def test_fails_for_large_gap(self):
        phi = double_phase(4.0)
        rep = check_a1(phi, SMALL_RADII[:3], ball_count=16)
        assert rep.verdict is Verdict.FAILS
        # worst ball sits on x1 = 0 at the top of the admissible range
        assert rep.constant_estimate > 10.0
        assert rep.witness.ratio == pytest.approx(rep.constant_estimate, rel=1e-6)
        assert reproduce_witness(phi, rep) == pytest.approx(rep.witness.ratio)

    @pytest.mark.parametrize(
        "radii", [[0.6], [0.0, 0.1], []], ids=["above-r0", "zero", "empty"]
    )
    def test_bad_radii(self, radii):
        with pytest.raises(ValueError):
            check_a1(double_phase(2.2), radii)


# =============================================================================
# (VA1) and (wVA1)
# =============================================================================


class TestVanishingModulus:

    def test_autonomous_is_zero(self):
        phi = PhiSpec.create(Family.POWER, {"p": 2.0}, domain=SQUARE)
        rep = estimate_va1_modulus(phi, SMALL_RADII[:3], ball_count=8)
        assert rep.holds
        assert all(w == 0 for _, w in rep.modulus_table)
        assert "omega ≡ 0" in rep.summary()
        assert rep.holder_rate == 1.0

    def test_double_phase_rate(self):
        rep = estimate_va1_modulus(double_phase(2.2), SMALL_RADII, ball_count=16)
        assert rep.holds
        assert [r for r, _ in rep.modulus_table] == sorted(SMALL_RADII)
        # ω(r) ~ r^(1 - 0.2) along x1 = 0
        assert rep.holder_rate == pytest.approx(0.8, abs=0.1)
        assert reproduce_witness(double_phase(2.2), rep) == pytest.approx(rep.witness.ratio)

    def test_table_is_nondecreasing(self):
        rep = estimate_va1_modulus(double_phase(2.2), SMALL_RADII, ball_count=16)
        ws = [w for _, w in rep.modulus_table]
        assert ws == sorted(ws)
        assert all(w >= raw for (_, w), (_, raw) in zip(rep.modulus_table, rep.raw_table))

    def test_fails_for_large_gap(self):
        rep = estimate_va1_modulus(double_phase(4.0), SMALL_RADII[:3], ball_count=16)
        assert rep.verdict is Verdict.FAILS
        assert rep.holder_rate is None

    def test_weak_condition_separates(self):
        # q = 3: (VA1) stalls at a constant modulus, (wVA1) with ε = 1/2 decays like r^(1/2)
        phi = double_phase(3.0)
        va1 = estimate_va1_modulus(phi, SMALL_RADII, ball_count=16)
        wva1 = check_wva1(phi, SMALL_RADII, 0.5, ball_count=16)
        a1 = check_a1(phi, SMALL_RADII[:3], ball_count=16)
        assert va1.verdict is Verdict.FAILS
        assert wva1.holds
        assert wva1.label == "wVA1(0.5)"
        assert a1.holds
        assert classify_regularity([va1, wva1, a1]) is RegularityClass.C_ALPHA_ALL

    @pytest.mark.parametrize("eps", [0.0, 1.0])
    def test_wva1_eps_range(self, eps):
        with pytest.raises(ValueError):
            check_wva1(double_phase(2.2), SMALL_RADII, eps)

    @pytest.mark.heavy
    def test_double_phase_rate_full_budget(self):
        rep = estimate_va1_modulus(double_phase(2.2), SMALL_RADII + [0.001])
        assert rep.holds
        assert rep.holder_rate == pytest.approx(0.8, abs=0.05)

    def test_variable_exponent_rate(self):
        # ω(r) ~ r^0.3 log(1/|B_r|); the log factor costs 2/log(1/|B_r|) of slope
        radii = [8e-16, 4e-16, 2e-16, 1e-16]
        rep = estimate_va1_modulus(variable_exponent(), radii, ball_count=8)
        assert rep.holds
        assert all(0 < w < 0.01 for _, w in rep.modulus_table)
        assert 0.25 <= rep.holder_rate < 0.3


# =============================================================================
# Hölder rates and moduli
# =============================================================================


class TestModulus:

    def test_fit_pure_power(self):
        table = [(r, 0.3 * r ** 0.6) for r in (0.002, 0.004, 0.008, 0.016)]
        assert fit_holder_rate(table) == pytest.approx(0.6)

    def test_fit_zero_table(self):
        assert fit_holder_rate([(0.01, 0.0), (0.02, 0.0)]) == 1.0

    def test_fit_rejects_flat(self):
        assert fit_holder_rate([(0.01, 0.5), (0.02, 0.5), (0.04, 0.5)]) is None

    def test_fit_needs_three_points(self):
        assert fit_holder_rate([(0.01, 0.1), (0.02, 0.2)]) is None

    def test_table_interpolation(self):
        omega = ModulusOfContinuity(
            table=((0.01, 0.1), (0.02, 0.2), (0.04, 0.4)), vanishing=True, holder_rate=1.0
        )
        assert omega(0.02) == pytest.approx(0.2)
        assert omega(0.005) == pytest.approx(0.05)
        assert omega(1.0) == pytest.approx(0.4)
        values = omega(np.linspace(0.0, 0.05, 30))
        assert np.all(np.diff(values) >= -1e-15)

    def test_expression_is_clipped(self):
        omega = ModulusOfContinuity.from_expression("10*r", vanishing=True)
        assert omega(0.5) == 1.0
        assert omega(0.0) == 0.0
        assert omega(0.01) == pytest.approx(0.1)

    def test_expression_uses_only_r(self):
        with pytest.raises(ValueError):
            ModulusOfContinuity.from_expression("x1*r")

    def test_needs_exactly_one_source(self):
        with pytest.raises(ValueError):
            ModulusOfContinuity()

    def test_from_report(self):
        rep = estimate_va1_modulus(double_phase(2.2), SMALL_RADII, ball_count=16)
        omega = ModulusOfContinuity.from_report(rep)
        assert omega.vanishing
        assert omega(SMALL_RADII[0]) == pytest.approx(rep.modulus_table[-1][1])


class TestClosedForm:

    def test_autonomous(self):
        omega = closed_form_modulus(power())
        assert omega.is_zero
        assert omega.regularity is RegularityClass.C_1_ALPHA

    @pytest.mark.parametrize(
        "q, eps, rate, regularity",
        [
            (2.2, 0.0, 0.8, RegularityClass.C_1_ALPHA),
            (2.2, 0.1, 0.82, RegularityClass.C_ALPHA_ALL),
            (3.0, 0.0, None, RegularityClass.A1_ONLY),
            (4.0, 0.0, None, RegularityClass.NONE),
        ],
        ids=["q2.2", "q2.2-eps", "q3-borderline", "q4"],
    )
    def test_double_phase(self, q, eps, rate, regularity):
        omega = closed_form_modulus(double_phase(q), eps)
        assert omega.regularity is regularity
        if rate is None:
            assert omega.holder_rate is None
            assert omega(0.01) == 1.0
        else:
            assert omega.holder_rate == pytest.approx(rate)
            assert omega(0.01) == pytest.approx(0.01 ** rate)

    def test_perturbed(self):
        phi = PhiSpec.create(
            Family.PERTURBED, {"p": 2.0, "beta": 0.5}, {"a": "1 + abs(x1)^0.5"}, domain=SQUARE
        )
        omega = closed_form_modulus(phi)
        assert omega(0.1) == pytest.approx(0.2 ** 0.5)
        assert not omega.rate_is_strict
        assert omega.rate_text == "0.5"

    def test_variable_exponent(self):
        omega = closed_form_modulus(variable_exponent())
        assert omega.vanishing
        assert omega.regularity is RegularityClass.C_1_ALPHA
        assert omega.holder_rate == 0.3
        assert omega.rate_is_strict
        assert omega.rate_text == "<0.3"
        assert 0 < omega(1e-9) < omega(1e-7) < 1
        # local slope sits below 0.3 by about 1/log(1/r)
        slope = math.log(omega(1e-20) / omega(1e-21)) / math.log(10)
        assert 0.25 < slope < 0.3

    def test_custom_has_none(self):
        phi = PhiSpec.create(Family.CUSTOM, {"p": 2.0, "q": 2.0}, {"phi": "t^2 + x1^2*t^2"})
        with pytest.raises(PhiError):
            closed_form_modulus(phi)

    def test_needs_beta(self):
        phi = PhiSpec.create(Family.DOUBLE_PHASE, {"p": 2.0, "q": 2.2}, {"a": "abs(x1)"})
        with pytest.raises(PhiError, match="beta"):
            closed_form_modulus(phi)


# =============================================================================
# Classification
# =============================================================================


class TestClassification:

    @pytest.mark.parametrize(
        "reports, expected",
        [
            ([report(ConditionKind.VA1, Verdict.HOLDS, 0.8)], RegularityClass.C_1_ALPHA),
            ([report(ConditionKind.VA1, Verdict.HOLDS)], RegularityClass.C_ALPHA_ALL),
            (
                [
                    report(ConditionKind.VA1, Verdict.FAILS),
                    report(ConditionKind.WVA1, Verdict.HOLDS),
                ],
                RegularityClass.C_ALPHA_ALL,
            ),
            (
                [
                    report(ConditionKind.WVA1, Verdict.FAILS),
                    report(ConditionKind.A1, Verdict.HOLDS),
                ],
                RegularityClass.A1_ONLY,
            ),
            ([report(ConditionKind.A1, Verdict.FAILS)], RegularityClass.NONE),
        ],
        ids=["va1-rate", "va1", "wva1", "a1", "none"],
    )
    def test_classify(self, reports, expected):
        assert classify_regularity(reports) is expected

    @pytest.mark.parametrize(
        "reports",
        [
            [report(ConditionKind.VA1, Verdict.HOLDS), report(ConditionKind.A1, Verdict.FAILS)],
            [report(ConditionKind.VA1, Verdict.HOLDS), report(ConditionKind.WVA1, Verdict.FAILS)],
            [report(ConditionKind.WVA1, Verdict.HOLDS), report(ConditionKind.A1, Verdict.FAILS)],
        ],
        ids=["va1-a1", "va1-wva1", "wva1-a1"],
    )
    def test_broken_chain(self, reports):
        with pytest.raises(InconsistentReportsError):
            check_implication_chain(reports)

    @pytest.mark.parametrize(
        "phi, eps, expected",
        [
            (PLANE_POWER, 0.5, RegularityClass.C_1_ALPHA),
            (double_phase(2.2), 0.5, RegularityClass.C_1_ALPHA),
            (double_phase(3.0), 0.5, RegularityClass.C_ALPHA_ALL),
            (double_phase(4.0), 0.25, RegularityClass.NONE),
        ],
        ids=["power", "q2.2", "q3", "q4"],
    )
    def test_chain_holds_on_computed_reports(self, phi, eps, expected):
        reports = [
            estimate_va1_modulus(phi, SMALL_RADII, ball_count=16),
            check_wva1(phi, SMALL_RADII, eps, ball_count=16),
            check_a1(phi, SMALL_RADII[:3], ball_count=16),
        ]
        check_implication_chain(reports)
        assert classify_regularity(reports) is expected

    def test_inconclusive_does_not_break_chain(self):
        check_implication_chain(
            [
                report(ConditionKind.VA1, Verdict.HOLDS),
                report(ConditionKind.A1, Verdict.INCONCLUSIVE),
            ]
        )

    def test_needs_a_ball_condition(self):
        with pytest.raises(ValueError):
            classify_regularity([report(ConditionKind.A0, Verdict.HOLDS)])

    def test_samples_drive_a0(self):
        phi = double_phase(2.2)
        rep = check_a0(phi, domain_samples(SQUARE, 64))
        # φ(x, 1) = 1 + |x1| ∈ [1, 2]
        assert rep.holds
        assert 1.0 <= rep.constant_estimate <= 2.0
