from fractions import Fraction

from cnl.expansion import evaluate, transcode
from cnl.refpair import (
    REFERENCE_X_COARSE_DIGITS,
    REFERENCE_Y_FINE_DIGITS,
    build_report,
    coarse_base_rule,
    coarse_stream,
    fine_base_rule,
    fine_digit,
    fine_stream,
)
from cnl.sequences import ChainSpec, ConstantRule


class TestPatterns:
    def test_fine_base_blocks(self):
        rule = fine_base_rule()
        assert rule.values(12) == [2, 2, 4, 4, 4, 4, 6, 6, 6, 6, 6, 6]

    def test_coarse_base_blocks(self):
        rule = coarse_base_rule()
        assert rule.values(10) == [4, 16, 16, 36, 36, 36, 64, 64, 64, 64]

    def test_fine_digit_interleave(self):
        digits = [fine_digit(n) for n in range(1, 21)]
        assert digits == [0, 1, 0, 2, 1, 3, 0, 3, 1, 4, 2, 5, 0, 4, 1, 5, 2, 6, 3, 7]

    def test_coarse_digit_ramp(self):
        stream = coarse_stream()
        assert stream.prefix(10) == [0, 0, 8, 0, 12, 24, 0, 16, 32, 48]

    def test_digits_stay_in_range(self):
        fine = fine_stream()
        coarse = coarse_stream()
        for n in range(1, 2000):
            assert 0 <= fine.digit(n) <= fine_base_rule().q(n) - 1
        for n in range(1, 500):
            assert 0 <= coarse.digit(n) <= coarse_base_rule().q(n) - 1


class TestCrossBaseStructure:
    def test_x_transcodes_to_listed_tail(self):
        spec = ChainSpec(base=fine_base_rule(), s=ConstantRule(2), depth=2)
        coarse = transcode(fine_stream(), spec, 2)
        assert coarse.prefix(10)[1:] == list(REFERENCE_X_COARSE_DIGITS[1:])
        assert coarse.digit(1) == 1

    def test_y_fine_rewrite_value_preserved(self):
        spec = ChainSpec(base=fine_base_rule(), s=ConstantRule(2), depth=2)
        from cnl.expansion import transcode_inverse

        y = coarse_stream()
        fine = transcode_inverse(y, spec, 2)
        assert fine.prefix(20) == list(REFERENCE_Y_FINE_DIGITS)
        assert evaluate(fine, fine_base_rule(), 20) == evaluate(
            y, coarse_base_rule(), 10
        )

    def test_orbit_stays_low_sample(self):
        from cnl.expansion import t_enclosure

        spec = ChainSpec(base=fine_base_rule(), s=ConstantRule(2), depth=2)
        coarse = transcode(fine_stream(), spec, 2)
        rule = coarse_base_rule()
        for n in range(0, 200):
            depth = 1
            while True:
                lo, hi = t_enclosure(coarse, rule, n, depth)
                if hi < Fraction(1, 2) or depth > 6:
                    break
                depth += 1
            assert hi < Fraction(1, 2)


class TestReport:
    def test_full_report_passes(self):
        report = build_report(orbit_horizon=400)
        assert report.ok
        names = [name for name, _ in report.checks]
        assert any("contraction" in n for n in names)
        assert any("orbit enclosure" in n for n in names)

    def test_report_flags_both_listing_disagreements(self):
        report = build_report(orbit_horizon=50)
        text = report.render()
        assert "computed 1, listing prints 2" in text
        assert "listing prints 64" in text
        assert "48" in text
