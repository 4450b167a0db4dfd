import random
from fractions import Fraction

import pytest

from cnl.equidist import star_discrepancy, verify_aap
from cnl.sequences import ChainSpec, ConstantRule, ExplicitListRule, GeometricRule
from cnl.theta import (
    ScheduleError,
    SelectionPolicy,
    TailCertificateError,
    build_schedule,
    compute_nu,
    digit_candidates,
    envelope,
    envelope_sup,
    extract_y,
    extract_y_prefix,
    generate_digits,
    position_decomposition,
    prefix_bound_check,
    y_prefix_points,
)

from .conftest import doubling_spec


class TestComputeNu:
    def test_doubling_thresholds(self, spec_a):
        assert compute_nu(spec_a, 2) == 1
        assert compute_nu(spec_a, 3) == 9
        assert compute_nu(spec_a, 4) == 21

    def test_uncertified_rule_refused(self):
        rule = ExplicitListRule([2**k for k in range(4, 40)])
        rule.monotone_tail_from = None
        spec = ChainSpec(base=rule, s=ConstantRule(2), depth=3)
        with pytest.raises(TailCertificateError):
            compute_nu(spec, 2)

    def test_left_extension_stops_at_dip(self):
        values = [16, 2, 16, 16, 16, 16, 16, 16]
        rule = ExplicitListRule(values, monotone_tail_from=2)
        spec = ChainSpec(base=rule, s=ConstantRule(2), depth=2)
        # threshold 16: position 2 dips below, so the tail starts at 3
        assert compute_nu(spec, 2) == 3

    def test_domain_exhaustion(self):
        rule = ExplicitListRule([2, 2, 2], monotone_tail_from=1)
        spec = ChainSpec(base=rule, s=ConstantRule(2), depth=2)
        with pytest.raises(ScheduleError):
            compute_nu(spec, 2)


class TestBuildSchedule:
    def test_tables(self, schedule_a):
        assert [schedule_a.nu(j) for j in (2, 3, 4)] == [1, 9, 21]
        assert [schedule_a.ell(j) for j in (1, 2, 3)] == [2, 71, 9036]
        assert [schedule_a.big_l(j) for j in (1, 2, 3)] == [2, 144, 36288]
        assert schedule_a.coverage == 36288

    def test_identities(self, schedule_a, spec_a):
        for j in (1, 2, 3):
            assert schedule_a.ell(j) >= j * spec_a.s_value(j)
            assert schedule_a.big_l(j) % spec_a.big_s(j + 1) == 0
            assert schedule_a.big_l(j) >= schedule_a.nu(j + 1) - 1
        for j in (2, 3):
            lhs = schedule_a.ell(j) * spec_a.big_s(j)
            rhs = schedule_a.big_l(j - 1) * (
                2 * j * spec_a.s_value(j) * schedule_a.nu(j + 1) - 1
            )
            assert lhs == rhs

    def test_depth_one_schedules_first_level(self):
        schedule = build_schedule(doubling_spec(depth=1))
        assert schedule.levels == 1
        assert schedule.coverage == 2
        stream = generate_digits(schedule, SelectionPolicy("min"), 2)
        assert stream.prefix(2) == [1, 1]

    def test_dump_shape(self, schedule_a):
        dump = schedule_a.dump_json()
        assert dump["S"] == [1, 2, 4, 8]
        assert dump["nu"] == [None, 1, 9, 21]
        assert dump["l"] == [2, 71, 9036]
        assert dump["L"] == [2, 144, 36288]
        assert dump["window_shift"] == "c-1"
        assert dump["y_index_base"] == 0


class TestBijection:
    def test_first_position(self, schedule_a):
        assert schedule_a.phi(1, 1, 1) == 1

    def test_level_two_start(self, schedule_a):
        assert schedule_a.phi(2, 1, 1) == 3

    def test_last_level_two_position(self, schedule_a):
        info = schedule_a.phi_inv(144)
        assert (info.level, info.block, info.offset) == (2, 71, 2)

    def test_exhaustive_roundtrip(self, schedule_a):
        for n in range(1, schedule_a.coverage + 1):
            info = schedule_a.phi_inv(n)
            assert schedule_a.phi(info.level, info.block, info.offset) == n

    def test_out_of_range(self, schedule_a):
        with pytest.raises(ScheduleError):
            schedule_a.phi_inv(schedule_a.coverage + 1)
        with pytest.raises(ScheduleError):
            schedule_a.phi(2, 72, 1)


class TestCandidates:
    def test_level_one_forced(self, schedule_a):
        for n in (1, 2):
            cand = digit_candidates(schedule_a, n)
            assert (cand.f_min, cand.f_max) == (1, 1)

    def test_position_three_window(self, schedule_a):
        cand = digit_candidates(schedule_a, 3)
        assert (cand.f_min, cand.f_max, cand.count) == (16, 31, 16)
        info = schedule_a.phi_inv(3)
        assert info.window == (Fraction(1, 4), Fraction(1, 2))

    def test_position_four_window(self, schedule_a):
        cand = digit_candidates(schedule_a, 4)
        assert (cand.f_min, cand.f_max, cand.count) == (96, 127, 32)
        # count clears the structural floor q^(1 - 1/level)
        assert cand.count**2 >= schedule_a.q(4)

    def test_floor_bound_and_nonzero(self, schedule_a):
        for n in range(1, 600):
            info = schedule_a.phi_inv(n)
            cand = digit_candidates(schedule_a, n)
            assert cand.f_min >= 1
            assert cand.f_max <= schedule_a.q(n) - 1
            if info.level >= 2:
                assert cand.count >= max(1, schedule_a.q(n) // (info.a * info.a))
                if schedule_a.q(n) >= 16:
                    assert cand.count > 2
            else:
                assert cand.count == 1

    def test_materialization_guard(self, schedule_a):
        with pytest.raises(ScheduleError):
            digit_candidates(schedule_a, 200).values()


class TestGenerate:
    def test_min_policy_prefix(self, stream_a):
        assert stream_a.prefix(4) == [1, 1, 16, 96]

    def test_stream_tagged_with_policy(self, stream_a):
        assert stream_a.provenance == "theta-generated"
        assert stream_a.meta["policy"] == "min"

    def test_max_policy(self, schedule_a):
        stream = generate_digits(schedule_a, SelectionPolicy("max"), 4)
        assert stream.digit(3) == 31

    def test_mid_policy(self, schedule_a):
        stream = generate_digits(schedule_a, SelectionPolicy("mid"), 4)
        assert stream.digit(3) == 16 + 7

    def test_seeded_policy_deterministic(self, schedule_a):
        a = generate_digits(schedule_a, SelectionPolicy("seeded", seed=42), 100)
        b = generate_digits(schedule_a, SelectionPolicy("seeded", seed=42), 100)
        c = generate_digits(schedule_a, SelectionPolicy("seeded", seed=43), 100)
        assert a.prefix(100) == b.prefix(100)
        assert a.prefix(100) != c.prefix(100)

    def test_all_digits_in_window_and_nonzero(self, schedule_a):
        for policy in (SelectionPolicy("min"), SelectionPolicy("max"),
                       SelectionPolicy("mid"), SelectionPolicy("seeded", seed=7)):
            stream = generate_digits(schedule_a, policy, 300)
            for n in range(1, 301):
                digit = stream.digit(n)
                assert digit != 0
                assert digit in digit_candidates(schedule_a, n)

    def test_no_zero_blocks(self, schedule_a, stream_a):
        from cnl.expansion import count_block

        assert count_block(stream_a, (0,), 2000) == 0

    def test_coverage_guard(self, schedule_a):
        with pytest.raises(ScheduleError):
            generate_digits(schedule_a, SelectionPolicy("min"), schedule_a.coverage + 1)


class TestExtractY:
    def test_first_level_two_block(self, schedule_a, stream_a):
        assert extract_y(schedule_a, stream_a, 1, 2, 1) == [
            Fraction(1, 4),
            Fraction(3, 4),
        ]

    def test_j_must_be_less_than_k(self, schedule_a, stream_a):
        with pytest.raises(ScheduleError):
            extract_y(schedule_a, stream_a, 2, 2, 1)

    def test_level_three_sampling_offsets(self, schedule_a, stream_a):
        points = extract_y(schedule_a, stream_a, 2, 3, 1)
        assert len(points) == 2
        p1 = schedule_a.phi(3, 1, 1)
        p3 = schedule_a.phi(3, 1, 3)
        assert points == [
            Fraction(stream_a.digit(p1), schedule_a.q(p1)),
            Fraction(stream_a.digit(p3), schedule_a.q(p3)),
        ]

    def test_prefix_collects_in_position_order(self, schedule_a, stream_a):
        points = extract_y_prefix(schedule_a, stream_a, 1, 146)
        assert len(points) == 144  # 142 level-2 samples plus two level-3 ones
        assert points[:2] == [Fraction(1, 4), Fraction(3, 4)]

    def test_prefix_skips_coarser_offsets(self, schedule_a, stream_a):
        points = extract_y_prefix(schedule_a, stream_a, 2, 152)
        # only offsets 1 and 3 of the first two level-3 blocks qualify
        assert len(points) == 4

    def test_y_prefix_points_count(self, schedule_a, stream_a):
        assert len(y_prefix_points(schedule_a, stream_a, 1, 10)) == 10


class TestEnvelope:
    def test_sup_values(self, schedule_a):
        assert envelope_sup(schedule_a, 1, 2) == 1
        assert envelope_sup(schedule_a, 1, 3) == 1
        assert envelope_sup(schedule_a, 1, 4) == Fraction(18224, 36296)

    def test_sup_nonincreasing(self, schedule_a):
        values = [envelope_sup(schedule_a, 1, t) for t in (2, 3, 4)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_sup_dominates_grid(self, schedule_a):
        # full grid wherever it fits a 10^4-point budget, subsampled beyond
        for j, t in ((1, 2), (1, 3), (2, 3), (1, 4), (2, 4), (3, 4)):
            span = schedule_a.big_s(t) // schedule_a.big_s(j)
            sup = envelope_sup(schedule_a, j, t)
            w_max = schedule_a.ell(t) if t <= schedule_a.levels else 2000
            if (w_max + 1) * (span + 1) <= 10_000:
                w_values = range(w_max + 1)
            else:
                stride = max(1, w_max // (10_000 // (span + 1)))
                w_values = sorted(set(list(range(0, w_max + 1, stride)) + [w_max]))
            for w in w_values:
                for z in range(span + 1):
                    assert envelope(schedule_a, j, t, w, z) <= sup

    def test_strictly_below_sup_when_informative(self, schedule_a):
        # the only envelope below 1 at this depth separates strictly
        sup = envelope_sup(schedule_a, 1, 4)
        for w in (0, 1, 2, 17, 1000):
            for z in range(9):
                if (w, z) == (0, 8):
                    continue
                assert envelope(schedule_a, 1, 4, w, z) < sup

    def test_domain_checks(self, schedule_a):
        with pytest.raises(ScheduleError):
            envelope(schedule_a, 2, 2, 0, 0)
        with pytest.raises(ScheduleError):
            envelope(schedule_a, 1, 3, 0, 5)


class TestPositionDecomposition:
    def test_first_sample_of_new_level(self, schedule_a):
        d = position_decomposition(schedule_a, 1, 3)
        assert (d.level, d.m, d.alpha, d.beta) == (2, 1, 0, 1)

    def test_two_complete_blocks(self, schedule_a):
        d = position_decomposition(schedule_a, 1, 4)
        assert (d.level, d.alpha, d.beta) == (2, 1, 0)

    def test_boundary_prefix(self, schedule_a):
        d = position_decomposition(schedule_a, 1, 144)
        assert (d.level, d.alpha, d.beta) == (2, 71, 0)
        d = position_decomposition(schedule_a, 1, 145)
        assert (d.level, d.alpha, d.beta) == (3, 0, 1)

    def test_beta_range(self, schedule_a):
        for n in range(2, 400):
            d = position_decomposition(schedule_a, 1, n)
            span = schedule_a.big_s(d.level)
            assert 0 <= d.beta < span
            assert 0 <= d.alpha <= schedule_a.ell(d.level)
            assert d.m == d.alpha * span + d.beta

    def test_below_horizon_rejected(self, schedule_a):
        with pytest.raises(ScheduleError):
            position_decomposition(schedule_a, 2, 71)


class TestPrefixBoundCheck:
    def test_short_prefix_trivial_envelope(self, schedule_a, stream_a):
        rep = prefix_bound_check(schedule_a, stream_a, 1, [2])
        row = rep.report.rows[0]
        assert row.dstar == Fraction(1, 4)
        assert row.bound == 1
        assert row.certificate == "pass"

    def test_rows_pass_exactly(self, schedule_a, stream_a):
        lengths = [2, 3, 4, 16, 142, 143, 144, 145, 500, 1024, 4096, 4998]
        rep = prefix_bound_check(schedule_a, stream_a, 1, lengths)
        assert rep.all_pass()
        for row in rep.report.rows:
            assert row.dstar <= row.bound
            if row.envelope is not None:
                assert row.bound <= row.envelope

    def test_trend_reported(self, schedule_a, stream_a):
        rep = prefix_bound_check(schedule_a, stream_a, 1, [4])
        assert rep.ebar_trend == [
            (2, Fraction(1)),
            (3, Fraction(1)),
            (4, Fraction(18224, 36296)),
        ]

    def test_deep_prefix_strictly_inside_informative_envelope(
        self, schedule_a, stream_a
    ):
        rep = prefix_bound_check(schedule_a, stream_a, 2, [72, 100, 1000, 2428])
        assert rep.all_pass()


class TestYBlockProgressions:
    def test_every_complete_block_certifies(self, spec_a, schedule_a, stream_a):
        rng = random.Random(9)
        checked = 0
        for k in (2, 3):
            for b in range(1, schedule_a.ell(k) + 1):
                if schedule_a.big_l(k - 1) + b * schedule_a.big_s(k) > 600:
                    break
                for j in range(1, k):
                    points = extract_y(schedule_a, stream_a, j, k, b)
                    delta = Fraction(1, spec_a.big_s(j) * spec_a.big_s(k))
                    eps = Fraction(spec_a.big_s(j), spec_a.big_s(k))
                    cert = verify_aap(points, delta, eps)
                    assert cert.accepted
                    assert star_discrepancy(points) <= 2 * eps
                    checked += 1
        assert checked > 100


class TestOtherConfigurations:
    def test_depth_five_reaches_informative_envelope(self):
        # fast-growing base keeps the level-4 region small enough to enter
        spec = ChainSpec(base=GeometricRule(1, 16), s=ConstantRule(2), depth=5)
        schedule = build_schedule(spec)
        assert schedule.levels == 4
        horizon = schedule.big_l(3) + 400
        stream = generate_digits(schedule, SelectionPolicy("min"), horizon)
        n_points = len(extract_y_prefix(schedule, stream, 1, horizon))
        rep = prefix_bound_check(schedule, stream, 1, [n_points])
        assert rep.all_pass()
        row = rep.report.rows[0]
        decomp = position_decomposition(schedule, 1, n_points)
        assert decomp.level == 4
        sup = envelope_sup(schedule, 1, 4)
        assert sup < 1
        assert row.dstar <= row.bound < sup

    def test_triple_contraction_chain(self):
        spec = ChainSpec(base=GeometricRule(27, 3), s=ConstantRule(3), depth=3)
        schedule = build_schedule(spec)
        stream = generate_digits(schedule, SelectionPolicy("min"), schedule.big_l(2))
        for n in range(1, schedule.big_l(2) + 1):
            assert stream.digit(n) != 0
        rep = prefix_bound_check(
            schedule, stream, 1, [schedule.big_l(1), schedule.big_l(2) // 3]
        )
        assert rep.all_pass()

    def test_envelope_grid_strict_near_sup_with_step_three(self):
        spec = ChainSpec(base=GeometricRule(27, 3), s=ConstantRule(3), depth=4)
        schedule = build_schedule(spec)
        for j, t in ((1, 3), (1, 4), (2, 4)):
            sup = envelope_sup(schedule, j, t)
            span = schedule.big_s(t) // schedule.big_s(j)
            w_max = schedule.ell(t) if t <= schedule.levels else 100
            for w in sorted(set([0, 1, 2, w_max // 2, w_max])):
                for z in range(span + 1):
                    val = envelope(schedule, j, t, w, z)
                    assert val <= sup
                    if w >= 1 and span > 2:
                        assert val < sup
