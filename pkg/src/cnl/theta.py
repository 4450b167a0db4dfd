"""Digit schedules for streams equidistributed across a contraction chain.

The schedule organizes base positions into levels: level j consists of
l_j blocks of S_j consecutive positions, laid out after all earlier
levels, and the map phi(j, b, c) = L_{j-1} + (b-1) S_j + c addresses
position c of block b at level j.  Each position carries a rational
window; any digit stream whose ratios E_n / q_n land inside the windows
is, at every chain level j, a concatenation of near-arithmetic point
blocks whose discrepancy envelopes shrink to zero, while every digit
stays nonzero in every chain base.

Window convention: the level-j window for offset c covers
[(c-1)/a + 1/a^2, (c-1)/a + 2/a^2) with a = S_j, half open.  The
(c-1) shift keeps the last offset's window inside [0, 1) and makes the
sampled point blocks (taken at offsets 1, 1+S_j, ..., S_k - S_j + 1)
satisfy the progression conditions exactly; half-openness drops the
unreachable right-edge digit, changing candidate counts by at most one.
Schedule dumps record both conventions.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .equidist import DiscrepancyReport, DiscrepancyRow, star_discrepancy
from .expansion import DigitStream
from .sequences import ChainSpec, OutOfDomainError

__all__ = [
    "ScheduleError",
    "TailCertificateError",
    "SelectionPolicy",
    "CandidateSet",
    "PositionInfo",
    "ThetaSchedule",
    "compute_nu",
    "build_schedule",
    "digit_candidates",
    "generate_digits",
    "extract_y",
    "extract_y_prefix",
    "y_prefix_points",
    "envelope",
    "envelope_sup",
    "YPrefixDecomposition",
    "position_decomposition",
    "EnvelopeReport",
    "prefix_bound_check",
]

CANDIDATE_LIST_GUARD = 100_000
DEFAULT_SCAN_BUDGET = 1_000_000


class ScheduleError(ValueError):
    """Schedule construction or lookup failure."""


class TailCertificateError(ScheduleError):
    """Rule lacks the monotone-tail certificate threshold scans need."""


@dataclass(frozen=True)
class SelectionPolicy:
    """Deterministic digit choice inside a candidate window.

    min, max, and mid probe the window extremes and middle; seeded
    draws a pseudo-random candidate from a keyed hash of the position,
    so runs are reproducible given the seed.
    """

    kind: str
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("min", "max", "mid", "seeded"):
            raise ScheduleError(f"unknown policy kind {self.kind!r}")
        if self.kind == "seeded":
            if self.seed is None or not 0 <= self.seed < 1 << 64:
                raise ScheduleError("seeded policy needs a 64-bit seed")

    def pick(self, candidates: "CandidateSet", n: int) -> int:
        if self.kind == "min":
            return candidates.f_min
        if self.kind == "max":
            return candidates.f_max
        if self.kind == "mid":
            return candidates.f_min + (candidates.count - 1) // 2
        digest = hashlib.sha256(f"{self.seed}:{n}".encode("ascii")).digest()
        draw = int.from_bytes(digest[:8], "big")
        return candidates.f_min + draw % candidates.count

    def describe(self) -> str:
        return self.kind if self.kind != "seeded" else f"seeded:{self.seed}"


@dataclass(frozen=True)
class CandidateSet:
    """Consecutive integers F with F / q_n inside the position window."""

    f_min: int
    f_max: int

    @property
    def count(self) -> int:
        return self.f_max - self.f_min + 1

    def __contains__(self, value: int) -> bool:
        return self.f_min <= value <= self.f_max

    def values(self) -> list[int]:
        if self.count > CANDIDATE_LIST_GUARD:
            raise ScheduleError(
                f"{self.count} candidates exceed the materialization guard"
            )
        return list(range(self.f_min, self.f_max + 1))


@dataclass(frozen=True)
class PositionInfo:
    """Decoded coordinates of a scheduled position."""

    n: int
    level: int
    block: int
    offset: int
    a: int
    window: tuple[Fraction, Fraction]


class ThetaSchedule:
    """Level tables plus the position bijection and window lookups.

    For a chain of depth J the schedule lays out levels 1 .. max(J-1, 1)
    and records S_j, the threshold indices nu_j, the block counts l_j,
    and the cumulative lengths L_j.  All table entries are exact
    integers and every structural identity is verified at build time.
    """

    def __init__(self, spec: ChainSpec, levels: int, nu: dict, ell: list, big_l: list):
        self.spec = spec
        self.levels = levels
        self._nu = nu
        self._ell = ell
        self._big_l = big_l

    # Table accessors (1-based level indices).

    def s_value(self, j: int) -> int:
        return self.spec.s_value(j)

    def big_s(self, j: int) -> int:
        return self.spec.big_s(j)

    def nu(self, j: int) -> int:
        if j not in self._nu:
            raise ScheduleError(f"nu_{j} not computed (levels 2..{self.levels + 1})")
        return self._nu[j]

    def ell(self, j: int) -> int:
        if not 1 <= j <= self.levels:
            raise ScheduleError(f"l_{j} not computed (levels 1..{self.levels})")
        return self._ell[j - 1]

    def big_l(self, j: int) -> int:
        if j == 0:
            return 0
        if not 1 <= j <= self.levels:
            raise ScheduleError(f"L_{j} not computed (levels 1..{self.levels})")
        return self._big_l[j - 1]

    @property
    def coverage(self) -> int:
        return self.big_l(self.levels)

    def q(self, n: int) -> int:
        return self.spec.base.q(n)

    # Position bijection.

    def phi(self, j: int, b: int, c: int) -> int:
        if not 1 <= j <= self.levels:
            raise ScheduleError(f"level {j} outside 1..{self.levels}")
        if not 1 <= b <= self.ell(j):
            raise ScheduleError(f"block {b} outside 1..{self.ell(j)} at level {j}")
        big_s = self.big_s(j)
        if not 1 <= c <= big_s:
            raise ScheduleError(f"offset {c} outside 1..{big_s} at level {j}")
        return self.big_l(j - 1) + (b - 1) * big_s + c

    def phi_inv(self, n: int) -> PositionInfo:
        if not 1 <= n <= self.coverage:
            raise ScheduleError(f"position {n} outside scheduled range 1..{self.coverage}")
        level = 1
        while n > self.big_l(level):
            level += 1
        offset_in_level = n - self.big_l(level - 1)
        big_s = self.big_s(level)
        block = (offset_in_level - 1) // big_s + 1
        offset = offset_in_level - (block - 1) * big_s
        return PositionInfo(
            n=n,
            level=level,
            block=block,
            offset=offset,
            a=big_s,
            window=self.window(level, offset, n),
        )

    def window(self, level: int, offset: int, n: int) -> tuple[Fraction, Fraction]:
        if level == 1:
            q = self.q(n)
            return Fraction(1, q), Fraction(2, q)
        a = self.big_s(level)
        lo = Fraction(offset - 1, a) + Fraction(1, a * a)
        return lo, lo + Fraction(1, a * a)

    def dump_json(self) -> dict:
        return {
            "S": [self.big_s(j) for j in range(1, self.levels + 2)],
            "nu": [None] + [self.nu(j) for j in range(2, self.levels + 2)],
            "l": [self.ell(j) for j in range(1, self.levels + 1)],
            "L": [self.big_l(j) for j in range(1, self.levels + 1)],
            "window_shift": "c-1",
            "y_index_base": 0,
        }

    def verify(self) -> list[tuple[str, bool, str]]:
        """Structural identities; build_schedule raises on any failure."""
        checks: list[tuple[str, bool, str]] = []
        for j in range(1, self.levels + 1):
            s_j = self.s_value(j)
            l_j = self.ell(j)
            checks.append(
                (f"l_{j} >= j*s_{j}", l_j >= j * s_j, f"{l_j} >= {j * s_j}")
            )
            rem = self.big_l(j) % self.big_s(j + 1)
            checks.append(
                (f"S_{j + 1} divides L_{j}", rem == 0, f"{self.big_l(j)} mod {self.big_s(j + 1)} = {rem}")
            )
            nu_next = self.nu(j + 1)
            checks.append(
                (
                    f"L_{j} >= nu_{j + 1} - 1",
                    self.big_l(j) >= nu_next - 1,
                    f"{self.big_l(j)} >= {nu_next - 1}",
                )
            )
            if j >= 2:
                lhs = l_j * self.big_s(j)
                rhs = self.big_l(j - 1) * (2 * j * s_j * nu_next - 1)
                checks.append(
                    (f"l_{j} recurrence at level {j}", lhs == rhs, f"{lhs} == {rhs}")
                )
        for j in range(2, self.levels + 1):
            first = self.big_l(j - 1) + 1
            thresh = self.big_s(j) ** (2 * j)
            checks.append(
                (
                    f"level {j} opens past its threshold",
                    self.q(first) >= thresh,
                    f"q_{first} >= S_{j}^{2 * j}",
                )
            )
        return checks


def compute_nu(spec: ChainSpec, j: int, scan_budget: int = DEFAULT_SCAN_BUDGET) -> int:
    """Smallest index from which every base value clears S_j^(2j).

    Requires the base rule to certify a nondecreasing tail: the scan
    walks the certified tail to the first crossing (all later positions
    then clear the threshold by monotonicity) and extends the answer
    leftward over the finitely many earlier positions.
    """
    if j < 2:
        raise ScheduleError("threshold indices are defined for levels >= 2")
    base = spec.base
    if base.monotone_tail_from is None:
        raise TailCertificateError(
            "cannot decide a tail-minimum threshold for a rule without a "
            "certified monotone tail; set monotone_tail_from"
        )
    thresh = spec.big_s(j) ** (2 * j)
    tail = base.monotone_tail_from
    m = tail
    try:
        while base.q(m) < thresh:
            m += 1
            if m - tail > scan_budget:
                raise ScheduleError(
                    f"threshold S_{j}^{2 * j} not crossed within {scan_budget} positions"
                )
    except OutOfDomainError as exc:
        raise ScheduleError(f"threshold never crossed within rule domain: {exc}") from exc
    if m > tail:
        return m
    probe = tail - 1
    while probe >= 1 and base.q(probe) >= thresh:
        probe -= 1
    return probe + 1


def build_schedule(spec: ChainSpec, depth: Optional[int] = None) -> ThetaSchedule:
    """Compute and verify the level tables for the given chain depth.

    Depth J yields levels 1 .. J-1 (a depth-1 build still schedules the
    first level, whose block count depends only on the first
    contraction step).  The build fails loudly if any structural
    identity is violated.
    """
    depth = spec.depth if depth is None else depth
    if depth < 1:
        raise ScheduleError(f"depth must be >= 1, got {depth}")
    levels = max(1, depth - 1)
    nu = {j: compute_nu(spec, j) for j in range(2, levels + 2)}
    ell = [spec.s_value(1) * nu[2]]
    big_l = [ell[0]]
    for j in range(2, levels + 1):
        numer = big_l[-1] * (2 * j * spec.s_value(j) * nu[j + 1] - 1)
        big_s = spec.big_s(j)
        if numer % big_s:
            raise ScheduleError(f"l_{j} is not an integer: {numer} not divisible by {big_s}")
        ell.append(numer // big_s)
        big_l.append(big_l[-1] + big_s * ell[-1])
    schedule = ThetaSchedule(spec, levels, nu, ell, big_l)
    for name, ok, detail in schedule.verify():
        if not ok:
            raise ScheduleError(f"schedule invariant failed: {name} ({detail})")
    return schedule


def _ceil_div(num: int, den: int) -> int:
    return -(-num // den)


def digit_candidates(schedule: ThetaSchedule, n: int) -> CandidateSet:
    """All digits whose ratio falls in the position window.

    Level-1 positions admit exactly the digit 1.  Deeper positions
    admit every integer in a half-open window of width q_n / a^2, so
    the count is at least floor(q_n / a^2) >= 1 and every candidate is
    nonzero.  The set is returned as a range; materializing it is
    guarded because counts grow with q_n.
    """
    info = schedule.phi_inv(n)
    q = schedule.q(n)
    if info.level == 1:
        return CandidateSet(1, 1)
    lo, hi = info.window
    f_min = _ceil_div(q * lo.numerator, lo.denominator)
    f_max = _ceil_div(q * hi.numerator, hi.denominator) - 1
    f_min = max(f_min, 1)
    f_max = min(f_max, q - 1)
    if f_min > f_max:
        raise ScheduleError(f"empty candidate window at position {n}")
    return CandidateSet(f_min, f_max)


def generate_digits(
    schedule: ThetaSchedule, policy: SelectionPolicy, n: int
) -> DigitStream:
    """Digit stream with every digit drawn from its position window."""
    if not 1 <= n <= schedule.coverage:
        raise ScheduleError(
            f"requested {n} digits; schedule covers 1..{schedule.coverage}"
        )
    stream = DigitStream(
        schedule.spec.base,
        lambda pos: policy.pick(digit_candidates(schedule, pos), pos),
        "theta-generated",
        limit=schedule.coverage,
        meta={"policy": policy.describe()},
    )
    stream.prefix(n)
    return stream


def extract_y(
    schedule: ThetaSchedule, stream: DigitStream, j: int, k: int, b: int
) -> list[Fraction]:
    """The level-k block-b point sample for chain level j.

    Points are the digit ratios at offsets 1, 1 + S_j, ..., S_k - S_j + 1
    of the block, S_k / S_j of them, strictly increasing across their
    disjoint windows.
    """
    if not 1 <= j < k:
        raise ScheduleError(f"need j < k, got j={j}, k={k}")
    if k > schedule.levels:
        raise ScheduleError(f"level {k} outside scheduled levels 1..{schedule.levels}")
    step = schedule.big_s(j)
    span = schedule.big_s(k) // step
    points = []
    for m in range(span):
        pos = schedule.phi(k, b, 1 + step * m)
        points.append(Fraction(stream.digit(pos), schedule.q(pos)))
    return points


def _iter_y_positions(schedule: ThetaSchedule, j: int, stop_position: int):
    step = schedule.big_s(j)
    for level in range(j + 1, schedule.levels + 1):
        level_base = schedule.big_l(level - 1)
        if level_base >= stop_position:
            return
        big_s = schedule.big_s(level)
        for b in range(1, schedule.ell(level) + 1):
            block_base = level_base + (b - 1) * big_s
            if block_base >= stop_position:
                break
            for c in range(1, big_s + 1, step):
                pos = block_base + c
                if pos > stop_position:
                    break
                yield pos


def extract_y_prefix(
    schedule: ThetaSchedule, stream: DigitStream, j: int, n: int
) -> list[Fraction]:
    """All sampled points at positions <= n, in position order."""
    if not 1 <= j <= schedule.levels:
        raise ScheduleError(f"level {j} outside 1..{schedule.levels}")
    if n > schedule.coverage:
        raise ScheduleError(f"position {n} beyond coverage {schedule.coverage}")
    return [
        Fraction(stream.digit(pos), schedule.q(pos))
        for pos in _iter_y_positions(schedule, j, n)
    ]


def y_prefix_points(
    schedule: ThetaSchedule, stream: DigitStream, j: int, count: int
) -> list[Fraction]:
    """The first ``count`` sampled points for chain level j."""
    points = []
    for pos in _iter_y_positions(schedule, j, schedule.coverage):
        if len(points) == count:
            break
        points.append(Fraction(stream.digit(pos), schedule.q(pos)))
    if len(points) < count:
        raise ScheduleError(
            f"only {len(points)} sampled points exist within coverage, need {count}"
        )
    return points


def envelope(schedule: ThetaSchedule, j: int, t: int, w: int, z: int) -> Fraction:
    """The concatenation-bound envelope value f at block progress (w, z).

    The denominator counts sampled points: the padded offset L_j / S_j,
    the completed interior levels, w complete level-t blocks, and z
    leftover points.  The numerator charges 2 per completed block and 1
    per leftover or padding point, which is exactly the weighted
    per-block discrepancy budget of the concatenation bound.
    """
    if not 1 <= j < t <= schedule.levels + 1:
        raise ScheduleError(f"need 1 <= j < t <= {schedule.levels + 1}, got ({j}, {t})")
    span = schedule.big_s(t) // schedule.big_s(j)
    if not 0 <= z <= span:
        raise ScheduleError(f"z outside 0..{span}")
    if w < 0 or (t <= schedule.levels and w > schedule.ell(t)):
        raise ScheduleError(f"w outside 0..l_{t}")
    step = schedule.big_s(j)
    offset = schedule.big_l(j) // step
    num = offset + 2 * w + z
    den = offset + span * w + z
    for k in range(j + 1, t):
        l_k = schedule.ell(k)
        num += 2 * l_k
        den += l_k * (schedule.big_s(k) // step)
    return Fraction(num, den)


def envelope_sup(schedule: ThetaSchedule, j: int, t: int) -> Fraction:
    """Envelope supremum over a level: the value at (w, z) = (0, S_t/S_j)."""
    span = schedule.big_s(t) // schedule.big_s(j)
    return envelope(schedule, j, t, 0, span)


@dataclass(frozen=True)
class YPrefixDecomposition:
    """Accounting coordinates of a sampled-point prefix length.

    ``level`` is the accounted level t, and prefix = L_{t-1}/S_j + m
    with m = alpha * (S_t/S_j) + beta, 0 <= alpha <= l_t and
    0 <= beta < S_t/S_j.  The accounting lags the actual points by
    L_j/S_j positions; those stragglers are charged the trivial
    per-point budget inside the envelope.
    """

    prefix: int
    level: int
    m: int
    alpha: int
    beta: int


def position_decomposition(
    schedule: ThetaSchedule, j: int, n: int
) -> YPrefixDecomposition:
    if not 1 <= j <= schedule.levels:
        raise ScheduleError(f"level {j} outside 1..{schedule.levels}")
    step = schedule.big_s(j)
    if n < schedule.big_l(j) // step:
        raise ScheduleError(
            f"prefix {n} below the accounting horizon L_{j}/S_{j} = "
            f"{schedule.big_l(j) // step}"
        )
    for t in range(j + 1, schedule.levels + 1):
        if n <= schedule.big_l(t) // step:
            m = n - schedule.big_l(t - 1) // step
            span = schedule.big_s(t) // step
            return YPrefixDecomposition(
                prefix=n, level=t, m=m, alpha=m // span, beta=m % span
            )
    raise ScheduleError(
        f"prefix {n} beyond the scheduled range (max {schedule.big_l(schedule.levels) // step})"
    )


@dataclass
class EnvelopeReport:
    """Discrepancy-versus-envelope rows plus the envelope trend."""

    report: DiscrepancyReport
    ebar_trend: list[tuple[int, Fraction]]

    def all_pass(self) -> bool:
        return self.report.all_pass()


def prefix_bound_check(
    schedule: ThetaSchedule,
    stream: DigitStream,
    j: int,
    prefix_lengths: Sequence[int],
) -> EnvelopeReport:
    """Pair exact prefix discrepancies with their envelope bounds.

    Each row checks D*(prefix) <= f <= ebar exactly.  Prefixes shorter
    than the accounting horizon L_j/S_j get the trivial bound 1 and a
    "below-horizon" certificate.  Violating rows are flagged fatal; the
    envelope trend over available levels rides along so the shrink
    toward zero is visible.
    """
    report = DiscrepancyReport(
        header_note=(
            f"level {j} sampled-point prefixes; window shift c-1, "
            "sample offsets 1 + m*S_j for m >= 0"
        )
    )
    horizon = schedule.big_l(j) // schedule.big_s(j)
    for n in sorted(set(int(p) for p in prefix_lengths)):
        points = y_prefix_points(schedule, stream, j, n)
        dstar = star_discrepancy(points)
        if n < horizon:
            report.rows.append(
                DiscrepancyRow(n=n, dstar=dstar, bound=Fraction(1), certificate="below-horizon")
            )
            continue
        decomp = position_decomposition(schedule, j, n)
        f_val = envelope(schedule, j, decomp.level, decomp.alpha, decomp.beta)
        ebar = envelope_sup(schedule, j, decomp.level)
        ok = dstar <= f_val <= ebar
        report.rows.append(
            DiscrepancyRow(
                n=n,
                dstar=dstar,
                bound=f_val,
                certificate="pass" if ok else "fatal",
                envelope=ebar,
            )
        )
    trend = [
        (t, envelope_sup(schedule, j, t)) for t in range(j + 1, schedule.levels + 2)
    ]
    return EnvelopeReport(report=report, ebar_trend=trend)
