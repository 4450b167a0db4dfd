"""Bundled reference pair: a base and its 2-contraction with digit
streams whose distribution behavior does not transfer across the pair.

The fine base repeats the value 2m exactly 2m times (blocks 2,2;
4,4,4,4; 6 sixes; ...).  Its 2-contraction has blocks of m copies of
4m^2 (4; 16,16; 36,36,36; ...).  The fine digit stream interleaves the
low and high halves of each block (0,m,1,m+1,...), so its digit ratios
equidistribute; read in the contracted base, though, every digit ratio
stays below one half, pinning the whole shift orbit under 1/2.  The
coarse digit stream walks 0, 1/m, ..., (m-1)/m inside each block, so
it equidistributes in the contracted base while its fine rewrite is
riddled with zeros.

Two entries of the published reference listing are inconsistent with
the listing's own arithmetic; the report prints both readings:

* the listed first contracted digit of x (2) disagrees with the value
  its fine digits pack to (1), and would also break the under-1/2
  orbit claim at n = 0;
* the listed tenth coarse digit of y (64) is not a valid digit for its
  base 64 and disagrees with the listed fine rewrite, whose tail
  forces 48.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt

from .equidist import dn_diagnostic
from .expansion import DigitStream, t_enclosure, transcode, transcode_inverse
from .numeric import format_decimal
from .sequences import BlockRepetitionRule, ChainSpec, ConstantRule, contract

__all__ = [
    "fine_base_rule",
    "coarse_base_rule",
    "fine_digit",
    "coarse_digit",
    "fine_stream",
    "coarse_stream",
    "RefPairReport",
    "build_report",
    "REFERENCE_COARSE_BASES",
    "REFERENCE_X_COARSE_DIGITS",
    "REFERENCE_Y_COARSE_DIGITS",
    "REFERENCE_Y_FINE_DIGITS",
]

# Published listing prefixes (kept verbatim, inconsistencies included).
REFERENCE_COARSE_BASES = (4, 16, 16, 36, 36, 36, 64, 64, 64, 64)
REFERENCE_X_COARSE_DIGITS = (2, 2, 7, 3, 10, 17, 4, 13, 22, 31)
REFERENCE_Y_COARSE_DIGITS = (0, 0, 8, 0, 12, 24, 0, 16, 32, 64)
REFERENCE_Y_FINE_DIGITS = (0, 0, 0, 0, 2, 0, 0, 0, 2, 0, 4, 0, 0, 0, 2, 0, 4, 0, 6, 0)

ORBIT_THRESHOLD = Fraction(1, 2)
_MAX_ENCLOSURE_DEPTH = 8


def fine_base_rule() -> BlockRepetitionRule:
    """Value 2m repeated 2m times: 2,2,4,4,4,4,6,..."""
    return BlockRepetitionRule(value_affine=(2, 0), repeat_affine=(2, 0))


def coarse_base_rule():
    """The 2-contraction of the fine base: 4,16,16,36,36,36,64,..."""
    return contract(fine_base_rule(), 2)


def _fine_block(n: int) -> tuple[int, int]:
    # Block m covers fine positions m(m-1)+1 .. m(m+1).
    m = max(1, (isqrt(4 * n + 1) - 1) // 2)
    while m * (m + 1) < n:
        m += 1
    while m > 1 and (m - 1) * m >= n:
        m -= 1
    return m, n - m * (m - 1)


def _coarse_block(n: int) -> tuple[int, int]:
    # Block m covers coarse positions m(m-1)/2+1 .. m(m+1)/2.
    m = max(1, (isqrt(8 * n + 1) - 1) // 2)
    while m * (m + 1) // 2 < n:
        m += 1
    while m > 1 and (m - 1) * m // 2 >= n:
        m -= 1
    return m, n - m * (m - 1) // 2


def fine_digit(n: int) -> int:
    """Interleaved low/high halves: block m runs 0, m, 1, m+1, ..."""
    m, r = _fine_block(n)
    if r % 2 == 1:
        return (r - 1) // 2
    return m + r // 2 - 1


def coarse_digit(n: int) -> int:
    """Equal steps inside each block: ratios 0, 1/m, ..., (m-1)/m."""
    m, t = _coarse_block(n)
    return (t - 1) * 4 * m


def fine_stream() -> DigitStream:
    return DigitStream(fine_base_rule(), fine_digit, "pattern")


def coarse_stream() -> DigitStream:
    return DigitStream(coarse_base_rule(), coarse_digit, "pattern")


@dataclass
class RefPairReport:
    orbit_horizon: int
    checks: list[tuple[str, bool]] = field(default_factory=list)
    lines: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(passed for _, passed in self.checks)

    def record(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append((name, passed))
        status = "PASS" if passed else "FAIL"
        self.lines.append(f"[{status}] {name}" + (f": {detail}" if detail else ""))

    def note(self, text: str) -> None:
        self.lines.append(text)

    def render(self) -> str:
        return "\n".join(self.lines) + "\n"


def build_report(orbit_horizon: int = 5000) -> RefPairReport:
    """Run every reference-pair verification and collect the outcomes.

    (a) the contraction of the fine base matches the listed coarse
    bases; (b) the contracted digits of x match the listing at
    positions 2..10 with the position-1 disagreement printed; (c) the
    fine rewrite of y matches the listed 20 digits under the corrected
    tenth digit, with the substitution printed; (d) the shift-orbit
    enclosure stays below 1/2 through the horizon, exactly; (e) digit
    ratio discrepancies for x (fine base) and y (coarse base) shrink
    across sampled prefixes.
    """
    report = RefPairReport(orbit_horizon=orbit_horizon)
    fine_rule = fine_base_rule()
    coarse_rule = coarse_base_rule()
    spec = ChainSpec(base=fine_rule, s=ConstantRule(2), depth=2)
    x_fine = fine_stream()
    y_coarse = coarse_stream()

    # (a) contraction values against the listed coarse bases.
    computed = [coarse_rule.q(n) for n in range(1, len(REFERENCE_COARSE_BASES) + 1)]
    report.record(
        "contraction matches listed coarse bases",
        computed == list(REFERENCE_COARSE_BASES),
        f"computed {computed}",
    )

    # (b) contracted digits of x against the listing.
    x_coarse = transcode(x_fine, spec, 2)
    got = [x_coarse.digit(n) for n in range(1, 11)]
    tail_match = got[1:] == list(REFERENCE_X_COARSE_DIGITS[1:])
    report.record(
        "x contracted digits match listing at positions 2..10",
        tail_match,
        f"computed {got[1:]}",
    )
    report.note(
        f"  position 1: computed {got[0]}, listing prints "
        f"{REFERENCE_X_COARSE_DIGITS[0]}; the fine digits (0,1) pack to "
        f"{got[0]}, and the listed value would push the orbit value at "
        "n=0 to 1/2 or above, so the listing is flagged and the computed "
        "value used"
    )
    report.record(
        "position-1 disagreement is exactly the documented one",
        got[0] == 1 and REFERENCE_X_COARSE_DIGITS[0] == 2,
        "computed 1 vs listed 2",
    )

    # (c) fine rewrite of y under the corrected tenth digit.
    y10 = [y_coarse.digit(n) for n in range(1, 11)]
    report.note(
        f"  y coarse digit 10: pattern gives {y10[9]}, listing prints "
        f"{REFERENCE_Y_COARSE_DIGITS[9]}; 64 is not a digit for base 64 "
        "and the listed fine rewrite ends ...4060, which forces 48, so "
        "48 is used and the substitution flagged"
    )
    report.record(
        "y coarse digits match listing except the documented tenth",
        y10[:9] == list(REFERENCE_Y_COARSE_DIGITS[:9]) and y10[9] == 48,
        f"computed {y10}",
    )
    y_fine = transcode_inverse(y_coarse, spec, 2)
    fine20 = [y_fine.digit(n) for n in range(1, 21)]
    report.record(
        "y fine rewrite matches the listed 20 digits",
        fine20 == list(REFERENCE_Y_FINE_DIGITS),
        "".join(str(d) for d in fine20),
    )

    # (d) exact orbit enclosure below 1/2 for n = 0 .. horizon.
    worst_hi = Fraction(0)
    orbit_ok = True
    for n in range(0, orbit_horizon + 1):
        depth = 1
        while True:
            _, hi = t_enclosure(x_coarse, coarse_rule, n, depth)
            if hi < ORBIT_THRESHOLD:
                break
            depth += 1
            if depth > _MAX_ENCLOSURE_DEPTH:
                orbit_ok = False
                break
        if not orbit_ok:
            break
        if hi > worst_hi:
            worst_hi = hi
    report.record(
        f"orbit enclosure upper bound < 1/2 for all n <= {orbit_horizon}",
        orbit_ok,
        f"worst upper bound {worst_hi} ({format_decimal(worst_hi)})",
    )

    # (e) digit-ratio discrepancy trends.
    samples = [10, 100, 1000, orbit_horizon]
    samples = sorted(set(s for s in samples if s <= orbit_horizon))
    x_dn = dn_diagnostic(x_fine, fine_rule, samples)
    y_dn = dn_diagnostic(y_coarse, coarse_rule, samples)
    for label, rep in (("x in fine base", x_dn), ("y in coarse base", y_dn)):
        first, last = rep.rows[0], rep.rows[-1]
        trend_ok = last.dstar < first.dstar and last.dstar <= Fraction(1, 10)
        detail = ", ".join(
            f"D*({row.n}) = {format_decimal(row.dstar, 6)}" for row in rep.rows
        )
        report.record(f"digit-ratio discrepancy shrinks for {label}", trend_ok, detail)
        report.note(
            f"  averaged reciprocal base proxy at N={last.n}: "
            f"{format_decimal(last.proxy, 10)}"
        )
    return report
