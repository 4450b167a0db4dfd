"""Exact star discrepancy, progression certificates, and normality ratios.

Every computation here is exact over rationals.  The one quantity that
cannot be exact, the square root inside the refined progression bound,
is rounded in the direction that keeps the reported bound valid.

Certificates from ``verify_aap`` are proofs rather than heuristics: the
admissible spacing parameter is found by exact interval intersection,
and an accepted certificate stores a witness that re-verifies all three
defining conditions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .expansion import DigitStream
from .numeric import sqrt_lower
from .sequences import BasicSequenceRule, partial_sum_qnk

__all__ = [
    "COND_START",
    "COND_GAP",
    "COND_END",
    "AAPCertificate",
    "AapBound",
    "count_below",
    "star_discrepancy",
    "verify_aap",
    "aap_bound",
    "concat_bound",
    "NormalityRow",
    "NormalityReport",
    "normality_report",
    "DiscrepancyRow",
    "DiscrepancyReport",
    "dn_diagnostic",
]

# Condition codes stored on certificates (wire-format values).
COND_START = 61
COND_GAP = 62
COND_END = 63


def _validate_unit_points(points: Sequence[Fraction]) -> list[Fraction]:
    values = [Fraction(p) for p in points]
    for v in values:
        if not 0 <= v < 1:
            raise ValueError(f"point {v} outside [0, 1)")
    return values


def count_below(points: Sequence[Fraction], gamma: Fraction) -> int:
    """How many points fall in [0, gamma); gamma must lie in (0, 1]."""
    gamma = Fraction(gamma)
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    values = _validate_unit_points(points)
    return sum(1 for v in values if v < gamma)


def star_discrepancy(points: Sequence[Fraction]) -> Fraction:
    """Exact sup over gamma of |count_below/N - gamma|.

    Uses the sorted-points closed form: with x_(1) <= ... <= x_(N) the
    supremum equals max over i of max(x_(i) - (i-1)/N, i/N - x_(i)).
    """
    values = sorted(_validate_unit_points(points))
    n = len(values)
    if n == 0:
        raise ValueError("star discrepancy of an empty sequence is undefined")
    best = Fraction(0)
    for i, x in enumerate(values, start=1):
        left = x - Fraction(i - 1, n)
        right = Fraction(i, n) - x
        if left > best:
            best = left
        if right > best:
            best = right
    return best


@dataclass(frozen=True)
class AAPCertificate:
    """Outcome of an almost-arithmetic-progression check.

    ``accepted`` implies the stored eta satisfies all three conditions
    (initial point, inter-point gaps, final point) exactly for the
    stored delta.  On rejection ``failing_condition`` names the first
    condition whose exact constraint interval is empty.
    """

    delta: Fraction
    epsilon: Fraction
    eta: Optional[Fraction]
    accepted: bool
    failing_condition: Optional[int] = None
    n_points: int = 0


def _check_conditions(
    points: Sequence[Fraction], delta: Fraction, eta: Fraction
) -> bool:
    slack = eta + delta * eta
    tight = eta - delta * eta
    if not 0 <= points[0] <= slack:
        return False
    for a, b in zip(points, points[1:]):
        if not tight <= b - a <= slack:
            return False
    return 1 - slack <= points[-1] < 1


def verify_aap(
    points: Sequence[Fraction], delta: Fraction, epsilon: Fraction
) -> AAPCertificate:
    """Search exactly for an admissible spacing parameter eta.

    The three conditions translate into rational constraints on eta:
    lower bounds from the initial point, every gap, and the final
    point, and upper bounds from every gap and the cap epsilon.  The
    certificate is accepted iff the intersection is a nonempty
    subinterval of (0, epsilon]; the stored witness is its upper end.
    """
    delta = Fraction(delta)
    epsilon = Fraction(epsilon)
    if not 0 <= delta < 1:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    values = _validate_unit_points(points)
    if not values:
        raise ValueError("empty point sequence")
    for a, b in zip(values, values[1:]):
        if not a < b:
            raise ValueError("points must be strictly increasing")

    def reject(code: int) -> AAPCertificate:
        return AAPCertificate(
            delta=delta,
            epsilon=epsilon,
            eta=None,
            accepted=False,
            failing_condition=code,
            n_points=len(values),
        )

    one_plus = 1 + delta
    one_minus = 1 - delta
    gaps = [b - a for a, b in zip(values, values[1:])]
    eta_hi = epsilon
    for g in gaps:
        eta_hi = min(eta_hi, g / one_minus)
    if eta_hi <= 0:
        return reject(COND_GAP)
    if values[0] / one_plus > eta_hi:
        return reject(COND_START)
    for g in gaps:
        if g / one_plus > eta_hi:
            return reject(COND_GAP)
    if values[-1] >= 1 or (1 - values[-1]) / one_plus > eta_hi:
        return reject(COND_END)
    eta = eta_hi
    assert _check_conditions(values, delta, eta)
    return AAPCertificate(
        delta=delta,
        epsilon=epsilon,
        eta=eta,
        accepted=True,
        failing_condition=None,
        n_points=len(values),
    )


@dataclass(frozen=True)
class AapBound:
    """Discrepancy bounds implied by a progression certificate.

    ``fine`` is 1/N + delta/(1 + sqrt(1 - delta^2)) for positive delta
    (computed with a downward-rounded square root, so the bound stays
    valid) and min(eta, 1/N) for delta = 0.  ``coarse`` is 1/N + delta.
    """

    fine: Fraction
    coarse: Fraction


def aap_bound(
    n: int, delta: Fraction, eta: Optional[Fraction] = None, bits: int | None = None
) -> AapBound:
    delta = Fraction(delta)
    if not 0 <= delta < 1:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    if n < 1:
        raise ValueError("bound needs at least one point")
    coarse = Fraction(1, n) + delta
    if delta == 0:
        if eta is None:
            raise ValueError("delta = 0 bound needs the certificate eta")
        fine = min(Fraction(eta), Fraction(1, n))
    else:
        root = sqrt_lower(1 - delta * delta, bits=bits)
        fine = Fraction(1, n) + delta / (1 + root)
    return AapBound(fine=fine, coarse=coarse)


def concat_bound(blocks: Sequence[tuple[int, Fraction]]) -> Fraction:
    """Length-weighted mean of per-block discrepancy bounds.

    The star discrepancy of a concatenation never exceeds this value.
    """
    if not blocks:
        raise ValueError("concat bound of an empty block list is undefined")
    num = Fraction(0)
    den = 0
    for length, bound in blocks:
        if length < 1:
            raise ValueError(f"block lengths must be positive, got {length}")
        bound = Fraction(bound)
        if not 0 <= bound <= 1:
            raise ValueError(f"per-block bounds must lie in [0, 1], got {bound}")
        num += length * bound
        den += length
    return num / den


@dataclass(frozen=True)
class NormalityRow:
    block: tuple[int, ...]
    count: int
    expected: Fraction
    ratio: Optional[Fraction]


@dataclass(frozen=True)
class NormalityReport:
    """Block-count ratios at a fixed prefix length.

    ``rows`` pairs each block with its count and count/expected ratio;
    ``pairwise`` maps (block_a, block_b) to count_a/count_b, or None
    where the denominator count is zero.  Ratios about an empty prefix
    or a zero count are reported as undefined rather than inferred,
    because the limit statements they feed concern tails, not prefixes.
    """

    n: int
    k: int
    rows: tuple[NormalityRow, ...]
    pairwise: dict

    def pairwise_ratio(self, a, b):
        return self.pairwise[(tuple(a), tuple(b))]


def normality_report(
    stream: DigitStream,
    rule: BasicSequenceRule,
    k: int,
    n: int,
    blocks: Sequence[Sequence[int]],
) -> NormalityReport:
    from .expansion import count_block

    blocks = [tuple(int(b) for b in blk) for blk in blocks]
    for blk in blocks:
        if len(blk) != k:
            raise ValueError(f"block {blk} does not have the stated length {k}")
    expected = partial_sum_qnk(rule, n, k) if n > 0 else Fraction(0)
    counts = {blk: count_block(stream, blk, n) for blk in blocks}
    rows = tuple(
        NormalityRow(
            block=blk,
            count=counts[blk],
            expected=expected,
            ratio=(Fraction(counts[blk]) / expected if expected > 0 else None),
        )
        for blk in blocks
    )
    pairwise = {}
    for a in blocks:
        for b in blocks:
            if a == b:
                continue
            pairwise[(a, b)] = (
                Fraction(counts[a], counts[b]) if counts[b] > 0 else None
            )
    return NormalityReport(n=n, k=k, rows=rows, pairwise=pairwise)


@dataclass(frozen=True)
class DiscrepancyRow:
    n: int
    dstar: Fraction
    bound: Optional[Fraction] = None
    certificate: str = ""
    proxy: Optional[Fraction] = None
    envelope: Optional[Fraction] = None


@dataclass
class DiscrepancyReport:
    """Per-prefix star discrepancy rows with bounds and certificates."""

    rows: list[DiscrepancyRow] = field(default_factory=list)
    header_note: str = ""

    def all_pass(self) -> bool:
        return all(row.certificate != "fatal" for row in self.rows)

    def write_csv(self, path) -> None:
        with_proxy = any(row.proxy is not None for row in self.rows)
        with_env = any(row.envelope is not None for row in self.rows)
        columns = ["N", "Dstar_num", "Dstar_den", "bound_num", "bound_den", "certificate"]
        if with_proxy:
            columns += ["proxy_num", "proxy_den"]
        if with_env:
            columns += ["ebar_num", "ebar_den"]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            if self.header_note:
                fh.write(f"# {self.header_note}\n")
            writer.writerow(columns)
            for row in self.rows:
                record = [
                    row.n,
                    row.dstar.numerator,
                    row.dstar.denominator,
                    row.bound.numerator if row.bound is not None else "",
                    row.bound.denominator if row.bound is not None else "",
                    row.certificate,
                ]
                if with_proxy:
                    record += (
                        [row.proxy.numerator, row.proxy.denominator]
                        if row.proxy is not None
                        else ["", ""]
                    )
                if with_env:
                    record += (
                        [row.envelope.numerator, row.envelope.denominator]
                        if row.envelope is not None
                        else ["", ""]
                    )
                writer.writerow(record)


def dn_diagnostic(
    stream: DigitStream, rule: BasicSequenceRule, prefix_lengths: Sequence[int]
) -> DiscrepancyReport:
    """Star discrepancy of the digit ratios E_n / q_n at each prefix.

    Each row carries the averaged-reciprocal proxy (1/N) sum 1/q_n: the
    equivalence between digit-ratio equidistribution and orbit
    equidistribution holds under the hypothesis that this proxy tends
    to zero, which a finite prefix cannot decide, so the number is
    reported and the inference left to the reader.
    """
    report = DiscrepancyReport(header_note="dn diagnostic over digit ratios E_n/q_n")
    running_recip = Fraction(0)
    covered = 0
    ratios: list[Fraction] = []
    for n in sorted(set(int(p) for p in prefix_lengths)):
        if n < 1:
            raise ValueError("prefix lengths must be positive")
        while covered < n:
            covered += 1
            running_recip += Fraction(1, rule.q(covered))
            ratios.append(Fraction(stream.digit(covered), rule.q(covered)))
        report.rows.append(
            DiscrepancyRow(
                n=n,
                dstar=star_discrepancy(ratios),
                bound=Fraction(1),
                certificate="trivial",
                proxy=running_recip / n,
            )
        )
    return report
