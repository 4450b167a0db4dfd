"""Nested-interval geometry and Falconer-style dimension lower bounds.

The lower bound machinery takes per-level child counts m_k and minimal
gaps eps_k and evaluates d_k = log(m_1 ... m_{k-1}) / -log(m_k eps_k);
the running trace plus a trailing-window minimum stand in for the
liminf, with no limit claimed.

For schedule-generated streams two traces are produced: the exact one
uses the true candidate count omega(k) per position (any valid child
count yields a valid bound, and the exact count is sharper), and the
bound-substituted one replaces omega(k) by the structural floor
q_k^(1 - 1/i(k)) with the pure cylinder gap, which is the closed form
the slow-growth hypothesis drives to 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .expansion import DigitStream
from .numeric import format_decimal, hp_ln
from .theta import ThetaSchedule, digit_candidates

__all__ = [
    "GeometryError",
    "LevelGeometry",
    "basic_intervals",
    "theta_geometry",
    "FalconerTrace",
    "falconer_lower_bound",
    "DimensionTraceRow",
    "theta_dimension_trace",
]

INTERVAL_GUARD = 100_000
GEOMETRY_EXACT_GUARD = 600


class GeometryError(ValueError):
    """Invalid nested-interval data."""


@dataclass(frozen=True)
class LevelGeometry:
    """Children per parent and minimal child gap at one level."""

    k: int
    m: int
    eps: Fraction

    def __post_init__(self):
        if self.m < 1:
            raise GeometryError(f"level {self.k}: child count {self.m} < 1")
        if self.eps <= 0:
            raise GeometryError(f"level {self.k}: gap {self.eps} is not positive")


def basic_intervals(
    schedule: ThetaSchedule, stream: DigitStream, k: int
) -> list[tuple[Fraction, Fraction]]:
    """Level-k enclosures: one interval per digit choice at position k-1.

    The stream fixes digits 1 .. k-2; the digit at position k-1 ranges
    over its candidates, and each interval is that prefix value plus the
    position-k window scaled into the prefix cylinder.  Consecutive
    candidates sit one cylinder apart minus the window width, so the
    pairwise gap is exactly (1 - 1/a(k)^2) / (q_1 ... q_{k-1}).
    Level 1 yields the single window slice of position 1.
    """
    if k < 1 or k > schedule.coverage:
        raise GeometryError(f"level index {k} outside 1..{schedule.coverage}")
    q_prod_prev = 1
    for n in range(1, k):
        q_prod_prev *= schedule.q(n)
    info = schedule.phi_inv(k)
    wlo, whi = info.window
    if k == 1:
        return [(wlo, whi)]
    candidates = digit_candidates(schedule, k - 1)
    if candidates.count > INTERVAL_GUARD:
        raise GeometryError(
            f"{candidates.count} intervals at level {k} exceed the guard {INTERVAL_GUARD}"
        )
    prefix_value = Fraction(0)
    scale = 1
    for n in range(1, k - 1):
        scale *= schedule.q(n)
        prefix_value += Fraction(stream.digit(n), scale)
    intervals = []
    for digit in range(candidates.f_min, candidates.f_max + 1):
        lo = prefix_value + (digit + wlo) / q_prod_prev
        hi = prefix_value + (digit + whi) / q_prod_prev
        intervals.append((lo, hi))
    return intervals


def theta_geometry(schedule: ThetaSchedule, depth: int) -> list[LevelGeometry]:
    """Exact child counts and gap floors for levels 1 .. depth.

    m_k is the candidate count omega(k); eps_k is the enclosure gap
    (1 - 1/a(k)^2) / (q_1 ... q_{k-1}), with the single-candidate
    levels (a = 1, no siblings to separate) assigned the full cylinder
    scale 1 / (q_1 ... q_{k-1}).  Exact rationals only, so the depth is
    guarded; use the dimension trace for long horizons.
    """
    if depth < 1:
        raise GeometryError("need depth >= 1")
    if depth > GEOMETRY_EXACT_GUARD:
        raise GeometryError(
            f"exact geometry is guarded at {GEOMETRY_EXACT_GUARD} levels; "
            "use theta_dimension_trace beyond"
        )
    out = []
    q_prod_prev = 1
    prev_eps: Optional[Fraction] = None
    for k in range(1, depth + 1):
        info = schedule.phi_inv(k)
        omega = digit_candidates(schedule, k).count
        if info.a == 1:
            eps = Fraction(1, q_prod_prev)
        else:
            eps = Fraction(info.a * info.a - 1, info.a * info.a) / q_prod_prev
        if prev_eps is not None and not eps < prev_eps:
            raise GeometryError(f"gap floor fails to decrease at level {k}")
        out.append(LevelGeometry(k=k, m=omega, eps=eps))
        prev_eps = eps
        q_prod_prev *= schedule.q(k)
    return out


@dataclass(frozen=True)
class FalconerTrace:
    """d_k values with the minimum over a trailing window."""

    ds: tuple[Fraction, ...]
    trailing_min: Fraction
    window: int


def falconer_lower_bound(
    geometry: Sequence[LevelGeometry],
    bits: int | None = None,
    window: Optional[int] = None,
) -> FalconerTrace:
    """The lower-bound sequence d_k for an explicit geometry list.

    d_k = log(m_1 ... m_{k-1}) / -log(m_k eps_k), for k = 2 .. K.  The
    logs are fixed-point with the configured precision.  A level with
    m_k * eps_k >= 1 has no contracting geometry and is rejected.
    """
    if len(geometry) < 2:
        raise GeometryError("need at least two levels")
    for a, b in zip(geometry, geometry[1:]):
        if not b.eps < a.eps:
            raise GeometryError(f"gaps must strictly decrease (level {b.k})")
    log_m = [hp_ln(g.m, bits=bits) if g.m > 1 else Fraction(0) for g in geometry]
    ds = []
    numer = Fraction(0)
    for idx in range(1, len(geometry)):
        numer += log_m[idx - 1]
        g = geometry[idx]
        if g.m * g.eps >= 1:
            raise GeometryError(
                f"level {g.k}: m*eps = {g.m * g.eps} >= 1, no contraction to measure"
            )
        denom = -(log_m[idx] + hp_ln(g.eps, bits=bits))
        ds.append(numer / denom)
    window = max(1, len(ds) // 10) if window is None else window
    trailing = ds[-window:]
    return FalconerTrace(ds=tuple(ds), trailing_min=min(trailing), window=window)


@dataclass(frozen=True)
class DimensionTraceRow:
    k: int
    level: int
    omega: int
    log2_eps: Fraction
    d_exact: Fraction
    d_bound: Fraction

    def csv_fields(self) -> list[str]:
        return [
            str(self.k),
            str(self.level),
            str(self.omega),
            format_decimal(self.log2_eps),
            format_decimal(self.d_exact),
            format_decimal(self.d_bound),
        ]


def theta_dimension_trace(
    schedule: ThetaSchedule, horizon: int, bits: int | None = None
) -> list[DimensionTraceRow]:
    """Exact-count and bound-substituted d_k traces to the horizon.

    Everything streams in log space so gap denominators (products of
    all earlier bases) never materialize.  Row k reports the level i(k),
    the exact candidate count, log2 of the exact gap, and both d_k
    variants; rows start at k = 2.
    """
    if not 2 <= horizon <= schedule.coverage:
        raise GeometryError(f"horizon must lie in 2..{schedule.coverage}")
    ln2 = hp_ln(2, bits=bits)
    rows: list[DimensionTraceRow] = []
    sum_log_q = Fraction(0)  # sum of ln q_n for n < k
    sum_log_omega = Fraction(0)  # exact-count numerator
    sum_log_bound = Fraction(0)  # bound-substituted numerator
    prev: Optional[dict] = None
    for k in range(1, horizon + 1):
        info = schedule.phi_inv(k)
        omega = digit_candidates(schedule, k).count
        log_q = hp_ln(schedule.q(k), bits=bits)
        log_omega = hp_ln(omega, bits=bits) if omega > 1 else Fraction(0)
        weight = Fraction(info.level - 1, info.level)
        if prev is not None:
            sum_log_q += prev["log_q"]
            sum_log_omega += prev["log_omega"]
            sum_log_bound += prev["weight"] * prev["log_q"]
        if k >= 2:
            if info.a == 1:
                log_gap_factor = Fraction(0)
            else:
                log_gap_factor = hp_ln(
                    Fraction(info.a * info.a - 1, info.a * info.a), bits=bits
                )
            denom_exact = sum_log_q - log_omega - log_gap_factor
            denom_bound = sum_log_q - weight * log_q
            if denom_exact <= 0 or denom_bound <= 0:
                raise GeometryError(f"no contraction to measure at k = {k}")
            rows.append(
                DimensionTraceRow(
                    k=k,
                    level=info.level,
                    omega=omega,
                    log2_eps=(log_gap_factor - sum_log_q) / ln2,
                    d_exact=sum_log_omega / denom_exact,
                    d_bound=sum_log_bound / denom_bound,
                )
            )
        prev = {"log_q": log_q, "log_omega": log_omega, "weight": weight}
    return rows
