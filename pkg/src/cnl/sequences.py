"""Basic-sequence rules, contraction chains, and growth diagnostics.

A basic sequence is an integer sequence q_1, q_2, ... with every
q_n >= 2.  Rules here are finitely describable generators rather than
materialized arrays, because downstream digit schedules query positions
up to 10**5 whose values run to thousands of bits.

Limit properties ("infinite in limit", "k-divergent") are never decided
by this module.  Operations emit finite-horizon evidence only, and the
schedule machinery requires callers to certify tail monotonicity via
``monotone_tail_from`` before anything scans for a threshold crossing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Optional

from .numeric import hp_ln

__all__ = [
    "OutOfDomainError",
    "RuleError",
    "BasicSequenceRule",
    "ExplicitListRule",
    "ConstantRule",
    "GeometricRule",
    "BlockRepetitionRule",
    "ContractionRule",
    "ShiftedContractionRule",
    "ChainSpec",
    "qn",
    "partial_sum_qnk",
    "DivergenceReport",
    "divergence_report",
    "contract",
    "derive_chain",
    "shifted_rule",
    "GrowthTrace",
    "growth_condition_trace",
    "rule_to_json",
    "rule_from_json",
]


class OutOfDomainError(ValueError):
    """Query past the end of a finitely described rule."""


class RuleError(ValueError):
    """Invalid rule parameters."""


class BasicSequenceRule:
    """Generator of integer bases q_n >= 2 for n = 1, 2, ...

    ``monotone_tail_from`` is the index from which q is certified
    nondecreasing, or None when no certificate exists.  Values are pure
    functions of the position, immutable after construction, and safe
    to query concurrently.
    """

    kind = "abstract"

    def __init__(self, monotone_tail_from: Optional[int] = None):
        if monotone_tail_from is not None and monotone_tail_from < 1:
            raise RuleError("monotone_tail_from must be a positive index")
        self.monotone_tail_from = monotone_tail_from

    @property
    def domain_max(self) -> Optional[int]:
        return None

    def q(self, n: int) -> int:
        raise NotImplementedError

    def _check_position(self, n: int) -> None:
        if n < 1:
            raise OutOfDomainError(f"positions start at 1, got {n}")
        limit = self.domain_max
        if limit is not None and n > limit:
            raise OutOfDomainError(f"position {n} past end of {self.kind} rule (length {limit})")

    def values(self, count: int, start: int = 1) -> list[int]:
        return [self.q(n) for n in range(start, start + count)]

    def params_json(self) -> dict:
        raise NotImplementedError


class ExplicitListRule(BasicSequenceRule):
    kind = "explicit-list"

    def __init__(self, values, monotone_tail_from: Optional[int] = None):
        vals = [int(v) for v in values]
        if not vals:
            raise RuleError("explicit-list rule needs at least one value")
        for v in vals:
            if v < 2:
                raise RuleError(f"basic sequence values must be >= 2, got {v}")
        if monotone_tail_from is not None:
            tail = vals[monotone_tail_from - 1 :]
            if any(a > b for a, b in zip(tail, tail[1:])):
                raise RuleError("claimed monotone tail is not nondecreasing")
        super().__init__(monotone_tail_from)
        self._values = vals

    @property
    def domain_max(self) -> Optional[int]:
        return len(self._values)

    def q(self, n: int) -> int:
        self._check_position(n)
        return self._values[n - 1]

    def params_json(self) -> dict:
        return {"values": [str(v) for v in self._values]}


class ConstantRule(BasicSequenceRule):
    kind = "constant"

    def __init__(self, value: int):
        value = int(value)
        if value < 2:
            raise RuleError(f"constant base must be >= 2, got {value}")
        super().__init__(monotone_tail_from=1)
        self.value = value

    def q(self, n: int) -> int:
        self._check_position(n)
        return self.value

    def params_json(self) -> dict:
        return {"value": str(self.value)}


class GeometricRule(BasicSequenceRule):
    """q_n = coefficient * ratio**n."""

    kind = "geometric"

    def __init__(self, coefficient: int, ratio: int):
        coefficient = int(coefficient)
        ratio = int(ratio)
        if coefficient < 1 or ratio < 1:
            raise RuleError("geometric rule needs coefficient >= 1 and ratio >= 1")
        if coefficient * ratio < 2:
            raise RuleError("geometric rule must start at q_1 >= 2")
        super().__init__(monotone_tail_from=1)
        self.coefficient = coefficient
        self.ratio = ratio

    def q(self, n: int) -> int:
        self._check_position(n)
        return self.coefficient * self.ratio**n

    def params_json(self) -> dict:
        return {"coefficient": str(self.coefficient), "ratio": str(self.ratio)}


class BlockRepetitionRule(BasicSequenceRule):
    """Value v_m repeated t_m times, for m = 1, 2, ...

    Two parameterizations: an explicit finite list of (value, repeat)
    pairs, or affine maps v_m = va*m + vb and t_m = ta*m + tb that
    extend without bound.
    """

    kind = "block-repetition"

    def __init__(self, pairs=None, value_affine=None, repeat_affine=None):
        if (pairs is None) == (value_affine is None):
            raise RuleError("give either pairs or the two affine maps")
        if pairs is not None:
            pairs = [(int(v), int(t)) for v, t in pairs]
            if not pairs:
                raise RuleError("block-repetition needs at least one block")
            for v, t in pairs:
                if v < 2:
                    raise RuleError(f"block value must be >= 2, got {v}")
                if t < 1:
                    raise RuleError(f"block repeat must be >= 1, got {t}")
            self._pairs = pairs
            self._value_affine = None
            self._repeat_affine = None
            self._cum = [0]
            for _, t in pairs:
                self._cum.append(self._cum[-1] + t)
            tail_from = None
            vals = [v for v, _ in pairs]
            if all(a <= b for a, b in zip(vals, vals[1:])):
                tail_from = 1
        else:
            va, vb = (int(value_affine[0]), int(value_affine[1]))
            ta, tb = (int(repeat_affine[0]), int(repeat_affine[1]))
            if va < 0 or ta < 0:
                raise RuleError("affine block maps must be nondecreasing in m")
            if va + vb < 2:
                raise RuleError("first block value must be >= 2")
            if ta + tb < 1:
                raise RuleError("first block repeat must be >= 1")
            self._pairs = None
            self._value_affine = (va, vb)
            self._repeat_affine = (ta, tb)
            tail_from = 1
        super().__init__(monotone_tail_from=tail_from)

    @property
    def domain_max(self) -> Optional[int]:
        if self._pairs is not None:
            return self._cum[-1]
        return None

    def _affine_block_of(self, n: int) -> tuple[int, int]:
        # Cumulative length through block m is ta*m(m+1)/2 + tb*m;
        # invert with an isqrt seed and a linear fixup.
        ta, tb = self._repeat_affine

        def cum(m: int) -> int:
            return ta * m * (m + 1) // 2 + tb * m

        if ta == 0:
            m = (n + tb - 1) // tb
        else:
            m = max(1, (isqrt(8 * n // ta + 1) - 1) // 2)
            while cum(m) < n:
                m += 1
            while m > 1 and cum(m - 1) >= n:
                m -= 1
        return m, n - cum(m - 1)

    def block_of(self, n: int) -> tuple[int, int]:
        """Block index m and 1-based offset inside it for position n."""
        self._check_position(n)
        if self._pairs is not None:
            lo, hi = 0, len(self._pairs)
            while lo + 1 < hi:
                mid = (lo + hi) // 2
                if self._cum[mid] < n:
                    lo = mid
                else:
                    hi = mid
            return hi, n - self._cum[lo]
        return self._affine_block_of(n)

    def q(self, n: int) -> int:
        m, _ = self.block_of(n)
        if self._pairs is not None:
            return self._pairs[m - 1][0]
        va, vb = self._value_affine
        return va * m + vb

    def params_json(self) -> dict:
        if self._pairs is not None:
            return {"pairs": [[str(v), str(t)] for v, t in self._pairs]}
        va, vb = self._value_affine
        ta, tb = self._repeat_affine
        return {
            "value_slope": str(va),
            "value_intercept": str(vb),
            "repeat_slope": str(ta),
            "repeat_intercept": str(tb),
        }


class ContractionRule(BasicSequenceRule):
    """Groups s consecutive source values into their product."""

    kind = "composed-contraction"

    def __init__(self, base: BasicSequenceRule, s: int):
        s = int(s)
        if s < 1:
            raise RuleError(f"contraction step must be >= 1, got {s}")
        tail_from = None
        if base.monotone_tail_from is not None:
            # Block n covers positions s(n-1)+1 .. sn; products of
            # nondecreasing values >= 2 are nondecreasing blockwise.
            tail_from = (base.monotone_tail_from - 1 + s - 1) // s + 1
        super().__init__(monotone_tail_from=tail_from)
        self.base = base
        self.s = s

    @property
    def domain_max(self) -> Optional[int]:
        limit = self.base.domain_max
        if limit is None:
            return None
        return limit // self.s

    def q(self, n: int) -> int:
        self._check_position(n)
        start = self.s * (n - 1)
        prod = 1
        for w in range(1, self.s + 1):
            prod *= self.base.q(start + w)
        return prod

    def params_json(self) -> dict:
        return {"base": rule_to_json(self.base), "s": str(self.s)}


class ShiftedContractionRule(BasicSequenceRule):
    """Contraction whose first value merges the k leading source bases.

    Value 1 is the product of source positions 1..k; value n >= 2 is the
    product of the block of length s starting at position s(n-2)+k+1,
    so the blocks tile the source without gaps after the shift.
    """

    kind = "shifted-contraction"

    def __init__(self, base: BasicSequenceRule, s: int, k: int):
        s = int(s)
        k = int(k)
        if s < 1:
            raise RuleError("contraction step must be >= 1")
        if not 1 <= k <= s - 1:
            raise RuleError(f"shift must lie in 1..{s - 1}, got {k}")
        tail_from = None
        if base.monotone_tail_from is not None:
            tail_from = max(2, (base.monotone_tail_from - k - 1 + s - 1) // s + 2)
        super().__init__(monotone_tail_from=tail_from)
        self.base = base
        self.s = s
        self.k = k

    @property
    def domain_max(self) -> Optional[int]:
        limit = self.base.domain_max
        if limit is None:
            return None
        return (limit - self.k) // self.s + 1

    def q(self, n: int) -> int:
        self._check_position(n)
        if n == 1:
            prod = 1
            for i in range(1, self.k + 1):
                prod *= self.base.q(i)
            return prod
        start = self.s * (n - 2) + self.k
        prod = 1
        for w in range(1, self.s + 1):
            prod *= self.base.q(start + w)
        return prod

    def params_json(self) -> dict:
        return {"base": rule_to_json(self.base), "s": str(self.s), "shift": str(self.k)}


@dataclass(frozen=True)
class ChainSpec:
    """A base sequence, a contraction-step sequence, and a chain depth.

    The chain is Q_1 = base and Q_{j+1} = contract(Q_j, s_j), where s_j
    is the j-th value of the step sequence.  S_j denotes the cumulative
    product s_1 * ... * s_{j-1} (so S_1 = 1), which is the block length
    of Q_j relative to the base.
    """

    base: BasicSequenceRule
    s: BasicSequenceRule
    depth: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.depth < 1:
            raise RuleError(f"chain depth must be >= 1, got {self.depth}")

    def s_value(self, j: int) -> int:
        return self.s.q(j)

    def big_s(self, j: int) -> int:
        """S_j: product of the first j-1 contraction steps (S_1 = 1)."""
        if j < 1:
            raise RuleError(f"S_j defined for j >= 1, got {j}")
        key = ("S", j)
        if key not in self._cache:
            prod = 1
            for k in range(1, j):
                prod *= self.s_value(k)
            self._cache[key] = prod
        return self._cache[key]

    def rules(self) -> list[BasicSequenceRule]:
        key = ("chain",)
        if key not in self._cache:
            chain = [self.base]
            for j in range(1, self.depth):
                chain.append(ContractionRule(chain[-1], self.s_value(j)))
            self._cache[key] = chain
        return self._cache[key]

    def rule(self, j: int) -> BasicSequenceRule:
        if not 1 <= j <= self.depth:
            raise RuleError(f"chain level {j} outside 1..{self.depth}")
        return self.rules()[j - 1]


def qn(rule: BasicSequenceRule, n: int) -> int:
    """The n-th base value of a rule."""
    value = rule.q(n)
    if value < 2:
        raise RuleError(f"rule produced q_{n} = {value} < 2")
    return value


def partial_sum_qnk(rule: BasicSequenceRule, n: int, k: int) -> Fraction:
    """Sum over j <= n of 1/(q_j * ... * q_{j+k-1}); 0 for n = 0."""
    if n < 0:
        raise OutOfDomainError(f"prefix length must be >= 0, got {n}")
    if k < 1:
        raise OutOfDomainError(f"window length must be >= 1, got {k}")
    if n == 0:
        return Fraction(0)
    window = 1
    for i in range(1, k + 1):
        window *= rule.q(i)
    total = Fraction(1, window)
    for j in range(2, n + 1):
        window = window * rule.q(j + k - 1) // rule.q(j - 1)
        total += Fraction(1, window)
    return total


@dataclass(frozen=True)
class DivergenceReport:
    """Finite-horizon partial sums with a growth classification.

    The flag never asserts a limit; it summarizes how the last decade of
    increments compares with the first.
    """

    k: int
    horizon: int
    values: tuple[Fraction, ...]
    growth_ratio: Fraction
    flag: str


_BOUNDED_CUTOFF = Fraction(1, 1000)
_LINEAR_CUTOFF = Fraction(9, 10)


def divergence_report(rule: BasicSequenceRule, k: int, horizon: int) -> DivergenceReport:
    """Partial sums of the k-window reciprocals up to the horizon.

    The classification compares the increment over the trailing decade
    against the increment over the leading decade: near-equal increments
    flag "linear growth", vanishing ones flag "bounded at horizon", and
    everything between flags "slow growth".
    """
    if horizon < 1:
        raise OutOfDomainError("horizon must be >= 1")
    values = [partial_sum_qnk(rule, 0, k)]
    window = 1
    for i in range(1, k + 1):
        window *= rule.q(i)
    values.append(values[0] + Fraction(1, window))
    for j in range(2, horizon + 1):
        window = window * rule.q(j + k - 1) // rule.q(j - 1)
        values.append(values[-1] + Fraction(1, window))
    decade = max(1, horizon // 10)
    head = values[decade] - values[0]
    tail = values[horizon] - values[horizon - decade]
    ratio = tail / head
    if ratio <= _BOUNDED_CUTOFF:
        flag = "bounded at horizon"
    elif ratio >= _LINEAR_CUTOFF:
        flag = "linear growth"
    else:
        flag = "slow growth"
    return DivergenceReport(
        k=k,
        horizon=horizon,
        values=tuple(values[1:]),
        growth_ratio=ratio,
        flag=flag,
    )


def contract(rule: BasicSequenceRule, s: int) -> BasicSequenceRule:
    """Group s consecutive bases into one; s = 1 returns the rule itself."""
    if s == 1:
        return rule
    return ContractionRule(rule, s)


def derive_chain(spec: ChainSpec) -> list[BasicSequenceRule]:
    """The contraction chain Q_1 .. Q_depth."""
    return list(spec.rules())


def shifted_rule(spec: ChainSpec, j: int, k: int) -> BasicSequenceRule:
    """The k-shifted variant of chain level j (k = 0 is level j itself)."""
    big_s = spec.big_s(j)
    if not 0 <= k <= big_s - 1:
        raise OutOfDomainError(f"shift {k} outside 0..{big_s - 1} at level {j}")
    if k == 0:
        return spec.rule(j)
    return ShiftedContractionRule(spec.base, big_s, k)


@dataclass(frozen=True)
class GrowthTrace:
    """Ratios log q_k / sum_{n<k} log q_n and a trend flag."""

    horizon: int
    ratios: tuple[Fraction, ...]
    flag: str


def growth_condition_trace(
    rule: BasicSequenceRule, horizon: int, bits: int | None = None
) -> GrowthTrace:
    """Evidence for the slow-growth hypothesis log q_k = o(sum log q_n).

    Ratios are fixed-point quotients of high-precision logarithms.  The
    flag reads "decreasing at horizon" when the final ratio has dropped
    below three quarters of the mid-horizon ratio, which is what a
    ratio tending to zero looks like at any finite horizon, and "not
    decreasing" otherwise.
    """
    if horizon < 2:
        raise OutOfDomainError("growth trace needs horizon >= 2")
    logs = [hp_ln(rule.q(n), bits=bits) for n in range(1, horizon + 1)]
    ratios: list[Fraction] = []
    running = logs[0]
    for k in range(2, horizon + 1):
        ratios.append(Fraction(logs[k - 1]) / running)
        running += logs[k - 1]
    mid = ratios[max(0, (len(ratios) - 1) // 2)]
    last = ratios[-1]
    flag = "decreasing at horizon" if last <= Fraction(3, 4) * mid else "not decreasing"
    return GrowthTrace(horizon=horizon, ratios=tuple(ratios), flag=flag)


_RULE_KINDS = {}


def _register(cls):
    _RULE_KINDS[cls.kind] = cls
    return cls


for _cls in (
    ExplicitListRule,
    ConstantRule,
    GeometricRule,
    BlockRepetitionRule,
    ContractionRule,
    ShiftedContractionRule,
):
    _register(_cls)


def rule_to_json(rule: BasicSequenceRule) -> dict:
    """Serialize a rule; integers travel as decimal strings."""
    return {
        "kind": rule.kind,
        "params": rule.params_json(),
        "monotone_tail_from": rule.monotone_tail_from,
    }


def rule_from_json(obj: dict) -> BasicSequenceRule:
    kind = obj.get("kind")
    params = obj.get("params", {})
    tail = obj.get("monotone_tail_from")
    if kind == "explicit-list":
        return ExplicitListRule(params["values"], monotone_tail_from=tail)
    if kind == "constant":
        return ConstantRule(params["value"])
    if kind == "geometric":
        return GeometricRule(params["coefficient"], params["ratio"])
    if kind == "block-repetition":
        if "pairs" in params:
            return BlockRepetitionRule(pairs=params["pairs"])
        return BlockRepetitionRule(
            value_affine=(params["value_slope"], params["value_intercept"]),
            repeat_affine=(params["repeat_slope"], params["repeat_intercept"]),
        )
    if kind == "composed-contraction":
        return ContractionRule(rule_from_json(params["base"]), params["s"])
    if kind == "shifted-contraction":
        return ShiftedContractionRule(
            rule_from_json(params["base"]), params["s"], params["shift"]
        )
    raise RuleError(f"unknown rule kind {kind!r}")
