"""Digit expansion, evaluation, orbit enclosures, and chain transcoding.

The digit system is mixed radix: a number x in [0,1) has digits E_n
with 0 <= E_n <= q_n - 1 and value sum E_n / (q_1 ... q_n).  Expansions
of rationals use the greedy floor recurrence, which realizes the
uniqueness convention (the forbidden tail is the all-(q_n - 1) one, so
terminating expansions carry trailing zeros).

Pointwise evaluation of the shift orbit T_n(x) = (q_1 ... q_n) x mod 1
is not finitely computable for an infinitely specified number, so
``t_enclosure`` returns an interval certified to contain it; claims
like "T_n(x) < 1/2" become decidable whenever the upper edge clears
the threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .sequences import BasicSequenceRule, ChainSpec, OutOfDomainError

__all__ = [
    "DigitError",
    "DigitStream",
    "expand",
    "evaluate",
    "t_enclosure",
    "count_block",
    "transcode",
    "transcode_inverse",
    "transcode_shifted",
    "mod_s_gap",
    "Census",
    "digit_census",
    "save_jsonl",
    "load_jsonl",
]

PROVENANCES = ("expanded-from-rational", "pattern", "theta-generated", "file")


class DigitError(ValueError):
    """Digit out of range, missing, or otherwise invalid."""


class DigitStream:
    """Lazily generated digit sequence against a base rule.

    Digits are produced by a pure position-indexed function and cached;
    prefix analyses over disjoint windows may run concurrently on a
    shared stream.  ``limit`` bounds the available positions for
    finitely described sources.
    """

    def __init__(
        self,
        rule: BasicSequenceRule,
        digit_fn: Callable[[int], int],
        provenance: str,
        limit: Optional[int] = None,
        meta: Optional[dict] = None,
    ):
        if provenance not in PROVENANCES:
            raise DigitError(f"unknown provenance {provenance!r}")
        self.rule = rule
        self.provenance = provenance
        self.meta = dict(meta or {})
        self._fn = digit_fn
        self._limit = limit
        self._cache: list[int] = []

    @property
    def limit(self) -> Optional[int]:
        return self._limit

    def digit(self, n: int) -> int:
        if n < 1:
            raise DigitError(f"digit positions start at 1, got {n}")
        if self._limit is not None and n > self._limit:
            raise DigitError(f"digit {n} unavailable (stream ends at {self._limit})")
        while len(self._cache) < n:
            pos = len(self._cache) + 1
            value = self._fn(pos)
            q = self.rule.q(pos)
            if not 0 <= value <= q - 1:
                raise DigitError(f"digit {value} out of range [0, {q - 1}] at position {pos}")
            self._cache.append(value)
        return self._cache[n - 1]

    def prefix(self, n: int) -> list[int]:
        if n >= 1:
            self.digit(n)
        return self._cache[:n]

    def max_digit_diagnostic(self, n: int) -> dict:
        """Length of the trailing maximal-digit run in the n-prefix.

        A fresh non-maximal digit after the last maximal run witnesses,
        for this prefix, the convention that E_n != q_n - 1 infinitely
        often.  Diagnostic only; no tail claim is made.
        """
        digits = self.prefix(n)
        run = 0
        for pos in range(n, 0, -1):
            if digits[pos - 1] == self.rule.q(pos) - 1:
                run += 1
            else:
                break
        return {"prefix": n, "trailing_max_run": run, "witnessed": run == 0}

    @staticmethod
    def from_list(
        rule: BasicSequenceRule, digits: Sequence[int], provenance: str
    ) -> "DigitStream":
        values = [int(d) for d in digits]
        return DigitStream(rule, lambda n: values[n - 1], provenance, limit=len(values))


def expand(x: Fraction, rule: BasicSequenceRule, n_digits: int) -> DigitStream:
    """Greedy digit expansion of a rational in [0,1).

    The digits satisfy E_n = floor(q_1..q_n x) - q_n floor(q_1..q_{n-1} x)
    and the evaluated prefix differs from x by less than 1/(q_1..q_N).
    """
    x = Fraction(x)
    if not 0 <= x < 1:
        raise DigitError(f"expand requires x in [0,1), got {x}")
    if n_digits < 1:
        raise DigitError("need at least one digit")
    digits: list[int] = []
    rem = x
    for n in range(1, n_digits + 1):
        rem *= rule.q(n)
        digit = rem.numerator // rem.denominator
        digits.append(digit)
        rem -= digit
    return DigitStream.from_list(rule, digits, "expanded-from-rational")


def evaluate(stream: DigitStream, rule: BasicSequenceRule, n: int) -> Fraction:
    """Exact value of the n-digit prefix, in [0, 1)."""
    if n < 0:
        raise DigitError("prefix length must be >= 0")
    value = Fraction(0)
    for pos in range(n, 0, -1):
        digit = stream.digit(pos)
        q = rule.q(pos)
        if not 0 <= digit <= q - 1:
            raise DigitError(f"digit {digit} out of range at position {pos}")
        value = (digit + value) / q
    return value


def t_enclosure(
    stream: DigitStream, rule: BasicSequenceRule, n: int, depth: int
) -> tuple[Fraction, Fraction]:
    """Interval certain to contain T_n(x) for any tail extension.

    The lower edge is the value of the digits n+1 .. n+depth read in
    the shifted base; the upper edge adds one ulp of that prefix.
    """
    if depth < 1:
        raise DigitError("enclosure depth must be >= 1")
    lo = Fraction(0)
    scale = 1
    for m in range(1, depth + 1):
        q = rule.q(n + m)
        scale *= q
        lo += Fraction(stream.digit(n + m), scale)
    return lo, lo + Fraction(1, scale)


def count_block(stream: DigitStream, block: Sequence[int], n: int) -> int:
    """Occurrences of the block starting at positions 1..n."""
    entries = [int(b) for b in block]
    if not entries:
        raise DigitError("blocks must be nonempty")
    if n < 0:
        raise DigitError("prefix length must be >= 0")
    if n == 0:
        return 0
    digits = stream.prefix(n + len(entries) - 1)
    count = 0
    for p in range(n):
        if digits[p : p + len(entries)] == entries:
            count += 1
    return count


def transcode(stream: DigitStream, spec: ChainSpec, j: int) -> DigitStream:
    """Digits of the same number in chain base j.

    Each coarse digit packs a block of S_j source digits with their
    mixed-radix weights, so prefix values are preserved exactly.
    """
    if not 1 <= j <= spec.depth:
        raise OutOfDomainError(f"chain level {j} outside 1..{spec.depth}")
    if j == 1:
        return stream
    big_s = spec.big_s(j)
    base = spec.base

    def coarse_digit(n: int) -> int:
        start = big_s * (n - 1)
        value = 0
        for v in range(1, big_s + 1):
            value = value * base.q(start + v) + stream.digit(start + v)
        return value

    limit = None if stream.limit is None else stream.limit // big_s
    return DigitStream(spec.rule(j), coarse_digit, stream.provenance, limit=limit)


def transcode_inverse(stream: DigitStream, spec: ChainSpec, j: int) -> DigitStream:
    """Base digits recovered from a level-j digit stream.

    Inverse of ``transcode``: each coarse digit is decomposed by
    successive division into its block of S_j base digits.
    """
    if not 1 <= j <= spec.depth:
        raise OutOfDomainError(f"chain level {j} outside 1..{spec.depth}")
    if j == 1:
        return stream
    big_s = spec.big_s(j)
    base = spec.base

    def fine_digit(n: int) -> int:
        block, offset = divmod(n - 1, big_s)
        value = stream.digit(block + 1)
        start = big_s * block
        digits = []
        for v in range(big_s, 0, -1):
            value, d = divmod(value, base.q(start + v))
            digits.append(d)
        if value:
            raise DigitError(f"coarse digit at block {block + 1} exceeds its base")
        digits.reverse()
        return digits[offset]

    limit = None if stream.limit is None else stream.limit * big_s
    return DigitStream(base, fine_digit, stream.provenance, limit=limit)


def transcode_shifted(stream: DigitStream, spec: ChainSpec, j: int, k: int) -> DigitStream:
    """Digits of the same number in the k-shifted level-j base.

    The first shifted digit packs source positions 1..k; later digits
    pack the S_j-blocks that tile the source from position k+1 on.
    """
    from .sequences import shifted_rule

    if k == 0:
        return transcode(stream, spec, j)
    rule = shifted_rule(spec, j, k)
    big_s = spec.big_s(j)
    base = spec.base

    def shifted_digit(n: int) -> int:
        if n == 1:
            start, width = 0, k
        else:
            start, width = k + big_s * (n - 2), big_s
        value = 0
        for v in range(1, width + 1):
            value = value * base.q(start + v) + stream.digit(start + v)
        return value

    limit = None
    if stream.limit is not None:
        limit = max(0, (stream.limit - k) // big_s + 1)
    return DigitStream(rule, shifted_digit, stream.provenance, limit=limit)


def mod_s_gap(stream: DigitStream, spec: ChainSpec, j: int, n: int) -> Fraction:
    """Coarse digit ratio minus its block-leading fine digit ratio.

    Always lies in [0, S_j / q_{S_j(n-1)+1}): the coarse ratio is the
    leading fine ratio plus the packed contribution of the remaining
    block digits, each worth less than one leading-base ulp.
    """
    coarse = transcode(stream, spec, j)
    big_s = spec.big_s(j)
    lead_pos = big_s * (n - 1) + 1
    gap = Fraction(coarse.digit(n), spec.rule(j).q(n)) - Fraction(
        stream.digit(lead_pos), spec.base.q(lead_pos)
    )
    return gap


@dataclass(frozen=True)
class Census:
    zero_count: int
    value_set: frozenset[int]


def digit_census(stream: DigitStream, n: int) -> Census:
    """Zero count and the set of positive values over the n-prefix."""
    digits = stream.prefix(n)
    zeros = sum(1 for d in digits if d == 0)
    return Census(zero_count=zeros, value_set=frozenset(d for d in digits if d > 0))


def save_jsonl(stream: DigitStream, n: int, path) -> None:
    """One record per line: {"n": int, "q": "decimal", "E": "decimal"}.

    The base value rides along so files are self-validating.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for pos in range(1, n + 1):
            fh.write(
                '{"n": %d, "q": "%d", "E": "%d"}\n'
                % (pos, stream.rule.q(pos), stream.digit(pos))
            )


def load_jsonl(path, rule: Optional[BasicSequenceRule] = None) -> DigitStream:
    """Load and validate a digit file; positions must run 1, 2, ... in order."""
    digits: list[int] = []
    bases: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                pos = record["n"]
                q = int(record["q"])
                digit = int(record["E"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DigitError(f"malformed digit record on line {lineno}: {exc}") from exc
            if pos != lineno:
                raise DigitError(f"line {lineno} carries position {pos}; expected {lineno}")
            if q < 2:
                raise DigitError(f"base {q} < 2 on line {lineno}")
            if not 0 <= digit <= q - 1:
                raise DigitError(f"digit {digit} out of range [0, {q - 1}] on line {lineno}")
            if rule is not None and rule.q(pos) != q:
                raise DigitError(
                    f"base mismatch on line {lineno}: file says {q}, rule says {rule.q(pos)}"
                )
            digits.append(digit)
            bases.append(q)
    if not digits:
        raise DigitError("digit file is empty")
    if rule is None:
        from .sequences import ExplicitListRule

        rule = ExplicitListRule(bases)
    stream = DigitStream.from_list(rule, digits, "file")
    return stream
