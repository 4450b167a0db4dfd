"""Batch command-line front end.

Commands:
  cnl theta generate   write a scheduled digit file with its tables
  cnl analyze          per-level digit reports for an existing file
  cnl dim              dimension and growth traces for a schedule
  cnl repro-sec1       verify the bundled reference pair end to end

Exit codes: 0 success, 1 invariant or verification failure, 2 invalid
input.  Outputs are deterministic for a fixed config and seed: reports
carry no timestamps, and digit selection is a pure function of the
policy, seed, and position.  CNL_PRECISION_BITS (default 64) sets the
fractional bits used wherever logarithms enter.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dimension import GeometryError, theta_dimension_trace
from .equidist import dn_diagnostic, normality_report
from .expansion import (
    DigitError,
    digit_census,
    load_jsonl,
    save_jsonl,
    transcode,
    transcode_shifted,
)
from .numeric import format_decimal
from .refpair import build_report
from .sequences import ChainSpec, RuleError, rule_from_json
from .theta import (
    ScheduleError,
    SelectionPolicy,
    TailCertificateError,
    build_schedule,
    digit_candidates,
    extract_y_prefix,
    generate_digits,
    prefix_bound_check,
)

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_BAD_INPUT = 2


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise RuleError(f"cannot read config {path}: {exc}") from exc


def _spec_from_config(config: dict, depth_override=None) -> ChainSpec:
    try:
        base = rule_from_json(config["Q"])
        steps = rule_from_json(config["S"])
        depth = depth_override if depth_override is not None else int(config["depth"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, RuleError):
            raise
        raise RuleError(f"config needs Q, S, and depth: {exc}") from exc
    return ChainSpec(base=base, s=steps, depth=depth)


def _policy_from_args(config: dict, args) -> SelectionPolicy:
    kind = args.policy or config.get("policy", "min")
    seed = args.seed
    if isinstance(kind, dict):
        seed = int(kind.get("seed", 0)) if seed is None else seed
        kind = kind.get("kind", "seeded")
    if kind == "seeded" and seed is None:
        seed = int(config.get("seed", 0))
    return SelectionPolicy(kind=kind, seed=seed)


def _int_list(raw: str) -> list[int]:
    try:
        return [int(part) for part in raw.split(",") if part != ""]
    except ValueError as exc:
        raise RuleError(f"expected comma-separated integers, got {raw!r}") from exc


def _sample_prefixes(limit: int) -> list[int]:
    """1, 2, 5 ladder up to the limit, always including the limit."""
    out = []
    scale = 1
    while scale <= limit:
        for mult in (1, 2, 5):
            value = mult * scale
            if value <= limit:
                out.append(value)
        scale *= 10
    if limit not in out:
        out.append(limit)
    return out


def cmd_theta_generate(args) -> int:
    config = _load_config(args.config)
    spec = _spec_from_config(config, args.depth)
    policy = _policy_from_args(config, args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.n is None or args.n < 1:
        raise RuleError("--n must be a positive digit count")

    try:
        schedule = build_schedule(spec)
    except TailCertificateError:
        raise
    except ScheduleError as exc:
        print(f"schedule invariant violated: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION

    if args.n > schedule.coverage:
        raise RuleError(
            f"--n {args.n} exceeds schedule coverage {schedule.coverage}"
        )
    stream = generate_digits(schedule, policy, args.n)
    save_jsonl(stream, args.n, out_dir / "digits.jsonl")
    _write_json(out_dir / "schedule.json", schedule.dump_json())

    checks = [
        {"name": name, "ok": ok, "detail": detail}
        for name, ok, detail in schedule.verify()
    ]
    digit_ok = True
    roundtrip_ok = True
    omega_ok = True
    for n in range(1, args.n + 1):
        info = schedule.phi_inv(n)
        if schedule.phi(info.level, info.block, info.offset) != n:
            roundtrip_ok = False
        cand = digit_candidates(schedule, n)
        digit = stream.digit(n)
        if digit == 0 or digit not in cand:
            digit_ok = False
        floor_bound = schedule.q(n) // (info.a * info.a)
        if info.level >= 2 and cand.count < max(1, floor_bound):
            omega_ok = False
    checks.append(
        {"name": "positions roundtrip through the bijection", "ok": roundtrip_ok, "detail": f"n <= {args.n}"}
    )
    checks.append(
        {"name": "digits nonzero and inside their windows", "ok": digit_ok, "detail": f"n <= {args.n}"}
    )
    checks.append(
        {"name": "candidate counts clear the window floor", "ok": omega_ok, "detail": f"n <= {args.n}"}
    )
    all_pass = all(c["ok"] for c in checks)
    _write_json(
        out_dir / "summary.json",
        {
            "command": "theta-generate",
            "n": args.n,
            "depth": spec.depth,
            "policy": policy.describe(),
            "coverage": schedule.coverage,
            "checks": checks,
            "all_pass": all_pass,
        },
    )
    return EXIT_OK if all_pass else EXIT_VERIFICATION


def cmd_analyze(args) -> int:
    config = _load_config(args.config)
    spec = _spec_from_config(config, args.depth)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    levels = _int_list(args.levels) if args.levels else [1]
    shifts = _int_list(args.shifts) if args.shifts else [0]
    for j in levels:
        if not 1 <= j <= spec.depth:
            raise RuleError(f"level {j} outside chain depth 1..{spec.depth}")

    try:
        stream = load_jsonl(args.digits, rule=spec.base)
    except DigitError as exc:
        print(f"malformed digit file: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    total = stream.limit

    schedule = None
    conformant = False
    try:
        schedule = build_schedule(spec)
        conformant = all(
            stream.digit(n) in digit_candidates(schedule, n)
            for n in range(1, min(total, schedule.coverage) + 1)
        )
    except ScheduleError:
        schedule = None

    summary = {
        "command": "analyze",
        "digits": total,
        "levels": {},
        "schedule_conformant": conformant,
    }
    envelope_violations = 0
    for j in levels:
        level_rule = spec.rule(j)
        coarse = transcode(stream, spec, j)
        coarse_len = total // spec.big_s(j)
        level_info = {}
        if coarse_len >= 1:
            census = digit_census(coarse, coarse_len)
            level_info["zero_count"] = census.zero_count
            level_info["zero_digit_found"] = census.zero_count > 0

            samples = _sample_prefixes(coarse_len)
            dn = dn_diagnostic(coarse, level_rule, samples)
            dn.write_csv(out_dir / f"dn_j{j}.csv")

            with open(out_dir / f"rn_j{j}.csv", "w", encoding="utf-8") as fh:
                fh.write("n,block,count,expected_num,expected_den,ratio\n")
                for n in samples:
                    rep = normality_report(coarse, level_rule, 1, n, [(0,)])
                    row = rep.rows[0]
                    ratio = str(row.ratio) if row.ratio is not None else "undefined"
                    fh.write(
                        f"{n},0,{row.count},{row.expected.numerator},"
                        f"{row.expected.denominator},{ratio}\n"
                    )
        if conformant and schedule is not None and j <= schedule.levels:
            max_points = len(
                extract_y_prefix(schedule, stream, j, min(total, schedule.coverage))
            )
            if max_points >= 1:
                env = prefix_bound_check(
                    schedule, stream, j, _sample_prefixes(max_points)
                )
                env.report.write_csv(out_dir / f"envelope_j{j}.csv")
                fatal = sum(1 for r in env.report.rows if r.certificate == "fatal")
                envelope_violations += fatal
                level_info["envelope_rows"] = len(env.report.rows)
                level_info["envelope_fatal"] = fatal
        for k in shifts:
            if k == 0:
                continue
            if k >= spec.big_s(j):
                raise RuleError(f"shift {k} out of range 0..{spec.big_s(j) - 1} at level {j}")
            shifted = transcode_shifted(stream, spec, j, k)
            shifted_len = shifted.limit
            if shifted_len and shifted_len >= 1:
                census = digit_census(shifted, shifted_len)
                sam = _sample_prefixes(shifted_len)
                dn = dn_diagnostic(shifted, shifted.rule, sam)
                dn.write_csv(out_dir / f"dn_j{j}_k{k}.csv")
                level_info[f"shift_{k}_zero_count"] = census.zero_count
        summary["levels"][str(j)] = level_info
    summary["envelope_violations"] = envelope_violations
    _write_json(out_dir / "analyze_summary.json", summary)
    return EXIT_OK if envelope_violations == 0 else EXIT_VERIFICATION


def cmd_dim(args) -> int:
    config = _load_config(args.config)
    spec = _spec_from_config(config, args.depth)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.n is None or args.n < 2:
        raise RuleError("--n must be at least 2")
    try:
        schedule = build_schedule(spec)
    except TailCertificateError:
        raise
    except ScheduleError as exc:
        print(f"schedule invariant violated: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    try:
        rows = theta_dimension_trace(schedule, args.n)
    except GeometryError as exc:
        print(f"dimension trace rejected: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    with open(out_dir / "dim_trace.csv", "w", encoding="utf-8") as fh:
        fh.write("k,i_k,omega_k,eps_log2,d_exact,d_bound\n")
        for row in rows:
            fh.write(",".join(row.csv_fields()) + "\n")

    from .sequences import growth_condition_trace

    growth = growth_condition_trace(spec.base, args.n)
    with open(out_dir / "growth_trace.csv", "w", encoding="utf-8") as fh:
        fh.write("k,ratio_num,ratio_den,ratio_decimal\n")
        for k, ratio in enumerate(growth.ratios, start=2):
            fh.write(
                f"{k},{ratio.numerator},{ratio.denominator},{format_decimal(ratio)}\n"
            )

    window = max(1, len(rows) // 10)
    tail = rows[-window:]
    summary = {
        "command": "dim",
        "horizon": args.n,
        "trailing_window": window,
        "trailing_min_d_exact": format_decimal(min(r.d_exact for r in tail)),
        "trailing_min_d_bound": format_decimal(min(r.d_bound for r in tail)),
        "final_d_exact": format_decimal(rows[-1].d_exact),
        "final_d_bound": format_decimal(rows[-1].d_bound),
        "growth_flag": growth.flag,
    }
    _write_json(out_dir / "dim_summary.json", summary)
    return EXIT_OK


def cmd_repro(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    horizon = args.n if args.n else 5000
    report = build_report(orbit_horizon=horizon)
    (out_dir / "report.txt").write_text(report.render(), encoding="utf-8")
    _write_json(
        out_dir / "repro_summary.json",
        {
            "command": "repro-sec1",
            "orbit_horizon": horizon,
            "checks": [{"name": name, "ok": ok} for name, ok in report.checks],
            "all_pass": report.ok,
        },
    )
    print(report.render(), end="")
    return EXIT_OK if report.ok else EXIT_VERIFICATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cnl",
        description="Exact-arithmetic toolkit for Cantor series digit systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    theta = sub.add_parser("theta", help="schedule-driven digit generation")
    theta_sub = theta.add_subparsers(dest="subcommand", required=True)
    gen = theta_sub.add_parser("generate", help="write digits.jsonl, schedule.json, summary.json")
    _common_flags(gen)
    gen.set_defaults(handler=cmd_theta_generate)

    analyze = sub.add_parser("analyze", help="per-level reports for a digit file")
    _common_flags(analyze)
    analyze.add_argument("--digits", required=True, help="digit file (JSONL)")
    analyze.add_argument("--levels", default="1", help="comma-separated chain levels")
    analyze.add_argument("--shifts", default="0", help="comma-separated shifts")
    analyze.set_defaults(handler=cmd_analyze)

    dim = sub.add_parser("dim", help="dimension trace and growth trace")
    _common_flags(dim)
    dim.set_defaults(handler=cmd_dim)

    repro = sub.add_parser("repro-sec1", help="verify the bundled reference pair")
    repro.add_argument("--out", required=True, help="output directory")
    repro.add_argument("--n", type=int, default=5000, help="orbit horizon")
    repro.set_defaults(handler=cmd_repro)
    return parser


def _common_flags(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--config", required=True, help="chain config JSON")
    cmd.add_argument("--out", required=True, help="output directory")
    cmd.add_argument("--n", type=int, default=None, help="digit count / horizon")
    cmd.add_argument("--depth", type=int, default=None, help="chain depth override")
    cmd.add_argument("--policy", default=None, help="min, max, mid, or seeded")
    cmd.add_argument("--seed", type=int, default=None, help="seed for the seeded policy")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (RuleError, TailCertificateError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (DigitError, ScheduleError, GeometryError, ValueError) as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
