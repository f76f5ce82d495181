"""Command-line front end: analyze, scale, validate, stats."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import timedelta
from pathlib import Path
from typing import Optional

from . import growth
from .consensus_io import (
    AsnTable,
    annotate_asns,
    load_asn_table,
    load_family_declarations,
    parse_consensus,
    serialize_consensus,
    serialize_family_partition,
)
from .errors import ParameterError, TorsynthError
from .horizontal import HorizontalConfig, compute_family_stats, scale_horizontal
from .model import (
    Consensus,
    FamilyPartition,
    build_family_partition,
    group_counts,
    group_weights,
)
from .validation import per_rank_deviation
from .vertical import RoleFactors, scale_by_quantile, scale_by_role, scale_uniform


class _StageAction(argparse.Action):
    """Append (stage-name, value) preserving command-line order."""

    def __call__(self, parser, namespace, values, option_string=None):
        stages = getattr(namespace, "stages", None) or []
        stages.append((self.dest, values))
        namespace.stages = stages


def _parse_factor_triple(text: str) -> RoleFactors:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected <f_middle>,<f_guard>,<f_exit>, got {text!r}"
        )
    return RoleFactors(*(float(p) for p in parts))


def _parse_factor_list(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torsynth",
        description="Scale Tor consensuses and analyze network growth.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_analyze = sub.add_parser("analyze", help="growth rates over a consensus archive")
    p_analyze.add_argument("paths", nargs="+", help="consensus files or directories")
    p_analyze.add_argument("--delta-t", type=float, default=365.0, metavar="DAYS")
    p_analyze.add_argument("--window", type=float, default=90.0, metavar="DAYS")
    p_analyze.add_argument("--snap", type=float, default=36.0, metavar="HOURS")

    p_scale = sub.add_parser("scale", help="apply scaling stages to a consensus")
    p_scale.add_argument("--in", dest="input", required=True, metavar="PATH")
    p_scale.add_argument("--out", dest="output", metavar="PATH")
    p_scale.add_argument(
        "--vertical", action=_StageAction, type=float, metavar="F",
        help="uniform vertical factor (repeatable stage)",
    )
    p_scale.add_argument(
        "--vertical-roles", action=_StageAction, type=_parse_factor_triple,
        metavar="FM,FG,FE", help="role-based vertical factors (stage)",
    )
    p_scale.add_argument(
        "--vertical-quantiles", action=_StageAction, type=_parse_factor_list,
        metavar="F1,F2,...", help="per-quantile vertical factors (stage)",
    )
    p_scale.add_argument(
        "--horizontal", action=_StageAction, type=float, metavar="F",
        help="horizontal growth factor (stage)",
    )
    p_scale.add_argument("--p-new", type=float, default=0.5, metavar="P")
    p_scale.add_argument(
        "--horizontal-roles", type=_parse_factor_triple, metavar="FM,FG,FE",
        help="count-based role weights for base-relay sampling",
    )
    p_scale.add_argument("--seed", type=int, metavar="U64")
    p_scale.add_argument("--asn-db", metavar="PATH")
    p_scale.add_argument("--families", metavar="PATH")
    p_scale.add_argument("--families-out", metavar="PATH")

    p_validate = sub.add_parser("validate", help="compare two consensuses")
    p_validate.add_argument("scaled")
    p_validate.add_argument("reference")
    p_validate.add_argument("--cdf-out", metavar="PATH")

    p_stats = sub.add_parser("stats", help="summarize one consensus")
    p_stats.add_argument("input")
    p_stats.add_argument("--asn-db", metavar="PATH")
    p_stats.add_argument("--families", metavar="PATH")

    return parser


def _load_consensus(path: str) -> Consensus:
    return parse_consensus(Path(path).read_bytes())


def _load_inputs(
    args,
) -> tuple[Consensus, FamilyPartition, AsnTable]:
    consensus = _load_consensus(args.input)
    table = AsnTable(())
    if args.asn_db:
        table = load_asn_table(Path(args.asn_db).read_text())
        consensus = annotate_asns(consensus, table)
    partition = FamilyPartition()
    if args.families:
        declarations = load_family_declarations(Path(args.families).read_text())
        partition = build_family_partition(declarations.pairs(), consensus)
    return consensus, partition, table


def _sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _fmt(value: float) -> str:
    return f"{value:.10g}"


def run_scale(args) -> int:
    stages = getattr(args, "stages", None) or []
    if not stages:
        raise ParameterError("scale requires at least one scaling stage")
    if any(name == "horizontal" for name, _ in stages) and args.seed is None:
        raise ParameterError("--seed is required when a horizontal stage is present")

    consensus, partition, table = _load_inputs(args)

    for name, value in stages:
        try:
            if name == "vertical":
                consensus = scale_uniform(consensus, value)
            elif name == "vertical_roles":
                consensus = scale_by_role(consensus, value)
            elif name == "vertical_quantiles":
                consensus = scale_by_quantile(consensus, value)
            else:
                config = HorizontalConfig(
                    f=value,
                    seed=args.seed,
                    p_new=args.p_new,
                    role_weights=args.horizontal_roles,
                )
                consensus, partition = scale_horizontal(
                    consensus, partition, table, config
                )
        except TorsynthError as exc:
            raise TorsynthError(f"stage --{name.replace('_', '-')} {value}: {exc}") from exc

    document = serialize_consensus(consensus)
    if args.output:
        Path(args.output).write_bytes(document)
    else:
        sys.stdout.buffer.write(document)

    if args.families_out:
        Path(args.families_out).write_text(serialize_family_partition(partition))

    if args.output:
        manifest = {
            "command": "scale",
            "stages": [
                {"stage": name.replace("_", "-"), "value": _stage_value(value)}
                for name, value in stages
            ],
            "seed": args.seed,
            "p_new": args.p_new,
            "horizontal_roles": _stage_value(args.horizontal_roles),
            "inputs": {
                key: _sha256(path)
                for key, path in (
                    ("consensus", args.input),
                    ("asn_db", args.asn_db),
                    ("families", args.families),
                )
                if path
            },
            "outputs": {
                key: _sha256(path)
                for key, path in (
                    ("consensus", args.output),
                    ("families", args.families_out),
                )
                if path
            },
        }
        manifest_path = Path(args.output).with_name(Path(args.output).name + ".manifest.json")
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return 0


def _stage_value(value):
    if isinstance(value, RoleFactors):
        return [value.f_middle, value.f_guard, value.f_exit]
    return value


def _collect_consensus_files(paths: list[str]) -> list[Path]:
    files: list[Path] = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            files.extend(p for p in sorted(path.rglob("*")) if p.is_file())
        else:
            files.append(path)
    return files


def run_analyze(args, out=None) -> int:
    out = out or sys.stdout
    files = _collect_consensus_files(args.paths)
    points = [growth.base_metrics(parse_consensus(p.read_bytes())) for p in files]
    if len(points) < 2:
        raise ParameterError("analyze requires at least 2 consensuses")
    points.sort(key=lambda p: p.t)

    series = growth.growth_rates(
        points,
        delta_t=timedelta(days=args.delta_t),
        snap_tolerance=timedelta(hours=args.snap),
    )
    window = timedelta(days=args.window)
    h_smooth = dict(
        growth.moving_average([(r.t, r.horizontal) for r in series.rates], window)
    )
    v_smooth = dict(
        growth.moving_average([(r.t, r.vertical) for r in series.rates], window)
    )
    rate_at = {r.t: r for r in series.rates}
    base_at = {p.t: p for p in series.base}
    timestamps = sorted(set(base_at) | set(rate_at))

    out.write("t\tn\tb\tH\tV\tH_smoothed\tV_smoothed\n")
    for t in timestamps:
        point = base_at.get(t)
        rate = rate_at.get(t)
        columns = [
            t.strftime("%Y-%m-%d %H:%M:%S"),
            _fmt(point.n) if point else "",
            _fmt(point.b) if point else "",
            _fmt(rate.horizontal) if rate else "",
            _fmt(rate.vertical) if rate else "",
            _fmt(h_smooth[t]) if rate else "",
            _fmt(v_smooth[t]) if rate else "",
        ]
        out.write("\t".join(columns) + "\n")
    return 0


def run_validate(args, out=None) -> int:
    out = out or sys.stdout
    report = per_rank_deviation(
        _load_consensus(args.scaled), _load_consensus(args.reference)
    )
    out.write(f"median_deviation_pct\t{_fmt(report.median_deviation)}\n")
    out.write(f"n_compared\t{report.n_compared}\n")
    if args.cdf_out:
        with open(args.cdf_out, "w") as handle:
            handle.write("source\tweight\tcumshare\n")
            for source, points in (
                ("scaled", report.cdf_scaled),
                ("reference", report.cdf_reference),
            ):
                for weight, share in points:
                    handle.write(f"{source}\t{weight}\t{_fmt(share)}\n")
    return 0


def run_stats(args, out=None) -> int:
    out = out or sys.stdout
    consensus, partition, _ = _load_inputs(args)
    stats = compute_family_stats(consensus, partition)
    n_m, n_g, n_e, n_d = group_counts(consensus)
    w_m, w_g, w_e, w_d = group_weights(consensus)
    total = consensus.total_weight

    out.write(f"relays\t{len(consensus)}\n")
    out.write(f"total_weight\t{total}\n")
    out.write(f"mean_weight\t{_fmt(total / len(consensus))}\n")
    out.write(f"counts_m_g_e_d\t{n_m}\t{n_g}\t{n_e}\t{n_d}\n")
    out.write(f"weights_m_g_e_d\t{w_m}\t{w_g}\t{w_e}\t{w_d}\n")
    out.write(f"p_fam\t{_fmt(stats.p_fam)}\n")
    out.write(f"p_same_as\t{_fmt(stats.p_same_as)}\n")
    histogram: dict[int, int] = {}
    for size in stats.size_distribution:
        histogram[size] = histogram.get(size, 0) + 1
    for size in sorted(histogram):
        out.write(f"family_size\t{size}\t{histogram[size]}\n")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "analyze": run_analyze,
        "scale": run_scale,
        "validate": run_validate,
        "stats": run_stats,
    }
    try:
        return handlers[args.command](args)
    except TorsynthError as exc:
        print(f"torsynth {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"torsynth {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
