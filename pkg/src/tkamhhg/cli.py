"""Command-line entry point.

    tkamhhg simulate <config>   run the pipeline and write all outputs
    tkamhhg verify <config>     run the invariant suite, nonzero exit on fail
    tkamhhg report <dir>        summarize a finished run

Both simulate and verify accept repeated --override section.key=value and a
--threads N hint (the pipeline is vectorized; the hint caps worker threads
for the independent per-harmonic stages and never changes the results).
"""

import argparse
import json
import os
import sys
from fractions import Fraction

from .config import ConfigError, apply_overrides, load_config
from .pipeline import format_checks, run_simulation, verify


def _load(args):
    config = load_config(args.config)
    if args.override:
        apply_overrides(config, args.override)
    return config


def cmd_simulate(args) -> int:
    config = _load(args)
    out = run_simulation(config)
    print(f"run complete: {out}")
    return 0


def cmd_verify(args) -> int:
    config = _load(args)
    checks = verify(config)
    print(format_checks(checks))
    failed = [c for c in checks if not c.passed and not c.expected_broken]
    return 1 if failed else 0


def _frac(d) -> str:
    return str(Fraction(d["num"], d["den"]))


def cmd_report(args) -> int:
    path = os.path.join(args.directory, "summary.json")
    if not os.path.isfile(path):
        print(f"error: no summary.json under {args.directory}",
              file=sys.stderr)
        return 1
    with open(path, "r", encoding="utf-8") as fh:
        summary = json.load(fh)

    cons = summary["conservation"]
    print(f"TKAM conservation: slope {cons['slope']:.6f} "
          f"(expected {_frac(cons['expected_slope'])}, "
          f"uncertainty {cons['slope_uncertainty']:.2e}, "
          f"lattice match: {'yes' if cons['all_match'] else 'NO'})")
    print()
    print(" q   s   dominant j   expected j   match   purity")
    for e in cons["harmonics"]:
        print(f"{e['q']:>2}  {e['s']:+d}   {_frac(e['dominant_j']):>9}   "
              f"{_frac(e['expected_j']):>9}   {'yes' if e['matches'] else 'NO':>5}"
              f"   {e['purity']:.4f}")
    print()
    print("helicity per allowed line:")
    for q, h in sorted(summary["helicity"].items(), key=lambda kv: int(kv[0])):
        print(f"  H{q}: sam {h['sam']:+d}, purity {h['purity']:.4f}")
    print()
    print("forbidden-line suppression (dB below allowed neighbors):")
    for q in ("9", "12", "15"):
        value = summary["forbidden_suppression_db"].get(q)
        if value is None:
            print(f"  H{q}: not in retained band")
        else:
            print(f"  H{q}: {value:.1f} dB")
    for q, value in sorted(summary["forbidden_suppression_db"].items(),
                           key=lambda kv: int(kv[0])):
        if q not in ("9", "12", "15"):
            print(f"  H{q}: {value:.1f} dB")
    print()
    spiral = summary["spiral"]
    print(f"spiral: delay/revolution {spiral['delay_per_revolution_fs']:.4f} fs, "
          f"polarization rotation {spiral['rotation_per_revolution_deg']:.1f} deg"
          f" ({spiral['ridge_points']} ridge points)")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tkamhhg",
        description="Bicircular vortex HHG simulator and analysis toolkit")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker-thread cap for per-harmonic stages")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run the pipeline")
    p_sim.add_argument("config")
    p_sim.add_argument("--override", action="append", default=[],
                       metavar="section.key=value")
    p_sim.set_defaults(func=cmd_simulate)

    p_ver = sub.add_parser("verify", help="run the invariant suite")
    p_ver.add_argument("config")
    p_ver.add_argument("--override", action="append", default=[],
                       metavar="section.key=value")
    p_ver.set_defaults(func=cmd_verify)

    p_rep = sub.add_parser("report", help="summarize a finished run")
    p_rep.add_argument("directory")
    p_rep.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
