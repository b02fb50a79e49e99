"""Run every harness subcommand with the shipped configs and collect tables and reports.

    python scripts/run_suites.py [--out results/] [--quick]

Writes one table and one pass/fail report per suite into the output directory
and prints a summary line per suite. --quick shrinks the scans and the
identity sample so the whole run takes well under a minute.
"""
import argparse
import sys
import time
from pathlib import Path

from cubic_ist import harness

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def jobs(quick: bool) -> list[tuple[str, list[str], str]]:
    gauss = str(CONFIGS / "gaussian.json")
    n_scan = ["--n-scan", "60"] if quick else []
    return [
        ("identities", ["verify-identities", "--seed", "7"] + (["--samples", "200"] if quick else []), "csv"),
        ("forward", ["forward", "--potential", gauss], "csv"),
        ("bound_states", ["bound-states", "--potential", gauss] + n_scan, "json"),
        ("jump", ["jump-residual"], "csv"),
        ("invert_soliton", ["invert", "--data", str(CONFIGS / "one_soliton.json")], "csv"),
        ("invert_weak_sc1", ["invert", "--data", str(CONFIGS / "weak_sc1.json"), "--dx", "0.01"], "csv"),
    ]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    worst = 0
    for name, cmd, ext in jobs(args.quick):
        start = time.perf_counter()
        code = harness.main(cmd + ["--out", str(out / f"{name}.{ext}"),
                                   "--report", str(out / f"{name}_report.csv")])
        worst = max(worst, code)
        print(f"{name:18s} exit={code} {time.perf_counter() - start:6.1f} s")
    return worst


if __name__ == "__main__":
    sys.exit(main())
