"""Shared helpers for the experiment runner scripts."""

import argparse
import csv
import sys
from pathlib import Path

from infocp.cli import main as cli_main


def parser(description: str, default_out: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--out", default=default_out, help="output directory for CSV reports")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--replications", type=int, default=None, help="override B for a quick look")
    return p


def simulate(name: str, args) -> list[dict]:
    argv = ["simulate", name, "--out", args.out, "--quiet"]
    if args.threads is not None:
        argv += ["--threads", str(args.threads)]
    if args.replications is not None:
        argv += ["--replications", str(args.replications)]
    code = cli_main(argv)
    if code != 0:
        sys.exit(code)
    with open(Path(args.out) / f"{name}.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def print_table(rows: list[dict], cols=("fcr", "fcr_se", "fdr", "power", "power_se", "sel_rate")) -> None:
    head = f"{'scenario':<32}{'procedure':<20}" + "".join(f"{c:>10}" for c in cols)
    print(head)
    print("-" * len(head))
    for r in rows:
        vals = "".join(f"{float(r[c]):>10.4f}" for c in cols)
        print(f"{r['scenario']:<32}{r['procedure']:<20}{vals}")
