"""Run every shipped experiment config and print one status line per config.

Usage: python scripts/run_all_configs.py [--out DIR]
"""

import argparse
import time
from pathlib import Path

from viscosity_lab.experiments import load_config, run, write_report

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=ROOT / "results")
    args = parser.parse_args()
    worst = 0
    for path in sorted((ROOT / "configs").glob("*.ini")):
        cfg = load_config(path)
        t0 = time.perf_counter()
        bundle = run(cfg)
        write_report(bundle, args.out / path.stem)
        failed = [i.name for i in bundle.indicators if not i.passed]
        status = "PASS" if not failed else "FAIL"
        print(f"{status}  {path.stem:30s} {time.perf_counter() - t0:7.1f} s  {'; '.join(failed)}")
        worst = max(worst, int(bool(failed)))
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
