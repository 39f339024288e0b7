"""Run every Monte Carlo config in scripts/configs and write reports to results/.

Usage: python3 scripts/run_study.py [config.json ...]

Configs whose name starts with ``moments`` run the moment study, all
others the size/power study. Each report is written as JSON and as a text
table next to it.
"""

import sys
import time
from pathlib import Path

from zchange.mc import McConfig, mc_moments, mc_size_power

ROOT = Path(__file__).resolve().parent.parent


def run(path: Path, outdir: Path) -> None:
    cfg = McConfig.from_json(path)
    study = mc_moments if path.stem.startswith("moments") else mc_size_power
    t0 = time.perf_counter()
    report = study(cfg)
    (outdir / f"{path.stem}.json").write_text(report.to_json() + "\n")
    (outdir / f"{path.stem}.txt").write_text(report.to_text() + "\n")
    print(f"{path.name}: {time.perf_counter() - t0:.1f}s")


def main(argv: list[str]) -> None:
    outdir = ROOT / "results"
    outdir.mkdir(exist_ok=True)
    paths = [Path(a) for a in argv] or sorted((ROOT / "scripts" / "configs").glob("*.json"))
    for p in paths:
        run(p, outdir)


if __name__ == "__main__":
    main(sys.argv[1:])
