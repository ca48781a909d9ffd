"""Scaled comparison of the four approaches on a batch of random Sidon instances.

Each instance runs through ``sqc solve`` in table1 mode; the per-approach rows
are then averaged. Shot counts follow the CLI presets unless a config with
[stage.*] overrides is passed.
"""
import argparse
import json
import statistics
import tempfile
from pathlib import Path

from sqc.cli import SUMMARY_COLUMNS, main as cli_main, report


def write_config(path: Path, n: int, seed: int, extra: str) -> None:
    path.write_text(
        f"[instance]\ntopology = random-graph\nn = {n}\nseed = {seed}\n\n"
        f"[run]\nmode = table1\nseed = {seed}\n\n{extra}"
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--stages", type=Path, help="INI file with [stage.NAME] overrides")
    ap.add_argument("--out", type=Path, help="keep per-instance outputs here")
    args = ap.parse_args()
    extra = args.stages.read_text() if args.stages else ""

    root = args.out or Path(tempfile.mkdtemp(prefix="table1_"))
    rows = {}
    for seed in range(args.seeds):
        run = root / f"seed{seed}"
        run.mkdir(parents=True, exist_ok=True)
        write_config(run / "run.ini", args.n, seed, extra)
        if cli_main(["solve", "--config", str(run / "run.ini"), "--out", str(run / "out")]) != 0:
            raise SystemExit(f"solve failed for seed {seed}")
        paths = sorted(str(p) for p in (run / "out").glob("result_*.json"))
        for line in report(paths, "csv").splitlines()[1:]:
            cells = dict(zip(SUMMARY_COLUMNS, line.split(",")))
            rows.setdefault(cells["approach"], []).append(cells)

    print(f"\nmean over {args.seeds} instances, N={args.n}")
    print(f"{'approach':<10} {'shots':>7} {'ar':>8} {'best_ar':>8} {'solved':>7}")
    for name, cells in rows.items():
        shots = statistics.mean(int(c["shots"]) for c in cells)
        ar = statistics.mean(float(c["ar"]) for c in cells)
        best = [float(c["best_ar"]) for c in cells]
        solved = sum(abs(b - 1) < 1e-9 for b in best)
        print(f"{name:<10} {shots:>7.0f} {ar:>8.4f} {statistics.mean(best):>8.4f} {solved:>4}/{len(cells)}")
    (root / "table1_mean.json").write_text(json.dumps(rows, indent=1, sort_keys=True))
    print(f"outputs in {root}")


if __name__ == "__main__":
    main()
