"""
The three studies, at demo scale
================================

Each runner is driven by one ExperimentConfig and writes sorted CSV files,
so identical configs reproduce identical bytes.  This runs all three at a
small scale and prints the interesting slices.
"""

from pathlib import Path

from prelude.harness import ExperimentConfig, run_effectiveness, run_microbench, run_pathlen

OUT = Path("demo_results")
cfg = ExperimentConfig(seed=7, out_dir=str(OUT),
                       thresholds=(1, 2, 4, 17),
                       pathlen_samples=200,
                       rule_counts=(1, 16),
                       delays_ms=(0.0, 5.0),
                       repetitions=5)

# Study 1: how often does each detector reject a loop-free rule?
csv_path, log_path = run_effectiveness(cfg)
print(f"wrote {csv_path} and {log_path}")
for line in csv_path.read_text().splitlines():
    if line.startswith(("experiment", "effectiveness,prelude",
                        "effectiveness,sidr")):
        print("  " + line)

# Study 2: how many exchanges does a deflected path touch?
(path,) = run_pathlen(cfg)
print(f"\nwrote {path}")
for line in path.read_text().splitlines():
    print("  " + line)

# Study 3: protocol cost per query session.
(path,) = run_microbench(cfg)
print(f"\nwrote {path}")
for line in path.read_text().splitlines():
    print("  " + line)
