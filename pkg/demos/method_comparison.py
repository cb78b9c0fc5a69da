"""
Small method-comparison sweep
=============================

Runs the built-in benchmark on a reduced grid (two sample sizes, two
repetitions) and prints the per-run rows and the aggregate table. The
full-scale sweep behind the acceptance checks uses the same entry point
with n up to 7500 and ten repetitions.
"""

from bindag.simulation import SimConfig, run_benchmark

grid = [
    (SimConfig(n=n, d_x=4, d_z=20, seed=0), method)
    for n in (300, 900)
    for method in ("personalized", "homogeneous")
]
result = run_benchmark(grid, repetitions=2, seed=0)

print("per-run rows:")
for row in result.rows:
    status = row["error"] or (
        f"ordering {row['ordering_acc']:.2f}  dag {row['dag_acc']:.2f}"
    )
    print(f"  {row['method']:>12}  n={row['n']:<5} seed={row['seed']:<12} {status}")

print("\naggregate (mean over repetitions):")
for row in result.aggregate:
    print(
        f"  {row['method']:>12}  n={row['n']:<5} "
        f"ordering {row['ordering_acc_mean']:.2f}  dag {row['dag_acc_mean']:.2f}  "
        f"moral precision {row['moral_prec_mean']:.2f}"
    )
