"""A reduced Monte Carlo accuracy study.

The full study uses 100 graphs per size; this one uses a 3x3 grid so it
finishes in under a minute.  Pass ``--full`` for the 10x10 grid.

Run: python demos/03_accuracy_experiment.py [--full]
"""
import sys

from dmcmle.evaluation import ExperimentPlan, default_grid, format_rmse_table, run_experiment

full = "--full" in sys.argv
plan = ExperimentPlan(
    node_sizes=[7, 50],
    methods=["true_theta", "exhaustive", "minimize_y", "random_1", "uniform_rv"],
    param_grid=default_grid(11 if full else 4),
    seed=2024,
)
records, summary = run_experiment(plan)
print(format_rmse_table(summary))
print("\nmean Kendall tau (strict / lenient):")
for method, by_size in summary["tau"].items():
    cells = "  ".join(f"n={n}: {v['strict']:+.3f} / {v['lenient']:.3f}" for n, v in by_size.items())
    print(f"  {method:<12} {cells}")
print("\nWald coverage with the true history:", summary["coverage"]["true_theta"])
