"""Grow a DMC graph, run it backwards, and read off the parameter estimates.

Run: python demos/01_generate_and_deconstruct.py
"""
from dmcmle import Params, deconstruct, forward_generate, mle
from dmcmle.engine import GenerationTrace
from dmcmle.reconstruction import minimize_y, nk_grid_search, true_theta

truth = Params(q_m=0.4, q_c=0.6)
trace = GenerationTrace()
g, theta = forward_generate(60, truth, rng_seed=11, trace=trace)
print(f"grew {len(g)} nodes and {g.edge_count()} edges at q_m={truth.q_m}, q_c={truth.q_c}")

# Undoing the recorded history reproduces the Bernoulli counts of generation.
stats = deconstruct(g, theta)
print(f"true history: W={stats.w} X={stats.x} Y={stats.y}")
print(f"  trace says complemented={trace.complemented}, "
      f"modified={trace.modified}, anchor degrees={trace.anchor_degrees}")
print(f"  MLE from the true history: q_m={mle(stats)[0]:.3f}, q_c={mle(stats)[1]:.3f}")

# Without the history we have to pick one.
for name, result in [("true theta", true_theta(g, theta)),
                     ("minimise Y", minimize_y(g, seed=0)),
                     ("NK grid", nk_grid_search(g, seed=0).best)]:
    q_m, q_c = result.q_hat
    print(f"{name:>11}: q_m={q_m:.3f} q_c={q_c:.3f} log L={result.log_likelihood_at_mle:.2f}")
