"""Pool many candidate histories of one small graph.

On seven nodes every history can be listed (56,700 of them), so the
maximum, EM and averaged estimators can be compared on the full set.

Run: python demos/02_estimators_on_small_graphs.py
"""
from dmcmle import Params, forward_generate
from dmcmle.graph import Graph
from dmcmle.estimation import ThetaEnsemble, estimate_all
from dmcmle.reconstruction import class_mle, exhaustive, random_sequences

truth = Params(0.5, 0.5)
g, _ = forward_generate(7, truth, rng_seed=3)
print(f"graph edges: {list(g.edges())}")

for label, results in [("exhaustive", exhaustive(g)),
                       ("100 random", random_sequences(g, 100, seed=0))]:
    ests = estimate_all(ThetaEnsemble(results, label))
    print(f"\n{label}: {len(results)} histories")
    for kind, est in ests.items():
        q_m = "None" if est.q_m_hat is None else f"{est.q_m_hat:.3f}"
        print(f"  {kind:>3}: q_m={q_m} q_c={est.q_c_hat:.3f}")
    em = ests["em"]
    if "iterations" in em.info:
        print(f"  EM ran {em.info['iterations']} iterations; objective "
              f"{em.info['objective'][0]:.3f} -> {em.info['objective'][-1]:.3f}")

# For four nodes or fewer the class likelihood itself can be maximised.
paw = Graph.from_edges(4, [(0, 1), (0, 2), (1, 2), (1, 3)])
print("\nmaximising the likelihood of the paw graph:", class_mle(paw))
