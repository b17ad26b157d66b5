"""Graphs, Metropolis weights, and how gossip rounds shrink disagreement.

Run with: python demos/mixing_tour.py
"""

import numpy as np

from ddrs import gen_erdos_renyi, gen_ring, metropolis_weights, mix

rng = np.random.default_rng(3)

for label, graph in [
    ("ring(8)", gen_ring(8)),
    ("ER(8, p=0.3)", gen_erdos_renyi(8, 0.3, seed=1)),
    ("ER(8, p=0.6)", gen_erdos_renyi(8, 0.6, seed=1)),
]:
    W = metropolis_weights(graph)
    print("%-14s edges=%-3d sigma2=%.4f" % (label, len(graph.edges), W.sigma2))

# Disagreement contracts like sigma2^t per extra communication round.
W = metropolis_weights(gen_erdos_renyi(8, 0.6, seed=1))
X = rng.standard_normal((8, 5, 2))
Xbar = np.broadcast_to(X.mean(axis=0), X.shape)
base = np.linalg.norm(X - Xbar)
print("\nrounds  disagreement   bound sigma2^t")
for t in range(0, 11, 2):
    err = np.linalg.norm(mix(W, t, X) - Xbar)
    print("%5d   %.6e   %.6e" % (t, err, W.sigma2 ** t * base))

# The block mean never moves: mixing is doubly stochastic.
print("\nmean drift after 10 rounds:",
      np.abs(mix(W, 10, X).mean(axis=0) - X.mean(axis=0)).max())
