"""
Where does a graph's own vector land?
=====================================

Train two-dimensional node and graph vectors on Zachary's karate club and
look at which members sit closest to the vector of the club as a whole.
"""

import numpy as np
from scipy.stats import spearmanr

from netvector.evalsuite import write_projection
from netvector.graph import load_karate
from netvector.model import init
from netvector.sampler import WalkConfig, generate_corpus
from netvector.trainer import TrainConfig, train

# 34 members, 78 friendships
g = load_karate()
print(g)

# ten walks of length 80 from every member; p = q = 1 is a plain DeepWalk walk
corpus = generate_corpus([g], WalkConfig(seed=0))
print(len(corpus), "walks,", corpus.node_counts.sum(), "node occurrences")

# one graph vector next to 34 node vectors, all in the plane
model = init(g.node_count, 1, dim=2, window=10, seed=0,
             node_labels=g.labels, graph_labels=["karate"])
result = train(model, corpus, TrainConfig(architecture="inverse", seed=0))
print("mean objective per window:", round(result.epoch_objectives[0], 3))

# score every member against the club vector
score = model.node_vectors @ model.graph_vectors[0]
order = np.argsort(-score)
print("\nmember  degree  v_G . v_i")
for i in order[:8]:
    print(f"{g.labels[i]:>6}  {g.degree(i):>6}  {score[i]:9.3f}")

# the instructor (1) and the administrator (34) have the most ties
rho = spearmanr(g.degrees(), score).statistic
print(f"\nrank correlation between degree and closeness to v_G: {rho:.2f}")

# a scatter-ready dump: members plus the graph vector itself
coords = np.vstack([model.node_vectors, model.graph_vectors])
tags = ["member"] * g.node_count + ["graph"]
write_projection("karate_projection.csv", list(g.labels) + ["G"], coords, tags)
print("wrote karate_projection.csv")
