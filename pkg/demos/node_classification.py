"""
Labeling nodes from their vectors
=================================

Two planted communities, node vectors from the inverse architecture, and
one-vs-rest logistic regression on a growing share of labeled nodes.
"""

from netvector.evalsuite import evaluate_classification
from netvector.model import init
from netvector.sampler import WalkConfig, generate_corpus
from netvector.synthetic import stochastic_block_model
from netvector.trainer import TrainConfig, train

g, labels = stochastic_block_model([100, 100], p_in=0.1, p_out=0.01, seed=0)
print(g)

corpus = generate_corpus([g], WalkConfig(seed=0))
model = init(g.node_count, 1, dim=128, window=10, seed=0)
train(model, corpus, TrainConfig(seed=0))

print("\nlabeled  macro-F1  micro-F1")
for frac in (0.1, 0.3, 0.5, 0.7, 0.9):
    rep = evaluate_classification(model.node_vectors, labels, frac, repeats=10, seed=0)
    print(f"{frac:7.1f}  {rep.macro_f1:8.3f}  {rep.micro_f1:8.3f}")
