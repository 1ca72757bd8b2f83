"""
Recovering a planted influence graph
====================================

Draw a sparse Granger matrix, simulate event streams from it, fit the
sampler and compare the ranking of the learned weights against chance.
"""

import numpy as np

import woldgranger as wg

rng = np.random.default_rng(3)
K = 8

# each process excites three others with equal weight
granger = np.zeros((K, K))
for b in range(K):
    granger[b, rng.choice(K, 3, replace=False)] = 1 / 3
truth = wg.ModelParams(granger, np.ones(K), rng.uniform(0.05, 0.2, K))

events = wg.simulate(wg.SimulationConfig(truth, horizon=6000.0, seed=1))
print("simulated", events.total_events, "events over", K, "processes")
print("events per process:", events.sizes())

result = wg.fit(events, wg.FitConfig(iterations=150, seed=0))
print("exogenous share in the last sweep: %.2f" % result.trace[-1]["exogenous_fraction"])

support = (granger > 0).astype(float)
learned = wg.precision_at_n(result.granger_estimate, support, 3)
chance = np.mean([wg.precision_at_n(wg.null_model_ranking(K, s), support, 3) for s in range(200)])
print("precision@3  learned %.2f  random %.2f" % (learned, chance))

np.set_printoptions(precision=2, suppress=True)
print("row 0 planted:", granger[0])
print("row 0 learned:", result.granger_estimate[0])
