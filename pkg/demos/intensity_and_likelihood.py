"""
Intensities, offspring and the likelihood
=========================================

The rate of a process only changes when that process fires, so the
likelihood has a closed form. This script walks through a two-process
example by hand and then scores two candidate models on simulated data.
"""

import math

import numpy as np

import woldgranger as wg

# process 0 fires at 2 and 5, process 1 at 4
col = wg.build_collection([[2.0, 5.0], [4.0]])
params = wg.ModelParams([[0.5, 0.5], [0.5, 0.5]], [1.0, 1.0], [0.1, 0.1])

# after t=5 the last event of process 0 is at 5; before that, 0 fired at 2 and 1 at 4
print("Delta_10(6) =", wg.delta_cross(col, 1, 0, 6.0).value)
print("lambda_0(6) =", wg.total_intensity(params, col, 0, 6.0))

phi = wg.phi_matrix(params, col, 6.0)
norm, stationary = wg.stationarity_check(phi)
print("Phi(6) =\n", phi.entries)
print("max row sum %.3f, stationary: %s" % (norm, stationary))
print("expected offspring (I - Phi)^-1 =\n", wg.expected_offspring(phi))

# a three-event self-exciting stream has log-likelihood ln 1.5 - 3.5
one = wg.ModelParams([[1.0]], [1.0], [1.0])
print("LL =", wg.process_loglik(one, wg.build_collection([[1, 2, 3]]), 0),
      "vs", math.log(1.5) - 3.5)

rng = np.random.default_rng(0)
K = 4
granger = np.eye(K)[rng.permutation(K)] * 0.8 + 0.05
planted = wg.ModelParams(granger, np.ones(K), np.full(K, 0.2))
data = wg.simulate(wg.SimulationConfig(planted, horizon=2000.0, seed=2))
flat = wg.ModelParams(np.full((K, K), 1 / K), np.ones(K), planted.mu)
print("LL at the generating model: %.1f" % wg.total_loglik(planted, data))
print("LL with uniform rows:       %.1f" % wg.total_loglik(flat, data))
