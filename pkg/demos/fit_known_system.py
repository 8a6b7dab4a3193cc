"""Simulate a small linear dynamical system and fit it back with EM.

Walks through the basic loop: draw a random stable system, generate a
sequence, run multi-restart EM at the true order, and compare the fitted
log-likelihood against the one obtained with the generating parameters.
"""
import numpy as np

import ldsmdl as m

# a random stable system with 2 latent states and scalar observations
gen = m.random_stable_lds(m.RandomLdsConfig(d=2, d_out=1, seed=42))
print("true transition matrix:\n", gen.A)
print("spectral radius:", m.spectral_radius(gen.A))

data = m.simulate(gen, T=300, burn_in=20, seed=42)
print("sequence shape:", data.Y.shape)

# reference: the likelihood of the data under the generating parameters
ref = m.kalman_filter(gen, data).loglik
print("loglik at true parameters: %.3f" % ref)

fit = m.multi_restart_fit(data, 2, m.EmConfig(eps=1e-6, max_iters=300,
                                              n_restarts=8, seed=0))
print("fitted loglik:             %.3f  (converged=%s after %d iterations)"
      % (fit.loglik, fit.converged, fit.iterations))

# EM can only be compared up to a similarity transform, so look at
# invariants instead of raw matrices: eigenvalues of A and the stationary
# observation variance
print("true A eigenvalues:  ", np.sort(np.linalg.eigvals(gen.A)))
print("fitted A eigenvalues:", np.sort(np.linalg.eigvals(fit.params.A)))

Q_true = m.solve_discrete_lyapunov(gen.A, gen.R1)
Q_fit = m.solve_discrete_lyapunov(fit.params.A, fit.params.R1)
var_true = gen.C @ Q_true @ gen.C.T + gen.R2
var_fit = fit.params.C @ Q_fit @ fit.params.C.T + fit.params.R2
print("stationary observation variance: true %.4f, fitted %.4f"
      % (var_true[0, 0], var_fit[0, 0]))
