"""Select the latent dimension of a synthetic system with a full grid sweep.

Generates data from a 4-dimensional system, fits every candidate order in
[2, 8], and prints a table of all five criteria.  The description length
couples the goodness of fit to the stability of the fitted transition
matrix through a discrete Lyapunov equation, which is what lets it stop
growing with the order.
"""
import ldsmdl as m

gen = m.random_stable_lds(m.RandomLdsConfig(d=4, d_out=1, seed=1))
data = m.simulate(gen, T=100, burn_in=20, seed=1)

# a bounded EM budget matters here: run EM to full convergence and the
# fitted observation noise of the large orders collapses toward zero,
# which makes every criterion prefer the largest model
cfg = m.EmConfig(eps=1e-2, max_iters=30, n_restarts=10, seed=0)
trace = m.grid_search(data, m.ModelOrderBounds(2, 8), cfg)

names = ("aic", "bic", "fia", "mme", "mdl")
print("order  loglik   " + "".join("%10s" % n for n in names))
for r in trace.per_order:
    row = "".join("%10.2f" % r.criterion(n).value for n in names)
    mark = "  <- chosen" if r.order == trace.chosen_order else ""
    print("%5d  %7.2f %s%s" % (r.order, r.fit.loglik, row, mark))

print("\nchosen order (mdl):", trace.chosen_order)
for n in names:
    best = min(trace.per_order, key=lambda r: r.criterion(n).value)
    print("  %s argmin: %d" % (n, best.order))
