"""
Bounds and an extracted minimizer for a cubic on two overlapping balls.

The objective lives on the cliques {1,2,3} and {2,3,4}.  The order-2 sparse
bound is not tight, the order-3 one is, and at order 3 the moment data is
flat so a 4x4 minimizer can be glued together from the two clique
representations.
"""

# %%
import time

import numpy as np

from ncsparse import (assemble_pattern, build_eig, evaluate, solve_relaxation, sparse_gns,
                      verify_extraction)
from ncsparse.bench import random_cubic_example

np.set_printoptions(precision=4, suppress=True)
prob = random_cubic_example()
pattern = assemble_pattern(prob.objective, prob.constraints, prob.cliques)
print("cliques:", pattern.cliques, " terms per clique:", [len(p.terms) for p in pattern.parts])

# %%
results = {}
for label, order, pat in [("sparse", 2, pattern), ("sparse", 3, pattern), ("dense", 2, None)]:
    t0 = time.perf_counter()
    R = build_eig(prob.objective, prob.constraints, order, pat)
    res = solve_relaxation(R)
    results[label, order] = res
    print(f"{label:6s} s={order}: bound {res.bound:.5f}  blocks {R.block_sizes}"
          f"  m={R.m_sdp}  {time.perf_counter() - t0:.2f}s")

# %% extraction from the order-3 sparse solution
ex = sparse_gns(results["sparse", 3])
print("ranks per clique:", ex.clique_ranks, " overlap:", ex.overlap_ranks, " r =", ex.r)
print("residuals:", {k: f"{v:.1e}" for k, v in ex.residuals.items()})
for i, A in enumerate(ex.mats, start=1):
    print(f"A{i} =\n{A}")
print("v =", ex.v)

# %%
rep = verify_extraction(prob.objective, prob.constraints, ex, results["sparse", 3].bound)
F = evaluate(prob.objective, ex.mats, sym_tol=1e-8)
print(f"<f(A)v, v> = {rep.value:.5f}, lambda_min f(A) = {rep.lambda_min:.5f}")
print("ball constraints, smallest eigenvalues:", [f"{c:.1e}" for c in rep.constraint_min_eigs])
print("eigen-residual |f(A)v - lambda v| =", np.linalg.norm(F @ ex.v - rep.value * ex.v))
