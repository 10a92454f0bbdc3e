"""
Benchmark families: sizes and bounds of dense and sparse relaxations.

The chained singular function splits into windows of four variables and
the generalized Rosenbrock function into consecutive pairs.  Sparse blocks
stay the same size as n grows, the dense block does not.
"""

# %%
from ncsparse import bench

print(f"{'problem':22s} {'mode':6s} {'m':>6s} {'n_sdp':>7s} {'bound':>12s} {'status':>13s} {'s':>6s}")
for family, ns in [("chained-singular", (4, 8, 12)), ("generalized-rosenbrock", (10, 12))]:
    for n in ns:
        prob = bench.family_problem(family, n)
        for sparse in (True, False):
            if not sparse and n > 8:
                continue
            rep = bench.run_problem(prob, order=2, sparse=sparse)
            print(f"{prob.name:22s} {rep.mode:6s} {rep.m_sdp:6d} {rep.n_sdp:7d} "
                  f"{rep.bound:12.3e} {rep.status:>13s} {rep.seconds:6.2f}")

# %% f_gR - 1 is a sum of hermitian squares, so every bound above is 1

# %% the polydisc: every relaxation lands on f at the corner X_i = 1/3
for n in (4, 8):
    prob = bench.family_problem("chained-singular", n, "polydisc")
    rep = bench.run_problem(prob, order=2, sparse=True, localize="all")
    corner = len(bench.chained_singular_windows(n)) * (121 / 9 + 1 / 81)
    print(f"n={n}: sparse bound {rep.bound:.6f}, f(1/3,..,1/3) = {corner:.6f}, "
          f"n_sdp={rep.n_sdp}")
