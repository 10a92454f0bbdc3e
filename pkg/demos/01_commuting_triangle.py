"""
Why the running intersection property matters.

f = (X1 + X2 + X3)^2 is a hermitian square, so its smallest eigenvalue on
the box {1 - X_i^2 >= 0} is 0.  Splitting it over the three edges of a
triangle gives clique blocks that never talk to each other consistently,
and the sparse bound drops to -3.
"""

# %%
from ncsparse import assemble_pattern, build_eig, check_rip, solve_relaxation
from ncsparse.bench import example_commuting_triangle

prob = example_commuting_triangle()
print("f =", prob.objective)
print("constraints:", ", ".join(str(g) for g in prob.constraints))

# %% the edge cliques fail the running intersection test at the third clique
print("RIP:", check_rip(prob.cliques))

# %%
pattern = assemble_pattern(prob.objective, prob.constraints, prob.cliques)
sparse = solve_relaxation(build_eig(prob.objective, prob.constraints, 1, pattern))
dense = solve_relaxation(build_eig(prob.objective, prob.constraints, 1))
print(f"sparse bound {sparse.bound:+.6f}   ({sparse.status.value})")
print(f"dense bound  {dense.bound:+.6f}   ({dense.status.value})")

# %% the sparse moments look like a commuting triple with pairwise products -1
R, y = sparse.relaxation, sparse.y
for w in [(1, 2), (2, 3), (1, 3)]:
    print(f"L(X{w[0]}X{w[1]}) = {R.moment(y, w):+.4f}")
