"""
A sum of hermitian squares that has no sparse certificate.

f is built from a Gram matrix over five words mixing all three variables.
The dense bound is 0.  with cliques {1,2} and {2,3} every Gram matrix must
split into two clique pieces and the best sparse bound is slightly negative.
"""

# %%
import numpy as np

from ncsparse import build_eig, newton_chip, solve_relaxation, star
from ncsparse.bench import LEMMA_BORDER, lemma_gram_matrix, lemma_gram_polynomial
from ncsparse.relax import gram_objective
from ncsparse.sparsity import assemble_pattern

prob = lemma_gram_polynomial()
f = prob.objective
print("f =", f)

# %% the Gram matrix family is positive semidefinite for a window of alpha
for a in (0.0, 0.3, 0.5, 1.1, 1.2):
    print(f"alpha={a:.1f}: min eigenvalue {np.linalg.eigvalsh(lemma_gram_matrix(a))[0]:+.4f}")

# %% our column-vector convention uses the reversed words
basis = [star(w) for w in LEMMA_BORDER]
print("Newton chip:", newton_chip(f))
print("Gram matrix at alpha=0 recovered:", np.array_equal(gram_objective(f, basis),
                                                           lemma_gram_matrix(0.0)))

# %%
dense = solve_relaxation(build_eig(f, [], 2))
pattern = assemble_pattern(f, [], prob.cliques)
sparse = solve_relaxation(build_eig(f, [], 2, pattern))
print(f"dense bound  {dense.bound:+.3e}")
print(f"sparse bound {sparse.bound:+.7f}")
