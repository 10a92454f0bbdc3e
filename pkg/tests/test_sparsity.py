import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncsparse.bench import (chained_singular, generalized_rosenbrock, random_cubic_example)
from ncsparse.ncpoly import NCPolynomial, parse
from ncsparse.sparsity import (SparsityPattern, UncoveredConstraint, UncoveredMonomial,
                               add_ball_constraints, assemble_pattern, check_rip,
                               chordal_cliques, csp_graph)


def _edges(G):
    return sorted(tuple(sorted(e)) for e in G.edges)


def test_csp_graph_examples():
    assert _edges(csp_graph(parse("x1*x2 + x2*x3", 3))) == [(1, 2), (2, 3)]
    assert _edges(csp_graph(NCPolynomial.constant(2.0, 3))) == []
    G = csp_graph(chained_singular(8))
    windows = [set(range(i, i + 4)) for i in (1, 3, 5)]
    assert all(any({a, b} <= w for w in windows) for a, b in G.edges)


def test_constraints_join_their_support():
    G = csp_graph(parse("x1", 3), [parse("1 - x1^2 - x3^2", 3)])
    assert _edges(G) == [(1, 3)]


def test_chordal_cliques_examples():
    assert chordal_cliques(nx.path_graph([1, 2, 3])) == [[1, 2], [2, 3]]
    assert chordal_cliques(nx.complete_graph([1, 2, 3])) == [[1, 2, 3]]
    cl = chordal_cliques(csp_graph(generalized_rosenbrock(10)))
    assert cl == [[k, k + 1] for k in range(1, 10)]


def test_chordal_input_kept():
    G = nx.Graph([(1, 2), (2, 3), (1, 3), (3, 4)])
    assert sorted(chordal_cliques(G)) == [[1, 2, 3], [3, 4]]


def test_cycle_gets_filled():
    cl = chordal_cliques(nx.cycle_graph([1, 2, 3, 4, 5]))
    assert check_rip(cl).ok
    assert all(len(c) == 3 for c in cl)


def test_check_rip_examples():
    assert check_rip([[1, 2], [2, 3], [1, 3]]) == (False, 3)
    assert check_rip([[1, 2], [2, 3], [3, 4]]) == (True, None)
    assert check_rip([[1, 2, 3]]).ok


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 9), st.floats(0.1, 0.7), st.integers(0, 2**31))
def test_detected_cliques_satisfy_rip(n, p, seed):
    G = nx.gnp_random_graph(n, p, seed=seed)
    G = nx.relabel_nodes(G, {i: i + 1 for i in G.nodes})
    cl = chordal_cliques(G)
    assert check_rip(cl).ok
    assert set().union(*map(set, cl)) == set(range(1, n + 1))
    for a, b in G.edges:
        assert any({a, b} <= set(c) for c in cl)
    assert chordal_cliques(G) == cl


def test_random_cubic_split():
    prob = random_cubic_example()
    pat = assemble_pattern(prob.objective, prob.constraints, prob.cliques)
    assert pat.cliques == [[1, 2, 3], [2, 3, 4]]
    assert pat.assignment == {0: 0, 1: 1}
    assert sum(pat.parts[1:], pat.parts[0]) == prob.objective
    for part, c in zip(pat.parts, pat.cliques):
        assert part.support() <= set(c)
    # first fit puts every term in x2, x3 alone into the first clique
    assert all(1 in part_w or 4 in part_w for part_w in pat.parts[1].words() if part_w)


def test_uncovered_monomial():
    with pytest.raises(UncoveredMonomial):
        assemble_pattern(parse("x1*x4", 4), [], [[1, 2], [3, 4]])


def test_uncovered_constraint():
    with pytest.raises(UncoveredConstraint) as exc:
        assemble_pattern(parse("x1", 4), [parse("x2", 4), parse("x1*x3 + x3*x1", 4)],
                         [[1, 2], [3, 4]])
    assert exc.value.index == 2


def test_single_clique_reproduces_dense():
    f = parse("x1*x2 + x2*x1 + x3^2", 3)
    S = [parse("1 - x1^2", 3), parse("1 - x3^2", 3)]
    pat = assemble_pattern(f, S, [[1, 2, 3]])
    assert pat.parts == [f]
    assert pat.assignment == {0: 0, 1: 0}


def test_ball_constraints():
    f = parse("x1*x2 + x2*x1 + x2*x3 + x3*x2", 3)
    pat = assemble_pattern(f, [], [[1, 2], [2, 3]])
    S, pat2 = add_ball_constraints(pat, [], 1.0)
    assert S == [parse("1 - x1^2 - x2^2", 3), parse("1 - x2^2 - x3^2", 3)]
    assert pat2.assignment == {0: 0, 1: 1}

    pat = assemble_pattern(f, [], [[1, 2, 3]])
    S, _ = add_ball_constraints(pat, [], 3.0)
    assert S == [parse("3 - x1^2 - x2^2 - x3^2", 3)]


def test_ball_constraints_match_random_cubic_set():
    prob = random_cubic_example()
    pat = assemble_pattern(prob.objective, [], prob.cliques)
    S, _ = add_ball_constraints(pat, [], 1.0)
    assert S == prob.constraints


def test_pattern_json_round_trip():
    prob = random_cubic_example()
    pat = assemble_pattern(prob.objective, prob.constraints, prob.cliques)
    text = pat.to_json()
    assert '"assignment": {"1": 1, "2": 2}' in text
    cliques, assign = SparsityPattern.cliques_from_json(text)
    assert cliques == pat.cliques and assign == pat.assignment


def test_non_rip_pattern_is_recorded_not_rejected():
    f = parse("(x1 + x2 + x3)^2", 3)
    pat = assemble_pattern(f, [], [[1, 2], [2, 3], [1, 3]])
    assert pat.rip is False
