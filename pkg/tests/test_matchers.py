import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linear_sum_assignment

from constrained_er import matchers as mt
from constrained_er.errors import InstanceTooLarge, MatcherError
from constrained_er.matchers import ScoredGraph
from constrained_er.model import validate_matching


@st.composite
def graphs(draw, max_side=8, scores=None, distinct=False):
    nl = draw(st.integers(1, max_side))
    nr = draw(st.integers(1, max_side))
    cells = draw(st.lists(st.tuples(st.integers(0, nl - 1), st.integers(0, nr - 1)), unique=True,
                          max_size=nl * nr))
    if scores is None:
        scores = st.floats(0.001, 0.999, allow_nan=False)
    if distinct:
        s = draw(st.lists(scores, min_size=len(cells), max_size=len(cells), unique=True))
    else:
        s = draw(st.lists(scores, min_size=len(cells), max_size=len(cells)))
    return ScoredGraph(nl, nr, [c[0] for c in cells], [c[1] for c in cells], s)


eighths = st.integers(1, 8).map(lambda k: k / 8)
thresholds = st.sampled_from([0.0, 0.125, 0.3, 0.5, 0.7])


def keys(g, edges):
    return g.edge_keys(edges)


# --- fixtures from the narrative ---------------------------------------------

def test_die_hard(die_hard_graph):
    assert len(mt.many_many(die_hard_graph, 0.5)) == 4
    assert mt.greedy(die_hard_graph, 0.5).pair_set() == {("DH", "DH'"), ("DH2", "DH2'")}


def test_oz(oz_graph):
    fc = mt.first_choice(oz_graph, 0.5, "l2r").pair_set()
    assert fc == {("Wi", "Wn"), ("Mi", "Wn")}
    assert mt.mutual_first_choice(oz_graph, 0.5).pair_set() == {("Wi", "Wn")}
    assert mt.greedy(oz_graph, 0.5).pair_set() == {("Wi", "Wn"), ("Mi", "Mn")}


def test_bonus_material(bonus_graph):
    for theta in (0.95, 0.96, 0.98):
        assert mt.max_weight(bonus_graph, theta).pair_set() == {("F1", "F2")}
    m = mt.max_weight(bonus_graph, 0.55)
    assert m.pair_set() == {("F1", "B2"), ("B1", "F2")}
    assert m.weight == pytest.approx(1.81, abs=1e-12)
    assert mt.greedy(bonus_graph, 0.55).pair_set() == {("F1", "F2"), ("B1", "B2")}
    assert mt.brute_force_max_weight(bonus_graph, 0.5).weight == pytest.approx(1.81, abs=1e-12)


# --- edge cases ---------------------------------------------------------------

@pytest.mark.parametrize("algorithm", mt.ALGORITHMS)
def test_empty_graph(algorithm):
    g = ScoredGraph(0, 0, [], [], [])
    assert len(mt.run(g, algorithm, 0.5)) == 0
    g = ScoredGraph(3, 2, [], [], [])
    assert len(mt.run(g, algorithm, 0.0)) == 0


@pytest.mark.parametrize("algorithm", mt.ALGORITHMS)
def test_threshold_one_and_single_edge(algorithm):
    g = ScoredGraph.from_edges([(0, 0, 0.7), (1, 1, 0.99)])
    assert len(mt.run(g, algorithm, 1.0)) == 0
    single = ScoredGraph.from_edges([(0, 0, 0.7)])
    assert mt.run(single, algorithm, 0.5).pair_set() == {(0, 0)}
    assert len(mt.run(single, algorithm, 0.71)) == 0


def test_threshold_is_inclusive():
    g = ScoredGraph.from_edges([(0, 0, 0.5)])
    for algorithm in mt.ALGORITHMS:
        assert len(mt.run(g, algorithm, 0.5)) == 1


def test_equal_best_goes_to_smaller_handle():
    g = ScoredGraph.from_edges([(0, 2, 0.8), (0, 1, 0.8), (0, 0, 0.3)])
    assert mt.first_choice(g, 0.1).pair_set() == {(0, 1)}
    assert mt.greedy(g, 0.1).pair_set() == {(0, 1)}
    assert mt.max_weight(g, 0.1).pair_set() == {(0, 1)}
    g = ScoredGraph.from_edges([(2, 0, 0.8), (1, 0, 0.8)])
    assert mt.first_choice(g, 0.1, "r2l").pair_set() == {(1, 0)}


def test_star_graph_gives_one_pair():
    # left 0 is every right's first choice and right 0 is its own
    g = ScoredGraph.from_edges([(0, 0, 0.9), (0, 1, 0.8), (0, 2, 0.7), (1, 0, 0.2)])
    assert mt.mutual_first_choice(g, 0.0).pair_set() == {(0, 0)}


def test_brute_force_one_left_three_rights():
    g = ScoredGraph.from_edges([(0, 0, 0.4), (0, 1, 0.9), (0, 2, 0.6)])
    assert mt.brute_force_max_weight(g, 0.0).pair_set() == {(0, 1)}


def test_max_weight_prefers_lexicographically_smaller_optimum():
    # {(0,0),(1,1)} and {(0,1),(1,0)} both weigh 1.0
    g = ScoredGraph.from_edges([(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)])
    assert mt.max_weight(g, 0.0).pair_set() == {(0, 0), (1, 1)}
    g = ScoredGraph.from_edges([(0, 1, 0.75), (0, 5, 1.0), (1, 2, 0.625), (1, 3, 0.75), (1, 5, 1.0)])
    assert mt.max_weight(g, 0.5).pair_set() == {(0, 1), (1, 5)}


def test_id_handles_follow_given_order():
    g = ScoredGraph.from_scored_pairs([("b", "y", 0.6), ("a", "y", 0.6), ("c", "z", 0.0)],
                                      left_ids=["a", "b", "c"], right_ids=["y", "z"])
    assert len(g) == 2  # the zero-scored pair is dropped
    assert mt.greedy(g, 0.5).pair_set() == {("a", "y")}


# --- errors ------------------------------------------------------------------

def test_brute_force_cap():
    edges = [(i, i, 0.5) for i in range(11)]
    g = ScoredGraph.from_edges(edges)
    with pytest.raises(InstanceTooLarge):
        mt.brute_force_max_weight(g, 0.0)
    # the cap applies after thresholding
    assert len(mt.brute_force_max_weight(g, 0.6)) == 0


def test_component_cap():
    g = ScoredGraph.from_edges([(0, 0, 0.5), (0, 1, 0.5), (1, 1, 0.5)])
    with pytest.raises(InstanceTooLarge) as info:
        mt.max_weight(g, 0.0, max_component_nodes=3)
    assert info.value.code == "matchers:InstanceTooLarge"
    assert len(mt.max_weight(g, 0.0, max_component_nodes=4)) == 2


@pytest.mark.parametrize("args", [
    (2, 2, [0], [0], [0.0]),
    (2, 2, [0], [0], [-0.1]),
    (2, 2, [0], [0], [float("nan")]),
    (2, 2, [0, 0], [1, 1], [0.5, 0.6]),
    (2, 2, [2], [0], [0.5]),
    (2, 2, [0], [-1], [0.5]),
    (2, 2, [0, 1], [0], [0.5]),
])
def test_graph_validation(args):
    with pytest.raises(MatcherError):
        ScoredGraph(*args)


def test_unknown_algorithm_and_direction():
    g = ScoredGraph.from_edges([(0, 0, 0.5)])
    with pytest.raises(MatcherError):
        mt.run(g, "hungarian", 0.5)
    with pytest.raises(MatcherError):
        mt.first_choice(g, 0.5, "sideways")


# --- properties --------------------------------------------------------------

@given(graphs(), thresholds)
def test_one_to_one_outputs_are_valid(g, theta):
    for algorithm in mt.ONE_TO_ONE:
        m = mt.run(g, algorithm, theta)
        assert m.constrained
        assert validate_matching(m) == []


@given(graphs(distinct=True), thresholds)
def test_containment_chain(g, theta):
    mm = keys(g, mt.select_many_many(g, theta))
    gr = keys(g, mt.select_greedy(g, theta))
    mfc = keys(g, mt.select_mutual_first_choice(g, theta))
    assert mfc <= gr <= mm
    for d in mt.DIRECTIONS:
        assert keys(g, mt.select_first_choice(g, theta, d)) <= mm


@given(graphs(scores=eighths), thresholds)
def test_mutual_is_intersection_of_both_directions(g, theta):
    both = keys(g, mt.select_first_choice(g, theta, "l2r")) & keys(g, mt.select_first_choice(g, theta, "r2l"))
    assert keys(g, mt.select_mutual_first_choice(g, theta)) == both


@given(graphs(), st.lists(st.floats(0, 1), min_size=2, max_size=6))
def test_threshold_monotonicity(g, grid):
    grid = sorted(grid, reverse=True)
    for algorithm in ("many-many", "first-choice", "mutual", "greedy"):
        for d in mt.DIRECTIONS:
            prev = set()
            for theta in grid:
                cur = keys(g, mt.select(g, algorithm, theta, d))
                assert prev <= cur
                prev = cur


def first_choice_oracle(g, theta, direction):
    best = {}
    for a, b, s in zip(g.left.tolist(), g.right.tolist(), g.score.tolist()):
        src, dst = (a, b) if direction == "l2r" else (b, a)
        if s >= theta and (src not in best or (-s, dst) < (-best[src][1], best[src][0])):
            best[src] = (dst, s)
    return {(s, d) if direction == "l2r" else (d, s) for s, (d, _) in best.items()}


def greedy_oracle(g, theta):
    edges = sorted((-s, a, b) for a, b, s in zip(g.left.tolist(), g.right.tolist(), g.score.tolist()) if s >= theta)
    used_l, used_r, out = set(), set(), set()
    for _, a, b in edges:
        if a not in used_l and b not in used_r:
            used_l.add(a)
            used_r.add(b)
            out.add((a, b))
    return out


@given(graphs(scores=eighths), thresholds)
def test_first_choice_and_greedy_match_reference(g, theta):
    for d in mt.DIRECTIONS:
        assert keys(g, mt.select_first_choice(g, theta, d)) == first_choice_oracle(g, theta, d)
    assert keys(g, mt.select_greedy(g, theta)) == greedy_oracle(g, theta)


@given(graphs(), thresholds)
def test_greedy_is_half_approximation(g, theta):
    assert g.weight(mt.select_greedy(g, theta)) >= 0.5 * g.weight(mt.select_max_weight(g, theta)) - 1e-12


@given(graphs(), thresholds)
def test_max_weight_matches_brute_force_weight(g, theta):
    fast = g.weight(mt.select_max_weight(g, theta))
    slow = g.weight(mt.select_brute_force_max_weight(g, theta))
    assert abs(fast - slow) <= 1e-12


@given(graphs(scores=eighths), thresholds)
def test_max_weight_matches_brute_force_set_on_ties(g, theta):
    # dyadic scores add exactly, so tied optima are true ties
    assert keys(g, mt.select_max_weight(g, theta)) == keys(g, mt.select_brute_force_max_weight(g, theta))


@given(graphs(max_side=30), thresholds)
def test_max_weight_agrees_with_dense_assignment(g, theta):
    W = np.zeros((g.n_left, g.n_right))
    keep = g.score >= theta
    W[g.left[keep], g.right[keep]] = g.score[keep]
    rows, cols = linear_sum_assignment(W, maximize=True)
    assert g.weight(mt.select_max_weight(g, theta)) == pytest.approx(W[rows, cols].sum(), abs=1e-9)


def test_brute_force_routes_agree():
    rng = np.random.default_rng(11)
    for _ in range(200):
        nl, nr = rng.integers(1, 9, 2)
        cells = rng.choice(nl * nr, rng.integers(1, nl * nr + 1), replace=False)
        g = ScoredGraph(nl, nr, cells // nr, cells % nr, rng.integers(1, 9, cells.size) / 8)
        elig = g.eligible(0.0)
        by_left = sorted(mt._brute_force_by_left(g, elig))
        by_right = sorted(mt._brute_force_by_right(g, elig))
        assert by_left == by_right


@given(graphs(max_side=12), thresholds)
def test_matchers_are_deterministic(g, theta):
    for algorithm in mt.ALGORITHMS:
        first = mt.run(g, algorithm, theta)
        assert mt.run(g, algorithm, theta) == first
        shuffled = ScoredGraph(g.n_left, g.n_right, g.left[::-1], g.right[::-1], g.score[::-1])
        assert mt.run(shuffled, algorithm, theta) == first


def test_components_are_solved_independently():
    rng = np.random.default_rng(3)
    blocks = []
    for k in range(5):
        for a in range(3):
            for b in range(3):
                blocks.append((3 * k + a, 3 * k + b, float(rng.integers(1, 9)) / 8))
    g = ScoredGraph.from_edges(blocks)
    whole = keys(g, mt.select_max_weight(g, 0.0))
    parts = set()
    for k in range(5):
        sub = ScoredGraph.from_edges([(a - 3 * k, b - 3 * k, s) for a, b, s in blocks if a // 3 == k], 3, 3)
        parts |= {(a + 3 * k, b + 3 * k) for a, b in keys(sub, mt.select_brute_force_max_weight(sub, 0.0))}
    assert whole == parts
