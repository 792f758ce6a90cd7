import os

import pytest
from hypothesis import HealthCheck, settings

from constrained_er.matchers import ScoredGraph

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=int(os.environ.get("HYPOTHESIS_MAX_EXAMPLES", "100")),
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


def named_graph(edges, left_ids, right_ids):
    """Graph from ``(left_id, right_id, score)`` with handles in list order."""
    lmap = {x: k for k, x in enumerate(left_ids)}
    rmap = {x: k for k, x in enumerate(right_ids)}
    return ScoredGraph(
        len(left_ids), len(right_ids),
        [lmap[a] for a, _, _ in edges], [rmap[b] for _, b, _ in edges], [s for _, _, s in edges],
        left_ids, right_ids,
    )


@pytest.fixture
def bonus_graph():
    # feature film F and its bonus-material satellite B on each side
    return named_graph(
        [("F1", "F2", 0.99), ("F1", "B2", 0.94), ("B1", "F2", 0.87), ("B1", "B2", 0.81)],
        ["F1", "B1"], ["F2", "B2"],
    )


@pytest.fixture
def die_hard_graph():
    return named_graph(
        [("DH", "DH'", 0.98), ("DH", "DH2'", 0.90), ("DH2", "DH'", 0.90), ("DH2", "DH2'", 0.97)],
        ["DH", "DH2"], ["DH'", "DH2'"],
    )


@pytest.fixture
def oz_graph():
    # W = The Wonderful Wizard of Oz, M = The Marvelous Land of Oz; i = left, n = right
    return named_graph(
        [("Wi", "Wn", 0.95), ("Mi", "Wn", 0.90), ("Mi", "Mn", 0.85)],
        ["Wi", "Mi"], ["Wn", "Mn"],
    )


@pytest.fixture(scope="session")
def synth_model():
    """Combiner trained on a held-out synthetic corpus (seed 999)."""
    from constrained_er.pipeline import train_from_truth
    from constrained_er.synth import SynthConfig, generate

    c = generate(SynthConfig(seed=999, n_left=2000, n_right=2000, satellite_prob=0.1))
    return train_from_truth(c.left, c.right, c.truth)
