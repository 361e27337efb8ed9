import pytest

from level_screen.features import FeatureSchema, build_matrix, impute_and_encode
from level_screen.levels import Author, GameLevel, LevelElement
from level_screen.registry import default_registry
from level_screen.synth import SynthConfig, generate_corpus


def make_level(level_id="lvl", elements=(("player_character", 5), ("goal", None)), label=None, author=Author.PLAYER):
    elems = tuple(LevelElement(k, v) for k, v in elements)
    return GameLevel(level_id, author, elems, label)


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture(scope="session")
def schema(registry):
    return FeatureSchema.from_registry(registry)


@pytest.fixture(scope="session")
def small_corpus():
    return generate_corpus(SynthConfig(n_levels=60, seed=3))


@pytest.fixture(scope="session")
def small_matrix(small_corpus):
    return impute_and_encode(build_matrix(small_corpus.levels))


def random_labels(rng, n, min_each=2):
    while True:
        y = rng.integers(0, 2, n)
        if min(y.sum(), n - y.sum()) >= min_each:
            return y


# Planted-signal regime used for the signal-recovery checks: n=200, 10% label
# noise, about 37% positives. Reports are averaged over corpus seeds 0-9 with
# the plan seed equal to the corpus seed.
PLANTED_SEEDS = range(10)


@pytest.fixture(scope="session")
def planted_reports():
    import time

    from level_screen.evaluation.search import CvPlan, nested_cv

    out = []
    for seed in PLANTED_SEEDS:
        corpus = generate_corpus(SynthConfig(n_levels=200, label_noise=0.1, positive_rate_target=0.37, seed=seed))
        matrix = impute_and_encode(build_matrix(corpus.levels))
        start = time.perf_counter()
        report = nested_cv(matrix, CvPlan(seed=seed))
        out.append((report, time.perf_counter() - start))
    return out
