import pytest

from erpsearch.config import PipelineConfig
from erpsearch.corpus import build_index
from erpsearch.simulator import SimulationConfig, simulate_dataset


TINY_SIM = dict(
    n_channels=4,
    n_blocks=4,
    n_topics=8,
    docs_per_topic=4,
    sentences_per_doc=6,
    words_per_sentence=6,
    topical_per_sentence=2,
    trials_per_block=6,
    seed=11,
)


@pytest.fixture(scope="session")
def tiny_dataset():
    """Small synthetic dataset shared by pipeline-level tests."""
    return simulate_dataset(SimulationConfig(**TINY_SIM))


@pytest.fixture(scope="session")
def tiny_index(tiny_dataset):
    return build_index(tiny_dataset.corpus.documents)


@pytest.fixture()
def cfg():
    return PipelineConfig({"seed": 11, "evaluation.permutations": 20})
