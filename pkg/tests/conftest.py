import numpy as np
import pytest

from privsearch.graph_store import Corpus, Document, Network
from privsearch.synthgen import SynthSpec, write_dataset

ACCEPTANCE_LINES = []


def record_criterion(number: int, name: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def path_graph():
    return Network.from_edges([("a", "b"), ("b", "c")])


@pytest.fixture
def toy_corpus():
    return Corpus.from_documents([
        Document("d1", "graph mining", "graph", ("A",)),
        Document("d2", "data", "mining", ("B",)),
        Document("d3", "social", "networks", ("C",)),
    ])


def random_network(rng, n, p=0.15, prefix="n"):
    ids = [f"{prefix}{i:03d}" for i in range(n)]
    edges = [(ids[i], ids[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Network.from_edges(edges, ids)


@pytest.fixture(scope="session")
def pinned_spec():
    return SynthSpec()


@pytest.fixture(scope="session")
def pinned_dataset(tmp_path_factory, pinned_spec):
    """The pinned desk-scale synthetic dataset (n = 10,000, m = 5) written to disk once."""
    out = tmp_path_factory.mktemp("pinned")
    return write_dataset(out, pinned_spec)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("small")
    return write_dataset(out, SynthSpec(n=1500, m=3, n_tasks=12, seed=7))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
