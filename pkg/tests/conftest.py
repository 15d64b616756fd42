import numpy as np
import pytest

from etdest.graph import SensorGraph

# Seven-node demo network used by the bundled example1 experiment.
# Triples are (sender, receiver, weight), 0-based.
SEVEN_NODE_EDGES = [
    (0, 1, 2.0),
    (0, 3, 1.0),
    (1, 3, 1.0),
    (1, 4, 1.0),
    (2, 0, 1.0),
    (3, 5, 3.0),
    (3, 6, 1.0),
    (4, 3, 2.0),
    (5, 0, 2.0),
    (5, 2, 1.0),
    (6, 4, 1.0),
]


@pytest.fixture(scope="session")
def seven_node_graph() -> SensorGraph:
    return SensorGraph.from_edges(7, SEVEN_NODE_EDGES)


@pytest.fixture(scope="session")
def seven_node_theta() -> np.ndarray:
    return np.array([-1.0, 2.0])
