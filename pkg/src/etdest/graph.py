"""Weighted directed sensor graphs and their spectral structure.

Arrows point from the sending node to the receiving node. The weight
matrix is indexed ``weights[child, parent]``: entry (i, j) is the weight
node i places on messages arriving from node j, so row i lists the
parents of i and column i lists its children. Self loops are not
allowed.

The connectivity predicates the estimator relies on (weight balance,
existence of a directed spanning tree, algebraic connectivity of the
mirror graph) all live here, together with a random geometric generator
for synthetic deployments.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GraphError",
    "GenerationError",
    "SensorGraph",
    "LaplacianPair",
    "random_geometric",
]


class GraphError(ValueError):
    """Malformed graph definition (bad shape, weights, or indices)."""


class GenerationError(RuntimeError):
    """Random graph generation exhausted its retry budget."""


@dataclass(frozen=True)
class LaplacianPair:
    """Directed Laplacian ``L = D - W`` and its symmetrized mirror ``(L + L^T)/2``."""

    laplacian: np.ndarray
    mirror: np.ndarray


@dataclass(frozen=True)
class SensorGraph:
    """Directed, weighted communication graph over ``n`` sensors.

    Parameters
    ----------
    weights : (n, n) array_like
        Non-negative weight matrix, ``weights[i, j] > 0`` meaning node j
        sends to node i. The diagonal must be zero.
    positions : (n, 2) ndarray, optional
        Node coordinates when the graph came from a geometric model.
        Carried along for plotting only, never used in computations.
    """

    weights: np.ndarray
    positions: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise GraphError(f"weight matrix must be square, got shape {w.shape}")
        if w.shape[0] < 1:
            raise GraphError("graph needs at least one node")
        if not np.all(np.isfinite(w)):
            raise GraphError("weights must be finite")
        if np.any(w < 0):
            raise GraphError("weights must be non-negative")
        if np.any(np.diagonal(w) != 0):
            raise GraphError("self loops are not allowed")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.positions is not None:
            p = np.asarray(self.positions, dtype=float)
            if p.shape != (w.shape[0], 2):
                raise GraphError("positions must be an (n, 2) array")
            p.setflags(write=False)
            object.__setattr__(self, "positions", p)

    # ----- construction -------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges) -> "SensorGraph":
        """Build a graph from ``(sender, receiver, weight)`` triples (0-based)."""
        if n < 1:
            raise GraphError("graph needs at least one node")
        w = np.zeros((n, n))
        for sender, receiver, weight in edges:
            if not (0 <= sender < n and 0 <= receiver < n):
                raise GraphError(f"edge ({sender}, {receiver}) out of range for n={n}")
            if sender == receiver:
                raise GraphError(f"self loop on node {sender}")
            if not (np.isfinite(weight) and weight > 0):
                raise GraphError(f"edge ({sender}, {receiver}) needs a positive finite weight")
            if w[receiver, sender] != 0:
                raise GraphError(f"duplicate edge ({sender}, {receiver})")
            w[receiver, sender] = weight
        return cls(w)

    # ----- basic structure ----------------------------------------------

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def parents(self, i: int) -> list[int]:
        """Nodes whose messages node ``i`` receives, ascending."""
        self._check_index(i)
        return [int(j) for j in np.flatnonzero(self.weights[i] > 0)]

    def children(self, i: int) -> list[int]:
        """Nodes that receive node ``i``'s messages, ascending."""
        self._check_index(i)
        return [int(j) for j in np.flatnonzero(self.weights[:, i] > 0)]

    def child_counts(self) -> np.ndarray:
        """Out-degree of every node, as an int vector."""
        return np.count_nonzero(self.weights > 0, axis=0)

    def in_weights(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def out_weights(self) -> np.ndarray:
        return self.weights.sum(axis=0)

    def edge_count(self) -> int:
        return int(np.count_nonzero(self.weights > 0))

    def _check_index(self, i: int) -> None:
        if not (isinstance(i, (int, np.integer)) and 0 <= i < self.n):
            raise GraphError(f"node index {i!r} out of range for n={self.n}")

    # ----- spectral structure --------------------------------------------

    def laplacian(self) -> LaplacianPair:
        """Return ``L = diag(in_weights) - W`` and its mirror ``(L + L^T)/2``."""
        lap = np.diag(self.in_weights()) - self.weights
        return LaplacianPair(laplacian=lap, mirror=(lap + lap.T) / 2.0)

    def is_balanced(self, tol: float = 1e-12) -> bool:
        """True when every node's in-weight equals its out-weight within tol."""
        return bool(np.all(np.abs(self.in_weights() - self.out_weights()) <= tol))

    def has_spanning_tree(self) -> bool:
        """True when some root reaches every node along sender-to-receiver arcs."""
        reach = self.weights > 0  # reach[i, j]: j sends to i
        for root in range(self.n):
            if self._reachable_from(root, reach) == self.n:
                return True
        return False

    def _reachable_from(self, root: int, reach: np.ndarray) -> int:
        seen = np.zeros(self.n, dtype=bool)
        seen[root] = True
        queue = deque([root])
        while queue:
            j = queue.popleft()
            for i in np.flatnonzero(reach[:, j]):
                if not seen[i]:
                    seen[i] = True
                    queue.append(i)
        return int(seen.sum())

    def mirror_connected(self) -> bool:
        """Connectivity of the undirected graph with adjacency ``(W + W^T)/2``."""
        sym = (self.weights + self.weights.T) > 0
        seen = np.zeros(self.n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            j = queue.popleft()
            for i in np.flatnonzero(sym[j]):
                if not seen[i]:
                    seen[i] = True
                    queue.append(i)
        return bool(seen.all())

    def lambda2_mirror(self) -> float:
        """Second-smallest eigenvalue of the mirror Laplacian.

        Positive exactly when the mirror graph is connected. The reading
        as algebraic connectivity assumes the graph is weight balanced,
        so that the mirror matrix is itself a valid Laplacian.
        """
        if self.n == 1:
            return 0.0
        eig = np.linalg.eigvalsh(self.laplacian().mirror)
        return float(eig[1])


def random_geometric(
    n: int,
    radius: float,
    seed=None,
    max_tries: int = 50,
) -> SensorGraph:
    """Sample a connected random geometric graph on the unit square.

    Nodes are dropped uniformly at random and every pair within ``radius``
    is joined by unit-weight arcs in both directions, so the result is
    symmetric (hence balanced). Resamples positions until the graph is
    connected; after ``max_tries`` failures raises :class:`GenerationError`.

    Parameters
    ----------
    n : int
        Number of nodes, at least 1.
    radius : float
        Connection radius, must be positive.
    seed : int, SeedSequence, or None
        Entropy for the position sampler. Each retry draws from a fresh
        child stream, so results are reproducible for a fixed seed.
    max_tries : int
        Retry budget for the connectivity rejection loop.
    """
    if n < 1:
        raise GraphError("graph needs at least one node")
    if not (np.isfinite(radius) and radius > 0):
        raise GraphError("radius must be positive")
    if max_tries < 1:
        raise GraphError("max_tries must be at least 1")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    for child in root.spawn(max_tries):
        rng = np.random.default_rng(child)
        pts = rng.uniform(0.0, 1.0, size=(n, 2))
        diff = pts[:, None, :] - pts[None, :, :]
        close = (diff ** 2).sum(axis=2) <= radius ** 2
        np.fill_diagonal(close, False)
        g = SensorGraph(close.astype(float), positions=pts)
        if g.mirror_connected():
            return g
    raise GenerationError(
        f"no connected geometric graph with n={n}, radius={radius} in {max_tries} tries"
    )
