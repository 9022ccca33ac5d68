"""Random geometric sensor networks and local-degree consensus weights."""
from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist

MAX_REDRAWS = 1000


class NetworkGenerationError(RuntimeError):
    """No admissible graph was found within the redraw cap."""


def _normalize_edges(edges, n: int) -> tuple[tuple[int, int], ...]:
    out = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if i == j:
            raise ValueError(f"self-loop on node {i}")
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i}, {j}) out of range for {n} nodes")
        out.add((min(i, j), max(i, j)))
    return tuple(sorted(out))


def _adjacency(edges, n: int) -> list[list[int]]:
    adj = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    return adj


def _bfs_colors(edges, n: int) -> tuple[list[int], bool]:
    """Two-colour every component by BFS; report whether an odd cycle was found."""
    adj = _adjacency(edges, n)
    color = [-1] * n
    odd_cycle = False
    for root in range(n):
        if color[root] >= 0:
            continue
        color[root] = 0
        queue = deque([root])
        while queue:
            k = queue.popleft()
            for j in adj[k]:
                if color[j] < 0:
                    color[j] = 1 - color[k]
                    queue.append(j)
                elif color[j] == color[k]:
                    odd_cycle = True
    return color, odd_cycle


def is_connected(edges, n: int) -> bool:
    if n <= 1:
        return True
    adj = _adjacency(_normalize_edges(edges, n), n)
    seen = {0}
    queue = deque([0])
    while queue:
        for j in adj[queue.popleft()]:
            if j not in seen:
                seen.add(j)
                queue.append(j)
    return len(seen) == n


def is_bipartite(edges, n: int) -> bool:
    _, odd_cycle = _bfs_colors(_normalize_edges(edges, n), n)
    return not odd_cycle


def degrees(edges, n: int) -> np.ndarray:
    d = np.zeros(n, dtype=int)
    for i, j in _normalize_edges(edges, n):
        d[i] += 1
        d[j] += 1
    return d


def local_degree_weights(edges, n: int) -> np.ndarray:
    """Symmetric weights ``1/max(d_k, d_j)`` on edges; the diagonal absorbs the rest of each row."""
    edges = _normalize_edges(edges, n)
    d = degrees(edges, n)
    W = np.zeros((n, n))
    for i, j in edges:
        W[i, j] = W[j, i] = 1.0 / max(d[i], d[j])
    # summing in a fixed order keeps rows equal to 1 up to a single rounding
    W[np.diag_indices(n)] = 1.0 - W.sum(axis=1)
    return W


def spectral_convergence_factor(W) -> float:
    """Second-largest eigenvalue modulus of a symmetric weight matrix."""
    W = np.asarray(W, dtype=float)
    if W.shape[0] < 2:
        return 0.0
    moduli = np.sort(np.abs(np.linalg.eigvalsh(W)))[::-1]
    return float(min(moduli[1], 1.0))


@dataclass(frozen=True, eq=False)
class SensorNetwork:
    positions: np.ndarray
    edges: tuple[tuple[int, int], ...]
    side: float = 100.0
    degrees: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 2)
        n = pos.shape[0]
        if n < 1:
            raise ValueError("network needs at least one node")
        edges = _normalize_edges(self.edges, n)
        if n > 1:
            if not is_connected(edges, n):
                raise ValueError("network graph is not connected")
            if is_bipartite(edges, n):
                raise ValueError("network graph is bipartite; consensus would not converge")
        W = local_degree_weights(edges, n)
        for name, value in (
            ("positions", pos),
            ("degrees", degrees(edges, n)),
            ("weights", W),
        ):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "side", float(self.side))

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    def neighbors(self, k: int) -> list[int]:
        return [j for i, j in self.edges if i == k] + [i for i, j in self.edges if j == k]

    def convergence_factor(self) -> float:
        return spectral_convergence_factor(self.weights)

    def to_text(self) -> str:
        lines = [f"{self.n_nodes} {self.side!r}"]
        lines += [f"{x!r} {y!r}" for x, y in self.positions.tolist()]
        lines += [f"{i} {j}" for i, j in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SensorNetwork":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not rows or len(rows[0]) != 2:
            raise ValueError("network header must be 'N side'")
        n, side = int(rows[0][0]), float(rows[0][1])
        if len(rows) < n + 1:
            raise ValueError(f"expected {n} position lines")
        positions = [[float(v) for v in r] for r in rows[1 : n + 1]]
        edges = [(int(r[0]), int(r[1])) for r in rows[n + 1 :]]
        return cls(positions, edges, side)

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:12]


def write_network(network: SensorNetwork, path) -> None:
    Path(path).write_text(network.to_text())


def read_network(path) -> SensorNetwork:
    return SensorNetwork.from_text(Path(path).read_text())


def closest_pair_edges(positions: np.ndarray, target_edges: int) -> tuple[tuple[int, int], ...]:
    """The ``target_edges`` closest node pairs; ties go to the lexicographically smaller pair."""
    n = positions.shape[0]
    dist = pdist(positions)
    # pdist lists pairs (0,1), (0,2), ..., (1,2), ... so a stable sort breaks ties lexicographically
    order = np.argsort(dist, kind="stable")[:target_edges]
    iu, ju = np.triu_indices(n, k=1)
    return tuple(sorted(zip(iu[order].tolist(), ju[order].tolist())))


def generate_geometric_network(
    n: int, target_edges: int, side: float = 100.0, seed: int = 0, max_redraws: int = MAX_REDRAWS
) -> SensorNetwork:
    """Uniform nodes on a square, joined by growing a distance threshold to ``target_edges`` edges.

    Layouts whose graph is disconnected or bipartite are redrawn with the
    next derived seed.
    """
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got {n}")
    if not (n - 1 <= target_edges <= n * (n - 1) // 2):
        raise ValueError(f"target_edges={target_edges} outside [{n - 1}, {n * (n - 1) // 2}]")
    for attempt in range(max_redraws):
        rng = np.random.default_rng(np.random.SeedSequence([seed, attempt]))
        positions = rng.uniform(0.0, side, size=(n, 2))
        edges = closest_pair_edges(positions, target_edges)
        if is_connected(edges, n) and not is_bipartite(edges, n):
            return SensorNetwork(positions, edges, side)
    raise NetworkGenerationError(
        f"no connected non-bipartite graph with n={n}, edges={target_edges} "
        f"after {max_redraws} draws"
    )
