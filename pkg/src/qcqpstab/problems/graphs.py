"""Graph description shared by the synchronization and distance families."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvalidInputError


@dataclass(frozen=True)
class GraphSpec:
    """Vertices 0..n with vertex 0 the anchor; undirected edge list (i < j).

    Connectivity is required: the synchronization objectives are strictly
    convex only over connected graphs.
    """

    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n_vertices < 2:
            raise InvalidInputError("need at least two vertices")
        edges = []
        seen = set()
        for e in self.edges:
            i, j = int(e[0]), int(e[1])
            if i == j or not (0 <= i < self.n_vertices and 0 <= j < self.n_vertices):
                raise InvalidInputError(f"bad edge {e}")
            if i > j:
                i, j = j, i
            if (i, j) in seen:
                raise InvalidInputError(f"duplicate edge {e}")
            seen.add((i, j))
            edges.append((i, j))
        object.__setattr__(self, "edges", tuple(edges))
        if not self.is_connected():
            raise InvalidInputError("graph must be connected")

    def is_connected(self) -> bool:
        adj = {v: set() for v in range(self.n_vertices)}
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n_vertices


def triangle() -> GraphSpec:
    return GraphSpec(3, ((0, 1), (0, 2), (1, 2)))


def path(n_vertices: int) -> GraphSpec:
    return GraphSpec(n_vertices, tuple((i, i + 1) for i in range(n_vertices - 1)))
