"""Hopcroft-Karp maximum matching with right-vertex capacities.

Right vertex ``j`` may absorb up to ``caps[j]`` left vertices. This lets the
decomposition treat the single aggregate "not shown" column as one vertex of
multiplicity n - k instead of n - k cloned columns.
"""

from __future__ import annotations

from collections import deque

INF = float("inf")


class CapacitatedMatcher:
    """Maintains a matching that can be repaired after edges disappear.

    ``adj[u]`` lists the right vertices adjacent to left vertex ``u`` in the
    order they are tried; callers control that order to seed tie-breaking.
    """

    def __init__(self, adj: list[list[int]], caps: list[int]):
        self.adj = adj
        self.caps = list(caps)
        self.n_left = len(adj)
        self.match = [-1] * self.n_left
        self.members: list[set[int]] = [set() for _ in caps]
        self._dist: list[float] = []
        self._found = INF

    def unmatch(self, u: int) -> None:
        j = self.match[u]
        if j >= 0:
            self.members[j].discard(u)
            self.match[u] = -1

    def _assign(self, u: int, j: int) -> None:
        self.match[u] = j
        self.members[j].add(u)

    def _bfs(self, order: list[int]) -> bool:
        dist = [INF] * self.n_left
        queue = deque()
        for u in order:
            if self.match[u] < 0:
                dist[u] = 0
                queue.append(u)
        found = INF
        seen = [False] * len(self.caps)
        caps, members, adj = self.caps, self.members, self.adj
        while queue:
            u = queue.popleft()
            du = dist[u]
            if du >= found:
                break
            for j in adj[u]:
                if seen[j]:
                    continue
                seen[j] = True
                if len(members[j]) < caps[j]:
                    if found == INF:
                        found = du + 1
                    continue
                for w in members[j]:
                    if dist[w] == INF:
                        dist[w] = du + 1
                        queue.append(w)
        self._dist = dist
        self._found = found
        return found != INF

    def _dfs(self, u: int) -> bool:
        dist, caps, members = self._dist, self.caps, self.members
        du = dist[u]
        for j in self.adj[u]:
            if j == self.match[u]:
                continue
            if len(members[j]) < caps[j]:
                if du + 1 == self._found:
                    self.unmatch(u)
                    self._assign(u, j)
                    return True
                continue
            for w in list(members[j]):
                if dist[w] == du + 1 and self._dfs(w):
                    self.unmatch(u)
                    self._assign(u, j)
                    return True
        dist[u] = INF
        return False

    def run(self, order: list[int] | None = None) -> int:
        """Augment until maximum; returns the matching size."""
        order = list(range(self.n_left)) if order is None else order
        while self._bfs(order):
            progressed = False
            for u in order:
                if self.match[u] < 0 and self._dfs(u):
                    progressed = True
            if not progressed:
                break
        return sum(1 for j in self.match if j >= 0)

    @property
    def size(self) -> int:
        return sum(1 for j in self.match if j >= 0)
