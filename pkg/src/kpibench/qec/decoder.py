"""Weighted union-find decoder with peeling.

Odd clusters grow along their frontier edges; an edge is fully grown once
the accumulated growth reaches its integer weight, and its endpoints' clusters
merge. Growth is event driven: each step advances every frontier edge by the
smallest amount that completes at least one of them. Clusters that reach the
boundary node are neutral. A spanning forest of the grown edges is then
peeled from the leaves to produce the correction.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .dem import DetectorGraph


class UnionFindDecoder:
    name = "weighted-union-find"

    def __init__(self, graph: DetectorGraph):
        self.graph = graph
        self.n = graph.num_nodes + 1
        self.boundary = graph.boundary
        self.edges = sorted(graph.edges)
        self.weights = [graph.weight(e) for e in self.edges]
        self.obs = [graph.edge_obs[e] for e in self.edges]
        self.incident: list[list[int]] = [[] for _ in range(self.n)]
        for k, (u, v) in enumerate(self.edges):
            self.incident[u].append(k)
            self.incident[v].append(k)
        self._cache: dict[bytes, bool] = {}

    # --------------------------------------------------------------- decoding
    def decode(self, defects: list[int]) -> bool:
        """Observable flip of the correction for the given defect nodes."""
        if not defects:
            return False
        key = np.packbits(np.isin(np.arange(self.n - 1), defects)).tobytes()
        hit = self._cache.get(key)
        if hit is None:
            hit = self._decode(defects)
            self._cache[key] = hit
        return hit

    def _decode(self, defects: list[int]) -> bool:
        parent = list(range(self.n))
        odd = [False] * self.n
        nodes: dict[int, list[int]] = {}
        for d in defects:
            odd[d] = True
            nodes[d] = [d]
        nodes[self.boundary] = [self.boundary]

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        growth: dict[int, int] = {}
        grown: list[int] = []

        def active(r: int) -> bool:
            return odd[r] and find(self.boundary) != r

        while True:
            roots = [r for r in nodes if parent[r] == r and active(r)]
            if not roots:
                break
            rate: dict[int, int] = {}
            for r in roots:
                for u in nodes[r]:
                    for k in self.incident[u]:
                        if growth.get(k, 0) < self.weights[k]:
                            rate[k] = rate.get(k, 0) + 1
            # an edge between two nodes of the same active cluster grows twice per step
            step = min(-(-(self.weights[k] - growth.get(k, 0)) // r) for k, r in rate.items())
            done = []
            for k, r in rate.items():
                g = min(self.weights[k], growth.get(k, 0) + step * r)
                growth[k] = g
                if g >= self.weights[k]:
                    done.append(k)
            for k in done:
                grown.append(k)
                u, v = self.edges[k]
                for w in (u, v):
                    if w not in nodes and parent[w] == w:
                        nodes[w] = [w]
                a, b = find(u), find(v)
                if a == b:
                    continue
                if len(nodes[a]) < len(nodes[b]):
                    a, b = b, a
                parent[b] = a
                nodes[a].extend(nodes.pop(b))
                odd[a] ^= odd[b]
        return self._peel(grown, defects)

    def _peel(self, grown: list[int], defects: list[int]) -> bool:
        adj: dict[int, list[tuple[int, int]]] = {}
        for k in grown:
            u, v = self.edges[k]
            adj.setdefault(u, []).append((v, k))
            adj.setdefault(v, []).append((u, k))
        seen: set[int] = set()
        order: list[tuple[int, int, int]] = []  # (node, parent, edge)
        roots = [self.boundary] + sorted(adj)
        for root in roots:
            if root in seen or root not in adj:
                continue
            seen.add(root)
            queue = deque([root])
            while queue:
                u = queue.popleft()
                for v, k in adj[u]:
                    if v not in seen:
                        seen.add(v)
                        order.append((v, u, k))
                        queue.append(v)
        flag = dict.fromkeys(defects, True)
        flip = False
        for v, u, k in reversed(order):
            if flag.get(v):
                flag[v] = False
                flag[u] = not flag.get(u, False)
                flip ^= self.obs[k]
        return flip

    # ----------------------------------------------------------------- batches
    def decode_batch(self, syndromes: np.ndarray) -> np.ndarray:
        """Observable corrections for a (shots, detectors) bool array."""
        if syndromes.shape[0] == 0:
            return np.zeros(0, bool)
        uniq, inverse = np.unique(np.packbits(syndromes, axis=1), axis=0, return_inverse=True)
        n_det = syndromes.shape[1]
        out = np.empty(len(uniq), bool)
        for j, row in enumerate(uniq):
            defects = np.flatnonzero(np.unpackbits(row)[:n_det]).tolist()
            out[j] = self.decode(defects)
        return out[inverse.reshape(-1)]
