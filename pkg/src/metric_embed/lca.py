"""Lowest common ancestors via an Euler tour and a sparse table of minima."""
from __future__ import annotations

import numpy as np


class EulerTourLCA:
    """Static LCA index over a rooted tree given by a parent array (-1 at the root)."""

    def __init__(self, parent: np.ndarray):
        parent = np.asarray(parent, dtype=np.int64)
        n = len(parent)
        roots = np.flatnonzero(parent < 0)
        if len(roots) != 1:
            raise ValueError(f"expected one root, found {len(roots)}")
        children: list[list[int]] = [[] for _ in range(n)]
        for v in range(n):
            if parent[v] >= 0:
                children[parent[v]].append(v)
        depth = np.zeros(n, dtype=np.int64)
        euler: list[int] = []
        first = np.full(n, -1, dtype=np.int64)
        root = int(roots[0])
        stack = [(root, 0)]
        while stack:
            x, i = stack.pop()
            if i == 0:
                first[x] = len(euler)
            euler.append(x)
            if i < len(children[x]):
                stack.append((x, i + 1))
                c = children[x][i]
                depth[c] = depth[x] + 1
                stack.append((c, 0))
        if (first < 0).any():
            raise ValueError("parent array does not describe a single tree")
        self.root = root
        self.depth = depth
        self.first = first
        self.euler = np.array(euler, dtype=np.int64)
        # table[k][i] = vertex of least depth in euler[i : i + 2^k]
        table = [self.euler]
        span = 1
        while 2 * span <= len(euler):
            prev = table[-1]
            a, b = prev[:-span], prev[span:]
            table.append(np.where(depth[a] <= depth[b], a, b))
            span *= 2
        self._table = table

    def lca(self, u: int, v: int) -> int:
        i, j = self.first[u], self.first[v]
        if i > j:
            i, j = j, i
        k = int(j - i + 1).bit_length() - 1
        a = self._table[k][i]
        b = self._table[k][j - (1 << k) + 1]
        return int(a if self.depth[a] <= self.depth[b] else b)
