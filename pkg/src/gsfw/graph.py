"""Underlying graphs, the g-subgraph support model and its exact oracle.

Supports are plain tuples of strictly increasing node ids.  The exact
oracle enumerates every model member and is therefore exponential in the
number of nodes; it exists to provide ground truth on small instances.
"""
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
import math

import numpy as np

ENUMERATION_CAP = 20


class EnumerationCapError(ValueError):
    """Raised when the exact oracle would enumerate too many supports."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes ``0..d-1``.

    Edges are stored as sorted ``(u, v)`` pairs with ``u < v`` in ascending
    lexicographic order; this order is the sweep order of the heuristic
    oracle.
    """
    d: int
    edges: tuple = field(default=())

    def __post_init__(self):
        d = int(self.d)
        if d < 1:
            raise ValueError(f"graph needs at least one node, got d={d}")
        seen = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (0 <= u < d and 0 <= v < d):
                raise ValueError(f"edge ({u}, {v}) out of range for d={d}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    @property
    def m(self):
        return len(self.edges)

    @cached_property
    def adjacency(self):
        nbrs = [[] for _ in range(self.d)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(a)) for a in nbrs)

    @cached_property
    def incident_edges(self):
        """Per node, the indices into ``edges`` of edges touching it."""
        inc = [[] for _ in range(self.d)]
        for k, (u, v) in enumerate(self.edges):
            inc[u].append(k)
            inc[v].append(k)
        return tuple(tuple(a) for a in inc)

    @classmethod
    def grid(cls, width, height):
        """4-neighbour grid; node ``r*width + c`` sits at row r, column c."""
        if width < 1 or height < 1:
            raise ValueError("grid dimensions must be positive")
        edges = []
        for r in range(height):
            for c in range(width):
                i = r * width + c
                if c + 1 < width:
                    edges.append((i, i + 1))
                if r + 1 < height:
                    edges.append((i, i + width))
        return cls(width * height, tuple(edges))

    @classmethod
    def path(cls, d):
        return cls(d, tuple((i, i + 1) for i in range(d - 1)))

    @classmethod
    def complete(cls, d):
        return cls(d, tuple((i, j) for i in range(d) for j in range(i + 1, d)))

    def relabel(self, order):
        """Graph with old node ``order[k]`` renamed to ``k``."""
        order = list(order)
        if sorted(order) != list(range(self.d)):
            raise ValueError("order must be a permutation of the nodes")
        new_id = {old: new for new, old in enumerate(order)}
        return Graph(self.d, tuple((new_id[u], new_id[v]) for u, v in self.edges))


def read_edge_list(path):
    """Read a graph file: a ``d=<n>`` header then one ``u v`` pair per line.

    Blank lines and ``#`` comments are ignored.
    """
    d = None
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if d is None:
                key, _, value = line.partition("=")
                if key.strip() != "d" or not value.strip():
                    raise ValueError(f"{path}:{lineno}: expected header 'd=<n>'")
                d = int(value)
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            edges.append((int(parts[0]), int(parts[1])))
    if d is None:
        raise ValueError(f"{path}: missing 'd=<n>' header")
    return Graph(d, tuple(edges))


def write_edge_list(graph, path):
    with open(path, "w") as fh:
        fh.write(f"d={graph.d}\n")
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")


@dataclass(frozen=True)
class SubgraphModel:
    """Supports of size at most ``s`` made of at most ``g`` connected pieces.

    ``C`` is the Euclidean radius of the convex hull built from the model.
    """
    graph: Graph
    s: int
    g: int = 1
    C: float = 1.0

    def __post_init__(self):
        s, g, C = int(self.s), int(self.g), float(self.C)
        if not 1 <= g <= s <= self.graph.d:
            raise ValueError(f"need 1 <= g <= s <= d, got g={g}, s={s}, d={self.graph.d}")
        if not C > 0:
            raise ValueError(f"radius C must be positive, got {C}")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "C", C)

    @property
    def d(self):
        return self.graph.d


def as_support(indices, d=None):
    """Normalise an index collection to a sorted, duplicate-free tuple."""
    sup = tuple(sorted({int(i) for i in indices}))
    if d is not None and sup and (sup[0] < 0 or sup[-1] >= d):
        raise IndexError(f"support {sup} out of range for d={d}")
    return sup


def support_of(x, atol=0.0):
    return tuple(int(i) for i in np.flatnonzero(np.abs(x) > atol))


def connected_components(graph, support):
    """Connected components of the subgraph induced by ``support``.

    Components are returned as sorted tuples, ordered by smallest member.
    """
    sup = as_support(support, graph.d)
    inside = set(sup)
    seen = set()
    comps = []
    for start in sup:
        if start in seen:
            continue
        seen.add(start)
        comp = [start]
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in graph.adjacency[u]:
                if w in inside and w not in seen:
                    seen.add(w)
                    comp.append(w)
                    queue.append(w)
        comps.append(tuple(sorted(comp)))
    return comps


def is_member(support, model):
    sup = as_support(support, model.d)
    if len(sup) > model.s:
        return False
    return len(connected_components(model.graph, sup)) <= model.g


def _check_cap(d, cap, allow_large):
    if d > cap and not allow_large:
        raise EnumerationCapError(
            f"exact enumeration over d={d} nodes exceeds the cap of {cap}; "
            "pass allow_large=True to force it")


@lru_cache(maxsize=64)
def _member_masks(graph, s, g):
    """Boolean (K, d) matrix of every member support, rows in mask order."""
    d = graph.d
    codes = np.arange(1 << d, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(d)) & 1).astype(bool)
    bits = bits[bits.sum(axis=1) <= s]
    # label propagation: every node ends with the smallest node id of its piece
    big = np.int16(d)
    labels = np.where(bits, np.arange(d, dtype=np.int16), big)
    if graph.edges:
        us = np.array([e[0] for e in graph.edges])
        vs = np.array([e[1] for e in graph.edges])
        both = bits[:, us] & bits[:, vs]
        while True:
            changed = False
            for k in range(len(us)):
                u, v = us[k], vs[k]
                lo = np.minimum(labels[:, u], labels[:, v])
                lo = np.where(both[:, k], lo, labels[:, u])
                if np.any(lo != labels[:, u]):
                    labels[:, u] = lo
                    changed = True
                lo = np.where(both[:, k], np.minimum(labels[:, u], labels[:, v]),
                              labels[:, v])
                if np.any(lo != labels[:, v]):
                    labels[:, v] = lo
                    changed = True
            if not changed:
                break
    n_comp = (labels == np.arange(d, dtype=np.int16)).sum(axis=1)
    return bits[n_comp <= g]


def enumerate_members(model, cap=ENUMERATION_CAP, allow_large=False):
    """All member supports as tuples (exponential; test use only)."""
    _check_cap(model.d, cap, allow_large)
    masks = _member_masks(model.graph, model.s, model.g)
    return [tuple(int(i) for i in np.flatnonzero(row)) for row in masks]


def brute_force_best_support(z, model, cap=ENUMERATION_CAP, allow_large=False,
                             rtol=1e-12):
    """Exact maximiser of ``||z_S||_2`` over the model by full enumeration.

    Ties (within relative ``rtol`` on the squared norm) go to the
    lexicographically smallest support.  Returns ``(support, value)``.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (model.d,):
        raise ValueError(f"z has shape {z.shape}, expected ({model.d},)")
    _check_cap(model.d, cap, allow_large)
    masks = _member_masks(model.graph, model.s, model.g)
    vals = masks.astype(float) @ (z * z)
    best = vals.max()
    tied = np.flatnonzero(vals >= best * (1.0 - rtol)) if best > 0 else \
        np.flatnonzero(vals == best)
    sup = min(tuple(int(i) for i in np.flatnonzero(masks[k])) for k in tied)
    return sup, math.sqrt(float(np.sum(z[list(sup)] ** 2)))
