"""Approximate dual maximisation oracles (DMOs).

A DMO receives a dual vector ``z`` and returns a model support ``S`` whose
restricted norm ``||z_S||_2`` is within a factor ``delta`` of the best one.
:func:`support_to_vertex` turns such a support into an extreme point of the
support-set hull, which is what the Frank-Wolfe solvers move towards.
"""
from dataclasses import dataclass
import heapq
import math

import numpy as np

from .graph import ENUMERATION_CAP, as_support, brute_force_best_support
from .rng import Stream


class DegenerateDirectionError(ValueError):
    """The dual vector vanishes on the selected support."""


@dataclass(frozen=True)
class DmoResult:
    support: tuple
    dual_value: float
    delta_guarantee: float

    def __post_init__(self):
        if not 0.0 < self.delta_guarantee <= 1.0:
            raise ValueError(f"delta_guarantee must lie in (0, 1], got {self.delta_guarantee}")


def _result(z, support, delta):
    support = tuple(sorted(int(i) for i in support))
    value = math.sqrt(float(np.sum(z[list(support)] ** 2))) if support else 0.0
    return DmoResult(support, value, float(delta))


def _top_indices(z, k):
    # stable sort on -|z| keeps the lower index first among equal magnitudes
    return np.argsort(-np.abs(z), kind="stable")[:k]


def heuristic_delta(s, g):
    return math.sqrt(1.0 / math.ceil(s / g))


def heuristic_dmo(z, model):
    """Top-g seeds grown along the edge list until ``s`` nodes are reached.

    Edges are swept in ascending ``(u, v)`` order, repeatedly, adding the
    outside endpoint of every edge that has exactly one endpoint in ``S``.
    The sweep is simulated with a heap of pending edge positions so that only
    edges touching ``S`` are visited; the result equals the literal repeated
    sweep.
    """
    z = np.asarray(z, dtype=float)
    graph, s, g = model.graph, model.s, model.g
    if z.shape != (graph.d,):
        raise ValueError(f"z has shape {z.shape}, expected ({graph.d},)")
    delta = heuristic_delta(s, g)
    in_s = np.zeros(graph.d, dtype=bool)
    seeds = [int(i) for i in _top_indices(z, g)]
    in_s[seeds] = True
    size = len(seeds)
    if size >= s:
        return _result(z, seeds, delta)

    edges, incident = graph.edges, graph.incident_edges
    current = []
    for u in seeds:
        current.extend(incident[u])
    heapq.heapify(current)
    upcoming = []
    while current:
        pos = -1
        while current:
            k = heapq.heappop(current)
            if k == pos:
                continue
            pos = k
            u, v = edges[k]
            if in_s[u] == in_s[v]:
                continue
            new = v if in_s[u] else u
            in_s[new] = True
            size += 1
            if size == s:
                return _result(z, np.flatnonzero(in_s), delta)
            for e in incident[new]:
                if e > k:
                    heapq.heappush(current, e)
                elif e < k:
                    upcoming.append(e)
        # the next sweep only needs edges that touched a node added late
        current = upcoming
        heapq.heapify(current)
        upcoming = []
    # fewer than s nodes reachable from the seeds
    return _result(z, np.flatnonzero(in_s), delta)


def greedy_dmo(z, model):
    """Top-g seeds grown by always adding the largest-magnitude frontier node.

    This is the same merge step as :func:`heuristic_dmo` with the edges
    visited in a data-dependent order (outside endpoint by decreasing
    ``|z|``, ties to the lower node id), so the seeds and hence the
    ``sqrt(1/ceil(s/g))`` guarantee are unchanged.
    """
    z = np.asarray(z, dtype=float)
    graph, s, g = model.graph, model.s, model.g
    if z.shape != (graph.d,):
        raise ValueError(f"z has shape {z.shape}, expected ({graph.d},)")
    mag = np.abs(z)
    in_s = np.zeros(graph.d, dtype=bool)
    seeds = [int(i) for i in _top_indices(z, g)]
    in_s[seeds] = True
    size = len(seeds)
    heap = [(-mag[w], w) for u in seeds for w in graph.adjacency[u] if not in_s[w]]
    heapq.heapify(heap)
    while size < s and heap:
        _, w = heapq.heappop(heap)
        if in_s[w]:
            continue
        in_s[w] = True
        size += 1
        for x in graph.adjacency[w]:
            if not in_s[x]:
                heapq.heappush(heap, (-mag[x], x))
    return _result(z, np.flatnonzero(in_s), heuristic_delta(s, g))


def top_s_dmo(z, s):
    """Exact oracle for the plain cardinality model ``|S| <= s``."""
    z = np.asarray(z, dtype=float)
    if not 1 <= s <= z.size:
        raise ValueError(f"need 1 <= s <= d, got s={s}, d={z.size}")
    return _result(z, _top_indices(z, s), 1.0)


def degraded_ksupport_dmo(z, s, delta, rng=None):
    """Cardinality-model oracle deliberately weakened to a target ``delta``.

    Starts from the ``s`` smallest-magnitude entries and swaps in the optimal
    entries one at a time, weakest first, until the restricted norm reaches
    ``delta`` times the optimum.  Each swap evicts a uniformly random
    non-optimal element drawn from ``rng``.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    z = np.asarray(z, dtype=float)
    best = top_s_dmo(z, s)
    if delta == 1.0:
        return best
    if rng is None:
        rng = Stream(0)
    threshold = delta * best.dual_value
    optimal = set(best.support)
    order = np.argsort(np.abs(z), kind="stable")
    current = [int(i) for i in order[:s]]
    cur_sq = float(np.sum(z[current] ** 2))
    swap_in = sorted(best.support, key=lambda j: (abs(z[j]), j))
    for j in swap_in:
        if j in current:
            continue
        evictable = [i for i in current if i not in optimal]
        out = evictable[rng.below(len(evictable))]
        current.remove(out)
        current.append(j)
        cur_sq += z[j] ** 2 - z[out] ** 2
        if math.sqrt(max(cur_sq, 0.0)) >= threshold:
            break
    return _result(z, current, delta)


def brute_force_dmo(z, model, cap=ENUMERATION_CAP, allow_large=False):
    sup, _ = brute_force_best_support(z, model, cap=cap, allow_large=allow_large)
    return _result(np.asarray(z, dtype=float), sup, 1.0)


def support_to_vertex(z, support, C):
    """Extreme point ``C * z_S / ||z_S||_2`` of the support-set hull."""
    z = np.asarray(z, dtype=float)
    sup = list(as_support(support, z.size))
    norm = math.sqrt(float(np.sum(z[sup] ** 2))) if sup else 0.0
    if norm == 0.0:
        raise DegenerateDirectionError("z vanishes on the support")
    v = np.zeros_like(z)
    v[sup] = C * z[sup] / norm
    return v


def verify_ipo(z, v, delta, model, cap=ENUMERATION_CAP, rtol=1e-12):
    """Check ``<z, v> <= delta * min_{s in D} <z, s>`` exactly (small d).

    The minimum over the hull is ``-C * max_S ||z_S||_2``, found by brute
    force.  ``rtol`` absorbs floating-point rounding in the equality case.
    """
    z = np.asarray(z, dtype=float)
    _, best = brute_force_best_support(z, model, cap=cap)
    rhs = -delta * model.C * best
    lhs = float(np.dot(z, v))
    return lhs <= rhs + rtol * max(1.0, abs(rhs))


def satisfies_dmo(z, result, model, cap=ENUMERATION_CAP, rtol=1e-12):
    """Check the DMO inequality of ``result`` against the exact optimum."""
    z = np.asarray(z, dtype=float)
    _, best = brute_force_best_support(z, model, cap=cap)
    return result.dual_value >= result.delta_guarantee * best * (1.0 - rtol)


# --- oracle selection ------------------------------------------------------

_EXTERNAL = {}


def register_oracle(name, fn):
    """Register an external oracle ``fn(z, model) -> DmoResult`` by name.

    The callback supplies its own ``delta_guarantee``; this is where a head
    projection or any other third-party DMO plugs in.
    """
    _EXTERNAL[name] = fn


@dataclass(frozen=True)
class OracleKind:
    """Which DMO to use: heuristic, greedy, top-s, ksupport, brute or external."""
    name: str
    delta: float = 1.0
    external: str = ""

    def __post_init__(self):
        if self.name not in ("heuristic", "greedy", "top-s", "ksupport", "brute", "external"):
            raise ValueError(f"unknown oracle kind {self.name!r}")
        if self.name == "ksupport" and not 0.0 < self.delta <= 1.0:
            raise ValueError(f"ksupport target delta must lie in (0, 1], got {self.delta}")

    @classmethod
    def parse(cls, text):
        """Parse ``heuristic``, ``greedy``, ``top-s``, ``ksupport:<delta>``,
        ``brute`` or ``external:<name>``."""
        if isinstance(text, OracleKind):
            return text
        head, _, arg = str(text).strip().partition(":")
        if head == "ksupport":
            if not arg:
                raise ValueError("ksupport oracle needs a target delta, e.g. ksupport:0.5")
            return cls("ksupport", delta=float(arg))
        if head == "external":
            if not arg:
                raise ValueError("external oracle needs a name, e.g. external:head")
            return cls("external", external=arg)
        if arg:
            raise ValueError(f"oracle {head!r} takes no argument")
        return cls(head)

    def __str__(self):
        if self.name == "ksupport":
            return f"ksupport:{self.delta:g}"
        if self.name == "external":
            return f"external:{self.external}"
        return self.name

    def guarantee(self, model=None, s=None):
        """The delta this oracle promises, where it is known in advance."""
        if self.name in ("heuristic", "greedy"):
            return heuristic_delta(model.s, model.g)
        if self.name == "ksupport":
            return self.delta
        if self.name == "external":
            return None
        return 1.0


def make_oracle(kind, model=None, s=None, rng=None):
    """Bind an oracle kind to its model; returns ``fn(z) -> DmoResult``.

    ``heuristic``, ``greedy``, ``brute`` and ``external`` need a graph model; ``top-s``
    and ``ksupport`` only need the sparsity ``s`` (taken from the model when
    not given).
    """
    kind = OracleKind.parse(kind)
    if s is None and model is not None:
        s = model.s
    if kind.name in ("heuristic", "greedy", "brute", "external") and model is None:
        raise ValueError(f"oracle {kind} needs a graph model")
    if kind.name in ("top-s", "ksupport") and s is None:
        raise ValueError(f"oracle {kind} needs a sparsity level")
    if kind.name == "heuristic":
        return lambda z: heuristic_dmo(z, model)
    if kind.name == "greedy":
        return lambda z: greedy_dmo(z, model)
    if kind.name == "top-s":
        return lambda z: top_s_dmo(z, s)
    if kind.name == "ksupport":
        rng = rng if rng is not None else Stream(0)
        return lambda z: degraded_ksupport_dmo(z, s, kind.delta, rng)
    if kind.name == "brute":
        return lambda z: brute_force_dmo(z, model)
    try:
        fn = _EXTERNAL[kind.external]
    except KeyError:
        raise ValueError(f"no external oracle registered as {kind.external!r}") from None
    return lambda z: fn(z, model)


# --- property battery ------------------------------------------------------

def random_instance(rng, min_d=4, max_d=12):
    """Random ``(model, z)`` pair for oracle checks.

    Graphs are paths, grids or Erdos-Renyi graphs; about a quarter of the
    vectors are rounded to one decimal so that ties occur.
    """
    from .graph import Graph, SubgraphModel
    d = min_d + rng.below(max_d - min_d + 1)
    kind = rng.below(3)
    if kind == 0:
        graph = Graph.path(d)
    elif kind == 1:
        width = 2 + rng.below(3)
        height = max(1, d // width)
        graph = Graph.grid(width, height)
    else:
        p = 0.15 + 0.5 * float(rng.uniform(1)[0])
        u = rng.uniform(d * (d - 1) // 2)
        pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
        graph = Graph(d, tuple(e for e, w in zip(pairs, u) if w < p))
    d = graph.d
    s = 1 + rng.below(d)
    g = 1 + rng.below(s)
    z = rng.normal(d)
    if rng.below(4) == 0:
        z = np.round(z, 1)
    return SubgraphModel(graph, s, g, C=0.5 + float(rng.uniform(1)[0])), z


def dmo_battery(n_instances=1000, seed=0, oracle="heuristic", max_d=12):
    """Check the DMO inequality and the IPO transfer on random instances.

    Returns ``(n_checked, dmo_violations, ipo_violations)``.
    """
    rng = Stream(seed, 0)
    dmo_bad = ipo_bad = checked = 0
    for _ in range(n_instances):
        model, z = random_instance(rng, max_d=max_d)
        fn = make_oracle(oracle, model=model, rng=Stream(seed, 4))
        res = fn(z)
        if not satisfies_dmo(z, res, model):
            dmo_bad += 1
        _, best = brute_force_best_support(z, model)
        if best > 0:
            v = support_to_vertex(z, res.support, model.C)
            # the IPO statement is about the vector -z: <-z, v> <= delta * min <-z, s>
            if not verify_ipo(-z, v, res.delta_guarantee, model):
                ipo_bad += 1
        checked += 1
    return checked, dmo_bad, ipo_bad
