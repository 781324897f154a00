"""Instances on which gap-based approximate LMOs fail but the DMO holds.

Grid instance: ``f(x) = 0.5 x.x - x.b`` with ``b = [1,1,1,1,tau,...]`` on a
grid whose central 2x2 block is relabelled to nodes 0..3.  With ``s=4, g=1,
C=1`` the optimum is ``x* = [1/2]*4 + [0,...]`` and the exact Frank-Wolfe gap
at ``x*`` is 0.  A vertex whose support has one wrong node leaves the gap
error ``1 - sqrt(3/4 + tau^2)`` (never decaying) and makes the approximate gap
negative, yet its support is a DMO answer with
``delta = 3/4 + tau^2``.

Wide instance: a 30-node grid with gradient ``[1,1,1,1,tau,...]``; the exact
LMO value is ``-2``, the best support missing a 1-entry gives
``-sqrt(3 + tau^2)``, and for a unit probe point the multiplicative gap
condition has ``A > 0`` but ``B < 0``.

Gaps use the positive convention ``g(x) = <grad f(x), x - v>``.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .graph import Graph, SubgraphModel, brute_force_best_support, is_member
from .objectives import ShiftedQuadratic
from .oracles import heuristic_dmo, heuristic_delta, support_to_vertex

DMO_CHECK_TOL = 1e-12


@dataclass
class AdversarialInstance:
    graph: Graph
    model: SubgraphModel
    objective: ShiftedQuadratic
    tau: float
    x_star: np.ndarray
    vbar_support: tuple
    x_t: np.ndarray = None
    meta: dict = field(default_factory=dict)

    @property
    def optimal_support(self):
        return (0, 1, 2, 3)


def _block_order(width, height):
    """Node order putting the central 2x2 block first, then an outside
    neighbour of the block's first node, then everything else ascending."""
    r0, c0 = (height - 1) // 2, (width - 1) // 2
    block = [r0 * width + c0, r0 * width + c0 + 1,
             (r0 + 1) * width + c0, (r0 + 1) * width + c0 + 1]
    grid = Graph.grid(width, height)
    outside = [w for w in grid.adjacency[block[0]] if w not in block]
    rest = [k for k in range(width * height) if k not in block and k != outside[0]]
    return grid, block, [*block, outside[0], *rest]


def _relabelled_grid(width, height):
    if width < 2 or height < 2 or width * height < 5:
        raise ValueError("grid must have a 2x2 block and at least one more node")
    grid, block, order = _block_order(width, height)
    return grid.relabel(order), block, order


def build_grid_instance(tau=0.25, width=4, height=4):
    """The grid instance; node 4 is an outside neighbour of centre node 0."""
    if not 0.0 < tau < 0.5:
        raise ValueError(f"tau must lie in (0, 1/2), got {tau}")
    graph, block, order = _relabelled_grid(width, height)
    d = graph.d
    b = np.full(d, float(tau))
    b[:4] = 1.0
    x_star = np.zeros(d)
    x_star[:4] = 0.5
    model = SubgraphModel(graph, s=4, g=1, C=1.0)
    vbar_support = (0, 1, 2, 4)
    assert is_member(vbar_support, model)
    meta = {"grid": f"{width}x{height}", "centre_nodes": tuple(block),
            "node_order": tuple(order)}
    return AdversarialInstance(graph, model, ShiftedQuadratic(b), float(tau), x_star,
                               vbar_support, meta=meta)


def _vertex(inst, support):
    z = -inst.objective.gradient(inst.x_star)
    return support_to_vertex(z, support, inst.model.C)


def exact_vertex(inst, x=None):
    """Exact LMO vertex at ``x`` (default ``x*``) by full enumeration."""
    x = inst.x_star if x is None else x
    z = -inst.objective.gradient(x)
    sup, _ = brute_force_best_support(z, inst.model)
    return support_to_vertex(z, sup, inst.model.C)


def fw_gap(inst, v, x=None):
    x = inst.x_star if x is None else x
    return float(inst.objective.gradient(x) @ (x - v))


def gap_additive_violation(inst, vbar=None):
    """``g(x*) - gbar(x*)`` for the approximate vertex ``vbar``.

    Any positive value shows the additive error cannot decay to zero.  The
    default ``vbar`` is the unit vertex on the one-wrong support.
    """
    vbar = _vertex(inst, inst.vbar_support) if vbar is None else vbar
    return fw_gap(inst, exact_vertex(inst)) - fw_gap(inst, vbar)


def gap_multiplicative_violation(inst, vbar=None):
    """``gbar(x*)``; a negative value means no positive multiplicative factor
    can relate it to the exact gap."""
    vbar = _vertex(inst, inst.vbar_support) if vbar is None else vbar
    return fw_gap(inst, vbar)


def dmo_ratio(inst, support, x=None):
    """``||z_S|| / max_S' ||z_S'||`` for ``z = -grad f(x)``."""
    x = inst.x_star if x is None else x
    z = -inst.objective.gradient(x)
    _, best = brute_force_best_support(z, inst.model)
    return math.sqrt(float(np.sum(z[list(support)] ** 2))) / best


def closed_forms(tau):
    r = math.sqrt(0.75 + tau * tau)
    return {"additive": 1.0 - r, "multiplicative": r - 1.0, "delta": 0.75 + tau * tau}


def certify(tau, width=4, height=4, tol=DMO_CHECK_TOL):
    """One certification row for the grid instance at ``tau``."""
    inst = build_grid_instance(tau, width, height)
    add = gap_additive_violation(inst)
    mult = gap_multiplicative_violation(inst)
    ratio = dmo_ratio(inst, inst.vbar_support)
    cf = closed_forms(tau)
    best_sup, _ = brute_force_best_support(-inst.objective.gradient(inst.x_star), inst.model)
    ok = (add > 0 and mult < 0 and ratio >= cf["delta"] - tol
          and abs(add - cf["additive"]) <= tol and abs(mult - cf["multiplicative"]) <= tol
          and best_sup == inst.optimal_support
          and abs(fw_gap(inst, exact_vertex(inst))) <= tol)
    return {"tau": tau, "additive": add, "multiplicative": mult, "dmo_ratio": ratio,
            "dmo_delta": cf["delta"], "ok": bool(ok)}


def tau_grid(n=50, upper=0.5):
    """``n`` equally spaced points strictly inside ``(0, upper)``."""
    return [upper * k / (n + 1) for k in range(1, n + 1)]


def certification_table(taus=None, width=4, height=4):
    taus = tau_grid() if taus is None else taus
    return [certify(t, width, height) for t in taus]


def build_wide_instance(tau=0.5, width=6, height=5):
    """The 30-node instance and its report.

    Returns ``(instance, report)`` where the report holds the exact LMO value
    ``optimal``, the best value over supports other than the optimal one
    ``best_wrong``, the probe values ``A`` and ``B``, the heuristic DMO's
    achieved ratio and the best-wrong ratio.

    With ``d = 30`` full enumeration is out of reach, so the values come from
    the cardinality relaxation: the top-4 entries of ``z`` are the 1-block,
    which is connected (so it is the exact optimum), and any other 4-set has
    at most three 1-entries, a bound attained by the connected set
    ``{0, 1, 2, 4}``.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    graph, block, order = _relabelled_grid(width, height)
    d = graph.d
    model = SubgraphModel(graph, s=4, g=1, C=1.0)
    grad = np.full(d, float(tau))
    grad[:4] = 1.0
    x_t = np.zeros(d)
    x_t[:4] = [-1.0, -1.0, -1.0, -tau]
    x_t /= math.sqrt(3.0 + tau * tau)
    b = x_t - grad
    obj = ShiftedQuadratic(b)
    z = -obj.gradient(x_t)

    top = tuple(sorted(int(i) for i in np.argsort(-np.abs(z), kind="stable")[:4]))
    assert top == (0, 1, 2, 3) and is_member(top, model)
    optimal = -model.C * math.sqrt(float(np.sum(z[list(top)] ** 2)))
    wrong = (0, 1, 2, 4)
    assert is_member(wrong, model)
    v_wrong = support_to_vertex(z, wrong, model.C)
    best_wrong = float(grad @ v_wrong)
    # any 4-set other than the block holds at most three 1-entries
    wrong_cap = -math.sqrt(3.0 + tau * tau)
    assert best_wrong <= wrong_cap + 1e-12

    xg = float(x_t @ grad)
    A = best_wrong - xg
    B = optimal - xg
    heur = heuristic_dmo(z, model)
    report = {
        "tau": tau, "d": d, "optimal": optimal, "best_wrong": best_wrong,
        "xgrad": xg, "A": A, "B": B,
        "best_wrong_ratio": best_wrong / optimal,
        "heuristic_support": heur.support,
        "heuristic_ratio": heur.dual_value / (-optimal),
        "heuristic_guarantee": heuristic_delta(model.s, model.g),
        "additive_gap_error": best_wrong - optimal,
    }
    inst = AdversarialInstance(graph, model, obj, float(tau), x_star=None,
                               vbar_support=wrong, x_t=x_t,
                               meta={"grid": f"{width}x{height}", "centre_nodes": tuple(block),
                                     "node_order": tuple(order)})
    return inst, report
