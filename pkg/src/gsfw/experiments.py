"""Graph-structured linear sensing: problem generation and experiment runs.

Random draws all come from :class:`gsfw.rng.Stream` keyed by the trial seed
and a fixed stream id (matrix, noise, signal, oracle), so a trial is
reproducible from its seed alone.  The sensing matrix is drawn row-major
from the ``MATRIX`` stream with entries ``N(0, 1/n)`` (standard deviation
``1/sqrt(n)``, so columns have unit expected norm).

Configs are flat ``key = value`` files with ``[section]`` headers::

    [problem]
    width = 32
    height = 32
    support_size = 50
    g = 1
    ratio = 2.5
    sigma = 0.0

    [run]
    trials = 20
    seed = 0
    max_iter = 100

    [solver DmoAccFw-I]
    oracle = heuristic
    L = 1

Solver sections are named ``[solver <name>]`` where ``<name>`` is one of
:data:`SOLVER_NAMES`.
"""
from concurrent.futures import ProcessPoolExecutor
import configparser
from dataclasses import dataclass, field, replace
import math
import os
from typing import Optional

import numpy as np

from .graph import (Graph, SubgraphModel, connected_components, is_member,
                    read_edge_list, support_of)
from .objectives import LeastSquares, estimate_L, load_matrix
from .oracles import make_oracle
from .rng import GENERATOR_NAME, MATRIX, NOISE, ORACLE, SIGNAL, Stream
from .solvers import (SolverConfig, cosamp_lite, gen_mp, iht, reference_optimum, run,
                      write_meta)
from .theory import fit_loglog_slope

SOLVER_NAMES = ("DmoFw-I", "DmoFw-II", "DmoAccFw-I", "DmoAccFw-II", "IHT", "GenMP", "CoSaMP-lite")


# --- problem generation ----------------------------------------------------

def gen_gaussian_matrix(n, d, seed):
    """``n x d`` matrix with i.i.d. ``N(0, 1/n)`` entries, drawn row-major."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    return Stream(seed, MATRIX).normal(n * d, scale=1.0 / math.sqrt(n)).reshape(n, d)


def gen_measurements(A, x, sigma, seed):
    """``y = A x + sigma * e`` with ``e ~ N(0, I_n)`` from the noise stream."""
    y = A @ x
    if sigma > 0:
        y = y + Stream(seed, NOISE).normal(A.shape[0], scale=sigma)
    return y


def _blob_sizes(total, g):
    base, extra = divmod(total, g)
    return [base + (1 if k < extra else 0) for k in range(g)]


def gen_grid_signal(width, height, support_size, g=1, seed=0, max_restarts=100):
    """Grid graph and a unit signal on ``g`` separated random blobs.

    Each blob starts at a random free node and grows by adding a uniformly
    random frontier node, never touching another blob, so the support has
    exactly ``g`` components.  Values are ``0.5 + U(0, 1)`` before
    normalisation.
    """
    graph = Graph.grid(width, height)
    d = graph.d
    if not 1 <= g <= support_size <= d:
        raise ValueError(f"need 1 <= g <= support_size <= {d}")
    rng = Stream(seed, SIGNAL)
    adj = graph.adjacency
    for _ in range(max_restarts):
        owner = np.full(d, -1)
        ok = True
        for b, size in enumerate(_blob_sizes(support_size, g)):
            blocked = owner >= 0
            for u in np.flatnonzero(owner >= 0):
                blocked[list(adj[u])] = True
            free = np.flatnonzero(~blocked)
            if free.size == 0:
                ok = False
                break
            start = int(free[rng.below(free.size)])
            owner[start] = b
            blob = [start]
            frontier = []
            while len(blob) < size:
                frontier = sorted({w for u in blob for w in adj[u]
                                   if owner[w] < 0 and all(owner[x] in (-1, b) for x in adj[w])})
                if not frontier:
                    ok = False
                    break
                new = frontier[rng.below(len(frontier))]
                owner[new] = b
                blob.append(new)
            if not ok:
                break
        if ok:
            sup = np.flatnonzero(owner >= 0)
            x = np.zeros(d)
            x[sup] = 0.5 + rng.uniform(sup.size)
            x /= np.linalg.norm(x)
            assert is_member(sup, SubgraphModel(graph, support_size, g))
            return graph, x
    raise ValueError(f"could not place {g} separated blobs of total size {support_size} "
                     f"on a {width}x{height} grid")


def gen_pm1_signal(d, k, seed):
    """Unit vector with ``k`` random nonzeros of random sign (equal magnitude)."""
    rng = Stream(seed, SIGNAL)
    sup = sorted(rng.permutation(d)[:k])
    x = np.zeros(d)
    x[sup] = rng.signs(k)
    return x / np.linalg.norm(x)


def load_grid_image(path, threshold=0.0):
    """Grid graph, unit signal and component count from an intensity matrix.

    Pixels with intensity above ``threshold`` form the support; the grid has
    the image's width and height with row-major node ids.
    """
    img = np.atleast_2d(load_matrix(path))
    height, width = img.shape
    graph = Graph.grid(width, height)
    x = np.where(img > threshold, img, 0.0).reshape(-1).astype(float)
    norm = np.linalg.norm(x)
    if norm == 0.0:
        raise ValueError(f"{path}: empty support above threshold {threshold}")
    x /= norm
    return graph, x, len(connected_components(graph, support_of(x)))


@dataclass
class SensingProblem:
    A: np.ndarray
    y: np.ndarray
    x_tilde_star: np.ndarray
    sigma: float
    model: Optional[SubgraphModel]
    seed: int
    s: int = 0

    def __post_init__(self):
        if not self.s:
            self.s = self.model.s
        if abs(np.linalg.norm(self.x_tilde_star) - 1.0) > 1e-12:
            raise ValueError("planted signal must have unit norm")

    @property
    def objective(self):
        return LeastSquares(self.A, self.y)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def f_star(self):
        """Closed-form optimum when it is known: 0 for a noiseless planted
        signal inside the feasible hull, otherwise None."""
        if self.sigma != 0 or self.model is None:
            return None
        C = self.model.C
        sup = support_of(self.x_tilde_star)
        if np.linalg.norm(self.x_tilde_star) <= C and is_member(sup, self.model):
            return 0.0
        return None


def n_measurements(ratio, support_size):
    return max(1, int(round(ratio * support_size)))


# --- configuration ---------------------------------------------------------

@dataclass
class SolverSpec:
    name: str
    oracle: str = "heuristic"
    L: Optional[float] = None
    delta: float = 1.0

    def __post_init__(self):
        if self.name not in SOLVER_NAMES:
            raise ValueError(f"unknown solver {self.name!r}; choose from {', '.join(SOLVER_NAMES)}")


@dataclass
class ExperimentConfig:
    name: str = "custom"
    width: int = 16
    height: int = 16
    graph_file: str = ""
    image_file: str = ""
    threshold: float = 0.0
    support_size: int = 20
    g: int = 1
    ratio: float = 2.5
    sigma: float = 0.0
    C: float = 1.0
    trials: int = 20
    seed: int = 0
    max_iter: int = 100
    solvers: list = field(default_factory=list)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.ratio > 0:
            raise ValueError("ratio must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not self.solvers:
            raise ValueError("config lists no solvers")


RECIPES = {
    "fig4-desk": """
[problem]
width = 32
height = 32
support_size = 50
g = 1
ratio = 2.5
sigma = 0.0

[run]
trials = 20
max_iter = 100

[solver DmoAccFw-I]
oracle = heuristic
L = 1

[solver DmoFw-I]
oracle = heuristic

[solver IHT]
oracle = heuristic

[solver GenMP]
oracle = heuristic

[solver CoSaMP-lite]
oracle = top-s
""",
    "fig3-desk": """
[problem]
width = 16
height = 16
support_size = 20
g = 1
ratio = 5.0
sigma = 0.0

[run]
trials = 20
max_iter = 200

[solver DmoAccFw-I]
oracle = greedy
L = 1

[solver DmoFw-I]
oracle = greedy
""",
}


def _opt_float(text):
    text = text.strip()
    if text.lower() in ("", "none", "estimate", "auto"):
        return None
    return float(text)


def parse_config(text, name="custom"):
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_string(text)
    prob = cp["problem"] if cp.has_section("problem") else {}
    runs = cp["run"] if cp.has_section("run") else {}
    solvers = []
    for section in cp.sections():
        head, _, sname = section.partition(" ")
        if head != "solver":
            continue
        sec = cp[section]
        solvers.append(SolverSpec(sname.strip(), oracle=sec.get("oracle", "heuristic"),
                                  L=_opt_float(sec.get("L", "")),
                                  delta=float(sec.get("delta", "1.0"))))
    known = {"width", "height", "graph_file", "image_file", "threshold", "support_size",
             "g", "ratio", "sigma", "C"}
    unknown = set(prob) - known
    unknown |= set(runs) - {"trials", "seed", "max_iter"}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    ints = {"width", "height", "support_size", "g", "trials", "seed", "max_iter"}
    fields = {}
    for sec in (prob, runs):
        for key in sec:
            val = sec[key]
            fields[key] = int(val) if key in ints else (val if key.endswith("_file") else float(val))
    return ExperimentConfig(name=name, solvers=solvers, **fields)


def load_config(spec):
    """A recipe name (see :data:`RECIPES`) or a path to a config file."""
    if spec in RECIPES:
        return parse_config(RECIPES[spec], name=spec)
    if not os.path.exists(spec):
        raise FileNotFoundError(f"no recipe or config file named {spec!r}; "
                                f"recipes: {', '.join(sorted(RECIPES))}")
    with open(spec) as fh:
        return parse_config(fh.read(), name=os.path.splitext(os.path.basename(spec))[0])


# --- running ---------------------------------------------------------------

def make_problem(config, trial_seed):
    """Fresh sensing problem for one trial."""
    if config.image_file:
        graph, x, n_comp = load_grid_image(config.image_file, config.threshold)
        size = len(support_of(x))
        g = max(config.g, n_comp)
    else:
        size, g = config.support_size, config.g
        graph, x = gen_grid_signal(config.width, config.height, size, g, trial_seed)
        if config.graph_file:
            graph = read_edge_list(config.graph_file)
            if graph.d != x.size:
                raise ValueError("graph file size does not match the grid signal")
    model = SubgraphModel(graph, s=size, g=g, C=config.C)
    n = n_measurements(config.ratio, size)
    A = gen_gaussian_matrix(n, graph.d, trial_seed)
    y = gen_measurements(A, x, config.sigma, trial_seed)
    return SensingProblem(A, y, x, config.sigma, model, trial_seed)


def run_solver(spec, problem, max_iter, seed, f_star=None, oracle=None):
    """One solver on one problem; returns its trace."""
    obj = problem.objective
    model = problem.model
    x_star = problem.x_tilde_star
    oracle_name = oracle or spec.oracle
    if spec.name.startswith("Dmo"):
        variant = "accfw" if spec.name.startswith("DmoAccFw") else "fw"
        cfg = SolverConfig(variant=variant, option=spec.name.rsplit("-", 1)[1],
                           delta=spec.delta, L=spec.L, C=model.C, max_iter=max_iter,
                           seed=seed, oracle=oracle_name)
        return run(cfg, obj, model, s=problem.s, x_star=x_star, f_star=f_star)
    if spec.name == "GenMP":
        fn = make_oracle(oracle_name, model=model, s=problem.s, rng=Stream(seed, ORACLE))
        return gen_mp(obj, fn, max_iter, L=spec.L, C=model.C, x_star=x_star, f_star=f_star)
    if spec.name == "IHT":
        fn = make_oracle(oracle_name, model=model, s=problem.s, rng=Stream(seed, ORACLE))
        return iht(obj, model, L=spec.L, T=max_iter, thresholding=fn, s=problem.s,
                   x_star=x_star, f_star=f_star)
    return cosamp_lite(obj, problem.s, max_iter, x_star=x_star, f_star=f_star)


def _run_trial(args):
    config, index, oracle = args
    seed = config.seed + index
    out = {"index": index, "seed": seed, "traces": {}, "errors": {}}
    try:
        problem = make_problem(config, seed)
    except Exception as exc:  # recorded, not fatal
        out["errors"]["problem"] = f"{type(exc).__name__}: {exc}"
        return out
    f_star = problem.f_star
    for spec in config.solvers:
        try:
            out["traces"][spec.name] = run_solver(spec, problem, config.max_iter, seed,
                                                  f_star=f_star, oracle=oracle)
        except Exception as exc:
            out["errors"][spec.name] = f"{type(exc).__name__}: {exc}"
    if f_star is None and out["traces"]:
        # no closed form: measure h against the best value any solver reached
        f_ref = min(float(tr.f.min()) for tr in out["traces"].values())
        for tr in out["traces"].values():
            tr.h = tr.f - f_ref
            tr.meta["f_ref"] = "best-found"
    return out


@dataclass
class SummaryRow:
    solver: str
    n_ok: int
    n_failed: int
    median_h: float
    iqr_h: float
    median_err: float
    iqr_err: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    verdicts: dict
    final_h: dict
    final_err: dict
    errors: dict
    traces: dict

    def row(self, solver):
        for r in self.rows:
            if r.solver == solver:
                return r
        raise KeyError(solver)


def _median_iqr(values):
    vals = np.asarray([v for v in values if np.isfinite(v)], dtype=float)
    if vals.size == 0:
        return math.nan, math.nan
    q1, med, q3 = np.percentile(vals, [25, 50, 75])
    return float(med), float(q3 - q1)


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def summarize(config, trials):
    final_h = {s.name: [] for s in config.solvers}
    final_err = {s.name: [] for s in config.solvers}
    errors = {}
    traces = {}
    for tr in trials:
        for name, err in tr["errors"].items():
            errors[(tr["index"], name)] = err
        for name, trace in tr["traces"].items():
            traces[(tr["index"], name)] = trace
    for spec in config.solvers:
        for tr in trials:
            trace = tr["traces"].get(spec.name)
            final_h[spec.name].append(float(trace.h[-1]) if trace is not None else math.nan)
            final_err[spec.name].append(float(trace.est_err[-1]) if trace is not None else math.nan)
    rows = []
    for spec in config.solvers:
        ok = sum(np.isfinite(v) for v in final_h[spec.name])
        mh, ih = _median_iqr(final_h[spec.name])
        me, ie = _median_iqr(final_err[spec.name])
        rows.append(SummaryRow(spec.name, int(ok), len(trials) - int(ok), mh, ih, me, ie))
    verdicts = {}
    if "DmoAccFw-I" in final_h and "DmoFw-I" in final_h:
        acc, fw = np.array(final_h["DmoAccFw-I"]), np.array(final_h["DmoFw-I"])
        both = np.isfinite(acc) & np.isfinite(fw)
        verdicts["accfw_le_fw_trials"] = int(np.sum(acc[both] <= fw[both]))
        verdicts["compared_trials"] = int(both.sum())
    if "DmoAccFw-I" in final_h:
        lo = min(20, config.max_iter)
        slopes = []
        for tr in trials:
            trace = tr["traces"].get("DmoAccFw-I")
            if trace is not None:
                keep = trace.t >= max(lo, 1)
                slopes.append(fit_loglog_slope(trace.t[keep], trace.h[keep]))
        verdicts["accfw_median_slope"] = _median_iqr(slopes)[0]
    return ExperimentResult(config, rows, verdicts, final_h, final_err, errors, traces)


def run_experiment(config, out=None, oracle=None, jobs=1):
    """Run every trial and solver; optionally write traces and a summary.

    Trial ``k`` uses seed ``config.seed + k``.  Output files are identical
    whatever the number of worker processes.
    """
    tasks = [(config, k, oracle) for k in range(config.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trials = list(pool.map(_run_trial, tasks))
    else:
        trials = [_run_trial(t) for t in tasks]
    trials.sort(key=lambda tr: tr["index"])
    result = summarize(config, trials)
    if out is not None:
        write_result(result, out, oracle)
    return result


def write_result(result, out, oracle=None):
    os.makedirs(out, exist_ok=True)
    config = result.config
    for (index, name), trace in sorted(result.traces.items()):
        trace.to_csv(os.path.join(out, f"trial{index:03d}_{name}.csv"))
    with open(os.path.join(out, "summary.csv"), "w") as fh:
        fh.write("solver,n_ok,n_failed,median_h,iqr_h,median_err,iqr_err\n")
        for r in result.rows:
            fh.write(",".join(_fmt(v) for v in (r.solver, r.n_ok, r.n_failed, r.median_h,
                                                 r.iqr_h, r.median_err, r.iqr_err)) + "\n")
    with open(os.path.join(out, "timings.csv"), "w") as fh:
        fh.write("trial,solver,wall_time\n")
        for (index, name), trace in sorted(result.traces.items()):
            fh.write(f"{index},{name},{trace.wall_time:.6f}\n")
    meta = {"config": config.name, "seed": config.seed, "trials": config.trials,
            "max_iter": config.max_iter, "ratio": config.ratio, "sigma": config.sigma,
            "support_size": config.support_size, "g": config.g, "C": config.C,
            "grid": f"{config.width}x{config.height}", "rng": GENERATOR_NAME,
            "solvers": ";".join(f"{s.name}[oracle={oracle or s.oracle},L={s.L or 'estimate'}]"
                                for s in config.solvers),
            "failures": len(result.errors)}
    for key, val in sorted(result.verdicts.items()):
        meta[f"verdict.{key}"] = _fmt(val)
    write_meta(os.path.join(out, "meta.txt"), meta)
    if result.errors:
        with open(os.path.join(out, "errors.txt"), "w") as fh:
            for (index, name), err in sorted(result.errors.items()):
                fh.write(f"trial {index} {name}: {err}\n")


def ratio_sweep(config, ratios=(2.0, 3.0, 4.0, 5.0, 6.0), solver="DmoAccFw-I"):
    """Median final estimation error of ``solver`` for each sampling ratio.

    Returns ``(medians, inversions)`` where ``inversions`` counts adjacent
    ratio pairs whose median error increases.
    """
    spec = [s for s in config.solvers if s.name == solver]
    if not spec:
        spec = [SolverSpec(solver)]
    medians = []
    for r in ratios:
        cfg = replace(config, ratio=float(r), solvers=spec)
        res = run_experiment(cfg)
        medians.append(res.row(solver).median_err)
    inversions = sum(1 for a, b in zip(medians, medians[1:]) if b > a)
    return medians, inversions


# --- k-support-norm figure -------------------------------------------------

@dataclass
class KSupportResult:
    deltas: tuple
    seeds: list
    final_f: dict
    final_h: dict
    grad_first: dict
    grad_last: dict
    traces: dict

    def wins(self, better=1.0, worse=0.1):
        """Seeds where ``better`` ends strictly below ``worse``."""
        return sum(1 for a, b in zip(self.final_f[better], self.final_f[worse]) if a < b)


def make_ksupport_problem(seed, n=200, d=500, k=50, s=5, C=1.0):
    x = gen_pm1_signal(d, k, seed)
    A = gen_gaussian_matrix(n, d, seed)
    y = A @ x
    return SensingProblem(A, y, x, 0.0, None, seed, s=s), C


def ksupport_fig(seeds=range(20), deltas=(1.0, 0.5, 0.3, 0.1), T=1000, n=200, d=500,
                 k=50, s=5, C=1.0, reference_iter=0, out=None):
    """DMO-FW-I with the degraded cardinality oracle at several ``delta``.

    Final objective values are compared directly (the optimum is shared by
    all ``delta`` on a seed).  With ``reference_iter > 0`` the primal error
    column is measured against an exact-oracle reference run, otherwise
    against the best value any run reached on that seed.
    """
    seeds = list(seeds)
    deltas = tuple(float(v) for v in deltas)
    res = KSupportResult(deltas, seeds, {v: [] for v in deltas}, {v: [] for v in deltas},
                         {v: [] for v in deltas}, {v: [] for v in deltas}, {})
    for seed in seeds:
        problem, C_ = make_ksupport_problem(seed, n, d, k, s, C)
        obj = problem.objective
        L = estimate_L(obj, tol=1e-6, max_iter=20000)
        runs = {}
        for delta in deltas:
            cfg = SolverConfig(variant="fw", option="I", delta=delta, L=L, C=C_, max_iter=T,
                               seed=seed, oracle=f"ksupport:{delta:g}")
            runs[delta] = run(cfg, obj, s=s, x_star=problem.x_tilde_star)
        f_ref = min(float(tr.f.min()) for tr in runs.values())
        if reference_iter:
            f_ref = min(f_ref, reference_optimum(obj, s=s, C=C_, n_iter=reference_iter, L=L)[0])
        for delta, tr in runs.items():
            tr.h = tr.f - f_ref
            res.final_f[delta].append(float(tr.f[-1]))
            res.final_h[delta].append(float(tr.h[-1]))
            res.grad_first[delta].append(float(tr.grad_inf[1]))
            res.grad_last[delta].append(float(tr.grad_inf[-1]))
            res.traces[(seed, delta)] = tr
    if out is not None:
        os.makedirs(out, exist_ok=True)
        for (seed, delta), tr in sorted(res.traces.items()):
            tr.to_csv(os.path.join(out, f"seed{seed:03d}_delta{delta:g}.csv"))
        with open(os.path.join(out, "summary.csv"), "w") as fh:
            fh.write("delta,median_final_f,median_final_h,median_grad_first,median_grad_last\n")
            for delta in deltas:
                fh.write(",".join(_fmt(v) for v in (
                    delta, float(np.median(res.final_f[delta])),
                    float(np.median(res.final_h[delta])),
                    float(np.median(res.grad_first[delta])),
                    float(np.median(res.grad_last[delta])))) + "\n")
        write_meta(os.path.join(out, "meta.txt"),
                   {"experiment": "ksupport-fig", "n": n, "d": d, "k": k, "s": s, "C": C, "T": T,
                    "deltas": ";".join(f"{v:g}" for v in deltas), "seeds": len(seeds),
                    "rng": GENERATOR_NAME})
    return res
