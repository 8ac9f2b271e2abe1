"""
Bellman operator, value iteration and a brute-force oracle.

Every backup maximises ``F(k, h, k', h') + beta * V(k', h')`` over the
feasible box ``[0, k_max] x [0, h_max]``. The box is first scanned on a
lattice (``inner_points`` values of ``k'`` times ``inner_points + 4`` of
``h'``) and the best lattice point is then refined inside its neighbouring
lattice cells, either by nested golden-section search (``h'`` outside,
``k'`` inside) or by repeated local lattice zooms. The refined point only
replaces the lattice point when it is strictly better, and lattice ties go
to the smaller ``k'`` and then the smaller ``h'``.

Continuation values come from :mod:`lucas_uzawa.fields`, so they inherit
the split-cell ``-inf`` rule and the scaling extension outside the grid.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from . import fields as fld
from .fields import GridSpec, PolicyField, RatioField, ValueField
from .primitives import Technology
from .utility import utility_of_consumption
from .verify import compute_constants

GOLDEN_SECTION = "golden-section-nested"
GRID_REFINEMENT = "grid-refinement"
INNER_SEARCHES = (GOLDEN_SECTION, GRID_REFINEMENT)
HOMOGENEITY_LAMBDAS = (0.5, 0.8)

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SolveOptions:
    """
    Numerical settings for value iteration.

    Parameters
    ----------
    tol : float
        Sup-norm stopping threshold on nodes finite in both iterates.
    max_iterations : int
        Iteration cap; hitting it is reported, not raised.
    inner_search : {"golden-section-nested", "grid-refinement"}
        Local refinement after the lattice scan.
    inner_points : int
        Lattice resolution along each coordinate of the feasible box.
    golden_iterations : int
        Golden-section steps per coordinate (zoom levels use a sixth of it).
    value_floor : float
        Lower clamp applied when values are written out; never used while
        maximising.
    edge : {"scale", "clip"}
        Treatment of continuation points outside the grid.
    """

    tol: float = 1e-6
    max_iterations: int = 500
    inner_search: str = GOLDEN_SECTION
    inner_points: int = 41
    golden_iterations: int = 24
    value_floor: float = -np.inf
    edge: str = fld.EDGE_SCALE

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be a positive integer")
        if self.inner_search not in INNER_SEARCHES:
            raise ValueError(f"unknown inner search {self.inner_search!r}")
        if int(self.inner_points) < 3:
            raise ValueError("inner_points must be at least 3")
        if int(self.golden_iterations) < 1:
            raise ValueError("golden_iterations must be positive")
        if self.edge not in (fld.EDGE_SCALE, fld.EDGE_CLIP):
            raise ValueError(f"unknown edge rule {self.edge!r}")


@dataclass
class SolveResult:
    value: ValueField
    policy: PolicyField
    iterations: int
    final_sup_change: float
    max_bellman_residual: float
    homogeneity_residual: float
    converged: bool
    tol: float
    clip_events: int = 0
    hull_exits: int = 0
    first_step_sign: str = "zero"
    sup_change_monotone: bool = True
    nodewise_monotone: bool = True
    nonfinite_nodes: list = field(default_factory=list)
    history: list = field(default_factory=list)
    ratio_value: RatioField = None
    transformed: bool = False
    value_floor: float = -np.inf

    def diagnostics(self):
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "tol": self.tol,
            "final_sup_change": self.final_sup_change,
            "max_bellman_residual": self.max_bellman_residual,
            "homogeneity_residual": self.homogeneity_residual,
            "clip_events": self.clip_events,
            "hull_exits": self.hull_exits,
            "first_step_sign": self.first_step_sign,
            "sup_change_monotone": self.sup_change_monotone,
            "nodewise_monotone": self.nodewise_monotone,
            "nonfinite_nodes": [list(map(float, s)) for s in self.nonfinite_nodes],
            "transformed": self.transformed,
            "edge": self.value.edge,
            "interpolation": self.value.interpolation,
            "horizon_weight": self.value.weight,
            "sup_change_history": self.history,
        }

    def diagnostics_json(self):
        return json.dumps(self.diagnostics(), indent=2, sort_keys=True)

    def node_rows(self):
        """One row per node: ``k, h, V, k', h', c, u, v``."""
        K, H = self.value.grid.mesh()
        V = np.maximum(self.value.values, self.value_floor)
        pol = self.policy
        cols = (K, H, V, pol.k_next, pol.h_next, pol.consumption,
                pol.market_time, pol.study_time)
        return [tuple(float(c.flat[i]) for c in cols) for i in range(K.size)]


# ------------------------------------------------------------------ backups

def _continuation(grid, tech, theta, edge):
    """``(plan_fn, eval_fn)`` pair for a 2-D value field on ``grid``."""
    def plan_fn(kn, hn):
        return fld.make_plan(grid, kn, hn, tech.scale_power, edge)

    def eval_fn(plan, values, weight):
        return fld.apply_plan(plan, values, theta, weight)

    return plan_fn, eval_fn


def _ratio_continuation(ratio_nodes, theta):
    def plan_fn(kn, hn):
        return fld.make_ratio_plan(ratio_nodes, kn, hn)

    def eval_fn(plan, values, weight):
        return fld.apply_ratio_plan(plan, values, theta, weight)

    return plan_fn, eval_fn


def _h_lattice(tech, h, points):
    floor = tech.h_floor(h)[:, None]
    top = tech.h_max(h)[:, None]
    below = floor * np.array([0.0, 1.0 / 3.0, 2.0 / 3.0])
    above = floor + (top - floor) * np.linspace(0.0, 1.0, points + 1)
    return np.concatenate([below, above], axis=1)


def _golden(fun, a, b, iterations):
    """Vectorised golden-section maximisation on ``[a, b]``.

    ``fun(x)`` returns ``(value, aux)``; the best point evaluated is
    returned with its value and aux. Ties keep the left part of the bracket.
    """
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    (fc, ac), (fd, ad) = fun(c), fun(d)
    right = fd > fc
    best_x, best_f, best_a = np.where(right, d, c), np.maximum(fc, fd), np.where(right, ad, ac)
    for _ in range(iterations):
        left = fc >= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - _INV_PHI * (b - a)
        new_d = a + _INV_PHI * (b - a)
        x = np.where(left, new_c, new_d)
        fx, ax = fun(x)
        c, d = np.where(left, new_c, d), np.where(left, c, new_d)
        fc, fd = np.where(left, fx, fd), np.where(left, fc, fx)
        better = fx > best_f
        best_x = np.where(better, x, best_x)
        best_f = np.where(better, fx, best_f)
        best_a = np.where(better, ax, best_a)
    return best_x, best_f, best_a


class _Backup:
    """Fixed per-node lattice data, reused across iterations."""

    def __init__(self, tech, k, h, plan_fn, eval_fn, options, lattice=None):
        self.tech = tech
        self.beta = tech.params.beta
        self.k = np.asarray(k, dtype=float).ravel()
        self.h = np.asarray(h, dtype=float).ravel()
        self.plan_fn = plan_fn
        self.eval_fn = eval_fn
        self.options = options
        if lattice is None:
            p = int(options.inner_points)
            kmax = tech.k_max(self.k, self.h)
            k_lat = kmax[:, None] * np.linspace(0.0, 1.0, p)[None, :]
            h_lat = _h_lattice(tech, self.h, p)
        else:
            k_lat, h_lat = lattice
        self.k_lat, self.h_lat = k_lat, h_lat
        kk = np.broadcast_to(k_lat[:, :, None], k_lat.shape + (h_lat.shape[1],))
        hh = np.broadcast_to(h_lat[:, None, :], kk.shape)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            self.F = tech.ret(self.k[:, None, None], self.h[:, None, None], kk, hh)
        self.plan = plan_fn(kk, hh)
        self.refine = lattice is None

    def objective(self, values, weight):
        def fun(kn, hn):
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                f = self.tech.ret(self.k, self.h, kn, hn)
            return f + self.beta * self.eval_fn(self.plan_fn(kn, hn), values, weight)
        return fun

    def __call__(self, values, weight):
        n = self.k.size
        cont = self.eval_fn(self.plan, values, weight)
        obj = (self.F + self.beta * cont).reshape(n, -1)
        flat = np.argmax(obj, axis=1)
        best = obj[np.arange(n), flat]
        nq = self.h_lat.shape[1]
        ip, iq = np.divmod(flat, nq)
        rows = np.arange(n)
        kn = self.k_lat[rows, ip]
        hn = self.h_lat[rows, iq]
        if self.refine:
            kn, hn, best = self._refine(values, weight, ip, iq, kn, hn, best)
        return best, kn, hn

    def _bracket(self, lat, idx):
        rows = np.arange(lat.shape[0])
        lo = lat[rows, np.maximum(idx - 1, 0)]
        hi = lat[rows, np.minimum(idx + 1, lat.shape[1] - 1)]
        return lo, hi

    def _refine(self, values, weight, ip, iq, kn, hn, best):
        fun = self.objective(values, weight)
        ka, kb = self._bracket(self.k_lat, ip)
        ha, hb = self._bracket(self.h_lat, iq)
        if self.options.inner_search == GOLDEN_SECTION:
            rk, rh, rf = self._nested_golden(fun, ka, kb, ha, hb)
        else:
            rk, rh, rf = self._zoom(fun, ka, kb, ha, hb)
        better = rf > best
        return (np.where(better, rk, kn), np.where(better, rh, hn),
                np.where(better, rf, best))

    def _nested_golden(self, fun, ka, kb, ha, hb):
        g = int(self.options.golden_iterations)

        def inner(hn):
            kx, fx, _ = _golden(lambda kq: (fun(kq, hn), kq), ka, kb, g)
            return fx, kx

        hx, fx, kx = _golden(inner, ha, hb, g)
        return kx, hx, fx

    def _zoom(self, fun, ka, kb, ha, hb):
        m = 11
        levels = max(1, int(self.options.golden_iterations) // 6)
        grid = np.linspace(0.0, 1.0, m)
        best_f = np.full(ka.shape, -np.inf)
        best_k, best_h = ka.copy(), ha.copy()
        for _ in range(levels):
            kq = ka[:, None] + (kb - ka)[:, None] * grid
            hq = ha[:, None] + (hb - ha)[:, None] * grid
            kk = np.repeat(kq, m, axis=1)
            hh = np.tile(hq, (1, m))
            vals = np.stack([fun(kk[:, j], hh[:, j]) for j in range(m * m)], axis=1)
            j = np.argmax(vals, axis=1)
            rows = np.arange(ka.size)
            fj = vals[rows, j]
            better = fj > best_f
            best_k = np.where(better, kk[rows, j], best_k)
            best_h = np.where(better, hh[rows, j], best_h)
            best_f = np.where(better, fj, best_f)
            dk = (kb - ka) / (m - 1)
            dh = (hb - ha) / (m - 1)
            ka, kb = np.maximum(best_k - dk, ka), np.minimum(best_k + dk, kb)
            ha, hb = np.maximum(best_h - dh, ha), np.minimum(best_h + dh, hb)
        return best_k, best_h, best_f


def _policy(tech, grid, k_next, h_next, edge):
    K, H = grid.mesh()
    k_next = k_next.reshape(grid.shape)
    h_next = h_next.reshape(grid.shape)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        c = tech.consumption(K, H, k_next, h_next)
        u = tech.market_time(H, h_next)
    return PolicyField(grid, k_next, h_next, c, u, tech.scale_power, edge)


def _check_betacond(params):
    report = compute_constants(params)
    if not report.beta_zeta < 1.0:
        raise ValueError(f"betacond fails: beta*zeta = {report.beta_zeta!r} >= 1")


def backup_at(v, params, k, h, options=None, transformed=False):
    """
    Bellman backup of ``v`` at arbitrary states, axes included.

    Returns ``(values, k_next, h_next)`` as flat arrays.
    """
    options = options or SolveOptions()
    tech = Technology(params, transformed)
    plan_fn, eval_fn = _continuation(v.grid, tech, params.theta, v.edge)
    return _Backup(tech, k, h, plan_fn, eval_fn, options)(v.values, v.weight)


def bellman_backup(v, params, options=None, transformed=False):
    """
    Apply the Bellman operator once on the nodes of ``v``.

    Returns the new :class:`ValueField` (horizon weight ``1 + beta * m``)
    and the maximising :class:`PolicyField`. Nodes where no transition has
    finite value come back as ``-inf``.
    """
    _check_betacond(params)
    options = options or SolveOptions()
    tech = Technology(params, transformed)
    K, H = v.grid.mesh()
    vals, kn, hn = backup_at(v, params, K, H, options, transformed)
    new = ValueField(v.grid, vals.reshape(v.grid.shape), params.theta,
                     tech.scale_power, 1.0 + params.beta * v.weight, v.edge)
    return new, _policy(tech, v.grid, kn, hn, v.edge)


@dataclass
class _Trace:
    history: list = field(default_factory=list)
    low: list = field(default_factory=list)
    high: list = field(default_factory=list)

    def record(self, old, new):
        both = np.isfinite(old) & np.isfinite(new)
        diff = (new - old)[both] if np.any(both) else np.zeros(1)
        self.history.append(float(np.max(np.abs(diff))))
        self.low.append(float(np.min(diff)))
        self.high.append(float(np.max(diff)))
        return self.history[-1]

    def first_step_sign(self):
        lo, hi = self.low[0], self.high[0]
        if lo >= 0 and hi > 0:
            return "nonnegative"
        if hi <= 0 and lo < 0:
            return "nonpositive"
        return "zero" if lo == hi == 0 else "mixed"

    def sup_change_monotone(self):
        """Sup-norm changes nonincreasing from the second backup on."""
        rest = self.history[1:]
        return all(b <= a * (1 + 1e-9) for a, b in zip(rest, rest[1:]))

    def nodewise_monotone(self, slack=1e-12):
        """Every node moves in one direction from the second backup on."""
        rest = list(zip(self.low[1:], self.high[1:]))
        return all(lo >= -slack for lo, _ in rest) or all(hi <= slack for _, hi in rest)


def _iterate(backup, shape, params, options):
    values = np.zeros(shape)
    weight = 0.0
    trace = _Trace()
    converged = False
    for it in range(1, int(options.max_iterations) + 1):
        new, kn, hn = backup(values, weight)
        new = new.reshape(shape)
        change = trace.record(values, new)
        values, weight = new, 1.0 + params.beta * weight
        if change <= options.tol:
            converged = True
            break
    res, _, _ = backup(values, weight)
    res = res.reshape(shape)
    both = np.isfinite(res) & np.isfinite(values)
    residual = float(np.max(np.abs(res - values)[both])) if np.any(both) else 0.0
    return values, weight, kn, hn, it, converged, residual, trace


def homogeneity_residual(value, lambdas=HOMOGENEITY_LAMBDAS, interior=True):
    """
    Largest ``|V(lam k, lam**s h) - lam**theta V(k, h) - U(lam) m| / (1 + |V|)``
    over nodes and ``lambdas``, with ``V`` interpolated off the grid.
    """
    K, H = value.grid.mesh()
    mask = value.grid.interior_mask() if interior else np.ones(K.shape, dtype=bool)
    mask &= np.isfinite(value.values)
    if not np.any(mask):
        return 0.0
    V = value.values[mask]
    worst = 0.0
    for lam in lambdas:
        scaled = value(lam * K[mask], lam**value.scale_power * H[mask])
        expected = lam**value.theta * V + utility_of_consumption(lam, value.theta) * value.weight
        worst = max(worst, float(np.max(np.abs(scaled - expected) / (1.0 + np.abs(V)))))
    return worst


def _finish(value, policy, tech, it, converged, residual, trace, options, **extra):
    K, H = value.grid.mesh()
    bad = ~np.isfinite(value.values)
    plan = fld.make_plan(value.grid, policy.k_next, policy.h_next, tech.scale_power, value.edge)
    exits = ~value.grid.contains(policy.k_next, policy.h_next) & ~plan.on_axis
    return SolveResult(
        value=value,
        policy=policy,
        iterations=it,
        final_sup_change=trace.history[-1],
        max_bellman_residual=residual,
        homogeneity_residual=homogeneity_residual(value),
        converged=converged,
        tol=options.tol,
        clip_events=plan.clip_count,
        hull_exits=int(np.count_nonzero(exits)),
        first_step_sign=trace.first_step_sign(),
        sup_change_monotone=trace.sup_change_monotone(),
        nodewise_monotone=trace.nodewise_monotone(),
        nonfinite_nodes=list(zip(K[bad].tolist(), H[bad].tolist())),
        history=trace.history,
        value_floor=options.value_floor,
        **extra,
    )


def solve_value_iteration(params, grid, options=None, transformed=False):
    """
    Value iteration from ``v = 0`` on a 2-D grid.

    Parameters
    ----------
    params : ModelParams
    grid : GridSpec
        Nodes in ``(k, h)``, or in ``(k, hhat)`` when ``transformed``.
    options : SolveOptions, optional
    transformed : bool
        Solve the constant-returns model in ``hhat = h**rho``.

    Returns
    -------
    SolveResult
        ``converged`` is False when ``max_iterations`` ran out; the last
        sup-norm change is in ``final_sup_change``.

    Raises
    ------
    ValueError
        If ``beta * zeta >= 1``.
    """
    _check_betacond(params)
    options = options or SolveOptions()
    tech = Technology(params, transformed)
    plan_fn, eval_fn = _continuation(grid, tech, params.theta, options.edge)
    K, H = grid.mesh()
    backup = _Backup(tech, K, H, plan_fn, eval_fn, options)
    values, weight, kn, hn, it, converged, residual, trace = _iterate(
        backup, grid.shape, params, options)
    value = ValueField(grid, values, params.theta, tech.scale_power, weight, options.edge)
    policy = _policy(tech, grid, kn, hn, options.edge)
    return _finish(value, policy, tech, it, converged, residual, trace, options,
                   transformed=bool(transformed))


def solve_reduced(params, ratio_nodes, options=None, transformed=False, grid=None):
    """
    Solve on the ray ``h = 1`` and rebuild the 2-D value from homogeneity.

    With ``x = k/h`` and ``W(x) = V(x, 1)`` the value is
    ``V(k, h) = h**theta W(k/h) + U(h) / (1 - beta)``. ``W`` solves a 1-D
    Bellman equation whose continuation at ``(k', g)`` is
    ``g**theta W(k'/g) + U(g) m``.

    Parameters
    ----------
    ratio_nodes : array_like
        Increasing positive ``x`` nodes.
    grid : GridSpec, optional
        Where to rebuild ``V``; defaults to ``k`` on the ratio nodes and
        nine log-spaced ``h`` nodes on ``[0.25, 4]`` (which include 1).

    Raises
    ------
    ValueError
        If ``gamma > 0`` in direct variables (the problem is not
        homogeneous there) or betacond fails.
    """
    if params.gamma > 0 and not transformed:
        raise ValueError("reduced solve needs gamma = 0 or transformed variables")
    _check_betacond(params)
    options = options or SolveOptions()
    ratio_nodes = fld._check_axis(ratio_nodes, "ratio_nodes")
    tech = Technology(params, transformed)
    plan_fn, eval_fn = _ratio_continuation(ratio_nodes, params.theta)
    ones = np.ones_like(ratio_nodes)
    backup = _Backup(tech, ratio_nodes, ones, plan_fn, eval_fn, options)
    values, weight, kn, hn, it, converged, residual, trace = _iterate(
        backup, ratio_nodes.shape, params, options)
    ratio = RatioField(ratio_nodes, values, params.theta, weight)

    if grid is None:
        grid = GridSpec(ratio_nodes, np.geomspace(0.25, 4.0, 9))
    K, H = grid.mesh()
    full = ValueField(grid, ratio(K, H), params.theta, 1.0, weight, options.edge)
    # policy growth factors are functions of x alone
    x = np.log(K / H)
    X = np.log(ratio_nodes)
    gk = np.interp(x, X, kn / ratio_nodes)
    gh = np.interp(x, X, hn)
    policy = _policy(tech, grid, (gk * K).ravel(), (gh * H).ravel(), options.edge)
    return _finish(full, policy, tech, it, converged, residual, trace, options,
                   ratio_value=ratio, transformed=bool(transformed))


def _oracle_lattice(tech, grid, k, h, points):
    kmax = tech.k_max(k, h)
    hmax = tech.h_max(h)
    floor = tech.h_floor(h)
    k_rows, h_rows = [], []
    for km, hm, hf in zip(kmax, hmax, floor):
        kr = np.linspace(0.0, km, points)
        hr = np.linspace(0.0, hm, points)
        k_rows.append(np.unique(np.concatenate([kr, grid.k_nodes[grid.k_nodes < km]])))
        h_rows.append(np.unique(np.concatenate(
            [hr, grid.h_nodes[grid.h_nodes < hm], [hf]])))
    return _pad(k_rows), _pad(h_rows)


def _pad(rows):
    # duplicate the top value so every row has the same length
    width = max(r.size for r in rows)
    return np.stack([np.concatenate([r, np.full(width - r.size, r[-1])]) for r in rows])


def finite_horizon_oracle(params, grid, T, transition_lattice=200, transformed=False,
                          edge=fld.EDGE_SCALE):
    """
    Backward induction for the ``T + 1``-period problem.

    Each period maximises exhaustively over a fixed transition lattice per
    node (``transition_lattice`` equispaced values per coordinate plus the
    grid nodes inside the box and the depreciation-only ``h'``), with no
    local refinement. ``T = 0`` is the one-period problem ``max F``.

    Returns
    -------
    ValueField
        Horizon weight ``1 + beta + ... + beta**T``.
    """
    _check_betacond(params)
    if int(T) < 0:
        raise ValueError("T must be nonnegative")
    tech = Technology(params, transformed)
    plan_fn, eval_fn = _continuation(grid, tech, params.theta, edge)
    K, H = grid.mesh()
    k, h = K.ravel(), H.ravel()
    lattice = _oracle_lattice(tech, grid, k, h, int(transition_lattice))
    backup = _Backup(tech, k, h, plan_fn, eval_fn, SolveOptions(edge=edge), lattice=lattice)
    values = np.zeros(grid.shape)
    weight = 0.0
    for _ in range(int(T) + 1):
        values = backup(values, weight)[0].reshape(grid.shape)
        weight = 1.0 + params.beta * weight
    return ValueField(grid, values, params.theta, tech.scale_power, weight, edge)
