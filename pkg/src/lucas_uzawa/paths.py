"""
Feasible paths: simulation, explicit constant paths and path diagnostics.

A :class:`Path` stores ``T + 1`` states and the ``T`` transitions between
them. Paths built by :func:`constant_path_value` carry ``tail="stationary"``,
meaning their last transition repeats forever; their discounted value is
then exact rather than truncated.
"""
from dataclasses import dataclass, field

import numpy as np

from . import primitives as prim
from .primitives import State, Technology
from .utility import utility_of_consumption
from .verify import compute_constants

GROWTH_THRESHOLD = 1e-6
TRANSVERSALITY_TOL = 1e-4
SUSTAINED_GROWTH = "sustained-growth"
DEGROWTH = "degrowth"
STATIONARY = "stationary"
MIXED = "mixed"


@dataclass
class Path:
    states: list
    controls: list
    utility: list
    feasible: bool = True
    hull_exits: int = 0
    projections: int = 0
    tail: str = None

    @property
    def periods(self):
        return len(self.controls)

    @property
    def k(self):
        return np.array([s.k for s in self.states])

    @property
    def h(self):
        return np.array([s.h for s in self.states])

    @property
    def c(self):
        return np.array([c for c, _, _ in self.controls])


def _transition(tech, k, h, k_next, h_next):
    c = float(tech.consumption(k, h, k_next, h_next))
    u = float(tech.market_time(h, h_next))
    return (c, u, 1.0 - u), float(utility_of_consumption(c, tech.params.theta))


def path_from_states(states, params, tail=None):
    """Build a :class:`Path` from explicit states, checking feasibility."""
    tech = Technology(params)
    states = [State(float(k), float(h)) for k, h in states]
    controls, utility = [], []
    ok = True
    for s, s_next in zip(states[:-1], states[1:]):
        ok &= bool(tech.feasible(s.k, s.h, s_next.k, s_next.h))
        ctrl, util = _transition(tech, s.k, s.h, s_next.k, min(s_next.h, float(tech.h_max(s.h))))
        controls.append(ctrl)
        utility.append(util)
    return Path(states, controls, utility, feasible=ok, tail=tail)


@dataclass(frozen=True)
class ForcedPolicy:
    """
    Fixed study time ``v`` with a simple capital rule.

    ``k_rule="save"`` invests the share ``savings`` of available resources;
    ``k_rule="hold"`` keeps ``k' = k`` when that leaves nonnegative
    consumption and otherwise saves.
    """

    params: prim.ModelParams
    v: float
    k_rule: str = "save"
    savings: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.v <= 1.0:
            raise ValueError("study time must lie in [0, 1]")
        if self.k_rule not in ("save", "hold"):
            raise ValueError(f"unknown capital rule {self.k_rule!r}")
        if not 0.0 <= self.savings <= 1.0:
            raise ValueError("savings share must lie in [0, 1]")

    def __call__(self, k, h):
        p = self.params
        tech = Technology(p)
        h_next = (p.B * p.phi(self.v) + 1.0 - p.delta_h) * h
        available = float(tech.resources(k, h, h_next)) / (1.0 + p.n)
        k_next = self.savings * available
        if self.k_rule == "hold" and k <= available:
            k_next = k
        return k_next, h_next, False


def simulate(policy, start, T, params):
    """
    Roll a policy forward ``T`` periods from ``start``.

    ``policy(k, h)`` returns ``(k', h', clipped)``; a :class:`PolicyField`
    or a :class:`ForcedPolicy` both qualify. Transitions outside the
    feasible box are projected back into it and counted, and interpolation
    that left the grid hull is counted in ``hull_exits``. Neither stops
    the simulation.
    """
    T = int(T)
    if T < 1:
        raise ValueError("T must be a positive integer")
    k, h = float(start[0]), float(start[1])
    grid = getattr(policy, "grid", None)
    if grid is not None and not bool(grid.contains(k, h)):
        raise ValueError(f"start {(k, h)} lies outside the grid hull")
    tech = Technology(params)
    states = [State(k, h)]
    controls, utility = [], []
    exits = projections = 0
    for _ in range(T):
        kn, hn, clipped = policy(k, h)
        kn, hn = float(kn), float(hn)
        exits += int(bool(clipped))
        km, hm = float(tech.k_max(k, h)), float(tech.h_max(h))
        projected = min(max(kn, 0.0), km), min(max(hn, 0.0), hm)
        projections += int(projected != (kn, hn))
        kn, hn = projected
        ctrl, util = _transition(tech, k, h, kn, hn)
        controls.append(ctrl)
        utility.append(util)
        k, h = kn, hn
        states.append(State(k, h))
    return Path(states, controls, utility, feasible=projections == 0,
                hull_exits=exits, projections=projections)


def stationary_capital_threshold(h0, params):
    """Largest ``k0`` for which holding ``k`` and ``h`` fixed leaves
    positive consumption."""
    p = params
    u_bar = prim.max_market_time(p)
    return (p.A * h0**p.gamma / (p.n + p.delta_k)) ** (1.0 / (1.0 - p.alpha)) * u_bar * h0


def constant_path_value(start, params):
    """
    Value of an explicit feasible path with constant human capital.

    Study time is held at the maintenance level, so ``h_t = h0``. Below the
    capital threshold the path also holds ``k_t = k0``; above it capital is
    cut once to ``k1`` (half of the largest admissible level) and held.

    Returns
    -------
    value : float
        Exact discounted value, finite for every ``start >> 0``.
    path : Path
        The explicit transitions with ``tail="stationary"``.
    """
    k0, h0 = float(start[0]), float(start[1])
    if not (k0 > 0 and h0 > 0):
        raise ValueError("constant paths need a strictly positive start")
    p = params
    tech = Technology(p)
    u_bar = prim.max_market_time(p)
    threshold = stationary_capital_threshold(h0, p)
    if k0 < threshold:
        path = path_from_states([(k0, h0), (k0, h0)], p, tail=STATIONARY)
        return path.utility[0] / (1.0 - p.beta), path
    top = (float(tech.output(k0, h0, u_bar)) + (1.0 - p.delta_k) * k0) / (1.0 + p.n)
    k1 = 0.5 * min(top, threshold)
    path = path_from_states([(k0, h0), (k1, h0), (k1, h0)], p, tail=STATIONARY)
    value = path.utility[0] + p.beta / (1.0 - p.beta) * path.utility[1]
    return value, path


def discounted_sum(path, params, T=None):
    """
    Truncated discounted utility and an upper bound on the tail.

    Parameters
    ----------
    path : Path
    T : int, optional
        Last period included; defaults to every recorded transition.

    Returns
    -------
    partial : float
        ``sum_{t <= T} beta**t U(c_t)``.
    upper_tail_bound : float
        ``eta (1 + zeta) |x0| (beta zeta)**(T+1) / (1 - beta zeta)`` with the
        1-norm ``|x0| = k0 + h0``. It bounds the positive part of the tail
        only; returns are unbounded below.
    """
    util = np.asarray(path.utility, dtype=float)
    if T is not None:
        util = util[: int(T) + 1]
    if np.any(~np.isfinite(util)):
        raise ValueError("path has non-finite per-period utility")
    consts = compute_constants(params)
    terms = util.size
    partial = float(np.sum(util * params.beta ** np.arange(terms)))
    norm = path.states[0].k + path.states[0].h
    bz = consts.beta_zeta
    bound = consts.eta * (1.0 + consts.zeta) * norm * bz**terms / (1.0 - bz)
    return partial, float(bound)


def lower_tail_bound(path, params, c_min=None, T=None):
    """``beta**(T+1) U(c_min) / (1 - beta)``: the tail is at least this on
    any continuation with consumption kept at or above ``c_min``."""
    terms = path.periods if T is None else int(T) + 1
    if c_min is None:
        c_min = float(np.min(path.c))
    if not c_min > 0:
        raise ValueError("lower tail bound needs c_min > 0")
    u = float(utility_of_consumption(c_min, params.theta))
    return params.beta**terms * u / (1.0 - params.beta)


def stationary_value(path, params):
    """Exact value of a path whose last transition repeats forever."""
    if path.tail != STATIONARY:
        raise ValueError("path has no stationary tail")
    partial, _ = discounted_sum(path, params)
    n = path.periods
    return partial + params.beta**n * path.utility[-1] / (1.0 - params.beta)


def shifted_lower_bound(path, params, epsilon):
    """
    Discounted utility with curvature ``theta - epsilon``.

    Utility is nondecreasing in its curvature parameter, so this never
    exceeds the path's own value. A stationary tail is summed exactly; other
    paths are truncated at their last recorded period.

    Raises
    ------
    ValueError
        If ``theta > 0`` (utility is then bounded below by ``-1/theta``),
        ``epsilon <= 0``, or some consumption is not positive.
    """
    if params.theta > 0:
        raise ValueError("shifted lower bound is only needed for theta <= 0")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    c = path.c
    if np.any(~(c > 0)):
        raise ValueError("shifted lower bound needs strictly positive consumption")
    shifted = params.theta - epsilon
    util = utility_of_consumption(c, shifted)
    total = float(np.sum(util * params.beta ** np.arange(c.size)))
    if path.tail == STATIONARY:
        total += params.beta ** c.size * float(util[-1]) / (1.0 - params.beta)
    return total


# ------------------------------------------------------------- diagnostics

@dataclass
class GrowthReport:
    classification: str
    g_k: float
    g_h: float
    g_c: float
    window: int
    series: dict = field(default_factory=dict)


def _window_rate(series, window):
    tail = series[-window:]
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(np.exp(np.mean(np.log(tail))))


def growth_diagnostics(path, threshold=GROWTH_THRESHOLD):
    """
    Gross growth rates and a label from the last quarter of the path.

    The label uses the 1-norm ``k + h``: every rate in the window above
    ``1 + threshold`` is sustained growth, every rate below
    ``1 - threshold`` is degrowth, all within the band is stationary.
    """
    if len(path.states) < 3:
        raise ValueError("growth diagnostics need at least 3 states")
    k, h = path.k, path.h
    c = path.c
    with np.errstate(divide="ignore", invalid="ignore"):
        g_k = k[1:] / k[:-1]
        g_h = h[1:] / h[:-1]
        g_c = c[1:] / c[:-1]
        g_x = (k + h)[1:] / (k + h)[:-1]
    window = max(1, g_x.size // 4)
    tail = g_x[-window:]
    if np.all(np.abs(tail - 1.0) <= threshold):
        label = STATIONARY
    elif np.all(tail > 1.0 + threshold):
        label = SUSTAINED_GROWTH
    elif np.all(tail < 1.0 - threshold):
        label = DEGROWTH
    else:
        label = MIXED
    return GrowthReport(
        classification=label,
        g_k=_window_rate(g_k, window),
        g_h=_window_rate(g_h, window),
        g_c=_window_rate(g_c, max(1, min(window, g_c.size))) if g_c.size else float("nan"),
        window=window,
        series={"g_k": g_k, "g_h": g_h, "g_c": g_c, "g_norm": g_x},
    )


@dataclass
class TransversalityReport:
    status: str
    discounted_values: np.ndarray
    s1: bool = None
    s2: bool = None
    decay_period: int = None


def transversality_diagnostic(path, v, params, tol=TRANSVERSALITY_TOL):
    """
    Check that ``beta**t V(k_t, h_t)`` tends to zero along a path.

    ``s1`` asks that the sequence end at or below ``tol``; ``s2`` (finite
    values only) that it end within ``tol`` of zero. ``decay_period`` is the
    first ``t`` from which ``|beta**t V|`` stays below ``tol``. Paths where
    ``V = -inf`` somewhere are not-applicable.
    """
    V = np.asarray(v(path.k, path.h), dtype=float)
    seq = params.beta ** np.arange(V.size) * V
    if np.any(~np.isfinite(V)):
        return TransversalityReport("not-applicable", seq)
    small = np.abs(seq) < tol
    later_big = np.nonzero(~small)[0]
    decay = int(later_big[-1] + 1) if later_big.size else 0
    decay = decay if decay < seq.size else None
    s1 = bool(seq[-1] <= tol)
    s2 = bool(abs(seq[-1]) <= tol)
    return TransversalityReport("pass" if s1 and s2 else "fail", seq, s1, s2, decay)
