"""
Grids, value fields and policy fields.

Values live on a tensor grid of positive ``(k, h)`` nodes. Because of the
model's scaling symmetry

    V(lam k, lam**s h) = lam**theta V(k, h) + U(lam) * m

(``s`` is ``Technology.scale_power``; ``m`` is the horizon weight of the
field, ``1/(1-beta)`` at the fixed point and ``1 + beta + ... + beta**T``
for a ``T+1``-period problem) a value field splits as

    V = r**theta Z - m/theta        (V = Z + m log r when theta = 0)

with ``r = sqrt(k h**(1/s))`` of degree one and ``Z`` scale free. The
interpolation is bilinear in ``(log k, log h)`` applied to ``Z``, so the
exponential factor ``r**theta`` is never interpolated. Points outside the hull are slid along the symmetry into it;
only points whose ratio cannot be brought inside are clamped, and those
are counted as clipping events.
"""
from dataclasses import dataclass

import numpy as np

from .utility import utility_of_consumption

INTERPOLATION = "bilinear-in-log-coordinates"
EDGE_SCALE = "scale"
EDGE_CLIP = "clip"


@dataclass
class GridSpec:
    k_nodes: np.ndarray
    h_nodes: np.ndarray
    ratio_nodes: np.ndarray = None

    def __post_init__(self):
        self.k_nodes = _check_axis(self.k_nodes, "k_nodes")
        self.h_nodes = _check_axis(self.h_nodes, "h_nodes")
        if self.ratio_nodes is not None:
            self.ratio_nodes = _check_axis(self.ratio_nodes, "ratio_nodes")

    @classmethod
    def log_spaced(cls, k_range=(0.25, 4.0), h_range=(0.25, 4.0), nk=8, nh=8,
                   ratio_range=None, n_ratio=None):
        ratio = None
        if ratio_range is not None:
            ratio = np.geomspace(*ratio_range, n_ratio or 64)
        return cls(np.geomspace(*k_range, nk), np.geomspace(*h_range, nh), ratio)

    @property
    def shape(self):
        return (self.k_nodes.size, self.h_nodes.size)

    def mesh(self):
        return np.meshgrid(self.k_nodes, self.h_nodes, indexing="ij")

    def interior_mask(self):
        mask = np.zeros(self.shape, dtype=bool)
        mask[1:-1, 1:-1] = True
        return mask

    def contains(self, k, h, slack=1e-12):
        k = np.asarray(k, dtype=float)
        h = np.asarray(h, dtype=float)
        kn, hn = self.k_nodes, self.h_nodes
        return ((k >= kn[0] * (1 - slack)) & (k <= kn[-1] * (1 + slack))
                & (h >= hn[0] * (1 - slack)) & (h <= hn[-1] * (1 + slack)))


def _check_axis(nodes, name):
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or nodes.size < 4:
        raise ValueError(f"{name} needs at least 4 nodes")
    if np.any(nodes <= 0) or np.any(np.diff(nodes) <= 0):
        raise ValueError(f"{name} must be positive and strictly increasing")
    return nodes


@dataclass
class InterpPlan:
    """Precomputed interpolation of a fixed point set; reusable across
    value fields on the same grid."""

    i: np.ndarray
    j: np.ndarray
    fx: np.ndarray
    fy: np.ndarray
    log_r: np.ndarray
    node_log_r: np.ndarray
    on_axis: np.ndarray
    clipped: np.ndarray

    @property
    def clip_count(self):
        return int(np.count_nonzero(self.clipped))


def _cell(nodes_log, q):
    i = np.clip(np.searchsorted(nodes_log, q, side="right") - 1, 0, nodes_log.size - 2)
    frac = (q - nodes_log[i]) / (nodes_log[i + 1] - nodes_log[i])
    return i, np.clip(frac, 0.0, 1.0)


def make_plan(grid, k, h, scale_power=1.0, edge=EDGE_SCALE):
    k = np.asarray(k, dtype=float)
    h = np.asarray(h, dtype=float)
    s = scale_power
    X = np.log(grid.k_nodes)
    Y = np.log(grid.h_nodes)
    on_axis = (k <= 0) | (h <= 0)
    on_h_axis = (h <= 0) & (k > 0)
    with np.errstate(divide="ignore"):
        x = np.log(np.where(on_axis, 1.0, k))
        y = np.log(np.where(on_axis, 1.0, h))
    if edge == EDGE_SCALE:
        lo = np.maximum(X[0] - x, (Y[0] - y) / s)
        hi = np.minimum(X[-1] - x, (Y[-1] - y) / s)
        t = np.where(lo <= hi, np.clip(0.0, lo, hi), 0.5 * (lo + hi))
        t = np.where(on_axis, 0.0, t)
        gap = lo > hi * (1 + 1e-12) + 1e-12
    elif edge == EDGE_CLIP:
        t = np.zeros_like(x)
        gap = ~grid.contains(np.exp(x), np.exp(y))
    else:
        raise ValueError(f"unknown edge rule {edge!r}")
    qx = x + t
    qy = y + s * t
    cx = np.clip(qx, X[0], X[-1])
    cy = np.clip(qy, Y[0], Y[-1])
    moved = (np.abs(qx - cx) > 1e-12) | (np.abs(qy - cy) > 1e-12)
    clipped = ((gap | moved) & ~on_axis) | on_h_axis
    # the scale-free part is read at the (clamped) point; the degree-one
    # factor belongs to the original point, or to the clamped one under
    # the flat clip rule
    log_r = 0.5 * (x + y / s) if edge == EDGE_SCALE else 0.5 * (cx + cy / s)
    i, fx = _cell(X, cx)
    j, fy = _cell(Y, cy)
    node_log_r = 0.5 * (X[:, None] + Y[None, :] / s)
    return InterpPlan(i, j, fx, fy, log_r, node_log_r, on_axis, clipped)


def axis_value(theta, weight):
    """Value of zero consumption forever: exact on ``k = 0``, a lower bound
    on ``h = 0`` (where capital can still be eaten down)."""
    if weight == 0:
        return 0.0
    return float(utility_of_consumption(0.0, theta)) * weight


def _bilinear(values, plan):
    i, j, fx, fy = plan.i, plan.j, plan.fx, plan.fy
    v00 = values[i, j]
    v10 = values[i + 1, j]
    v01 = values[i, j + 1]
    v11 = values[i + 1, j + 1]
    w00 = (1 - fx) * (1 - fy)
    w10 = fx * (1 - fy)
    w01 = (1 - fx) * fy
    w11 = fx * fy
    if np.all(np.isfinite(values)):
        return w00 * v00 + w10 * v10 + w01 * v01 + w11 * v11
    corners = np.stack([v00, v10, v01, v11])
    weights = np.stack([w00, w10, w01, w11])
    finite = np.isfinite(corners)
    wsum = np.sum(np.where(finite, weights, 0.0), axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.sum(np.where(finite, weights * np.where(finite, corners, 0.0), 0.0), axis=0) / wsum
    # split-cell rule: -inf only in the quarter of the cell nearest the bad corner
    nearest = (fx >= 0.5).astype(int) + 2 * (fy >= 0.5).astype(int)
    nearest_value = np.take_along_axis(corners, nearest[None, ...], axis=0)[0]
    return np.where(np.isneginf(nearest_value) | (wsum == 0), -np.inf, out)


def scale_free(values, log_r, theta, weight):
    """``Z`` from ``V`` given ``log r`` at the same points."""
    if theta == 0.0:
        return values - weight * log_r
    return (values + weight / theta) * np.exp(-theta * log_r)


def from_scale_free(z, log_r, theta, weight):
    if theta == 0.0:
        return z + weight * log_r
    return np.exp(theta * log_r) * z - weight / theta


def apply_plan(plan, values, theta, weight):
    z = _bilinear(scale_free(values, plan.node_log_r, theta, weight), plan)
    out = from_scale_free(z, plan.log_r, theta, weight)
    return np.where(plan.on_axis, axis_value(theta, weight), out)


@dataclass
class ValueField:
    grid: GridSpec
    values: np.ndarray
    theta: float
    scale_power: float = 1.0
    weight: float = 0.0
    edge: str = EDGE_SCALE
    interpolation: str = INTERPOLATION

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError("values do not match the grid shape")

    @classmethod
    def zeros(cls, grid, theta, scale_power=1.0, edge=EDGE_SCALE):
        return cls(grid, np.zeros(grid.shape), theta, scale_power, 0.0, edge)

    def plan(self, k, h):
        return make_plan(self.grid, k, h, self.scale_power, self.edge)

    def __call__(self, k, h):
        out = apply_plan(self.plan(k, h), self.values, self.theta, self.weight)
        return float(out) if np.ndim(out) == 0 else out

    def finite_mask(self):
        return np.isfinite(self.values)


@dataclass
class PolicyField:
    """Maximising transition per node plus the implied controls."""

    grid: GridSpec
    k_next: np.ndarray
    h_next: np.ndarray
    consumption: np.ndarray
    market_time: np.ndarray
    scale_power: float = 1.0
    edge: str = EDGE_SCALE

    @property
    def study_time(self):
        return 1.0 - self.market_time

    def growth_factors(self):
        K, H = self.grid.mesh()
        return self.k_next / K, self.h_next / H

    def __call__(self, k, h):
        """Interpolated transition from ``(k, h)``. Growth factors are
        invariant under the scaling symmetry, so they are what gets
        interpolated; returns ``(k', h', clipped)``."""
        k = np.asarray(k, dtype=float)
        h = np.asarray(h, dtype=float)
        plan = make_plan(self.grid, k, h, self.scale_power, self.edge)
        gk, gh = self.growth_factors()
        fk = _bilinear(gk, plan)
        fh = _bilinear(gh, plan)
        outside = ~self.grid.contains(k, h)
        return k * fk, h * fh, plan.clipped | (outside & (self.edge == EDGE_CLIP))


@dataclass
class RatioPlan:
    """Interpolation of ``h**theta W(k/h) + U(h) m`` at a fixed point set."""

    i: np.ndarray
    fx: np.ndarray
    log_h: np.ndarray
    on_axis: np.ndarray
    clipped: np.ndarray

    @property
    def clip_count(self):
        return int(np.count_nonzero(self.clipped))


def make_ratio_plan(ratio_nodes, k, h):
    k = np.asarray(k, dtype=float)
    h = np.asarray(h, dtype=float)
    X = np.log(ratio_nodes)
    on_axis = (k <= 0) | (h <= 0)
    with np.errstate(divide="ignore"):
        log_h = np.log(np.where(on_axis, 1.0, h))
        x = np.log(np.where(on_axis, 1.0, k)) - log_h
    clipped = ((x < X[0] - 1e-12) | (x > X[-1] + 1e-12) | ((h <= 0) & (k > 0)))
    i, fx = _cell(X, np.clip(x, X[0], X[-1]))
    return RatioPlan(i, fx, log_h, on_axis, clipped)


def apply_ratio_plan(plan, values, theta, weight):
    lo = values[plan.i]
    hi = values[plan.i + 1]
    with np.errstate(invalid="ignore"):
        # split-cell rule in one dimension
        w = np.where(np.isfinite(lo) & np.isfinite(hi),
                     (1 - plan.fx) * lo + plan.fx * hi,
                     np.where(plan.fx < 0.5, lo, hi))
        h = np.exp(plan.log_h)
        out = np.exp(theta * plan.log_h) * w + utility_of_consumption(h, theta) * weight
    return np.where(plan.on_axis, axis_value(theta, weight), out)


@dataclass
class RatioField:
    """Value on the ray ``h = 1`` as a function of ``x = k/h``."""

    ratio_nodes: np.ndarray
    values: np.ndarray
    theta: float
    weight: float = 0.0

    def __post_init__(self):
        self.ratio_nodes = _check_axis(self.ratio_nodes, "ratio_nodes")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.ratio_nodes.shape:
            raise ValueError("values do not match the ratio nodes")

    def plan(self, k, h):
        return make_ratio_plan(self.ratio_nodes, k, h)

    def __call__(self, k, h):
        out = apply_ratio_plan(self.plan(k, h), self.values, self.theta, self.weight)
        return float(out) if np.ndim(out) == 0 else out
