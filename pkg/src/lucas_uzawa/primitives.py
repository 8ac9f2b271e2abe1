"""
Model primitives: parameters, time allocation, feasibility and returns.

The state is per-capita physical and human capital ``(k, h)``. Output is
``A k**alpha (u h)**(1-alpha) h**gamma`` and human capital evolves as
``h' = (B phi(v) + 1 - delta_h) h`` with ``u + v = 1``. The market time
implied by a desired ``h -> h'`` is ``psi(h, h')``.

Everything here is vectorised over numpy arrays; the scalar wrappers
(``psi``, ``consumption``, ``return_F`` ...) validate their inputs, while
:class:`Technology` is the unchecked kernel the solver calls in bulk.
"""
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .utility import check_theta, utility_of_consumption

FEASIBILITY_SLACK = 1e-12


@dataclass(frozen=True)
class PhiSpec:
    """Human-capital technology ``phi`` on [0, 1]: ``v`` or ``v**sigma``."""

    kind: str = "linear"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "power"):
            raise ValueError(f"unknown phi family {self.kind!r}")
        if self.kind == "power" and not 0 < self.sigma <= 1:
            raise ValueError("power phi needs sigma in (0, 1]")

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        out = v if self.kind == "linear" else np.power(v, self.sigma)
        return float(out) if out.ndim == 0 else out

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        out = y if self.kind == "linear" else np.power(y, 1.0 / self.sigma)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ModelParams:
    A: float = 1.0
    alpha: float = 0.3
    beta: float = 0.8
    n: float = 0.02
    delta_k: float = 0.1
    delta_h: float = 0.05
    B: float = 0.1
    gamma: float = 0.0
    theta: float = 0.0
    phi: PhiSpec = field(default_factory=PhiSpec)

    def __post_init__(self):
        checks = {
            "A": self.A > 0,
            "alpha": 0 < self.alpha < 1,
            "beta": 0 < self.beta < 1,
            "n": self.n >= 0,
            "delta_k": 0 < self.delta_k < 1,
            "delta_h": 0 < self.delta_h < 1,
            "B": self.B > 0,
            "gamma": self.gamma >= 0,
        }
        bad = [name for name, ok in checks.items() if not ok]
        if bad:
            raise ValueError(f"parameters out of range: {', '.join(bad)}")
        object.__setattr__(self, "theta", check_theta(self.theta))

    def replace(self, **changes):
        return replace(self, **changes)

    @property
    def D_h(self):
        """Maximal gross growth of human capital in one period."""
        return self.B * self.phi(1.0) + (1.0 - self.delta_h)

    @property
    def rho(self):
        return (1.0 - self.alpha + self.gamma) / (1.0 - self.alpha)

    @property
    def omega(self):
        return self.alpha / (1.0 + self.gamma)

    def h2_holds(self):
        return self.phi(1.0) > self.delta_h / self.B


class State(NamedTuple):
    k: float
    h: float


@dataclass(frozen=True)
class DerivedConstants:
    D_h: float
    v_bar: float
    u_bar: float
    rho: float
    omega: float


def critical_v(params):
    """Study time that exactly maintains human capital, ``phi(v) = delta_h/B``."""
    if not params.h2_holds():
        raise ValueError(
            "H2 violated: phi(1) <= delta_h/B, no maintenance level in (0, 1)"
        )
    return params.phi.inverse(params.delta_h / params.B)


def max_market_time(params):
    return 1.0 - critical_v(params)


def derived_constants(params):
    v_bar = critical_v(params)
    return DerivedConstants(
        D_h=params.D_h,
        v_bar=v_bar,
        u_bar=1.0 - v_bar,
        rho=params.rho,
        omega=params.omega,
    )


def hhat_transform(h, params):
    """``h**rho`` with ``rho = (1 - alpha + gamma)/(1 - alpha)``."""
    out = np.power(np.asarray(h, dtype=float), params.rho)
    return float(out) if np.ndim(h) == 0 else out


def hhat_inverse(hhat, params):
    out = np.power(np.asarray(hhat, dtype=float), 1.0 / params.rho)
    return float(out) if np.ndim(hhat) == 0 else out


def _market_time_from_growth(growth, params):
    # growth = h'/h, already known to lie in [0, D_h]
    inner = (growth - (1.0 - params.delta_h)) / params.B
    inner = np.clip(inner, 0.0, params.phi(1.0))
    u = 1.0 - params.phi.inverse(inner)
    return np.where(growth <= 1.0 - params.delta_h, 1.0, np.clip(u, 0.0, 1.0))


def _market_time(h, h_next, params, power):
    h = np.asarray(h, dtype=float)
    h_next = np.asarray(h_next, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        growth = np.power(h_next / h, 1.0 / power)
    growth = np.where(h > 0, growth, 0.0)
    return np.where(h > 0, _market_time_from_growth(growth, params), 1.0)


def psi(h, h_next, params):
    """
    Market time consistent with moving human capital from ``h`` to ``h_next``.

    Equal to 1 whenever ``h_next <= (1 - delta_h) h`` (pure depreciation)
    and to 1 at ``h = 0``.
    """
    h_arr = np.asarray(h, dtype=float)
    hn = np.asarray(h_next, dtype=float)
    if np.any(h_arr < 0) or np.any(hn < 0):
        raise ValueError("human capital must be nonnegative")
    limit = params.D_h * h_arr
    if np.any((h_arr > 0) & (hn > limit * (1 + FEASIBILITY_SLACK) + FEASIBILITY_SLACK)):
        raise ValueError("h_next exceeds D_h * h")
    out = _market_time(h_arr, hn, params, 1.0)
    return float(out) if out.ndim == 0 else out


def psi_rho(hhat, hhat_next, params):
    """
    Market time in transformed variables ``hhat = h**rho``.

    Inverts ``hhat' = (B phi(v) + 1 - delta_h)**rho hhat``: the ratio enters
    with exponent ``1/rho`` and the depreciation-only threshold is
    ``(1 - delta_h)**rho hhat``.
    """
    rho = params.rho
    a = np.asarray(hhat, dtype=float)
    b = np.asarray(hhat_next, dtype=float)
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("transformed human capital must be nonnegative")
    limit = params.D_h**rho * a
    if np.any((a > 0) & (b > limit * (1 + FEASIBILITY_SLACK) + FEASIBILITY_SLACK)):
        raise ValueError("hhat_next exceeds D_h**rho * hhat")
    out = _market_time(a, b, params, rho)
    return float(out) if out.ndim == 0 else out


class Technology:
    """
    Vectorised one-period technology used by the solver.

    ``transformed=False`` works in ``(k, h)`` with output
    ``A k**a u**(1-a) h**(1-a+gamma)``. ``transformed=True`` works in
    ``(k, hhat)`` with ``hhat = h**rho``, where output is the constant
    returns form ``A k**a (u hhat)**(1-a)`` and growth factors are raised to
    ``rho``.

    ``scale_power`` is the exponent ``s`` of the exact symmetry
    ``(k, h) -> (lam k, lam**s h)`` under which consumption scales by
    ``lam``: ``1/rho`` for the direct model, ``1`` otherwise.
    """

    def __init__(self, params, transformed=False):
        self.params = params
        self.transformed = bool(transformed)
        p = params
        if transformed:
            self.h_exponent = 1.0 - p.alpha
            self.growth_power = p.rho
            self.scale_power = 1.0
        else:
            self.h_exponent = 1.0 - p.alpha + p.gamma
            self.growth_power = 1.0
            self.scale_power = 1.0 / p.rho
        self.max_growth = p.D_h**self.growth_power
        self.floor_growth = (1.0 - p.delta_h) ** self.growth_power

    @property
    def homogeneous(self):
        return self.scale_power == 1.0

    def output(self, k, h, u):
        p = self.params
        return p.A * np.power(k, p.alpha) * np.power(u, 1.0 - p.alpha) * np.power(h, self.h_exponent)

    def k_max(self, k, h):
        p = self.params
        return (self.output(k, h, 1.0) + (1.0 - p.delta_k) * k) / (1.0 + p.n)

    def h_max(self, h):
        return self.max_growth * np.asarray(h, dtype=float)

    def h_floor(self, h):
        """Largest ``h'`` reachable with no study time."""
        return self.floor_growth * np.asarray(h, dtype=float)

    def market_time(self, h, h_next):
        return _market_time(h, h_next, self.params, self.growth_power)

    def resources(self, k, h, h_next):
        """Output plus undepreciated capital given the ``h -> h_next`` choice."""
        p = self.params
        u = self.market_time(h, h_next)
        return self.output(k, h, u) + (1.0 - p.delta_k) * k

    def consumption(self, k, h, k_next, h_next):
        p = self.params
        k = np.asarray(k, dtype=float)
        h = np.asarray(h, dtype=float)
        raw = self.resources(k, h, h_next) - (1.0 + p.n) * np.asarray(k_next, dtype=float)
        degenerate = (k <= 0) | (h <= 0)
        clamped = np.maximum(0.0, (1.0 - p.delta_k) * k - (1.0 + p.n) * np.asarray(k_next, dtype=float))
        return np.where(degenerate, clamped, raw)

    def feasible(self, k, h, k_next, h_next):
        km = self.k_max(k, h)
        hm = self.h_max(h)
        k_next = np.asarray(k_next, dtype=float)
        h_next = np.asarray(h_next, dtype=float)
        return (
            (k_next >= 0)
            & (h_next >= 0)
            & (k_next <= km + FEASIBILITY_SLACK)
            & (h_next <= hm + FEASIBILITY_SLACK)
        )

    def ret(self, k, h, k_next, h_next):
        return utility_of_consumption(self.consumption(k, h, k_next, h_next), self.params.theta)


def _unpack(state):
    return float(state[0]), float(state[1])


def _check_state(k, h):
    if k < 0 or h < 0:
        raise ValueError("states must be nonnegative")


def feasible_bounds(state, params):
    """Upper bounds ``(k_max, h_max)`` of the feasible box from ``state``."""
    k, h = _unpack(state)
    _check_state(k, h)
    tech = Technology(params)
    return float(tech.k_max(k, h)), float(tech.h_max(h))


def in_gamma(state, next_state, params):
    k, h = _unpack(state)
    kn, hn = _unpack(next_state)
    _check_state(k, h)
    _check_state(kn, hn)
    return bool(Technology(params).feasible(k, h, kn, hn))


def _checked_transition(state, next_state, params):
    k, h = _unpack(state)
    kn, hn = _unpack(next_state)
    if not in_gamma((k, h), (kn, hn), params):
        raise ValueError(f"transition {(k, h)} -> {(kn, hn)} is not feasible")
    # clip boundary slack so psi stays in its domain
    tech = Technology(params)
    hn = min(hn, float(tech.h_max(h)))
    return k, h, kn, hn


def consumption(state, next_state, params):
    """
    Consumption implied by a feasible transition.

    For interior states the raw resource balance is returned and may be
    negative; for ``k = 0`` or ``h = 0`` it is clamped at zero.
    """
    k, h, kn, hn = _checked_transition(state, next_state, params)
    return float(Technology(params).consumption(k, h, kn, hn))


def return_F(state, next_state, params):
    """One-period return ``U(consumption)``; ``-inf`` when consumption is
    not positive and ``theta <= 0``."""
    k, h, kn, hn = _checked_transition(state, next_state, params)
    return float(Technology(params).ret(k, h, kn, hn))
