"""
Growth constants, assumption checks, and weighted power means.

``compute_constants`` evaluates the closed-form bounds of the model
(``xi``, ``zeta``, ``eta`` ...). ``check_all`` turns every numerically
checkable assumption into a verdict; universally quantified conditions are
probed with seeded random transitions, so a ``pass`` means "no
counterexample among the samples", never a proof.
"""
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from . import primitives as prim

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not-applicable"

STATE_RANGE = (1e-3, 1e3)
LAMBDAS = (0.3, 0.7, 1.0)


@dataclass
class Verdict:
    status: str
    detail: str = ""


@dataclass
class AssumptionReport:
    D_h: float
    v_bar: float
    u_bar: float
    xi: float
    xi_hat: float
    zeta: float
    beta_zeta: float
    rho: float
    omega: float
    eta: float
    continuity_mode: str
    verdicts: dict = field(default_factory=dict)

    @property
    def all_pass(self):
        return all(v.status != FAIL for v in self.verdicts.values())

    @property
    def failures(self):
        return [name for name, v in self.verdicts.items() if v.status == FAIL]

    def to_dict(self):
        out = asdict(self)
        out["verdicts"] = {k: asdict(v) for k, v in self.verdicts.items()}
        out["all_pass"] = self.all_pass
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True)

    def to_text(self):
        lines = ["constants"]
        for name in ("D_h", "v_bar", "u_bar", "xi", "xi_hat", "zeta",
                     "beta_zeta", "eta", "rho", "omega"):
            lines.append(f"  {name:<10} {getattr(self, name)!r}")
        lines.append(f"  continuity {self.continuity_mode}")
        lines.append("checks")
        for name, v in self.verdicts.items():
            lines.append(f"  {name:<10} {v.status:<15} {v.detail}")
        lines.append(f"overall    {'pass' if self.all_pass else 'fail'}")
        return "\n".join(lines) + "\n"


def growth_bound(params):
    """``xi`` with the capital share replaced by ``omega = alpha/(1+gamma)``."""
    w = params.omega
    return max(
        (w * params.A + (1.0 - params.delta_k)) / (1.0 + params.n),
        (1.0 - w) * params.A / (1.0 + params.n),
    )


def compute_constants(params):
    p = params
    xi = max(
        (p.alpha * p.A + (1.0 - p.delta_k)) / (1.0 + p.n),
        (1.0 - p.alpha) * p.A / (1.0 + p.n),
    )
    xi_hat = growth_bound(p)
    zeta = max(xi if p.gamma == 0 else xi_hat, p.D_h)
    if p.h2_holds():
        v_bar = prim.critical_v(p)
        u_bar = 1.0 - v_bar
    else:
        v_bar = u_bar = float("nan")
    return AssumptionReport(
        D_h=p.D_h,
        v_bar=v_bar,
        u_bar=u_bar,
        xi=xi,
        xi_hat=xi_hat,
        zeta=zeta,
        beta_zeta=p.beta * zeta,
        rho=p.rho,
        omega=p.omega,
        eta=zeta * (1.0 + p.n),
        continuity_mode="A6" if p.gamma <= 1 else "A7",
    )


def betacond_holds(params):
    return compute_constants(params).beta_zeta < 1.0


# ---------------------------------------------------------------- sampling

def sample_transitions(params, count, rng):
    """Log-uniform states on STATE_RANGE**2 and uniform feasible choices."""
    lo, hi = np.log(STATE_RANGE[0]), np.log(STATE_RANGE[1])
    k = np.exp(rng.uniform(lo, hi, count))
    h = np.exp(rng.uniform(lo, hi, count))
    tech = prim.Technology(params)
    k_next = rng.uniform(0.0, 1.0, count) * tech.k_max(k, h)
    h_next = rng.uniform(0.0, 1.0, count) * tech.h_max(h)
    return k, h, k_next, h_next


def growth_violations(params, k, h, k_next, h_next, zeta):
    """Count transitions with ``max(k', h') > zeta (k + h)`` (1-norm)."""
    bound = zeta * (k + h)
    return int(np.count_nonzero(np.maximum(k_next, h_next) > bound * (1 + 1e-12)))


def return_violations(params, k, h, k_next, h_next, eta):
    tech = prim.Technology(params)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        F = tech.ret(k, h, k_next, h_next)
    bound = eta * ((k + h) + (k_next + h_next))
    return int(np.count_nonzero(F > bound + 1e-12 * np.abs(bound)))


def scaling_violations(params, k, h, k_next, h_next, lambdas=LAMBDAS):
    """Transitions whose ``lam``-scaled copy leaves the feasible set."""
    tech = prim.Technology(params)
    bad = 0
    for lam in lambdas:
        ok = tech.feasible(lam * k, lam * h, lam * k_next, lam * h_next)
        bad += int(np.count_nonzero(~ok))
    return bad


def _phi_monotone(phi, points=10_000):
    grid = np.linspace(0.0, 1.0, points)
    values = phi(grid)
    return bool(np.all(np.diff(values) > 0) and values[0] == 0.0)


def _psi_continuity(params, rng, count=200):
    # psi and F across the pure-depreciation kink h' = (1 - delta_h) h
    h = np.exp(rng.uniform(np.log(0.1), np.log(10.0), count))
    kink = (1.0 - params.delta_h) * h
    eps = 1e-9 * h
    left = prim.psi(h, kink - eps, params)
    right = prim.psi(h, kink + eps, params)
    return float(np.max(np.abs(left - right)))


def _lower_bound_paths(params, rng, count=20):
    """Shifted lower bound along constructed constant paths (theta <= 0)."""
    from .paths import constant_path_value, shifted_lower_bound

    worst = -np.inf
    for _ in range(count):
        k0, h0 = np.exp(rng.uniform(np.log(0.1), np.log(10.0), 2))
        value, path = constant_path_value((k0, h0), params)
        bound = shifted_lower_bound(path, params, epsilon=0.5)
        if not (np.isfinite(value) and np.isfinite(bound)):
            return False, "non-finite value on a constructed path"
        worst = max(worst, bound - value)
    return worst <= 1e-12, f"max(shifted - J) = {worst:.3e}"


def check_all(params, sample_count=10_000, seed=0):
    """
    Evaluate every numerically checkable assumption.

    Failures are verdicts, not exceptions. Deterministic for a given seed.
    """
    report = compute_constants(params)
    v = report.verdicts
    rng = np.random.default_rng(seed)
    p = params

    v["H1"] = Verdict(
        PASS if _phi_monotone(p.phi) else FAIL,
        "phi(0)=0 and strictly increasing on a 1e4-point grid",
    )
    h2 = p.h2_holds()
    v["H2"] = Verdict(
        PASS if h2 else FAIL,
        f"phi(1)={p.phi(1.0)!r} vs delta_h/B={p.delta_h / p.B!r}",
    )
    tech = prim.Technology(p)
    origin = (float(tech.k_max(0.0, 0.0)), float(tech.h_max(0.0)))
    v["A1"] = Verdict(PASS if origin == (0.0, 0.0) else FAIL,
                      f"Gamma(0,0) upper corner {origin}")

    k, h, kn, hn = sample_transitions(p, sample_count, rng)
    n_growth = growth_violations(p, k, h, kn, hn, report.zeta)
    v["A2"] = Verdict(
        PASS if n_growth == 0 and report.zeta != 1.0 else FAIL,
        f"{n_growth}/{sample_count} sampled transitions exceed zeta*(k+h)",
    )
    n_ret = return_violations(p, k, h, kn, hn, report.eta)
    v["A3"] = Verdict(
        PASS if n_ret == 0 else FAIL,
        f"{n_ret}/{sample_count} sampled returns exceed eta*(|s|+|s'|)",
    )
    ok = report.beta_zeta < 1.0
    v["A4"] = Verdict(PASS if ok else FAIL, f"beta*zeta = {report.beta_zeta!r}")
    v["betacond"] = Verdict(PASS if ok else FAIL, f"beta*zeta = {report.beta_zeta!r} < 1")

    if h2:
        gap = _psi_continuity(p, rng)
        v["A5"] = Verdict(PASS if gap < 1e-6 else FAIL,
                          f"psi jump across depreciation kink {gap:.2e}")
    else:
        v["A5"] = Verdict(NOT_APPLICABLE, "needs H2")

    if p.gamma <= 1:
        n_scale = scaling_violations(p, k, h, kn, hn)
        v["A6"] = Verdict(
            PASS if n_scale == 0 else FAIL,
            f"{n_scale}/{sample_count * len(LAMBDAS)} scaled transitions infeasible "
            f"for lambda in {LAMBDAS}",
        )
    else:
        v["A6"] = Verdict(NOT_APPLICABLE, "gamma > 1; continuity via A7")

    if p.theta > 0:
        v["A7"] = Verdict(NOT_APPLICABLE,
                          f"returns bounded below by -1/theta = {-1.0 / p.theta!r}")
    elif not h2:
        v["A7"] = Verdict(NOT_APPLICABLE, "needs H2 for constant paths")
    else:
        ok, detail = _lower_bound_paths(p, rng)
        v["A7"] = Verdict(PASS if ok else FAIL,
                          "shifted-utility bound on constant paths: " + detail)
    return report


# -------------------------------------------------------------- power means

@dataclass
class WeightedSample:
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.values.shape != self.weights.shape:
            raise ValueError("values and weights must have the same shape")
        if self.values.shape[-1] == 0:
            raise ValueError("empty sample")
        if np.any(self.values <= 0) or np.any(self.weights <= 0):
            raise ValueError("values and weights must be positive")


def power_mean(sample, p):
    """
    Weighted power mean ``M_p``; ``p = 0`` is the weighted geometric mean.

    Vectorised over leading axes (the last axis indexes the sample). The
    mean is formed around the geometric mean with ``expm1``/``log1p`` so it
    stays accurate as ``p -> 0``; large ``|p|`` falls back to log-sum-exp.
    """
    x, w = sample.values, sample.weights
    wn = w / w.sum(axis=-1, keepdims=True)
    logs = np.log(x)
    centre = np.sum(wn * logs, axis=-1, keepdims=True)
    p = np.asarray(p, dtype=float)
    pd = p[..., None] * (logs - centre)
    moderate = np.abs(pd) <= 30.0
    with np.errstate(over="ignore"):
        near = np.log1p(np.sum(wn * np.expm1(np.where(moderate, pd, 0.0)), axis=-1))
        top = np.max(pd, axis=-1, keepdims=True)
        far = top[..., 0] + np.log(np.sum(wn * np.exp(pd - top), axis=-1))
    log_mean = np.where(np.all(moderate, axis=-1), near, far)
    shift = np.where(p == 0, 0.0, log_mean / np.where(p == 0, 1.0, p))
    out = np.exp(centre[..., 0] + shift)
    return float(out) if np.ndim(out) == 0 else out
