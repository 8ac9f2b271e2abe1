"""
Isoelastic utility family.

Two forms are supported:

    standard     U(c) = (c**theta - 1) / theta
    alternative  U(c) = c**theta / theta

and ``log(c)`` for ``theta == 0`` in both. The parameter ``theta`` lives in
``(-inf, 1]``; ``theta = 1`` gives the linear utility ``c - 1``.
Values at ``c = 0`` are extended reals: ``-inf`` whenever ``theta <= 0``.
"""
import numpy as np

STANDARD = "standard"
ALTERNATIVE = "alternative"
FORMS = (STANDARD, ALTERNATIVE)


def check_theta(theta):
    theta = float(theta)
    if not (np.isfinite(theta) and theta <= 1.0):
        raise ValueError(f"theta must satisfy -inf < theta <= 1, got {theta}")
    return theta


def _scalar_or_array(x, out):
    if np.ndim(x) == 0:
        return float(out)
    return out


def eval_utility(c, theta, form=STANDARD):
    """
    Evaluate the isoelastic utility of consumption.

    Parameters
    ----------
    c : float or array
        Consumption, ``c >= 0``.
    theta : float
        Curvature parameter, ``theta <= 1``; ``0`` selects log utility.
    form : {"standard", "alternative"}
        Whether the additive constant ``-1/theta`` is kept.

    Returns
    -------
    float or array
        Utility, ``-inf`` at ``c = 0`` when ``theta <= 0``.
    """
    theta = check_theta(theta)
    if form not in FORMS:
        raise ValueError(f"unknown utility form {form!r}")
    arr = np.asarray(c, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("consumption must be nonnegative")
    with np.errstate(divide="ignore", invalid="ignore"):
        if theta == 0.0:
            out = np.log(arr)
        elif form == STANDARD:
            out = np.expm1(theta * np.log(arr)) / theta
        else:
            out = np.power(arr, theta) / theta
    return _scalar_or_array(c, out)


def utility_of_consumption(c, theta):
    """Standard-form utility for the solver: negative consumption is an
    infeasible choice and maps to ``-inf``."""
    c = np.asarray(c, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if theta == 0.0:
            out = np.log(np.maximum(c, 0.0))
        else:
            out = np.expm1(theta * np.log(np.maximum(c, 0.0))) / theta
    return np.where(c < 0, -np.inf, out)


def marginal_utility(c, theta):
    """U'(c) = c**(theta - 1); identical for both forms."""
    theta = check_theta(theta)
    arr = np.asarray(c, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("marginal utility needs c > 0")
    return _scalar_or_array(c, np.power(arr, theta - 1.0))


def _check_lambda(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(~((lam > 0) & (lam <= 1))):
        raise ValueError("lambda must lie in (0, 1]")
    return lam


def scale_decomposition(lam, theta):
    """
    Return ``(lam**theta, U(lam))`` so that ``U(lam*c) = phi1*U(c) + phi2``.

    For log utility this is ``(1, log lam)``.
    """
    theta = check_theta(theta)
    arr = _check_lambda(lam)
    phi1 = np.power(arr, theta)
    phi2 = eval_utility(arr, theta)
    return _scalar_or_array(lam, phi1), _scalar_or_array(lam, phi2)


def externality_scale_decomposition(lam, theta, gamma):
    """
    Scaling pair for the externality model,
    ``(lam**((1+gamma)*theta), U(lam**(1+gamma)))``.
    """
    theta = check_theta(theta)
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    arr = _check_lambda(lam)
    phi1 = np.power(arr, (1.0 + gamma) * theta)
    phi2 = eval_utility(np.power(arr, 1.0 + gamma), theta)
    return _scalar_or_array(lam, phi1), _scalar_or_array(lam, phi2)


def _utility_increment(c, x, theta):
    # U(c*(1+x)) - U(c) without cancellation
    if theta == 0.0:
        return np.log1p(x)
    return np.power(c, theta) * np.expm1(theta * np.log1p(x)) / theta


def _bvp_estimate(c, theta, h):
    up = _utility_increment(c, h / c, theta)
    down = -_utility_increment(c, -h / c, theta)
    second = (up - down) / h**2
    first = (up + down) / (2.0 * h)
    return second + (1.0 - theta) / c * first


def bvp_residual(c, theta, step=1e-4):
    """
    Finite-difference value of ``U''(c) + (1 - theta)/c * U'(c)``.

    Central differences with spacing ``step * c``; the one-sided increments
    are formed with ``expm1``/``log1p`` and the two spacings ``h`` and
    ``h/2`` are Richardson-combined, so the residual of the closed form is
    at rounding level.
    """
    theta = check_theta(theta)
    c_arr = np.asarray(c, dtype=float)
    if np.any(~(c_arr > 0)):
        raise ValueError("bvp_residual needs c > 0")
    if not 0 < step < 1:
        raise ValueError("step must lie in (0, 1) (it is relative to c)")
    h = step * c_arr
    coarse = _bvp_estimate(c_arr, theta, h)
    fine = _bvp_estimate(c_arr, theta, h / 2.0)
    return _scalar_or_array(c, (4.0 * fine - coarse) / 3.0)
