"""Poisson-weighted Gaussian-dip fits to coincidence counts."""

from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy.optimize import minimize

from .units import FWHM_PER_SIGMA

log = logging.getLogger(__name__)

REL_TOL = 1e-10
MAX_RESTARTS = 30
PARAMS = ("baseline", "visibility", "center", "width")


class FitError(RuntimeError):
    pass


class NotConvergedError(FitError):
    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class DipModel:
    """C(d) = B * (1 - V exp(-(d - d0)^2 / (2 w^2))), positions in um."""

    baseline: float
    visibility: float
    center: float
    width: float

    @property
    def fwhm(self):
        return FWHM_PER_SIGMA * self.width

    def __call__(self, d):
        return dip_model(np.asarray(d, dtype=float), self.as_array())

    def as_array(self):
        return np.array([self.baseline, self.visibility, self.center, self.width])


@dataclass(frozen=True)
class FitResult:
    model: DipModel
    errors: DipModel
    reduced_chi2: float
    converged: bool
    iterations: int
    n_points: int
    flat: bool = False

    @property
    def fwhm(self):
        return self.model.fwhm

    @property
    def fwhm_error(self):
        return FWHM_PER_SIGMA * self.errors.width


def dip_model(d, params):
    b, v, d0, w = params
    return b * (1.0 - v * np.exp(-((d - d0) ** 2) / (2.0 * w * w)))


def dip_jacobian(d, params):
    b, v, d0, w = params
    g = np.exp(-((d - d0) ** 2) / (2.0 * w * w))
    return np.column_stack([
        1.0 - v * g,
        -b * g,
        -b * v * g * (d - d0) / (w * w),
        -b * v * g * (d - d0) ** 2 / w**3,
    ])


def poisson_variance(counts):
    return np.maximum(counts, 1.0)


def chi_square(params, d, counts, variance):
    r = counts - dip_model(d, params)
    return float(np.sum(r * r / variance))


def initial_guess(d, counts):
    """Data heuristics: baseline from outer-quartile points, centre at the smoothed minimum,
    visibility from the depth, width from the half-depth crossings."""
    order = np.argsort(d)
    d, counts = d[order], counts[order]
    n = d.size
    q = max(1, n // 4)
    baseline = float(np.mean(np.concatenate([counts[:q], counts[-q:]])))
    smooth = np.convolve(np.pad(counts, 1, mode="edge"), np.ones(3) / 3.0, mode="valid")
    k = int(np.argmin(smooth))
    center = float(d[k])
    depth = baseline - float(smooth[k])
    vis = min(max(depth / baseline, 0.05), 0.99) if baseline > 0 else 0.5
    half = baseline - depth / 2.0
    left = k
    while left > 0 and smooth[left] < half:
        left -= 1
    right = k
    while right < n - 1 and smooth[right] < half:
        right += 1
    span = d[right] - d[left]
    width = span / FWHM_PER_SIGMA if span > 0 else (d[-1] - d[0]) / 6.0
    width = max(width, 2.0 * float(np.min(np.diff(d))) if n > 1 else width)
    return np.array([baseline, vis, center, width])


def _starts(guess):
    b, v, d0, w = guess
    return [
        np.array([b, v, d0, w]),
        np.array([b, v, d0, 0.5 * w]),
        np.array([b, v, d0, 2.0 * w]),
        np.array([b, 0.5, d0, w]),
    ]


def _chi_square_ld(params, d, counts, variance):
    # extended precision resolves the chi^2 bowl well below float64 round-off
    b, v, d0, w = (np.longdouble(p) for p in params)
    r = counts - b * (1 - v * np.exp(-((d - d0) ** 2) / (2 * w * w)))
    return np.sum(r * r / variance)


def _minimize(d, counts, variance, start, scale):
    """Nelder-Mead in scaled coordinates, restarted until the objective stops improving."""

    def objective(x):
        return chi_square(x * scale, d, counts, variance)

    x = start / scale
    best = objective(x)
    # chi^2 left by ~1e-12 relative parameter errors; below this the data are matched exactly
    floor = 1e-24 * (np.sum(counts * counts / variance) + 1.0)
    iterations = 0
    converged = False
    for _ in range(MAX_RESTARTS):
        res = minimize(
            objective, x, method="Nelder-Mead", bounds=_bounds(scale),
            options={"xatol": 1e-6, "fatol": 0.1 * REL_TOL * best + floor, "maxiter": 20000},
        )
        iterations += int(res.nit)
        improvement = best - res.fun
        if res.fun <= best:
            x, best = res.x, float(res.fun)
        if improvement <= REL_TOL * best + floor:
            converged = True
            break
    return x * scale, best, iterations, converged


def _bounds(scale):
    return [(0.0, None), (0.0, 1.0 / scale[1]), (None, None), (1e-12, None)]


def _chi_square_ld(params, d, counts, variance):
    # extended precision resolves the chi^2 bowl well below float64 round-off
    b, v, d0, w = (np.longdouble(p) for p in params)
    r = counts - b * (1 - v * np.exp(-((d - d0) ** 2) / (2 * w * w)))
    return np.sum(r * r / variance)


def _polish(d, counts, variance, params, scale, max_restarts=8):
    """Refine a converged optimum past float64 chi^2 resolution.

    Each restart minimizes chi^2 minus its value at the restart point, so the
    simplex sees small differences instead of a large offset.
    """
    d, counts, variance = (np.asarray(a, dtype=np.longdouble) for a in (d, counts, variance))
    x = params / scale
    best = _chi_square_ld(params, d, counts, variance)
    floor = 1e-24 * (float(np.sum(counts * counts / variance)) + 1.0)
    iterations = 0
    for _ in range(max_restarts):
        ref = best

        def objective(y, ref=ref):
            return float(_chi_square_ld(y * scale, d, counts, variance) - ref)

        # the float64 stage already sits within ~1e-6 of the optimum in scaled units
        simplex = np.vstack([x, x + 1e-4 * np.eye(x.size)])
        res = minimize(
            objective, x, method="Nelder-Mead", bounds=_bounds(scale),
            options={"xatol": 1e-11, "fatol": 1e-17 * float(ref) + floor, "maxiter": 20000,
                     "initial_simplex": simplex},
        )
        iterations += int(res.nit)
        if res.fun <= 0:
            x = res.x
            best = _chi_square_ld(x * scale, d, counts, variance)
        if -res.fun <= 1e-16 * float(best) + floor:
            break
    return x * scale, float(best), iterations


def _covariance(d, params, variance):
    jac = dip_jacobian(d, params)
    normal = jac.T @ (jac / variance[:, None])
    return np.linalg.pinv(normal)


def _flat_result(d, counts, variance):
    b = float(np.sum(counts / variance) / np.sum(1.0 / variance))
    center = float(0.5 * (d.min() + d.max()))
    width = float((d.max() - d.min()) / 6.0)
    # B and V errors with the dip shape pinned at mid-scan
    params = np.array([b, 0.0, center, width])
    jac = dip_jacobian(d, params)[:, :2]
    cov = np.linalg.pinv(jac.T @ (jac / variance[:, None]))
    dof = max(d.size - 1, 1)
    return FitResult(
        model=DipModel(b, 0.0, center, width),
        errors=DipModel(math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1]), math.nan, math.nan),
        reduced_chi2=chi_square(params, d, counts, variance) / dof,
        converged=True,
        iterations=0,
        n_points=d.size,
        flat=True,
    )


def _series(data, column="triples"):
    if hasattr(data, "path_um"):
        return np.asarray(data.path_um, dtype=float), np.asarray(getattr(data, column), dtype=float)
    d, counts = data
    return np.asarray(d, dtype=float), np.asarray(counts, dtype=float)


def fit_dip(data, column="triples", bootstrap=0, seed=0):
    """Fit a Gaussian dip to ``data``.

    ``data`` is a CountRecord (``column`` picks the counts) or a
    ``(position_um, counts)`` pair.  Returns a :class:`FitResult` whose errors
    come from the inverse Gauss-Newton normal matrix, or from a parametric
    Poisson bootstrap with ``bootstrap`` resamples when that is positive.
    Exactly flat data yields a result with ``flat=True`` and V pinned at 0.
    """
    d, counts = _series(data, column)
    if d.size != counts.size:
        raise ValueError("positions and counts differ in length")
    if d.size < 6:
        raise ValueError(f"need at least 6 data points, got {d.size}")
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(counts))) or np.any(counts < 0):
        raise ValueError("positions and counts must be finite and counts non-negative")
    variance = poisson_variance(counts)
    if np.all(counts == counts[0]):
        log.info("flat data: visibility pinned to 0")
        return _flat_result(d, counts, variance)

    guess = initial_guess(d, counts)
    if not np.any(np.abs(d - guess[2]) > 2.0 * guess[3]):
        raise ValueError("no data point lies beyond two expected widths from the dip; widen the scan")

    scale = np.array([max(guess[0], 1.0), 1.0, guess[3], guess[3]])
    best = None
    total_iter = 0
    for start in _starts(guess):
        params, chi2, iters, ok = _minimize(d, counts, variance, start, scale)
        total_iter += iters
        # strict < keeps the earliest start on ties
        if best is None or chi2 < best[1]:
            best = (params, chi2, ok)
    params, chi2, ok = best
    if ok:
        params, chi2, iters = _polish(d, counts, variance, params, scale)
        total_iter += iters
    params[3] = abs(params[3])
    model = DipModel(*params)
    dof = max(d.size - 4, 1)
    if bootstrap > 0:
        errors = _bootstrap_errors(d, model, bootstrap, seed)
    else:
        cov = _covariance(d, params, variance)
        errors = DipModel(*np.sqrt(np.clip(np.diag(cov), 0.0, None)))
    result = FitResult(model, errors, chi2 / dof, ok, total_iter, d.size)
    if not ok:
        raise NotConvergedError("dip fit did not converge after all restarts", result)
    return result


def _bootstrap_errors(d, model, n, seed):
    rng = np.random.default_rng(seed)
    mean = np.clip(model(d), 0.0, None)
    samples = []
    for _ in range(n):
        try:
            samples.append(fit_dip((d, rng.poisson(mean).astype(float))).model.as_array())
        except (FitError, ValueError):
            continue
    if len(samples) < 2:
        raise FitError("bootstrap produced fewer than two usable refits")
    return DipModel(*np.std(np.array(samples), axis=0, ddof=1))


def visibility_from_fit(result: FitResult):
    """(V, sigma_V) of a converged fit."""
    if not result.converged:
        raise FitError("visibility requested from an unconverged fit")
    return result.model.visibility, result.errors.visibility
