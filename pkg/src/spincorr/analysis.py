"""Quantum-classical difference measures, break times and least-squares fits.

Every fit here is an ordinary linear regression in transformed variables
(log for exponentials, ``1/sqrt(N)`` for scaling laws, ``log`` of the
system size for break-time laws). Fits are available both as plain
functions returning :class:`FitResult` and as small scikit-learn style
estimators built on ``BaseEstimator``.
"""

from dataclasses import dataclass, field
from math import log

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted


@dataclass(frozen=True)
class TimeSeries:
    t: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t)
        y = np.asarray(self.y, dtype=float)
        if t.shape != y.shape or t.ndim != 1:
            raise ValueError("t and y must be 1-D arrays of equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("t must be strictly increasing")
        if not np.all(np.isfinite(y)):
            raise ValueError("series contains non-finite values")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_values(cls, y, t0=0):
        y = np.asarray(y, dtype=float)
        return cls(np.arange(t0, t0 + y.size), y)


@dataclass
class FitResult:
    params: dict
    stderr: dict
    reduced_chi2: float
    window: tuple
    extra: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]


def _values(x):
    return x.y if isinstance(x, TimeSeries) else np.asarray(x, dtype=float)


def _times(x, t=None):
    if isinstance(x, TimeSeries):
        return x.t.astype(float)
    y = np.asarray(x)
    return np.arange(y.size, dtype=float) if t is None else np.asarray(t, dtype=float)


# ---------------------------------------------------------------- differences

def delta_Lz(q, c):
    """``|<L_z>_q - <L_z>_c|`` kick by kick."""
    return np.abs(_values(q) - _values(c))


def sigma_dist(q, c):
    """Root-mean-square bin-wise difference of two distributions on one label set."""
    pq = getattr(q, "probs", q)
    pc = getattr(c, "probs", c)
    pq, pc = np.asarray(pq, dtype=float), np.asarray(pc, dtype=float)
    if pq.shape != pc.shape:
        raise ValueError("distributions have different label sets")
    lq, lc = getattr(q, "labels", None), getattr(c, "labels", None)
    if lq is not None and lc is not None and not np.array_equal(lq, lc):
        raise ValueError("distributions have different labels")
    return float(np.sqrt(np.mean((pq - pc) ** 2)))


def relative_R(sigma, N):
    """Fluctuation size relative to the flat value ``1/N``."""
    return N * sigma


def break_time(series, p, t=None):
    """First kick whose value strictly exceeds ``p``, or ``None``."""
    y = _values(series)
    times = _times(series, t)
    hit = np.nonzero(y > p)[0]
    if hit.size == 0:
        return None
    return int(times[hit[0]])


def ehrenfest_diff(q, traj):
    """Magnitude of the gap between a quantum mean and a single trajectory."""
    return np.abs(_values(q) - _values(traj))


def invariant_violation(mean_vectors, l):
    """``|l^2 - |<L>|^2|`` for a series of mean spin vectors (absolute units)."""
    v = np.asarray(mean_vectors, dtype=float)
    return np.abs(l * l - np.einsum("...i,...i->...", v, v))


def ehrenfest_break_time(series, f, l, t=None):
    return break_time(series, f * l * l, t=t)


def saturation_time(l, lambda_w):
    """Kick at which an initially minimal variance reaches the system size."""
    return log(l) / (2.0 * lambda_w)


# ------------------------------------------------------------- regressions

def _linear_fit(x, y, intercept=True):
    """OLS of ``y`` on ``x``. Returns (coef, stderr, reduced chi^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    design = np.column_stack([x, np.ones_like(x)]) if intercept else x[:, None]
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    dof = y.size - design.shape[1]
    rss = float(resid @ resid)
    if dof > 0:
        s2 = rss / dof
        cov = s2 * np.linalg.pinv(design.T @ design)
        err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    else:
        s2 = float("nan")
        err = np.full(coef.size, np.inf)
    return coef, err, s2, rss


def fit_exponential(series, window=None, t=None):
    """Fit ``y = A exp(rate t)`` by regressing ``ln y`` over ``window`` (inclusive kicks)."""
    y = _values(series)
    times = _times(series, t)
    lo, hi = (times[0], times[-1]) if window is None else window
    sel = (times >= lo) & (times <= hi)
    if sel.sum() < 2:
        raise ValueError("exponential fit needs at least two points in the window")
    ys = y[sel]
    if np.any(ys <= 0):
        raise ValueError("exponential fit needs positive values")
    coef, err, s2, _ = _linear_fit(times[sel], np.log(ys))
    return FitResult(
        params={"rate": float(coef[0]), "amplitude": float(np.exp(coef[1]))},
        stderr={"rate": float(err[0]), "amplitude": float(np.exp(coef[1]) * err[1])},
        reduced_chi2=s2,
        window=(int(lo), int(hi)),
    )


def upper_envelope(series, period, t=None):
    """Block maxima over consecutive blocks of ``period`` kicks."""
    y = _values(series)
    times = _times(series, t)
    tt, yy = [], []
    for start in range(0, y.size, period):
        k = start + int(np.argmax(y[start:start + period]))
        tt.append(times[k])
        yy.append(y[k])
    return TimeSeries(np.array(tt), np.array(yy))


def fit_exponential_envelope(series, period, window=None, t=None):
    env = upper_envelope(series, period, t=t)
    res = fit_exponential(env, window=window)
    res.extra["envelope_period"] = period
    return res


def _anchored_rate(n, y, l):
    """Slope of ``ln(l y) = 2 lambda n`` through the origin, with its stderr."""
    coef, err, s2, _ = _linear_fit(n, np.log(l * y), intercept=False)
    return float(coef[0]) / 2, float(err[0]) / 2, s2


def fit_variance_growth(series, l, stop=None, anchored=True, max_iter=20):
    """Fit ``Delta L^2(n) ~ exp(2 lambda_w n) / l`` before saturation.

    With ``anchored`` the prefactor is held at the coherent-state value
    ``1/l``; otherwise it is a free parameter. Unless ``stop`` is given the
    window ``[0, stop]`` ends one kick before the saturation time implied by
    the current estimate, iterated from the first kick with ``y >= 1/2``.
    """
    y = _values(series)
    n = np.arange(y.size, dtype=float)

    def fit(hi):
        if anchored:
            lam, err, s2 = _anchored_rate(n[:hi + 1], y[:hi + 1], l)
            return lam, err, s2
        res = fit_exponential(y, window=(0, hi))
        return res.params["rate"] / 2, res.stderr["rate"] / 2, res.reduced_chi2

    if stop is None:
        above = np.nonzero(y >= 0.5)[0]
        hi = (above[0] if above.size else y.size) - 1
        hi = min(max(hi, 1), y.size - 1)
        visited = []
        for _ in range(max_iter):
            lam, err, s2 = fit(hi)
            visited.append(hi)
            if lam <= 0:
                break
            nxt = int(np.floor(saturation_time(l, lam))) - 1
            nxt = min(max(nxt, 1), y.size - 1)
            if nxt in visited:
                hi = nxt
                break
            hi = nxt
    else:
        hi = int(stop)
    lam, err, s2 = fit(hi)
    return FitResult(
        params={"lambda_w": lam, "rate": 2 * lam},
        stderr={"lambda_w": err, "rate": 2 * err},
        reduced_chi2=s2,
        window=(0, hi),
        extra={"anchored": anchored},
    )


def _log_law(x, times, label, scale):
    """``t = slope * x`` through the origin; reports ``rate = 1/(scale*slope)``."""
    x = np.asarray(x, dtype=float)
    times = np.asarray(times, dtype=float)
    coef, err, s2, _ = _linear_fit(x, times, intercept=False)
    slope = float(coef[0])
    rate = 1.0 / (scale * slope)
    return FitResult(
        params={label: rate, "slope": slope},
        stderr={label: float(err[0]) / (scale * slope * slope), "slope": float(err[0])},
        reduced_chi2=s2,
        window=(0, x.size - 1),
    )


def fit_break_law(l_values, t_b, p):
    """Regress ``t_b`` on ``ln(8 p l)`` through the origin; slope is ``1/lambda_qc``."""
    l_values = np.asarray(l_values, dtype=float)
    return _log_law(np.log(8.0 * p * l_values), t_b, "lambda_qc", 1.0)


def fit_ehrenfest_law(l_values, times, f):
    """Regress break times on ``ln(f l)`` through the origin; slope is ``1/(2 lambda)``."""
    l_values = np.asarray(l_values, dtype=float)
    return _log_law(np.log(f * l_values), times, "lambda", 2.0)


def fit_scaling(N_values, R_values):
    """Fit ``R = A/sqrt(N) + B`` and the one-parameter ``R = C/sqrt(N)``."""
    x = 1.0 / np.sqrt(np.asarray(N_values, dtype=float))
    R = np.asarray(R_values, dtype=float)
    coef, err, s2, rss = _linear_fit(x, R, intercept=True)
    coef1, err1, s21, rss1 = _linear_fit(x, R, intercept=False)
    return FitResult(
        params={"A": float(coef[0]), "B": float(coef[1]), "C": float(coef1[0])},
        stderr={"A": float(err[0]), "B": float(err[1]), "C": float(err1[0])},
        reduced_chi2=s2,
        window=(0, R.size - 1),
        extra={"rss_AB": rss, "rss_C": rss1, "reduced_chi2_C": s21},
    )


# ----------------------------------------------------- estimator wrappers

class _FitEstimator(RegressorMixin, BaseEstimator):
    def _x(self, X):
        X = np.asarray(X, dtype=float)
        return X[:, 0] if X.ndim == 2 else X

    def score(self, X, y, sample_weight=None):
        return super().score(np.asarray(X, dtype=float).reshape(-1, 1), y, sample_weight)


class ExponentialGrowth(_FitEstimator):
    """``y = A exp(rate t)`` fitted on ``[t_min, t_max]``; optional block-max envelope."""

    def __init__(self, t_min=None, t_max=None, envelope_period=None):
        self.t_min = t_min
        self.t_max = t_max
        self.envelope_period = envelope_period

    def fit(self, X, y):
        t = self._x(X)
        window = None
        if self.t_min is not None or self.t_max is not None:
            window = (t[0] if self.t_min is None else self.t_min,
                      t[-1] if self.t_max is None else self.t_max)
        if self.envelope_period:
            res = fit_exponential_envelope(np.asarray(y), self.envelope_period, window, t=t)
        else:
            res = fit_exponential(np.asarray(y), window=window, t=t)
        self.result_ = res
        self.rate_ = res.params["rate"]
        self.amplitude_ = res.params["amplitude"]
        return self

    def predict(self, X):
        check_is_fitted(self, "rate_")
        return self.amplitude_ * np.exp(self.rate_ * self._x(X))


class ScalingLaw(_FitEstimator):
    """``R = A/sqrt(N) + B``, or ``R = C/sqrt(N)`` when ``fit_intercept=False``."""

    def __init__(self, fit_intercept=True):
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        res = fit_scaling(self._x(X), y)
        self.result_ = res
        if self.fit_intercept:
            self.coef_, self.intercept_ = res.params["A"], res.params["B"]
        else:
            self.coef_, self.intercept_ = res.params["C"], 0.0
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return self.coef_ / np.sqrt(self._x(X)) + self.intercept_


class BreakTimeLaw(_FitEstimator):
    """Break times against system size: ``t_b = ln(8 p l) / lambda_qc``."""

    def __init__(self, p=0.1):
        self.p = p

    def fit(self, X, y):
        self.result_ = fit_break_law(self._x(X), y, self.p)
        self.lambda_qc_ = self.result_.params["lambda_qc"]
        return self

    def predict(self, X):
        check_is_fitted(self, "lambda_qc_")
        return np.log(8.0 * self.p * self._x(X)) / self.lambda_qc_


class EhrenfestLaw(_FitEstimator):
    """Ehrenfest break times: ``t = ln(f l) / (2 lambda)``."""

    def __init__(self, f=0.25):
        self.f = f

    def fit(self, X, y):
        self.result_ = fit_ehrenfest_law(self._x(X), y, self.f)
        self.lambda_ = self.result_.params["lambda"]
        return self

    def predict(self, X):
        check_is_fitted(self, "lambda_")
        return np.log(self.f * self._x(X)) / (2.0 * self.lambda_)
