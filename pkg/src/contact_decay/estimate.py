"""Turn survival curves into decay-rate estimates with uncertainty.

Two estimators: the supremum characterization max_t (1/t) log p_hat(t)
(a downward-biased proxy for the true rate, which equals the sup by
supermultiplicativity) and a weighted log-linear tail regression.
"""

from dataclasses import dataclass

import numpy as np

# two-sided 95% normal quantile
_Z95 = 1.959963984540054


def wilson_interval(k, n, z=_Z95):
    """Wilson score interval for a binomial proportion; valid at small k."""
    k = np.asarray(k, dtype=np.float64)
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = (z / denom) * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return center - half, center + half


@dataclass
class SurvivalCurve:
    """Replicate-aggregated survival counts on a time grid."""

    times: np.ndarray
    n: int
    k: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.k = np.asarray(self.k, dtype=np.int64)
        if self.times.shape != self.k.shape:
            raise ValueError("times and k must have the same shape")
        if self.n < 1 or (self.k < 0).any() or (self.k > self.n).any():
            raise ValueError("need 0 <= k <= n")

    @property
    def p_hat(self):
        return self.k / self.n

    def ci(self, z=_Z95):
        return wilson_interval(self.k, self.n, z)

    def log_se(self):
        """Delta-method standard error of log p_hat (inf where k = 0)."""
        with np.errstate(divide="ignore"):
            return np.where(self.k > 0, np.sqrt((self.n - self.k) / (self.n * np.maximum(self.k, 1))), np.inf)


@dataclass
class DecayEstimate:
    rate: float
    se: float
    method: str  # "fekete-sup" | "tail-regression"
    window: tuple


def default_window(curve, t_lo=2.0, min_survivors=50):
    """[t_lo, t of last point with >= min_survivors survivors]."""
    ok = curve.k >= min_survivors
    if not ok.any():
        raise ValueError("no grid point has enough survivors for a window")
    t_hi = curve.times[ok].max()
    if t_hi <= t_lo:
        raise ValueError("window is empty; extend the time grid or replicates")
    return (t_lo, float(t_hi))


def _window_mask(curve, window):
    t_lo, t_hi = window
    m = (curve.times >= t_lo) & (curve.times <= t_hi) & (curve.times > 0)
    if (curve.k[m] == 0).any():
        raise ValueError("window contains a zero-survivor point; shorten the horizon")
    return m


def fekete_lower(curve, window=None):
    """max over the window of (1/t) log p_hat(t), with a conservative CI.

    By the sup characterization this sits below the true rate up to
    statistical error; the reported se comes from the Wilson interval of the
    maximizing point.
    """
    if window is None:
        window = default_window(curve)
    m = _window_mask(curve, window)
    if m.sum() < 1:
        raise ValueError("empty fit window")
    t = curve.times[m]
    vals = np.log(curve.p_hat[m]) / t
    i = int(np.argmax(vals))
    lo, hi = wilson_interval(curve.k[m][i], curve.n)
    se = (np.log(hi) - np.log(max(lo, 1e-300))) / (2 * _Z95 * t[i])
    return DecayEstimate(float(vals[i]), float(se), "fekete-sup", tuple(window))


def tail_regression(curve, window=None):
    """Weighted least-squares slope of log p_hat vs t over the window.

    Weights are inverse delta-method variances; the slope standard error is
    scaled by the weighted residual variance, so an exact exponential input
    reports se = 0.
    """
    if window is None:
        window = default_window(curve)
    m = _window_mask(curve, window)
    if m.sum() < 3:
        raise ValueError("need >= 3 grid points with survivors in the window")
    t = curve.times[m]
    y = np.log(curve.p_hat[m])
    var = (curve.n - curve.k[m]) / (curve.n * curve.k[m].astype(np.float64))
    w = np.where(var > 0, 1.0 / np.maximum(var, 1e-300), 1e300)
    tbar = np.sum(w * t) / np.sum(w)
    ybar = np.sum(w * y) / np.sum(w)
    sxx = np.sum(w * (t - tbar) ** 2)
    slope = np.sum(w * (t - tbar) * (y - ybar)) / sxx
    resid = y - ybar - slope * (t - tbar)
    chi2 = np.sum(w * resid**2)
    se = np.sqrt(max(chi2 / (m.sum() - 2), 0.0) / sxx)
    return DecayEstimate(float(slope), float(se), "tail-regression", tuple(window))


def supermultiplicativity_slack(curve, z_mult=3.0):
    """Worst slack of log p(t+s) >= log p(t) + log p(s) over grid pairs.

    Returns the minimum over pairs (with t+s on the grid and all three counts
    positive) of lhs - rhs + z_mult * combined SE; nonnegative means the
    supermultiplicative inequality holds within statistical tolerance.
    """
    times = curve.times
    logp = np.where(curve.k > 0, np.log(np.maximum(curve.p_hat, 1e-300)), np.nan)
    se = curve.log_se()
    index = {round(float(t), 9): i for i, t in enumerate(times)}
    worst = np.inf
    for i, t in enumerate(times):
        for j, s in enumerate(times):
            ts = round(float(t + s), 9)
            kk = index.get(ts)
            if kk is None:
                continue
            if curve.k[i] == 0 or curve.k[j] == 0 or curve.k[kk] == 0:
                continue
            comb = np.sqrt(se[i] ** 2 + se[j] ** 2 + se[kk] ** 2)
            slack = logp[kk] - (logp[i] + logp[j]) + z_mult * comb
            worst = min(worst, float(slack))
    return worst
