"""Forward simulation of the spin systems and weighted auxiliary processes.

Everything is driven by a single merged event stream: over n torus sites with
per-site death-clock rate 1 and per-site infection-clock rate y, events arrive
at total rate n*(1+y); each event picks a uniform site and is a death with
probability 1/(1+y), an infection attempt otherwise.  For the threshold model
y = lambda; for the classic model y = 2*d*lambda with an auxiliary uniform
neighbor choice, which realizes infection at rate lambda per infected neighbor.

Replicate r of a run with master seed s uses numpy's SeedSequence((s, r)), so
independent replicates are reproducible and order-free.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .lattice import Torus

MODELS = ("threshold", "classic")

# automatic rescale threshold for weight fields (positivity is all that
# matters downstream; see WeightField.log_scale)
_RENORM_CAP = 1e150


@dataclass(frozen=True)
class SimParams:
    """Simulation parameters for one forward run."""

    d: int
    lam: float
    model: str = "threshold"
    L: int = 8
    t_max: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.t_max < 0:
            raise ValueError("t_max must be >= 0")
        if self.L < 4 or self.L % 2 != 0:
            raise ValueError("L must be even and >= 4")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")

    @property
    def y_rate(self):
        """Per-site infection-clock rate."""
        return self.lam if self.model == "threshold" else 2.0 * self.d * self.lam

    def torus(self):
        return Torus(self.d, self.L)


def replicate_seed(master_seed, r):
    """SeedSequence for replicate r; documented mix of (master seed, r)."""
    return np.random.SeedSequence((int(master_seed), int(r)))


def generate_events(rng, n_sites, y_rate, t_max, degree):
    """Pre-generate the merged event stream on [0, t_max].

    Returns (times, sites, is_infection, neighbor_pick) sorted by time; the
    last time is guaranteed to exceed t_max so consumers never run dry.
    """
    rate = n_sites * (1.0 + y_rate)
    p_y = y_rate / (1.0 + y_rate)
    chunks_t, chunks_s, chunks_i, chunks_u = [], [], [], []
    total = 0.0
    mean = rate * t_max
    while total <= t_max:
        m = int(mean + 10.0 * np.sqrt(mean + 1.0) + 20.0)
        gaps = rng.exponential(1.0 / rate, size=m)
        t = total + np.cumsum(gaps)
        chunks_t.append(t)
        chunks_s.append(rng.integers(0, n_sites, size=m))
        chunks_i.append(rng.random(size=m) < p_y)
        chunks_u.append(rng.integers(0, degree, size=m))
        total = t[-1]
        mean = max(rate * (t_max - total), 64.0)
    return (
        np.concatenate(chunks_t),
        np.concatenate(chunks_s).astype(np.int64),
        np.concatenate(chunks_i),
        np.concatenate(chunks_u).astype(np.int64),
    )


def step_threshold(field, site, nbrs, is_infection):
    """One threshold-model event applied to a copy of the spin field."""
    out = field.copy()
    if not is_infection:
        out[site] = 0
    elif out[site] == 1 or out[nbrs[site]].any():
        out[site] = 1
    return out


def step_classic(field, site, nbrs, is_infection, pick):
    """One classic-model event (pick selects one of the 2d neighbors)."""
    out = field.copy()
    if not is_infection:
        out[site] = 0
    elif out[site] == 1 or out[nbrs[site, pick]] == 1:
        out[site] = 1
    return out


class WeightField:
    """Nonnegative weights with lazy global exponential drift.

    Between events every value grows by exp{(1-2*lambda*d)*dt}; we store a
    base value and last-touch time per site and reconstruct on demand, so an
    event costs O(1) instead of O(L^d).  When the drift is expansive the bases
    are occasionally rescaled by a recorded global factor; only signs and
    ratios are meaningful after that.
    """

    def __init__(self, init, drift_rate):
        init = np.asarray(init, dtype=np.float64)
        if (init < 0).any():
            raise ValueError("weights must be nonnegative")
        self.base = init.copy()
        self.last_t = np.zeros_like(self.base)
        self.drift = float(drift_rate)
        self.log_scale = 0.0

    def values(self, t):
        """Reconstructed values at query time t (up to exp(log_scale))."""
        v = self.base * np.exp(self.drift * (t - self.last_t))
        if (v < 0).any():
            raise FloatingPointError("negative reconstructed weight")
        return v

    def value(self, x, t):
        v = self.base[x] * np.exp(self.drift * (t - self.last_t[x]))
        if v < 0:
            raise FloatingPointError("negative reconstructed weight")
        return v

    def kill(self, x, t):
        self.base[x] = 0.0
        self.last_t[x] = t

    def infect_threshold(self, x, t, nbrs):
        """Y event: value(x) += sum of neighbor values, all at event time."""
        nb = nbrs[x]
        v = self.value(x, t) + self.base[nb] @ np.exp(self.drift * (t - self.last_t[nb]))
        self.base[x] = v
        self.last_t[x] = t
        self._maybe_rescale()

    def infect_classic(self, x, y, t):
        """Y event with selected neighbor y: value(x) += value(y)."""
        self.base[x] = self.value(x, t) + self.value(y, t)
        self.last_t[x] = t
        self._maybe_rescale()

    def _maybe_rescale(self):
        m = self.base.max()
        if m > _RENORM_CAP:
            self.base /= m
            self.log_scale += np.log(m)


def run_coupled(params, sample_times, init_weight=None):
    """Run the spin process and weight process off the identical event stream.

    The spin process starts from all-ones; the weight process from
    init_weight (default all-ones, must be strictly positive).  Returns a
    list of (t, spin copy, weight values) at the requested sample times.
    """
    torus = params.torus()
    nbrs = torus.neighbor_table()
    n = torus.n_sites
    if init_weight is None:
        init_weight = np.ones(n)
    init_weight = np.asarray(init_weight, dtype=np.float64)
    if (init_weight <= 0).any():
        raise ValueError("init_weight must be strictly positive everywhere")

    spin = np.ones(n, dtype=np.uint8)
    weight = WeightField(init_weight, 1.0 - 2.0 * params.lam * params.d)
    classic = params.model == "classic"

    rng = np.random.default_rng(replicate_seed(params.seed, 0))
    times, sites, infection, pick = generate_events(
        rng, n, params.y_rate, params.t_max, 2 * params.d
    )

    sample_times = np.sort(np.asarray(sample_times, dtype=np.float64))
    out = []
    si = 0
    for i in range(times.shape[0]):
        t = times[i]
        while si < len(sample_times) and sample_times[si] < t:
            s = sample_times[si]
            out.append((s, spin.copy(), weight.values(s)))
            si += 1
        if si >= len(sample_times) or t > params.t_max:
            break
        x = sites[i]
        if not infection[i]:
            spin[x] = 0
            weight.kill(x, t)
        elif classic:
            y = nbrs[x, pick[i]]
            if spin[x] == 1 or spin[y] == 1:
                spin[x] = 1
            weight.infect_classic(x, y, t)
        else:
            if spin[x] == 1 or spin[nbrs[x]].any():
                spin[x] = 1
            weight.infect_threshold(x, t, nbrs)
    for s in sample_times[si:]:
        out.append((s, spin.copy(), weight.values(s)))
    return out


def coupling_holds(trace):
    """Exact indicator equality sign(weight) == spin at every sampled (t, x)."""
    return all(((w > 0).astype(np.uint8) == spin).all() for _, spin, w in trace)


@njit(cache=True)
def _spin_kernel(field, times, sites, infection, pick, nbrs, classic, sample_times, out):
    n_samp = sample_times.shape[0]
    deg = nbrs.shape[1]
    si = 0
    for i in range(times.shape[0]):
        t = times[i]
        while si < n_samp and sample_times[si] < t:
            out[si] = field[0]
            si += 1
        if si >= n_samp:
            return
        x = sites[i]
        if not infection[i]:
            field[x] = 0
        elif classic:
            if field[nbrs[x, pick[i]]] == 1:
                field[x] = 1
        elif field[x] == 0:
            for j in range(deg):
                if field[nbrs[x, j]] == 1:
                    field[x] = 1
                    break
    while si < n_samp:
        out[si] = field[0]
        si += 1


def run_forward_once(params, sample_times, rng, init=None):
    """One forward replicate; returns the origin spin at each sample time."""
    torus = params.torus()
    nbrs = torus.neighbor_table()
    n = torus.n_sites
    field = np.ones(n, dtype=np.uint8) if init is None else init.astype(np.uint8).copy()
    sample_times = np.asarray(sample_times, dtype=np.float64)
    t_end = max(params.t_max, float(sample_times.max(initial=0.0)))
    times, sites, infection, pick = generate_events(rng, n, params.y_rate, t_end, 2 * params.d)
    out = np.zeros(sample_times.shape[0], dtype=np.uint8)
    _spin_kernel(
        field, times, sites, infection, pick, nbrs,
        params.model == "classic", sample_times, out,
    )
    return out


def run_forward(params, sample_times, replicates, init=None):
    """Monte Carlo over independent replicates of the origin occupation.

    Returns the per-time survivor counts k (origin infected) as int64; pair
    with `replicates` to build an estimate.SurvivalCurve.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    sample_times = np.sort(np.asarray(sample_times, dtype=np.float64))
    k = np.zeros(sample_times.shape[0], dtype=np.int64)
    for r in range(replicates):
        rng = np.random.default_rng(replicate_seed(params.seed, r))
        k += run_forward_once(params, sample_times, rng, init=init)
    return sample_times, k
