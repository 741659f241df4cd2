"""Set-valued dual processes on the unbounded lattice.

The dual front started from {O} stays finite almost surely, so it samples the
origin's infection probability P(eta_t(O)=1 | all-ones start) exactly on the
infinite lattice -- no torus truncation.  Threshold dual: delete a site at
rate 1, add all its neighbors at rate lambda.  Classic dual: the contact
dynamics itself (self-duality), delete at rate 1, give birth onto one uniform
neighbor at rate 2*d*lambda, with set semantics.
"""

import random

import numpy as np

from .engine import replicate_seed
from .estimate import SurvivalCurve
from .lattice import unbounded_neighbors


class DualFront:
    """Finite active set with O(1) uniform pick and deletion."""

    def __init__(self, sites):
        self._list = list(sites)
        self._pos = {s: i for i, s in enumerate(self._list)}

    def __len__(self):
        return len(self._list)

    def __contains__(self, s):
        return s in self._pos

    def sites(self):
        return set(self._list)

    def pick(self, rnd):
        return self._list[int(rnd.random() * len(self._list))]

    def remove(self, s):
        i = self._pos.pop(s)
        last = self._list.pop()
        if i < len(self._list):
            self._list[i] = last
            self._pos[last] = i

    def add(self, s):
        if s not in self._pos:
            self._pos[s] = len(self._list)
            self._list.append(s)


def step_dual_threshold(front, rnd, lam):
    """One Gillespie event; returns the time increment (front must be nonempty)."""
    if len(front) == 0:
        raise ValueError("step on empty dual front")
    total = (1.0 + lam) * len(front)
    dt = rnd.expovariate(total)
    x = front.pick(rnd)
    if rnd.random() < 1.0 / (1.0 + lam):
        front.remove(x)
    else:
        for y in unbounded_neighbors(x):
            front.add(y)
    return dt


def step_dual_classic(front, rnd, lam, d):
    """One classic-dual event: delete at rate 1 or birth onto one neighbor."""
    if len(front) == 0:
        raise ValueError("step on empty dual front")
    birth = 2.0 * d * lam
    total = (1.0 + birth) * len(front)
    dt = rnd.expovariate(total)
    x = front.pick(rnd)
    if rnd.random() < 1.0 / (1.0 + birth):
        front.remove(x)
    else:
        nb = unbounded_neighbors(x)
        front.add(nb[int(rnd.random() * len(nb))])
    return dt


def _replicate(lam, d, model, sample_times, rnd, record_size=False):
    """Simulate one dual replicate from {O}; record survival (or |A|) per time."""
    origin = (0,) * d
    front = DualFront([origin])
    classic = model == "classic"
    t = 0.0
    out = np.zeros(len(sample_times), dtype=np.int64)
    si = 0
    while si < len(sample_times):
        if len(front) == 0:
            break
        # draw the next event time first so times in (t, t+dt) see the
        # current front
        size = len(front)
        rate = (1.0 + (2.0 * d * lam if classic else lam)) * size
        dt = rnd.expovariate(rate)
        t_next = t + dt
        while si < len(sample_times) and sample_times[si] < t_next:
            out[si] = size if record_size else 1
            si += 1
        if si >= len(sample_times):
            break
        x = front.pick(rnd)
        if classic:
            if rnd.random() < 1.0 / (1.0 + 2.0 * d * lam):
                front.remove(x)
            else:
                nb = unbounded_neighbors(x)
                front.add(nb[int(rnd.random() * len(nb))])
        else:
            if rnd.random() < 1.0 / (1.0 + lam):
                front.remove(x)
            else:
                for y in unbounded_neighbors(x):
                    front.add(y)
        t = t_next
    return out


def _rng_for(seed, r):
    return random.Random(int(replicate_seed(seed, r).generate_state(1)[0]))


def survival_probability(lam, d, sample_times, replicates, model="threshold", seed=0):
    """Dual-based estimate of P(A_t != empty) = P(eta_t(O)=1 from all-ones)."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    sample_times = np.sort(np.asarray(sample_times, dtype=np.float64))
    k = np.zeros(len(sample_times), dtype=np.int64)
    for r in range(replicates):
        k += _replicate(lam, d, model, sample_times, _rng_for(seed, r))
    return SurvivalCurve(sample_times, replicates, k)


def mean_front_size(lam, d, sample_times, replicates, model="threshold", seed=0):
    """E|A_t| with standard errors (extinct replicates contribute 0)."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    sample_times = np.sort(np.asarray(sample_times, dtype=np.float64))
    tot = np.zeros(len(sample_times), dtype=np.float64)
    tot2 = np.zeros(len(sample_times), dtype=np.float64)
    for r in range(replicates):
        s = _replicate(lam, d, model, sample_times, _rng_for(seed, r), record_size=True)
        tot += s
        tot2 += s.astype(np.float64) ** 2
    mean = tot / replicates
    var = np.maximum(tot2 / replicates - mean**2, 0.0)
    se = np.sqrt(var / replicates)
    return sample_times, mean, se
