"""Hitting probability of the origin for the killed simple random walk.

R(x, d, p) is the probability that a discrete-time simple random walk on Z^d,
absorbed with probability 1-p per step, ever sits at the origin when started
at x.  It satisfies R(O)=1 and R(x) = (p/2d) * sum_{y~x} R(y) elsewhere.

The solver truncates to the box [-M, M]^d and closes it two ways: exterior
values 0 give a lower solution, exterior values 1 an upper one.  The true R
is bracketed pointwise, and M is doubled until the bracket at the requested
sites is within tolerance, giving a certified error.  For d >= 4 boxes are
infeasible and the Monte Carlo route is the default.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KilledWalkSpec:
    d: int
    p: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must be in [0, 1]")


@dataclass
class HittingSolution:
    """Bracketed R values on the box [-M, M]^d (arrays indexed by x + M)."""

    spec: KilledWalkSpec
    M: int
    lower: np.ndarray
    upper: np.ndarray

    def _idx(self, site):
        if len(site) != self.spec.d:
            raise ValueError("site dimension mismatch")
        if any(abs(c) > self.M for c in site):
            raise ValueError("site outside solved box")
        return tuple(c + self.M for c in site)

    def value(self, site):
        i = self._idx(site)
        return 0.5 * (self.lower[i] + self.upper[i])

    def error(self, site):
        i = self._idx(site)
        return 0.5 * (self.upper[i] - self.lower[i])

    @property
    def r_e1(self):
        e1 = (1,) + (0,) * (self.spec.d - 1)
        return self.value(e1), self.error(e1)


def _solve_box(d, p, M, boundary, tol_inner):
    """Jacobi iteration on the closed box; contraction factor p per sweep."""
    shape = tuple(2 * M + 3 for _ in range(d))
    arr = np.full(shape, boundary, dtype=np.float64)
    core = tuple(slice(1, -1) for _ in range(d))
    origin = tuple(M + 1 for _ in range(d))
    arr[core] = boundary
    arr[origin] = 1.0
    if p == 0.0:
        arr[core] = 0.0
        arr[origin] = 1.0
        return arr[core].copy()
    # iteration error <= p/(1-p) * last change
    gain = p / max(1.0 - p, 1e-12)
    for _ in range(200000):
        acc = np.zeros(tuple(2 * M + 1 for _ in range(d)))
        for ax in range(d):
            sl = [slice(1, -1)] * d
            sl[ax] = slice(2, None)
            acc += arr[tuple(sl)]
            sl[ax] = slice(0, -2)
            acc += arr[tuple(sl)]
        new = (p / (2.0 * d)) * acc
        new[tuple(M for _ in range(d))] = 1.0
        if boundary:
            np.minimum(new, 1.0, out=new)
        delta = np.abs(new - arr[core]).max()
        arr[core] = new
        if delta * gain <= tol_inner:
            break
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    return arr[core].copy()


def hitting_solve(spec, tol=1e-6, sites=None, M0=4, M_max=1024):
    """Certified R on a box: bracket width at `sites` (default e1) <= tol."""
    d, p = spec.d, spec.p
    if p >= 1.0 and d < 3:
        raise ValueError("p = 1 in d <= 2 is recurrent (R = 1); no truncation converges")
    if sites is None:
        sites = [(1,) + (0,) * (d - 1)]
    M = M0
    while M <= M_max:
        lower = _solve_box(d, p, M, 0.0, tol / 10.0)
        upper = _solve_box(d, p, M, 1.0, tol / 10.0)
        sol = HittingSolution(spec, M, lower, upper)
        if all(2.0 * sol.error(s) <= tol for s in sites):
            return sol
        M *= 2
    raise RuntimeError(
        f"no convergence within box radius {M_max}; p={p} too close to 1 for d={d}"
    )


def hitting_mc(spec, start=None, replicates=10**5, seed=0, max_steps=None):
    """Monte Carlo estimate of R(start, d, p); returns (p_hat, se).

    Independent oracle for hitting_solve; the default route for large d.
    max_steps caps walk length (needed only at p = 1); the residual alive
    fraction is counted as a miss, so at p < 1 the bias is below p^max_steps.
    """
    d, p = spec.d, spec.p
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    if start is None:
        start = (1,) + (0,) * (d - 1)
    if max_steps is None:
        if p >= 1.0:
            raise ValueError("p = 1 needs an explicit max_steps cap")
        max_steps = max(64, int(np.ceil(np.log(1e-12) / np.log(p))) if p > 0 else 1)
    if all(c == 0 for c in start):
        return 1.0, 0.0
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), spec.d, int(p * 1e12))))
    hits = 0
    batch = min(replicates, 1 << 20)
    done = 0
    while done < replicates:
        m = min(batch, replicates - done)
        pos = np.tile(np.asarray(start, dtype=np.int32), (m, 1))
        alive = np.ones(m, dtype=bool)
        for _ in range(max_steps):
            if not alive.any():
                break
            idx = np.nonzero(alive)[0]
            if p < 1.0:
                killed = rng.random(idx.shape[0]) >= p
                alive[idx[killed]] = False
                idx = idx[~killed]
                if idx.shape[0] == 0:
                    break
            ax = rng.integers(0, d, size=idx.shape[0])
            sgn = rng.integers(0, 2, size=idx.shape[0]) * 2 - 1
            pos[idx, ax] += sgn.astype(np.int32)
            at_origin = ~pos[idx].any(axis=1)
            if at_origin.any():
                hit_idx = idx[at_origin]
                hits += hit_idx.shape[0]
                alive[hit_idx] = False
        done += m
    p_hat = hits / replicates
    se = np.sqrt(max(p_hat * (1.0 - p_hat), 1.0 / replicates) / replicates)
    return p_hat, float(se)


def continuity_scan(d, p_grid, tol=1e-6):
    """R(e1, d, p) on a grid of p values; list of (p, value, error)."""
    out = []
    for p in p_grid:
        if p == 0.0:
            out.append((0.0, 0.0, 0.0))
            continue
        sol = hitting_solve(KilledWalkSpec(d, float(p)), tol=tol)
        v, e = sol.r_e1
        out.append((float(p), v, e))
    return out
