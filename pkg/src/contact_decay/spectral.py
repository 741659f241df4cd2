"""Second-moment operators, fixed-point bounds, and the large-d limit objects.

The second moments F_t(x) = E[zeta_t(O) zeta_t(x)] of the weighted process
solve dF/dt = G F, where G acts row-wise:

  off-origin x:   (Gf)(x) = -4*lam*d f(x) + 2*lam sum_{y~x} f(y)
  origin, threshold: (Gf)(O) = (1-2*lam*d) f(O) + 2*lam*d f(e1)
                               + 2*lam*d sum_{z~e1, z!=O} f(z)
  origin, classic:   (Gf)(O) = (1-2*lam*d) f(O) + 4*lam*d f(e1)

With H(x) = R(x, d, p) for the killed-walk hitting probability, harmonicity
makes every off-origin row an exact eigen-row with mu = 4*lam*d*(1/p - 1);
the origin row matches precisely at the unique root p* of K(p) = 0, which
yields the rigorous lower bound I >= -mu.  The upper bound 2*lam*d - 1 comes
from the first-moment differential inequality.  G is never materialized: its
action is the three formula branches above on a truncated box.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse, special
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply

from .killedwalk import KilledWalkSpec, hitting_mc, hitting_solve

# default certified error for solver-backed R and bisection bracket width
R_TOL = 1e-6
FP_TOL = 1e-6
ODE_RTOL = 1e-8


def apply_moment_operator(F, lam, d, model="threshold"):
    """Matrix-free action of G (or G-tilde) on a centered box, zero closure."""
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != d:
        raise ValueError("F must be a d-dimensional centered box")
    M = F.shape[0] // 2
    padded = np.pad(F, 1)
    core = tuple(slice(1, -1) for _ in range(d))
    S = np.zeros_like(F)
    for ax in range(d):
        sl = [slice(1, -1)] * d
        sl[ax] = slice(2, None)
        S += padded[tuple(sl)]
        sl[ax] = slice(0, -2)
        S += padded[tuple(sl)]
    out = -4.0 * lam * d * F + 2.0 * lam * S
    O = tuple(M for _ in range(d))
    e1 = (M + 1,) + (M,) * (d - 1)
    if model == "threshold":
        # sum over z~e1, z != O equals (neighbor sum at e1) - F(O)
        out[O] = (1 - 2 * lam * d) * F[O] + 2 * lam * d * F[e1] + 2 * lam * d * (S[e1] - F[O])
    elif model == "classic":
        out[O] = (1 - 2 * lam * d) * F[O] + 4 * lam * d * F[e1]
    else:
        raise ValueError("model must be 'threshold' or 'classic'")
    return out


def solver_r_provider(d):
    """R(e1, d, p) via the bracketing box solver; returns (value, error)."""

    def evaluate(p, tol):
        v, e = hitting_solve(KilledWalkSpec(d, p), tol=tol).r_e1
        return v, e

    return evaluate


def mc_r_provider(d, seed=0, floor=2e-4, n_cap=1 << 23):
    """R(e1, d, p) via Monte Carlo walks, for d where boxes are infeasible.

    Returns (value, error) with error = 3 standard errors; replicates grow
    until that is below the requested tolerance.  The floor stops refinement
    requests from demanding an unaffordable number of walks.
    """

    def evaluate(p, tol):
        target = max(tol, floor)
        n = 1 << 16
        while True:
            v, se = hitting_mc(KilledWalkSpec(d, p), replicates=n, seed=seed)
            if 3.0 * se <= target or n >= n_cap:
                return v, 3.0 * se
            n *= 4

    return evaluate


def default_r_provider(d, seed=0):
    return solver_r_provider(d) if d <= 3 else mc_r_provider(d, seed=seed)


def k_function(lam, d, p, r_provider=None, r_tol=R_TOL):
    """K(p) (threshold) with the certified R error propagated to an interval.

    K(p) = (4*lam*d/p) * (1 - d*R(e1,d,p)) - 1 - 2*lam*d*R(e1,d,p); K is
    continuous and decreasing on (0, 1], positive near 0 and negative at 1
    whenever lam < 1/(2d), so it has a unique root.
    """
    return _k_interval(lam, d, p, "threshold", r_provider or default_r_provider(d), r_tol)


def _k_interval(lam, d, p, model, r_provider, r_tol):
    if not 0.0 < p <= 1.0:
        raise ValueError("p must be in (0, 1]")
    r, r_err = r_provider(p, r_tol)
    if model == "threshold":
        val = (4 * lam * d / p) * (1 - d * r) - 1 - 2 * lam * d * r
        sens = 4 * lam * d * d / p + 2 * lam * d
    else:
        val = 4 * lam * d / p - 2 * lam * d - 1 - 4 * lam * d * r
        sens = 4 * lam * d
    return val, sens * r_err, r, r_err


@dataclass
class FixedPointResult:
    model: str
    lam: float
    d: int
    p_star: float
    mu: float
    r_e1: float
    r_error: float
    bracket: tuple
    k_interval: tuple  # (K(p_star), propagated error)


def solve_fixed_point(lam, d, model="threshold", tol=FP_TOL, r_provider=None, r_tol=R_TOL):
    """Bisect the decreasing K (or K-tilde) on (0, 1) to bracket width <= tol.

    Requires 0 < lam < 1/(2d).  When the K interval at a midpoint straddles 0
    the R tolerance is refined and the point re-evaluated; if it still cannot
    be signed the midpoint is within the achievable accuracy of the root and
    is accepted.
    """
    if not 0.0 < lam < 1.0 / (2.0 * d):
        raise ValueError("fixed point requires 0 < lambda < 1/(2d)")
    if r_provider is None:
        r_provider = default_r_provider(d)
    a, b = 0.0, 1.0  # sign(K) known at both ends from theory; never evaluated
    p_mid, k_mid, k_err, r_mid, r_err = 0.5, np.nan, np.nan, np.nan, np.nan
    while b - a > tol:
        p_mid = 0.5 * (a + b)
        rt = r_tol
        k_mid, k_err, r_mid, r_err = _k_interval(lam, d, p_mid, model, r_provider, rt)
        while abs(k_mid) <= k_err and rt > r_tol / 100.0:
            rt /= 10.0
            k_mid, k_err, r_mid, r_err = _k_interval(lam, d, p_mid, model, r_provider, rt)
        if abs(k_mid) <= k_err:
            # root indistinguishable from p_mid at achievable R accuracy
            a = max(a, p_mid - 0.5 * tol)
            b = min(b, p_mid + 0.5 * tol)
            break
        if k_mid > 0:
            a = p_mid
        else:
            b = p_mid
    p_star = 0.5 * (a + b)
    if np.isnan(r_mid):
        k_mid, k_err, r_mid, r_err = _k_interval(lam, d, p_star, model, r_provider, r_tol)
    mu = 4.0 * lam * d * (1.0 / p_star - 1.0)
    return FixedPointResult(model, lam, d, p_star, mu, r_mid, r_err, (a, b), (k_mid, k_err))


@dataclass
class RateBounds:
    lam: float
    d: int
    model: str
    lower: float  # -mu, or nan when lam >= 1/(2d)
    upper: float  # 2*lam*d - 1
    fixed_point: FixedPointResult | None
    warning: str | None = None


def rate_bounds(lam, d, model="threshold", tol=FP_TOL, r_provider=None):
    """Rigorous sandwich [-mu, 2*lam*d - 1] for the decay rate; exact at lam=0."""
    if lam == 0.0:
        return RateBounds(lam, d, model, -1.0, -1.0, None)
    upper = 2.0 * lam * d - 1.0
    if lam >= 1.0 / (2.0 * d):
        return RateBounds(
            lam, d, model, float("nan"), upper, None,
            warning="lambda >= 1/(2d): lower bound precondition fails; upper bound only",
        )
    fp = solve_fixed_point(lam, d, model=model, tol=tol, r_provider=r_provider)
    return RateBounds(lam, d, model, -fp.mu, upper, fp)


def eigencheck(result, tol=R_TOL, p_override=None):
    """Residual report for G H = mu H with H(x) = R(x, d, p*).

    Solves R on a certified box, applies the operator on the certified
    interior (sites whose own and neighbor brackets are within tol, excluding
    the outermost ring), and reports the max |GH - mu H| together with the
    analytic bound from the R error and the K interval at the root.
    p_override perturbs the root (negative control: the origin row residual
    then equals |K(p_override)| which is far from 0).
    """
    d, lam = result.d, result.lam
    p = result.p_star if p_override is None else p_override
    sol = hitting_solve(KilledWalkSpec(d, p), tol=tol)
    H = 0.5 * (sol.lower + sol.upper)
    err = 0.5 * (sol.upper - sol.lower)
    mu = 4.0 * lam * d * (1.0 / p - 1.0)
    GH = apply_moment_operator(H, lam, d, model=result.model)
    resid = np.abs(GH - mu * H)

    ok = err <= tol
    # erode by one: every neighbor must be certified too, and drop the
    # outermost ring where the zero closure clips real neighbors
    padded = np.pad(ok, 1, constant_values=False)
    interior = ok.copy()
    for ax in range(d):
        sl = [slice(1, -1)] * d
        sl[ax] = slice(2, None)
        interior &= padded[tuple(sl)]
        sl[ax] = slice(0, -2)
        interior &= padded[tuple(sl)]
    ring = [slice(1, -1)] * d
    trimmed = np.zeros_like(interior)
    trimmed[tuple(ring)] = interior[tuple(ring)]
    eps = float(err[trimmed].max()) if trimmed.any() else float("nan")
    k_abs = abs(result.k_interval[0]) + result.k_interval[1] if p_override is None else float("inf")
    bound = (8.0 * lam * d + 4.0 * lam * d * d + mu + 1.0) * eps + min(k_abs, 1e9)
    return {
        "residual_max": float(resid[trimmed].max()),
        "bound": float(bound),
        "n_sites": int(trimmed.sum()),
        "mu": mu,
        "p": p,
        "box_radius": sol.M,
    }


def moment_flow(lam, d, F0, t_grid, model="threshold", rtol=ODE_RTOL):
    """Integrate dF/dt = G F on the box of F0 (zero closure).

    Returns (t_grid, F(O) trajectory, final box).  Row sums of G are bounded
    by 1 + 8*lam*d + 4*lam*d^2, so the system is non-stiff at desk scales and
    an explicit adaptive Runge-Kutta scheme is appropriate.
    """
    F0 = np.asarray(F0, dtype=np.float64)
    shape = F0.shape
    M = shape[0] // 2
    O_flat = np.ravel_multi_index(tuple(M for _ in range(d)), shape)

    def rhs(_, y):
        return apply_moment_operator(y.reshape(shape), lam, d, model=model).ravel()

    t_grid = np.asarray(t_grid, dtype=np.float64)
    scale = max(np.abs(F0).max(), 1.0)
    res = solve_ivp(
        rhs, (float(t_grid[0]), float(t_grid[-1])), F0.ravel(),
        t_eval=t_grid, rtol=rtol, atol=1e-14 * scale, method="RK45",
    )
    if not res.success:
        raise RuntimeError(f"moment flow integration failed: {res.message}")
    return t_grid, res.y[O_flat, :], res.y[:, -1].reshape(shape)


def heat_kernel_return(lam, d, t):
    """p_t(O, O) of the rate-lambda-per-edge walk: (e^{-2 lam t} I_0(2 lam t))^d."""
    if t < 0:
        raise ValueError("t must be >= 0")
    # ive is the exponentially scaled Bessel I, exactly the per-coordinate factor
    return float(special.ive(0, 2.0 * lam * t) ** d)


def heat_kernel_return_box(lam, d, t, M=None):
    """Cross-check of heat_kernel_return via expm on a truncated box."""
    if M is None:
        M = int(np.ceil(4.0 * lam * t + 10.0 * np.sqrt(2.0 * lam * t + 1.0) + 10))
    side = 2 * M + 1
    ad1 = sparse.diags([np.ones(side - 1), np.ones(side - 1)], [1, -1], format="csr")
    adj = ad1
    for _ in range(d - 1):
        adj = sparse.kronsum(adj, ad1, format="csr")
    Q = lam * adj - 2.0 * lam * d * sparse.identity(side**d, format="csr")
    v = np.zeros(side**d)
    O_flat = np.ravel_multi_index(tuple(M for _ in range(d)), tuple(side for _ in range(d)))
    v[O_flat] = 1.0
    return float(expm_multiply(Q * t, v)[O_flat])


def limit_scan(lam, d_list, model="threshold", tol=FP_TOL, seed=0):
    """Fixed point and sandwich at scaled infection rate lam/d for each d.

    At rate lam/d the upper bound is identically 2*lam - 1 and the lower is
    -4*lam*(1/p - 1); reports gaps to the limit objects c(lam) = 4*lam/(1+2*lam)
    and 2*lam - 1.
    """
    if not 0.0 < lam < 0.5:
        raise ValueError("limit scan requires lambda in (0, 1/2)")
    c_lam = 4.0 * lam / (1.0 + 2.0 * lam)
    rows = []
    for d in d_list:
        if d < 1:
            raise ValueError("each d must be >= 1")
        lam_d = lam / d
        if d <= 3:
            fp = solve_fixed_point(lam_d, d, model=model, tol=tol,
                                   r_provider=solver_r_provider(d))
        else:
            # MC-backed R limits achievable accuracy; a tighter bracket than
            # the statistical fuzz of K would only waste walks
            fp = solve_fixed_point(lam_d, d, model=model, tol=max(tol, 1e-3),
                                   r_provider=mc_r_provider(d, seed=seed), r_tol=1e-3)
        lower = -fp.mu  # equals -4*lam*(1/p - 1) since lam_d * d = lam
        upper = 2.0 * lam - 1.0
        rows.append({
            "d": int(d),
            "lambda_scaled": lam_d,
            "p_star": fp.p_star,
            "r_e1": fp.r_e1,
            "r_error": fp.r_error,
            "lower": lower,
            "upper": upper,
            "gap_p_to_c": abs(fp.p_star - c_lam),
            "gap_lower_to_limit": abs(lower - (2.0 * lam - 1.0)),
        })
    return rows
