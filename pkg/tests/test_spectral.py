import math

import numpy as np
import pytest

from contact_decay import spectral
from contact_decay.killedwalk import KilledWalkSpec, hitting_solve
from contact_decay.spectral import (
    apply_moment_operator,
    eigencheck,
    heat_kernel_return,
    heat_kernel_return_box,
    k_function,
    limit_scan,
    moment_flow,
    rate_bounds,
    solve_fixed_point,
)


def r1d(p):
    return (1.0 - math.sqrt(1.0 - p * p)) / p


def k_oracle(lam, p):
    """Independent K for d=1 from the closed-form R."""
    r = r1d(p)
    return (4 * lam / p) * (1 - r) - 1 - 2 * lam * r


def fixed_point_oracle(lam, tol=1e-12):
    a, b = 1e-9, 1.0 - 1e-12
    while b - a > tol:
        m = 0.5 * (a + b)
        if k_oracle(lam, m) > 0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def test_k_value_example():
    val, err, _, _ = spectral._k_interval(0.2, 1, 0.5, "threshold",
                                          spectral.solver_r_provider(1), 1e-8)
    assert val == pytest.approx(k_oracle(0.2, 0.5), abs=1e-6)
    assert val == pytest.approx(0.064, abs=2e-3)
    assert err < 1e-6


def test_k_signs_near_endpoints():
    v_small = k_function(0.2, 1, 1e-3)[0]
    # p = 1 itself is recurrent in d = 1 (no certified R), so probe near it
    v_high = k_function(0.2, 1, 0.97)[0]
    assert v_small > 100  # diverges as p -> 0
    assert v_high < 0  # K < 0 near p = 1 when lambda < 1/(2d)


def test_k_decreasing():
    grid = np.linspace(0.1, 0.95, 9)
    vals = [k_function(0.2, 1, p)[0] for p in grid]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_fixed_point_matches_oracle_d1():
    fp = solve_fixed_point(0.2, 1)
    assert fp.p_star == pytest.approx(fixed_point_oracle(0.2), abs=5e-6)
    assert fp.mu == pytest.approx(4 * 0.2 * (1 / fp.p_star - 1), rel=1e-12)
    assert fp.mu == pytest.approx(0.743, abs=2e-3)
    assert fp.bracket[1] - fp.bracket[0] <= 1e-6 + 1e-12


def test_fixed_point_unique_root_on_grid():
    # K has a single sign change on a refinement grid
    fp = solve_fixed_point(0.15, 2)
    grid = np.linspace(0.05, 0.99, 24)
    signs = np.sign([k_function(0.15, 2, p, r_tol=1e-5)[0] for p in grid])
    changes = np.sum(np.abs(np.diff(signs)) > 0)
    assert changes == 1
    assert grid[np.argmin(signs > 0)] >= fp.p_star - 0.1


def test_fixed_point_precondition():
    with pytest.raises(ValueError):
        solve_fixed_point(0.5, 1)
    with pytest.raises(ValueError):
        solve_fixed_point(0.0, 1)


def test_rate_bounds_lambda_zero_exact():
    rb = rate_bounds(0.0, 3)
    assert rb.lower == -1.0 and rb.upper == -1.0


def test_rate_bounds_sandwich_d1():
    rb = rate_bounds(0.2, 1)
    assert rb.lower == pytest.approx(-0.743, abs=2e-3)
    assert rb.upper == pytest.approx(-0.6)
    assert rb.lower <= rb.upper


def test_rate_bounds_supercritical_warns():
    rb = rate_bounds(0.4, 2)
    assert rb.warning is not None
    assert rb.upper == pytest.approx(2 * 0.4 * 2 - 1)
    assert math.isnan(rb.lower)


def test_operator_rows_against_dense_d1():
    # dense reference built entry-by-entry from the row formulas
    lam, M = 0.3, 6
    n = 2 * M + 1
    G = np.zeros((n, n))
    for xi in range(n):
        x = xi - M
        if x != 0:
            G[xi, xi] = -4 * lam
            for y in (x - 1, x + 1):
                if abs(y) <= M:
                    G[xi, y + M] += 2 * lam
        else:
            G[xi, xi] = 1 - 2 * lam
            G[xi, 1 + M] += 2 * lam  # e1
            for z in (0, 2):  # z ~ e1, z != O -> only z = 2 in d=1
                if z != 0 and abs(z) <= M:
                    G[xi, z + M] += 2 * lam
    rng = np.random.default_rng(3)
    f = rng.random(n)
    assert np.allclose(apply_moment_operator(f, lam, 1), G @ f)


def test_operator_origin_row_classic():
    lam, M = 0.25, 4
    f = np.zeros(2 * M + 1)
    f[M] = 2.0
    f[M + 1] = 3.0
    out = apply_moment_operator(f, lam, 1, model="classic")
    assert out[M] == pytest.approx((1 - 2 * lam) * 2.0 + 4 * lam * 3.0)


def test_operator_lipschitz_bound():
    # |G z1 - G z2|_inf <= (1 + 8 lam d + 4 lam d^2) |z1 - z2|_inf
    rng = np.random.default_rng(7)
    for d, lam in ((1, 0.3), (2, 0.2)):
        bound = 1 + 8 * lam * d + 4 * lam * d * d
        shape = tuple(9 for _ in range(d))
        for _ in range(20):
            z1 = rng.uniform(-1, 1, shape)
            z2 = rng.uniform(-1, 1, shape)
            lhs = np.abs(apply_moment_operator(z1, lam, d)
                         - apply_moment_operator(z2, lam, d)).max()
            assert lhs <= bound * np.abs(z1 - z2).max() + 1e-12


def test_eigencheck_true_root_and_negative_control():
    fp = solve_fixed_point(0.2, 1)
    rep = eigencheck(fp)
    assert rep["residual_max"] <= rep["bound"]
    assert rep["residual_max"] <= 1e-5
    bad = eigencheck(fp, p_override=fp.p_star + 0.05)
    assert bad["residual_max"] > 100 * rep["residual_max"]


def test_eigencheck_residual_tracks_r_tolerance():
    fp = solve_fixed_point(0.2, 2)
    loose = eigencheck(fp, tol=1e-4)
    tight = eigencheck(fp, tol=1e-6)
    assert tight["residual_max"] < loose["residual_max"]


def test_moment_flow_zero_and_origin_derivative():
    t_grid = np.linspace(0, 1, 5)
    _, traj, _ = moment_flow(0.2, 1, np.zeros(41), t_grid)
    assert np.abs(traj).max() == 0.0
    # F0 = indicator of O: dF(O)/dt at 0+ is (1 - 2 lam d) F(O)
    F0 = np.zeros(41)
    F0[20] = 1.0
    eps = 1e-5
    _, traj, _ = moment_flow(0.2, 1, F0, np.array([0.0, eps]))
    assert (traj[1] - traj[0]) / eps == pytest.approx(1 - 2 * 0.2, rel=1e-3)


def test_moment_flow_eigen_growth():
    fp = solve_fixed_point(0.2, 1)
    sol = hitting_solve(KilledWalkSpec(1, fp.p_star), tol=1e-8, M0=64)
    H = 0.5 * (sol.lower + sol.upper)
    t_grid = np.linspace(0, 5, 11)
    _, traj, _ = moment_flow(0.2, 1, H, t_grid)
    rel = np.abs(traj / (H[sol.M] * np.exp(fp.mu * t_grid)) - 1.0)
    assert rel.max() <= 1e-4


def bessel_i0_oracle(x, terms=80):
    return sum((x / 2) ** (2 * k) / math.factorial(k) ** 2 for k in range(terms))


def test_heat_kernel_values():
    assert heat_kernel_return(0.5, 3, 0.0) == 1.0
    want = math.exp(-1.0) * bessel_i0_oracle(1.0)
    assert heat_kernel_return(0.5, 1, 1.0) == pytest.approx(want, rel=1e-12)
    assert heat_kernel_return(0.5, 1, 1.0) == pytest.approx(0.4658, abs=1e-4)


def test_heat_kernel_box_cross_check():
    for lam, d, t in ((0.5, 1, 1.0), (0.3, 2, 2.0), (0.2, 3, 1.5)):
        assert heat_kernel_return_box(lam, d, t) == pytest.approx(
            heat_kernel_return(lam, d, t), abs=1e-10)


def test_heat_kernel_diffusive_scaling():
    # p_t(O,O) * t^{d/2} stays bounded away from 0 (diffusive lower bound)
    for lam, d in ((0.5, 1), (0.3, 2)):
        ts = np.linspace(1, 50, 25)
        vals = np.array([heat_kernel_return(lam, d, t) * t ** (d / 2) for t in ts])
        assert vals.min() > 0.9 * (4 * math.pi * lam) ** (-d / 2)


def test_limit_scan_small():
    rows = limit_scan(0.25, [1, 2], model="threshold")
    c = 2.0 / 3.0
    assert all(r["upper"] == pytest.approx(-0.5) for r in rows)
    assert rows[0]["gap_p_to_c"] > rows[1]["gap_p_to_c"]
    assert rows[0]["p_star"] == pytest.approx(0.585, abs=5e-3)
    assert abs(rows[0]["p_star"] - c) == pytest.approx(rows[0]["gap_p_to_c"])


def test_limit_scan_validation():
    with pytest.raises(ValueError):
        limit_scan(0.6, [1])
    with pytest.raises(ValueError):
        limit_scan(0.25, [0])
