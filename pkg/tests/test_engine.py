import numpy as np
import pytest

from contact_decay import engine
from contact_decay.engine import SimParams, WeightField, generate_events, step_classic, step_threshold


def test_params_validation():
    with pytest.raises(ValueError):
        SimParams(d=1, lam=-0.1)
    with pytest.raises(ValueError):
        SimParams(d=1, lam=0.1, L=7)
    with pytest.raises(ValueError):
        SimParams(d=1, lam=0.1, model="nope")


def test_event_stream_law():
    rng = np.random.default_rng(0)
    n, y = 4, 0.5
    t, s, inf, _ = generate_events(rng, n, y, 2000.0, 2)
    gaps = np.diff(np.concatenate([[0.0], t]))
    # merged rate is n*(1+y); infection fraction y/(1+y); sites uniform
    assert abs(gaps.mean() - 1.0 / (n * (1 + y))) < 3 * gaps.std() / np.sqrt(len(gaps))
    frac = inf.mean()
    assert abs(frac - y / (1 + y)) < 4 * np.sqrt(frac * (1 - frac) / len(inf))
    counts = np.bincount(s, minlength=n)
    assert counts.min() > 0.9 * len(s) / n


def test_event_stream_deterministic():
    a = generate_events(np.random.default_rng(42), 8, 0.3, 5.0, 2)
    b = generate_events(np.random.default_rng(42), 8, 0.3, 5.0, 2)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_step_threshold_rules():
    t = engine.SimParams(d=1, lam=0.2, L=8).torus()
    nbrs = t.neighbor_table()
    zeros = np.zeros(8, dtype=np.uint8)
    ones = np.ones(8, dtype=np.uint8)
    # delta_0 absorbing under infection attempts
    assert (step_threshold(zeros, 3, nbrs, True) == 0).all()
    # death is unconditional
    out = step_threshold(ones, 2, nbrs, False)
    assert out[2] == 0 and out.sum() == 7
    # threshold-one: catches from an adjacent 1, not from two steps away
    field = zeros.copy()
    field[3] = 1
    assert step_threshold(field, 4, nbrs, True)[4] == 1
    assert step_threshold(field, 5, nbrs, True)[5] == 0


def test_step_classic_neighbor_selection():
    t = engine.SimParams(d=1, lam=0.2, L=8).torus()
    nbrs = t.neighbor_table()
    field = np.zeros(8, dtype=np.uint8)
    field[3] = 1
    # pick 1 is -e1: site 4's -e1 neighbor is 3 (infected)
    assert step_classic(field, 4, nbrs, True, 1)[4] == 1
    assert step_classic(field, 4, nbrs, True, 0)[4] == 0
    assert (step_classic(np.zeros(8, np.uint8), 4, nbrs, True, 0) == 0).all()


def test_classic_below_threshold_shared_events():
    # same event stream: the classic rule infects only via the sampled
    # neighbor, so its configuration stays pointwise below the threshold rule
    params = SimParams(d=2, lam=0.3, model="classic", L=6, t_max=4.0, seed=3)
    torus = params.torus()
    nbrs = torus.neighbor_table()
    rng = np.random.default_rng(1)
    times, sites, inf, pick = generate_events(rng, torus.n_sites, params.y_rate, 4.0, 4)
    eta = np.ones(torus.n_sites, dtype=np.uint8)
    beta = np.ones(torus.n_sites, dtype=np.uint8)
    for i in range(len(times)):
        if times[i] > 4.0:
            break
        eta = step_threshold(eta, sites[i], nbrs, inf[i])
        beta = step_classic(beta, sites[i], nbrs, inf[i], pick[i])
        assert (beta <= eta).all()


def test_lambda_monotone_thinning_coupling():
    # dominating stream at lam_hi, shared thinning uniforms: the lam_lo
    # threshold process stays pointwise below the lam_hi one, pathwise
    lam_lo, lam_hi = 0.1, 0.3
    torus = SimParams(d=1, lam=lam_hi, L=16).torus()
    nbrs = torus.neighbor_table()
    rng = np.random.default_rng(7)
    times, sites, inf, _ = generate_events(rng, torus.n_sites, lam_hi, 3.0, 2)
    accept = rng.random(len(times)) < lam_lo / lam_hi
    lo = np.ones(torus.n_sites, dtype=np.uint8)
    hi = np.ones(torus.n_sites, dtype=np.uint8)
    for i in range(len(times)):
        if times[i] > 3.0:
            break
        hi = step_threshold(hi, sites[i], nbrs, inf[i])
        lo = step_threshold(lo, sites[i], nbrs, inf[i] and accept[i])
        assert (lo <= hi).all()


def test_weight_drift_single_site():
    # lone positive site, one Y event at time s: value is exp((1-2*lam*d)*s)
    lam, d, s = 0.2, 1, 0.7
    w = WeightField(np.array([0.0, 1.0, 0.0, 0.0]), 1 - 2 * lam * d)
    nbrs = engine.SimParams(d=1, lam=lam, L=4).torus().neighbor_table()
    w.infect_threshold(1, s, nbrs)
    assert w.value(1, s) == pytest.approx(np.exp((1 - 2 * lam * d) * s))


def test_weight_zero_absorbing_and_kill():
    w = WeightField(np.zeros(4), 0.5)
    nbrs = engine.SimParams(d=1, lam=0.25, L=4).torus().neighbor_table()
    w.infect_threshold(0, 1.0, nbrs)
    assert (w.values(5.0) == 0).all()
    w2 = WeightField(np.ones(4), 0.5)
    w2.kill(2, 0.3)
    assert w2.value(2, 9.0) == 0.0


def test_weight_negative_init_rejected():
    with pytest.raises(ValueError):
        WeightField(np.array([-1.0]), 0.0)


def test_coupling_exact_small():
    params = SimParams(d=2, lam=0.1, L=8, t_max=5.0, seed=11)
    trace = engine.run_coupled(params, np.linspace(0, 5, 11))
    assert engine.coupling_holds(trace)
    t0, spin0, w0 = trace[0]
    assert t0 == 0.0 and spin0.all() and (w0 > 0).all()


def test_run_coupled_requires_positive_init():
    params = SimParams(d=1, lam=0.1, L=4, t_max=1.0)
    with pytest.raises(ValueError):
        engine.run_coupled(params, [1.0], init_weight=np.zeros(4))


def test_forward_deterministic_and_t0():
    params = SimParams(d=1, lam=0.2, L=8, t_max=2.0, seed=9)
    t1, k1 = engine.run_forward(params, [0.0, 1.0, 2.0], 50)
    t2, k2 = engine.run_forward(params, [0.0, 1.0, 2.0], 50)
    assert np.array_equal(k1, k2)
    assert k1[0] == 50  # delta_1 start: origin occupied at t=0


def test_forward_kernel_matches_pure_steps():
    # same event arrays through the jit kernel and the pure step functions
    params = SimParams(d=1, lam=0.4, L=4, t_max=6.0, seed=13)
    torus = params.torus()
    nbrs = torus.neighbor_table()
    sample = np.linspace(0.0, 6.0, 13)
    for rep in range(10):
        rng = np.random.default_rng(engine.replicate_seed(13, rep))
        out = engine.run_forward_once(params, sample, rng)
        rng = np.random.default_rng(engine.replicate_seed(13, rep))
        times, sites, inf, pick = generate_events(rng, torus.n_sites, params.y_rate, 6.0, 2)
        field = np.ones(torus.n_sites, dtype=np.uint8)
        expected, si = [], 0
        for i in range(len(times)):
            while si < len(sample) and sample[si] < times[i]:
                expected.append(field[0])
                si += 1
            field = step_threshold(field, sites[i], nbrs, inf[i])
        expected.extend([field[0]] * (len(sample) - si))
        assert np.array_equal(out, np.array(expected, dtype=np.uint8))


def test_forward_pure_death_calibration():
    params = SimParams(d=1, lam=0.0, L=8, t_max=1.0, seed=21)
    n = 20000
    _, k = engine.run_forward(params, [1.0], n)
    p = k[0] / n
    assert abs(p - np.exp(-1)) < 4 * np.sqrt(np.exp(-1) * (1 - np.exp(-1)) / n)
