"""Certificate and limit-experiment tests.

Closed-form certificates are cross-checked against 50-digit mpmath
reevaluations; experiment runners are checked against their own analytic
tail bounds and against worked small cases.
"""

import math

import mpmath as mp
import numpy as np
import pytest

import rieszfrac as rf

D_CANTOR = math.log(2.0) / math.log(3.0)


# ------------------------------------------------------------ gap certificate

def test_gap_certificate_thin_fractal(thin_uniform):
    cert = rf.gap_certificate(thin_uniform, s=4.0)
    assert cert.M == 2 and cert.r == 0.1
    assert cert.sigma == pytest.approx(0.8, rel=1e-14)
    assert cert.R == pytest.approx(0.4806982197421137, rel=1e-14)
    assert cert.threshold_defined
    assert cert.s_threshold == pytest.approx(3.392291746614547, rel=1e-13)
    # s = 4 exceeds the threshold so the gap is certified
    assert cert.ratio < 1.0 and cert.certified


def test_gap_certificate_matches_high_precision(thin_uniform):
    cert = rf.gap_certificate(thin_uniform, s=4.0)
    with mp.workdps(50):
        r = mp.mpf(1) / 10
        M = 2
        d = mp.log(2) / mp.log(10)
        sigma = mp.mpf(8) / 10
        R = (r / sigma) * (1 + r ** d) ** (1 / d)
        thr = max(2 * d, mp.log(2 * M * (M + 1)) / mp.log(1 / R))
        assert abs(cert.R - float(R)) < 1e-14
        assert abs(cert.s_threshold - float(thr)) < 1e-13


def test_gap_certificate_ternary_unresolved(cantor13):
    # R > 1 for the middle-thirds set, so the threshold is undefined and
    # the closed-form route certifies nothing
    cert = rf.gap_certificate(cantor13, s=4.0)
    assert cert.R == pytest.approx(1.9015074982303726, rel=1e-14)
    assert not cert.threshold_defined
    assert math.isnan(cert.s_threshold)
    assert not cert.certified


def test_gap_certificate_below_dimension_is_inf(cantor13):
    cert = rf.gap_certificate(cantor13, s=0.5 * cantor13.dimension)
    assert math.isinf(cert.ratio)
    assert not cert.certified


def test_gap_certificate_validation(cantor13, mixed_fractal):
    with pytest.raises(rf.DomainError):
        rf.gap_certificate(cantor13, s=0.0)
    with pytest.raises(rf.HypothesisError):
        rf.gap_certificate(mixed_fractal, s=3.0)


# ------------------------------------------------------------ ternary ratios

def test_cantor_gap_ratio_at_three_d():
    # (3/4)^3 * 4/3 * 3/2 = 27/32 exactly
    rep = rf.cantor_gap_check(3.0 * D_CANTOR)
    assert abs(rep.ratio - 0.84375) < 1e-12
    assert rep.certified and rep.defined


def test_cantor_gap_ordered_convention_invariance():
    # doubling both the seed energy and the pigeonhole pair count cancels
    for mult in (1.5, 2.0, 3.0, 5.0, 8.0):
        rep = rf.cantor_gap_check(mult * D_CANTOR)
        assert rep.ordered_ratio == pytest.approx(rep.ratio, rel=1e-12)


def test_cantor_gap_grid():
    mult = 3.0
    while mult <= 10.0 + 1e-9:
        assert rf.cantor_gap_check(mult * D_CANTOR).ratio < 1.0
        mult += 0.5
    assert rf.cantor_gap_check(1.1 * D_CANTOR).ratio > 1.0


def test_cantor_gap_monotone_decreasing_in_s():
    vals = [rf.cantor_gap_check(m * D_CANTOR).ratio for m in (3, 4, 6, 10)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_cantor_gap_below_dimension():
    rep = rf.cantor_gap_check(0.9 * D_CANTOR)
    assert not rep.defined and math.isinf(rep.ratio)
    with pytest.raises(rf.DomainError):
        rf.cantor_gap_check(0.0)


# --------------------------------------------------------- pigeonhole / tails

def test_pigeonhole_bound_value(cantor13):
    # t = 3 at s = 3d: M^3 * (M^k)^4
    s = 3.0 * D_CANTOR
    assert rf.pigeonhole_bound(cantor13, 0, s) == pytest.approx(8.0, rel=1e-12)
    assert rf.pigeonhole_bound(cantor13, 2, s) == pytest.approx(
        8.0 * 4 ** 4, rel=1e-12)


def test_pigeonhole_bound_holds_for_minimizers(cantor13):
    # any 3*2^k points leave two in a shared depth-(k+1) cell
    s = 3.0 * D_CANTOR
    opts = rf.SearchOptions(seed=0, restarts=2, strategy="lift-seeded")
    for k in (0, 1, 2):
        N = 3 * 2 ** k
        res = rf.local_search_minimize(cantor13, N, s, opts)
        assert res.record.energy >= rf.pigeonhole_bound(cantor13, k, s)


def test_pigeonhole_validation(cantor13, mixed_fractal):
    with pytest.raises(rf.DomainError):
        rf.pigeonhole_bound(cantor13, -1, 3.0)
    with pytest.raises(rf.HypothesisError):
        rf.pigeonhole_bound(cantor13, 1, 0.5 * D_CANTOR)
    with pytest.raises(rf.HypothesisError):
        rf.pigeonhole_bound(mixed_fractal, 1, 3.0)


def test_tail_bound_values(cantor13):
    # closed form n^(1-t) sigma^(-s) / (2^(t-1) - 1) at s = 3
    s = 3.0
    t = s / D_CANTOR
    expected = 8.0 ** (1.0 - t) * 27.0 / (2.0 ** (t - 1.0) - 1.0)
    assert rf.tail_bound(cantor13, s, 8) == pytest.approx(expected, rel=1e-12)
    assert rf.tail_bound(cantor13, s, 8) == pytest.approx(
        8.779149519890243e-4, rel=1e-12)


def test_tail_bound_decreasing_in_n(cantor13):
    vals = [rf.tail_bound(cantor13, 3.0, n) for n in (1, 2, 4, 8, 16)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_iterated_lift_bound_dominates_chain(cantor13):
    s = 3.0
    chain = rf.lift_chain(cantor13, s, n0=2, k=4, polish=False)
    base = chain[0].record.energy
    for k, stage in enumerate(chain):
        bound = rf.iterated_lift_bound(cantor13, s, base, 2, k)
        assert stage.record.energy <= bound * (1.0 + 1e-9)


# ------------------------------------------------------- simplex optimization

def test_beta_objective_uniform_vector():
    # beta = (1/3,..) against R = (.6,.2,.2) at t = 3:
    # (1/81)(0.6^-3 + 2 * 0.2^-3)
    val = rf.beta_objective([1 / 3] * 3, [0.6, 0.2, 0.2], s=3.0, d=1.0)
    expected = (0.6 ** -3 + 2 * 0.2 ** -3) / 81.0
    assert val == pytest.approx(expected, rel=1e-13)


def test_beta_objective_at_r_is_one(rng):
    for _ in range(20):
        m = int(rng.integers(2, 6))
        R = rng.random(m) + 0.05
        R /= R.sum()
        t_mult = float(rng.uniform(1.1, 4.0))
        assert rf.beta_objective(R, R, s=t_mult, d=1.0) == pytest.approx(
            1.0, rel=1e-12)


def test_beta_optimum_examples():
    beta, value = rf.beta_optimum([0.6, 0.2, 0.2], s=3.0, d=1.0)
    assert value == pytest.approx(1.0, abs=1e-9)
    assert np.max(np.abs(beta - np.array([0.6, 0.2, 0.2]))) < 1e-7
    beta, value = rf.beta_optimum([0.5, 0.5], s=1.5, d=1.0)
    assert value == pytest.approx(1.0, abs=1e-9)
    assert np.max(np.abs(beta - 0.5)) < 1e-7


def test_beta_optimum_random_simplexes(rng):
    for _ in range(30):
        m = int(rng.integers(2, 6))
        R = rng.random(m) + 0.05
        R /= R.sum()
        s_over_d = float(rng.choice([1.5, 3.0]))
        beta, value = rf.beta_optimum(R, s=s_over_d, d=1.0)
        assert abs(value - 1.0) <= 1e-9
        assert float(np.max(np.abs(beta - R))) <= 1e-7


def test_beta_objective_never_below_one(rng):
    # the simplex minimum sits at beta = R, so random feasible points
    # can only evaluate at or above 1
    for _ in range(50):
        m = int(rng.integers(2, 7))
        R = rng.random(m) + 0.05
        R /= R.sum()
        beta = rng.random(m) + 1e-3
        beta /= beta.sum()
        val = rf.beta_objective(beta, R, s=2.5, d=1.0)
        assert val >= 1.0 - 1e-12


def test_beta_objective_convex(rng):
    for _ in range(20):
        R = rng.random(3) + 0.05
        R /= R.sum()
        b1 = rng.random(3) + 1e-3
        b1 /= b1.sum()
        b2 = rng.random(3) + 1e-3
        b2 /= b2.sum()
        mid = rf.beta_objective(0.5 * (b1 + b2), R, s=3.0, d=1.0)
        avg = 0.5 * (rf.beta_objective(b1, R, s=3.0, d=1.0)
                     + rf.beta_objective(b2, R, s=3.0, d=1.0))
        assert mid <= avg * (1.0 + 1e-12)


def test_beta_optimum_validation():
    with pytest.raises(rf.DomainError):
        rf.beta_optimum([0.5, 0.6], s=3.0, d=1.0)   # does not sum to 1
    with pytest.raises(rf.DomainError):
        rf.beta_optimum([1.0, 0.0], s=3.0, d=1.0)   # zero entry
    with pytest.raises(rf.DomainError):
        rf.beta_optimum([0.5, 0.5], s=0.5, d=1.0)   # s <= d


# ---------------------------------------------------------- geometric limits

def test_geometric_limit_cantor(cantor13):
    opts = rf.SearchOptions(seed=0, restarts=2, strategy="lift-seeded")
    rep = rf.geometric_limit(cantor13, 3.0, n0=2, k_max=6, opts=opts)
    assert rep.n_values == (2, 4, 8, 16, 32, 64, 128)
    assert rep.limit_estimate == pytest.approx(0.0621132, rel=1e-4)
    assert rep.limit_estimate == rep.normalized[-1]
    assert len(rep.deltas) == 6 and len(rep.stages) == 7
    # diagnostics shrink as the subsequence converges
    assert rep.deltas[-1] < rep.deltas[0]


def test_geometric_limit_raw_deltas_obey_tail(cantor13):
    rep = rf.geometric_limit(cantor13, 3.0, n0=2, k_max=5, polish=False)
    assert not rep.polish
    for j in range(5):
        assert rep.deltas[j] <= rep.tail_bounds[j] * (1.0 + 1e-9)


def test_geometric_limit_normalized_bounded_by_seed_plus_tail(cantor13):
    rep = rf.geometric_limit(cantor13, 3.0, n0=2, k_max=6, polish=False)
    cap = rep.normalized[0] + rep.tail_bounds[0]
    for val in rep.normalized:
        assert val <= cap * (1.0 + 1e-9)


def test_geometric_limit_validation(cantor13, mixed_fractal):
    with pytest.raises(rf.HypothesisError):
        rf.geometric_limit(cantor13, 0.5 * D_CANTOR, n0=2, k_max=2)
    with pytest.raises(rf.HypothesisError):
        rf.geometric_limit(mixed_fractal, 3.0, n0=2, k_max=2)
    with pytest.raises(rf.DomainError):
        rf.geometric_limit(cantor13, 3.0, n0=0, k_max=2)
    with pytest.raises(rf.DomainError):
        rf.geometric_limit(cantor13, 3.0, n0=2, k_max=0)


# -------------------------------------------------------------- theta curve

def test_g_curve_bin_structure(cantor13):
    opts = rf.SearchOptions(seed=0, restarts=2, strategy="lift-seeded")
    pts = rf.g_curve(cantor13, 3.0, bins=8, N_min=2, N_max=18, opts=opts)
    assert len(pts) == 8
    covered = sorted(n for p in pts for n in p.N_list)
    assert covered == list(range(2, 19))
    # powers of 2 have {log_2 N} = 0 exactly, landing in the first bin
    assert set(pts[0].N_list) >= {2, 4, 8, 16}
    # {log_2 3} = 0.585 puts 3, 6, 12 into bin 4 of 8
    assert set(pts[4].N_list) == {3, 6, 12}


def test_g_curve_estimates_and_spread(cantor13):
    opts = rf.SearchOptions(seed=0, restarts=2, strategy="lift-seeded")
    pts = rf.g_curve(cantor13, 3.0, bins=8, N_min=2, N_max=18, opts=opts)
    for p in pts:
        if p.N_list:
            assert p.estimate == p.normalized_values[-1]
            assert p.spread >= 0.0
            assert p.spread == pytest.approx(
                max(p.normalized_values) - min(p.normalized_values))
        else:
            assert math.isnan(p.estimate) and math.isnan(p.spread)
    centers = [p.theta for p in pts]
    assert centers == pytest.approx([(i + 0.5) / 8 for i in range(8)])


def test_g_curve_validation(cantor13, mixed_fractal):
    with pytest.raises(rf.DomainError):
        rf.g_curve(cantor13, 3.0, bins=3, N_min=2, N_max=20)
    with pytest.raises(rf.DomainError):
        rf.g_curve(cantor13, 3.0, bins=8, N_min=1, N_max=20)
    with pytest.raises(rf.DomainError):
        # less than two octaves of N
        rf.g_curve(cantor13, 3.0, bins=8, N_min=4, N_max=15)
    with pytest.raises(rf.HypothesisError):
        rf.g_curve(mixed_fractal, 3.0, bins=8, N_min=2, N_max=20)


# --------------------------------------------------------------- cell counts

def test_cell_measure_uniform_anchors(cantor13):
    cfg = rf.Configuration(rf.anchor_cloud(cantor13, 4))
    rep = rf.empirical_cell_measure(cantor13, cfg, depth=2)
    assert rep.max_abs_dev == 0.0
    assert rep.counts == {"1.1": 4, "1.2": 4, "2.1": 4, "2.2": 4}
    assert all(t == pytest.approx(0.25, rel=1e-12) for t in rep.target.values())


def test_cell_measure_endpoints(cantor13):
    rep = rf.empirical_cell_measure(
        cantor13, rf.Configuration(np.array([0.0, 1.0])), depth=1)
    assert rep.empirical == {"1": 0.5, "2": 0.5}
    assert rep.max_abs_dev == 0.0


def test_cell_measure_prefers_addresses(cantor13):
    # both points carry depth-2 addresses, so geometry is ignored
    addrs = (rf.CellAddress.parse("1.1"), rf.CellAddress.parse("2.2"))
    cfg = rf.Configuration(np.array([0.0, 1.0]), addresses=addrs)
    rep = rf.empirical_cell_measure(cantor13, cfg, depth=2)
    assert rep.counts["1.1"] == 1 and rep.counts["2.2"] == 1
    assert rep.counts["1.2"] == 0 and rep.counts["2.1"] == 0


def test_cell_measure_unequal_targets(mixed_fractal):
    # weights r_m^d for ratios (1/2, 1/4) are the golden section x and x^2
    x = (math.sqrt(5.0) - 1.0) / 2.0
    rep = rf.empirical_cell_measure(
        mixed_fractal, rf.Configuration(np.array([0.0])), depth=1)
    assert rep.target["1"] == pytest.approx(x, abs=1e-12)
    assert rep.target["2"] == pytest.approx(x * x, abs=1e-12)
    assert sum(rep.target.values()) == pytest.approx(1.0, rel=1e-12)


def test_cell_measure_target_is_product(mixed_fractal):
    rep1 = rf.empirical_cell_measure(
        mixed_fractal, rf.Configuration(np.array([0.0])), depth=1)
    rep2 = rf.empirical_cell_measure(
        mixed_fractal, rf.Configuration(np.array([0.0])), depth=2)
    for key, tgt in rep2.target.items():
        a, b = key.split(".")
        assert tgt == pytest.approx(rep1.target[a] * rep1.target[b], rel=1e-12)


def test_cell_measure_minimizers_near_uniform(cantor_minimizers, cantor13):
    rep = rf.empirical_cell_measure(
        cantor13, cantor_minimizers[64].config, depth=2)
    assert rep.max_abs_dev <= 0.02


def test_cell_measure_off_fractal_point_rejected(cantor13):
    cfg = rf.Configuration(np.array([0.5, 1.0]))
    with pytest.raises(rf.ClassificationError):
        rf.empirical_cell_measure(cantor13, cfg, depth=2)


def test_cell_measure_validation(cantor13):
    with pytest.raises(rf.DomainError):
        rf.empirical_cell_measure(
            cantor13, rf.Configuration(np.array([0.0])), depth=0)


# -------------------------------------------------------------- monotonicity

def test_monotonicity_cantor(cantor13):
    rep = rf.monotonicity_check(cantor13, 3.0, range(2, 8))
    assert rep.violations == ()
    assert all(inc > 0.0 for inc in rep.increments)
    assert all(c > 0.0 for c in rep.c_values)
    assert rep.fitted_C == max(rep.c_values)
    assert len(rep.energies) == 6 and len(rep.increments) == 5


def test_monotonicity_validation(cantor13):
    with pytest.raises(rf.DomainError):
        rf.monotonicity_check(cantor13, 3.0, [2, 4, 5])
    with pytest.raises(rf.DomainError):
        rf.monotonicity_check(cantor13, 3.0, [2])
    with pytest.raises(rf.DomainError):
        rf.monotonicity_check(cantor13, 3.0, [1, 2, 3])


# --------------------------------------------------------------- scaling fit

def test_scaling_fit_exact_power_law():
    samples = [(n, 2.5 * n ** -1.7) for n in (2, 4, 8, 16, 32)]
    slope, intercept, rms = rf.scaling_exponent_fit(samples)
    assert slope == pytest.approx(-1.7, abs=1e-12)
    assert math.exp(intercept) == pytest.approx(2.5, rel=1e-12)
    assert rms < 1e-12


def test_scaling_fit_constant():
    slope, _, rms = rf.scaling_exponent_fit([(n, 7.0) for n in (2, 3, 4, 5)])
    assert slope == pytest.approx(0.0, abs=1e-12)
    assert rms < 1e-12


def test_scaling_fit_validation():
    with pytest.raises(rf.DomainError):
        rf.scaling_exponent_fit([(2, 1.0), (3, 1.0)])
    with pytest.raises(rf.DomainError):
        rf.scaling_exponent_fit([(2, 1.0), (3, -1.0), (4, 1.0), (5, 1.0)])


def test_separation_samples(cantor13):
    chain = rf.lift_chain(cantor13, 3.0, n0=1, k=3, polish=False)
    samples = rf.separation_samples(chain)
    # the 1-point stage is skipped; later stages shrink by the map ratio
    assert [n for n, _ in samples] == [2, 4, 8]
    dists = [dval for _, dval in samples]
    assert all(a > b for a, b in zip(dists, dists[1:]))
