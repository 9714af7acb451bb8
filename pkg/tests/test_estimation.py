import io
import math

import numpy as np
import pytest

from paulibench import (
    DecaySeries,
    FitError,
    NoiseModel,
    PauliChannel,
    UsageError,
    benchmark_alg2,
    estimate_alg1,
    fit_decay,
    mub_covering,
    pauli_basis_covering,
    required_samples,
)
from paulibench.estimation import (
    EstimateSet,
    estimate_alg1_reference,
    write_decays_csv,
    write_estimates_csv,
)
from paulibench.pauli import parse_bits
from paulibench.sampler import simulate_rounds_alg1


def test_required_samples_instance():
    # independent arithmetic for the stated Hoeffding/union-bound constants
    per_label = math.ceil(2 * (math.log(2) + 8 * math.log(4) + math.log(20)) / 0.01)
    assert required_samples(8, 8, 0.1, 0.05, 1) == per_label
    assert per_label == 2956


def test_required_samples_scalings():
    base = required_samples(8, 8, 0.1, 0.05, 1)
    # halving epsilon quadruples the budget (exactly here; ceil slack <= 3)
    assert required_samples(8, 8, 0.05, 0.05, 1) == 4 * base
    for n, k, eps, delta in [(4, 2, 0.3, 0.1), (6, 0, 0.17, 0.02)]:
        one = required_samples(n, k, eps, delta, 1)
        half = required_samples(n, k, eps / 2, delta, 1)
        assert 0 <= 4 * one - half <= 3
    # linear in the covering size
    assert required_samples(5, 4, 0.2, 0.1, 3) == 3 * required_samples(5, 4, 0.2, 0.1, 1)


def test_required_samples_validation():
    with pytest.raises(UsageError):
        required_samples(2, 1, 0.0, 0.1, 1)
    with pytest.raises(UsageError):
        required_samples(2, 1, 0.1, 1.0, 1)
    with pytest.raises(UsageError):
        required_samples(2, 3, 0.1, 0.1, 1)


def test_identity_channel_estimates_exact():
    rng = np.random.default_rng(0)
    est = estimate_alg1(PauliChannel.identity(3), 1, mub_covering(2), 500, rng)
    assert np.all(est.lambda_hat == 1.0)
    assert np.all(est.n_shots >= 100)


def test_spike_channel_estimation():
    rng = np.random.default_rng(1)
    a = parse_bits("XZY", 3)
    ch = PauliChannel.spike(3, a, -1)
    est = estimate_alg1(ch, 1, mub_covering(2), 100_000, rng)
    assert est.lambda_hat[0] == 1.0
    assert abs(est.value(a) + 1.0) < 0.03
    others = np.delete(est.lambda_hat, [0, a])
    assert np.max(np.abs(others)) < 0.03


def test_too_few_samples_rejected():
    rng = np.random.default_rng(2)
    with pytest.raises(UsageError, match="fewer samples"):
        estimate_alg1(PauliChannel.identity(3), 1, mub_covering(2), 4, rng)


@pytest.mark.parametrize("n,k", [(2, 0), (2, 1), (2, 2), (3, 1)])
def test_histogram_path_equals_literal_loop(n, k):
    rng = np.random.default_rng(10 * n + k)
    ch = PauliChannel.random_dirichlet(n, rng)
    cov = mub_covering(n - k)
    streams = {}

    def record(i, group, rounds, rng_):
        streams[i] = simulate_rounds_alg1(ch, k, group, rng_, rounds)
        return streams[i]

    def replay(i, group, rounds, rng_):
        return streams[i]

    fast = estimate_alg1(record, k, cov, 2000, np.random.default_rng(99))
    ref = estimate_alg1_reference(replay, k, cov, 2000, np.random.default_rng(0))
    assert np.array_equal(fast.lambda_hat, ref.lambda_hat)
    assert np.array_equal(fast.n_shots, ref.n_shots)
    sub = estimate_alg1(replay, k, cov, 2000, np.random.default_rng(0),
                        labels=list(range(4**n)))
    assert np.array_equal(sub.lambda_hat, fast.lambda_hat)


def test_unbiasedness_over_runs():
    rng = np.random.default_rng(5)
    ch = PauliChannel.random_dirichlet(3, rng)
    cov = mub_covering(2)
    runs = 200
    labels = [3, parse_bits("XZY", 3), parse_bits("IZI", 3)]
    values = np.empty((runs, len(labels)))
    for r in range(runs):
        est = estimate_alg1(ch, 1, cov, 1500, np.random.default_rng(1000 + r))
        values[r] = [est.value(lbl) for lbl in labels]
    for j, lbl in enumerate(labels):
        truth = float(ch.eigenvalues[lbl])
        mean = values[:, j].mean()
        tol = 5 * values[:, j].std(ddof=1) / np.sqrt(runs)
        assert abs(mean - truth) < tol


def test_success_guarantee_small_instance():
    # success guarantee at the planned budget, small instance
    eps, delta = 0.25, 0.1
    cov = mub_covering(1)
    total = required_samples(3, 2, eps, delta, len(cov.groups))
    ok = 0
    trials = 40
    for t in range(trials):
        rng = np.random.default_rng(2000 + t)
        ch = PauliChannel.random_dirichlet(3, rng)
        est = estimate_alg1(ch, 2, cov, total, rng)
        ok += est.max_abs_error(ch.eigenvalues) <= eps
    assert ok >= math.ceil((1 - delta) * trials)


def test_clamping_is_separate():
    rng = np.random.default_rng(3)
    ch = PauliChannel.spike(2, 3, +1)
    est = estimate_alg1(ch, 2, mub_covering(0), 2000, rng)
    assert np.max(est.lambda_hat) >= 1.0  # raw estimates may exceed 1
    clamped = est.clamp()
    assert np.max(clamped.lambda_hat) <= 1.0
    assert np.min(clamped.lambda_hat) >= -1.0


def test_estimate_set_lookup_and_validation():
    est = EstimateSet(1, np.ones(4), np.full(4, 7, dtype=np.int64))
    assert est.value(2) == 1.0
    with pytest.raises(UsageError):
        EstimateSet(1, np.ones(3), np.ones(3, dtype=np.int64))
    with pytest.raises(UsageError):
        EstimateSet(1, np.ones(4), np.zeros(4, dtype=np.int64))
    sub = EstimateSet(3, np.array([0.5]), np.array([10]),
                      labels=np.array([9], dtype=np.uint64))
    assert sub.value(9) == 0.5
    with pytest.raises(UsageError):
        sub.value(1)


def test_fit_exact_exponential():
    lengths = np.array([0, 1, 2, 4, 8])
    series = DecaySeries(2, lengths, 0.9 * 0.95**lengths, [1000] * 5)
    fit = fit_decay(series)
    assert abs(fit.a_hat - 0.9) < 1e-12
    assert abs(fit.lambda_hat - 0.95) < 1e-12
    assert fit.n_used == 5 and not fit.dropped


def test_fit_constant_one():
    series = DecaySeries(0, [0, 1, 2], np.ones(3), [10] * 3)
    fit = fit_decay(series)
    assert fit.a_hat == 1.0 and fit.lambda_hat == 1.0
    assert fit.stderr_lambda == 0.0


def test_fit_drops_below_floor():
    lengths = np.array([0, 1, 2, 4, 8, 16])
    f = 0.99 * 0.6**lengths  # falls below 0.05 at m = 8
    series = DecaySeries(1, lengths, f, [500] * 6)
    fit = fit_decay(series)
    assert fit.dropped == [8, 16]
    assert abs(fit.lambda_hat - 0.6) < 1e-9


def test_fit_errors():
    with pytest.raises(FitError, match="decay too fast"):
        fit_decay(DecaySeries(1, [0, 1, 2], [1.0, 0.01, 0.001], [10] * 3))
    series = DecaySeries(1, [0, 1, 2], [0.9, 0.3, -0.2], [10] * 3)
    fit = fit_decay(series)
    assert any("negative" in w for w in fit.warnings)
    assert fit.n_used == 2


def test_decay_series_validation():
    with pytest.raises(UsageError):
        DecaySeries(0, [0, 0, 1], [1, 1, 1], [5, 5, 5])
    with pytest.raises(UsageError):
        DecaySeries(0, [0, 1], [1.5, 1.0], [5, 5])


def test_benchmark_noiseless_exact():
    rng = np.random.default_rng(6)
    res = benchmark_alg2(NoiseModel.noiseless(2), [0, 1, 2, 4], 200, rng)
    assert np.all(res.estimates.lambda_hat == 1.0)
    assert not res.fit_errors


def test_benchmark_spam_only_slope_zero():
    rng = np.random.default_rng(7)
    model = NoiseModel.with_depolarizing_spam(PauliChannel.identity(2), 0.2)
    res = benchmark_alg2(model, [0, 1, 2, 4, 8], 30_000, rng)
    assert np.max(np.abs(res.estimates.lambda_hat - 1.0)) < 0.02


def test_benchmark_recovers_gate_eigenvalues():
    rng = np.random.default_rng(8)
    gate = PauliChannel.tensor([
        PauliChannel.depolarizing(1, 0.02),
        PauliChannel.depolarizing(1, 0.05),
    ])
    model = NoiseModel.with_depolarizing_spam(gate, 0.1)
    res = benchmark_alg2(model, [0, 1, 2, 4, 8, 16], 30_000, rng)
    assert res.estimates.max_abs_error(gate.eigenvalues) < 0.02


def test_benchmark_label_subset():
    rng = np.random.default_rng(9)
    gate = PauliChannel.depolarizing(2, 0.05)
    model = NoiseModel(2, gate, PauliChannel.identity(2), PauliChannel.identity(2))
    labels = [0, 3, 9]
    res = benchmark_alg2(model, [0, 1, 2, 4], 20_000, rng, labels=labels)
    assert list(res.estimates.labels) == labels
    for lbl in labels:
        assert abs(res.estimates.value(lbl) - gate.eigenvalues[lbl]) < 0.03


def test_spam_robustness_two_sample():
    gate = PauliChannel.tensor([
        PauliChannel.depolarizing(1, 0.02),
        PauliChannel.depolarizing(1, 0.05),
    ])
    estimates = []
    for i, spam in enumerate((0.0, 0.05, 0.2)):
        rng = np.random.default_rng(100 + i)
        model = NoiseModel.with_depolarizing_spam(gate, spam)
        res = benchmark_alg2(model, [0, 1, 2, 4, 8, 16], 30_000, rng)
        estimates.append(res.estimates)
    crit = 3.2905267314918945  # two-sided normal quantile at 1e-3
    for i in range(3):
        for j in range(i + 1, 3):
            diff = np.abs(estimates[i].lambda_hat - estimates[j].lambda_hat)
            se = np.sqrt(estimates[i].stderr**2 + estimates[j].stderr**2)
            z = np.where(diff == 0, 0.0, diff / np.maximum(se, 1e-300))
            assert np.max(z) < crit


def test_csv_writers():
    est = EstimateSet(1, np.array([1.0, 0.25, -0.5, 0.0]),
                      np.full(4, 100, dtype=np.int64),
                      np.array([0.0, 0.1, 0.2, 0.3]))
    buf = io.StringIO()
    write_estimates_csv(est, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "label,lambda_hat,n_shots,stderr"
    assert lines[1] == "I,1,100,0"
    assert lines[2].startswith("X,0.25,100,")
    series = DecaySeries(2, [0, 2], [1.0, 0.5], [10, 10])
    buf2 = io.StringIO()
    write_decays_csv([series], 1, buf2)
    assert buf2.getvalue().splitlines()[1] == "Z,0,1,10"


def test_pauli_basis_covering_overlap_merging():
    # labels covered by several groups accumulate rounds per covering group
    rng = np.random.default_rng(11)
    ch = PauliChannel.random_dirichlet(2, rng)
    cov = pauli_basis_covering(2)
    rounds = 1500
    est = estimate_alg1(ch, 0, cov, len(cov.groups) * rounds, rng)
    assert est.n_shots[0] == 9 * rounds                      # identity: all groups
    assert est.n_shots[parse_bits("XI", 2)] == 3 * rounds    # weight 1: 3 groups
    assert est.n_shots[parse_bits("YY", 2)] == rounds        # weight 2: 1 group
    assert est.max_abs_error(ch.eigenvalues) < 0.1


def test_benchmark_fit_failure_reported_not_fatal():
    # a negative eigenvalue makes the mean statistic alternate in sign, so
    # the per-label fit fails and is reported, while other labels still fit
    rng = np.random.default_rng(12)
    gate = PauliChannel.spike(1, parse_bits("Z", 1), -1)
    model = NoiseModel(1, gate, PauliChannel.identity(1), PauliChannel.identity(1))
    res = benchmark_alg2(model, [0, 1, 2, 3], 4000, rng)
    assert res.estimates.lambda_hat[0] == 1.0
    assert res.fit_errors  # some labels cannot be fit
    for lbl in res.fit_errors:
        assert np.isnan(res.estimates.value(lbl))
