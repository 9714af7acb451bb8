"""Estimator aggregation for both protocols.

Channel estimation accumulates, per covering group, a histogram over the
(v, e) measurement outcomes and converts it to eigenvalue estimates with
one symplectic Walsh-Hadamard transform along v and one standard transform
along the syndrome bits:

    lambda_hat[u xor s(alpha)] = sum_{v,e} hist[v,e] (-1)^(<u,v> + alpha.e)

This replaces the per-shot inner loop over all (u, alpha) pairs: the
per-shot cost drops to O(1) at the price of one O(2^(n+k) (n+k)) transform
per group.  `estimate_alg1_reference` keeps the literal per-shot loop; on a
shared shot stream both paths agree bit for bit (every partial sum is an
integer below 2^53), which the suite checks.

Labels covered by several groups (always the case for the identity syndrome
part, and for all compatible groups of the 3^m covering) are merged by
shot-count-weighted mean, i.e. the one final division by N_a.

Estimates are reported raw, not clamped to [-1, 1]; clamping would break
the unbiasedness checks.  `EstimateSet.clamp` gives a physically projected
copy for downstream use.

Benchmarking estimates come from fitting per-label decay series
F(m) ~ A * lambda^m by least squares on log F, weighted by shots * F^2
(the delta-method weight for log of a mean of signs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import DENSE_MAX_QUBITS, PauliChannel, wht_forward
from .errors import CapabilityError, FitError, UsageError
from .pauli import format_bits, parity_u64, symp, symp_u64
from .sampler import NoiseModel, simulate_alg2_batch, simulate_rounds_alg1
from .stabilizer import Covering

DECAY_FLOOR = 0.05
DEFAULT_LENGTHS = (0, 1, 2, 4, 8, 16)
_FLOAT_FMT = "{:.17g}"


@dataclass
class EstimateSet:
    """Per-label eigenvalue estimates with shot counts.

    `labels is None` means dense reporting: index = label.  Otherwise the
    parallel arrays are restricted to the queried labels.
    """

    n: int
    lambda_hat: np.ndarray
    n_shots: np.ndarray
    stderr: np.ndarray | None = None
    labels: np.ndarray | None = None

    def __post_init__(self):
        if self.labels is None and len(self.lambda_hat) != 4**self.n:
            raise UsageError("dense estimate set must cover all labels")
        if np.any(self.n_shots < 1):
            raise UsageError("every reported label needs at least one shot")

    def label_list(self) -> np.ndarray:
        if self.labels is not None:
            return self.labels
        return np.arange(4**self.n, dtype=np.uint64)

    def value(self, label: int) -> float:
        if self.labels is None:
            return float(self.lambda_hat[label])
        hit = np.nonzero(self.labels == np.uint64(label))[0]
        if not hit.size:
            raise UsageError(f"label {label:#x} not in estimate set")
        return float(self.lambda_hat[hit[0]])

    def clamp(self) -> "EstimateSet":
        """Physical projection of the estimates onto [-1, 1]."""
        return EstimateSet(self.n, np.clip(self.lambda_hat, -1.0, 1.0),
                           self.n_shots.copy(),
                           None if self.stderr is None else self.stderr.copy(),
                           None if self.labels is None else self.labels.copy())

    def max_abs_error(self, true_eigenvalues: np.ndarray) -> float:
        truth = np.asarray(true_eigenvalues, dtype=np.float64)
        if self.labels is None:
            return float(np.max(np.abs(self.lambda_hat - truth)))
        idx = self.labels.astype(np.int64)
        return float(np.max(np.abs(self.lambda_hat - truth[idx])))


def required_samples(n: int, k: int, epsilon: float, delta: float,
                     covering_size: int) -> int:
    """Total sample budget from the Hoeffding + union-bound constants:
    covering_size * ceil(2 ln(2 * 4^n / delta) / epsilon^2)."""
    if not 0.0 < epsilon <= 1.0:
        raise UsageError(f"epsilon must lie in (0, 1], got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise UsageError(f"delta must lie in (0, 1), got {delta}")
    if not 0 <= k <= n:
        raise UsageError(f"k={k} out of range for n={n}")
    if covering_size < 1:
        raise UsageError(f"covering size must be positive, got {covering_size}")
    per_label = math.ceil(2.0 * math.log(2.0 * 4**n / delta) / epsilon**2)
    return covering_size * per_label


def _hadamard_last(x: np.ndarray) -> np.ndarray:
    """Standard +-1 transform along the last axis (length a power of 2)."""
    out = np.array(x, dtype=np.float64)
    length = out.shape[-1]
    if length & (length - 1):
        raise UsageError(f"length {length} is not a power of 2")
    lead = out.shape[:-1]
    step = 1
    while step < length:
        blocks = out.reshape(lead + (length // (2 * step), 2, step))
        b0 = blocks[..., 0, :].copy()
        b1 = blocks[..., 1, :].copy()
        blocks[..., 0, :] = b0 + b1
        blocks[..., 1, :] = b0 - b1
        step *= 2
    return out


def _group_transform(hist: np.ndarray) -> np.ndarray:
    """hist[v, e] -> G[u, alpha] = sum (-1)^(<u,v> + alpha.e) hist[v, e]."""
    over_e = _hadamard_last(hist)
    return wht_forward(over_e.T).T


def _default_source(channel: PauliChannel, k: int):
    def source(_index, group, rounds, rng):
        return simulate_rounds_alg1(channel, k, group, rng, rounds)

    return source


def _resolve_source(channel_or_source, k: int):
    if isinstance(channel_or_source, PauliChannel):
        return _default_source(channel_or_source, k), channel_or_source.n
    return channel_or_source, None


def estimate_alg1(channel_or_source, k: int, covering: Covering,
                  total_samples: int, rng: np.random.Generator,
                  labels=None) -> EstimateSet:
    """Run the k-ancilla estimation protocol and aggregate estimates.

    `channel_or_source` is either a PauliChannel (rounds are simulated) or
    a callable (group_index, group, rounds, rng) -> (v_array, e_array) for
    injecting a fixed shot stream.
    """
    source, n_from_channel = _resolve_source(channel_or_source, k)
    n = k + covering.m if n_from_channel is None else n_from_channel
    if covering.m != n - k:
        raise UsageError(
            f"covering acts on {covering.m} qubits, expected {n - k}"
        )
    if total_samples < len(covering.groups):
        raise UsageError(
            f"fewer samples ({total_samples}) than covering size "
            f"({len(covering.groups)})"
        )
    rounds = total_samples // len(covering.groups)
    if labels is not None:
        return _estimate_restricted(source, n, k, covering, rounds, rng, labels)
    if n > DENSE_MAX_QUBITS:
        raise CapabilityError(
            f"dense estimates limited to n <= {DENSE_MAX_QUBITS}; "
            "pass labels= for a restricted set"
        )
    m = covering.m
    sums = np.zeros(4**n)
    counts = np.zeros(4**n, dtype=np.int64)
    u_vals = np.arange(4**k, dtype=np.int64)
    for gi, group in enumerate(covering.groups):
        v, e = source(gi, group, rounds, rng)
        idx = (np.asarray(v, dtype=np.int64) << m) | np.asarray(e, dtype=np.int64)
        hist = np.bincount(idx, minlength=4**k * 2**m).reshape(4**k, 2**m)
        transformed = _group_transform(hist)
        elems = np.asarray(group.elements(), dtype=np.int64)
        full = u_vals[:, None] | (elems[None, :] << (2 * k))
        np.add.at(sums, full.ravel(), transformed.ravel())
        np.add.at(counts, full.ravel(), rounds)
    if np.any(counts == 0):
        missing = int(np.argmax(counts == 0))
        raise UsageError(
            f"covering leaves label {format_bits(missing, n)} unsampled"
        )
    lam = sums / counts
    stderr = np.sqrt(np.clip(1.0 - lam**2, 0.0, None) / counts)
    return EstimateSet(n, lam, counts, stderr)


def _estimate_restricted(source, n, k, covering, rounds, rng, labels
                         ) -> EstimateSet:
    label_arr = np.asarray(
        [lbl if isinstance(lbl, (int, np.integer)) else int(lbl) for lbl in labels],
        dtype=np.uint64,
    )
    sums = np.zeros(len(label_arr))
    counts = np.zeros(len(label_arr), dtype=np.int64)
    mask = np.uint64((1 << (2 * k)) - 1)
    for gi, group in enumerate(covering.groups):
        v, e = source(gi, group, rounds, rng)
        v = np.asarray(v, dtype=np.uint64)
        e = np.asarray(e, dtype=np.uint64)
        for li, lbl in enumerate(label_arr):
            c = int(lbl) >> (2 * k)
            alpha = group.coefficients(c)
            if alpha is None:
                continue
            u = np.uint64(int(lbl) & int(mask))
            bits = symp_u64(u, v) ^ parity_u64(np.uint64(alpha) & e)
            sums[li] += rounds - 2 * int(bits.sum())
            counts[li] += rounds
    if np.any(counts == 0):
        missing = int(label_arr[int(np.argmax(counts == 0))])
        raise UsageError(
            f"covering leaves label {format_bits(missing, n)} unsampled"
        )
    lam = sums / counts
    stderr = np.sqrt(np.clip(1.0 - lam**2, 0.0, None) / counts)
    return EstimateSet(n, lam, counts, stderr, labels=label_arr)


def estimate_alg1_reference(channel_or_source, k: int, covering: Covering,
                            total_samples: int, rng: np.random.Generator
                            ) -> EstimateSet:
    """Literal per-shot accumulation over every (u, alpha) pair.

    Exponentially slower than `estimate_alg1`; kept as the dual
    implementation the fast path is verified against.
    """
    source, n_from_channel = _resolve_source(channel_or_source, k)
    n = k + covering.m if n_from_channel is None else n_from_channel
    if covering.m != n - k:
        raise UsageError(
            f"covering acts on {covering.m} qubits, expected {n - k}"
        )
    if total_samples < len(covering.groups):
        raise UsageError(
            f"fewer samples ({total_samples}) than covering size "
            f"({len(covering.groups)})"
        )
    if n > 6:
        raise CapabilityError("reference estimator limited to n <= 6")
    rounds = total_samples // len(covering.groups)
    m = covering.m
    sums = np.zeros(4**n, dtype=np.int64)
    counts = np.zeros(4**n, dtype=np.int64)
    for gi, group in enumerate(covering.groups):
        v_arr, e_arr = source(gi, group, rounds, rng)
        elems = group.elements()
        for v, e in zip(v_arr, e_arr):
            v = int(v)
            e = int(e)
            for u in range(4**k):
                uv = symp(u, v)
                for alpha in range(2**m):
                    sign_bit = uv ^ ((alpha & e).bit_count() & 1)
                    lbl = u | (elems[alpha] << (2 * k))
                    sums[lbl] += 1 - 2 * sign_bit
                    counts[lbl] += 1
    if np.any(counts == 0):
        missing = int(np.argmax(counts == 0))
        raise UsageError(
            f"covering leaves label {format_bits(missing, n)} unsampled"
        )
    lam = sums.astype(np.float64) / counts
    stderr = np.sqrt(np.clip(1.0 - lam**2, 0.0, None) / counts)
    return EstimateSet(n, lam, counts, stderr)


@dataclass(frozen=True)
class DecaySeries:
    """Mean benchmark statistic F(m) of one label over sequence lengths."""

    label: int
    lengths: np.ndarray
    f_mean: np.ndarray
    shots: np.ndarray

    def __post_init__(self):
        lengths = np.asarray(self.lengths, dtype=np.int64)
        f_mean = np.asarray(self.f_mean, dtype=np.float64)
        shots = np.asarray(self.shots, dtype=np.int64)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "f_mean", f_mean)
        object.__setattr__(self, "shots", shots)
        if not (len(lengths) == len(f_mean) == len(shots)):
            raise UsageError("decay series arrays must have equal length")
        if np.any(np.diff(lengths) <= 0):
            raise UsageError("sequence lengths must be strictly increasing")
        if np.any(np.abs(f_mean) > 1.0 + 1e-9):
            raise UsageError("mean statistic out of [-1, 1]")


@dataclass
class FitResult:
    a_hat: float
    lambda_hat: float
    stderr_lambda: float
    n_used: int
    residual: float
    dropped: list[int] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def fit_decay(series: DecaySeries, floor: float = DECAY_FLOOR) -> FitResult:
    """Fit F(m) = A * lambda^m by weighted least squares on log F.

    Points with F <= floor are dropped (negative means are additionally
    flagged); fewer than two usable points is a fit error.
    """
    f = series.f_mean
    usable = f > floor
    dropped = [int(m) for m in series.lengths[~usable]]
    warnings = [
        f"negative mean at m={int(m)} excluded"
        for m in series.lengths[f < 0.0]
    ]
    if int(usable.sum()) < 2:
        raise FitError("decay too fast for chosen M")
    m_vals = series.lengths[usable].astype(np.float64)
    f_vals = f[usable]
    shots = series.shots[usable].astype(np.float64)
    y = np.log(f_vals)
    w = shots * f_vals**2
    wsum = w.sum()
    m_bar = (w @ m_vals) / wsum
    y_bar = (w @ y) / wsum
    dm = m_vals - m_bar
    denom = w @ dm**2
    if denom <= 0.0:
        raise FitError("degenerate design: repeated sequence length")
    slope = (w @ (dm * (y - y_bar))) / denom
    intercept = y_bar - slope * m_bar
    resid = y - (intercept + slope * m_vals)
    residual = float(np.sqrt(w @ resid**2))
    # delta-method variance of log F, sandwiched through the WLS solve
    var_y = np.clip(1.0 - f_vals**2, 0.0, None) / (shots * f_vals**2)
    x0 = np.ones_like(m_vals)
    a_mat = np.array([[wsum, w @ m_vals], [w @ m_vals, w @ m_vals**2]])
    b_mat = np.zeros((2, 2))
    for xi, mi, wi, vi in zip(x0, m_vals, w, var_y):
        col = np.array([xi, mi])
        b_mat += (wi**2 * vi) * np.outer(col, col)
    a_inv = np.linalg.inv(a_mat)
    cov = a_inv @ b_mat @ a_inv
    lam = float(np.exp(slope))
    se_lambda = float(lam * np.sqrt(max(cov[1, 1], 0.0)))
    return FitResult(float(np.exp(intercept)), lam, se_lambda,
                     int(usable.sum()), residual, dropped, warnings)


@dataclass
class BenchmarkResult:
    estimates: EstimateSet
    series: list[DecaySeries]
    fits: list[FitResult | None]
    fit_errors: dict[int, str]


def benchmark_alg2(model: NoiseModel, lengths, shots_per_m: int,
                   rng: np.random.Generator, labels=None) -> BenchmarkResult:
    """Run the SPAM-robust benchmarking protocol and fit every label.

    Per sequence length, `shots_per_m` shots are simulated in one batch and
    reduced to all F(m) values through a histogram of z = v xor (xor of
    gate labels) followed by one symplectic transform.  Fit failures are
    recorded per label, not raised.
    """
    lengths = np.asarray(sorted(set(int(m) for m in lengths)), dtype=np.int64)
    if lengths.size == 0:
        raise UsageError("need at least one sequence length")
    if shots_per_m < 1:
        raise UsageError("need at least one shot per sequence length")
    n = model.n
    if labels is None:
        if n > DENSE_MAX_QUBITS:
            raise CapabilityError(
                f"dense benchmarking limited to n <= {DENSE_MAX_QUBITS}"
            )
        label_arr = None
        f_rows = np.empty((lengths.size, 4**n))
    else:
        label_arr = np.asarray([int(lbl) for lbl in labels], dtype=np.uint64)
        f_rows = np.empty((lengths.size, label_arr.size))
    for row, m in enumerate(lengths):
        batch = simulate_alg2_batch(model, int(m), rng, shots_per_m)
        z = batch["z"]
        if label_arr is None:
            hist = np.bincount(z.astype(np.int64), minlength=4**n)
            f_rows[row] = wht_forward(hist) / shots_per_m
        else:
            for li, lbl in enumerate(label_arr):
                signs = symp_u64(lbl, z)
                f_rows[row, li] = 1.0 - 2.0 * float(signs.mean())
    shots = np.full(lengths.size, shots_per_m, dtype=np.int64)
    report_labels = (np.arange(4**n, dtype=np.uint64)
                     if label_arr is None else label_arr)
    series_list = []
    fits: list[FitResult | None] = []
    fit_errors: dict[int, str] = {}
    lam = np.empty(report_labels.size)
    stderr = np.empty(report_labels.size)
    for li, lbl in enumerate(report_labels):
        series = DecaySeries(int(lbl), lengths, f_rows[:, li], shots)
        series_list.append(series)
        try:
            fit = fit_decay(series)
            lam[li] = fit.lambda_hat
            stderr[li] = fit.stderr_lambda
            fits.append(fit)
        except FitError as exc:
            lam[li] = np.nan
            stderr[li] = np.nan
            fits.append(None)
            fit_errors[int(lbl)] = str(exc)
    n_shots = np.full(report_labels.size, int(shots.sum()), dtype=np.int64)
    estimates = EstimateSet(n, lam, n_shots, stderr, labels=label_arr)
    return BenchmarkResult(estimates, series_list, fits, fit_errors)


# --- CSV serialization --------------------------------------------------------


def write_estimates_csv(est: EstimateSet, fileobj):
    """Columns: label, lambda_hat, n_shots, stderr."""
    fileobj.write("label,lambda_hat,n_shots,stderr\n")
    labels = est.label_list()
    stderr = est.stderr if est.stderr is not None else np.zeros(len(labels))
    for lbl, lam, cnt, se in zip(labels, est.lambda_hat, est.n_shots, stderr):
        fileobj.write(
            f"{format_bits(int(lbl), est.n)},{_FLOAT_FMT.format(lam)},"
            f"{int(cnt)},{_FLOAT_FMT.format(se)}\n"
        )


def write_decays_csv(series_list, n: int, fileobj):
    """Columns: label, m, f_mean, shots."""
    fileobj.write("label,m,f_mean,shots\n")
    for series in series_list:
        name = format_bits(series.label, n)
        for m, fm, r in zip(series.lengths, series.f_mean, series.shots):
            fileobj.write(f"{name},{int(m)},{_FLOAT_FMT.format(fm)},{int(r)}\n")
