"""Command-line front end.

Subcommands:

* estimate        run the ancilla-assisted channel estimation protocol
* benchmark       run the SPAM-robust gate benchmarking protocol
* sweep-ancilla   minimal sample budget vs ancilla size
* discriminate    shots to tell the fully-depolarizing channel from a
                  random two-eigenvalue channel, with and without ancilla
* verify          oracle-equivalence and invariant checks

Experiments are configured by a JSON file (--config) with flag overrides
(--seed, --threads, --out, --format).  Every run writes a primary table
(CSV by default) plus run metadata JSON with the resolved config, seed and
timings.  Outputs are byte-identical for a fixed (config, seed) at any
thread count: all randomness is derived from (seed, structural key) and
merges happen in key order.

Exit codes: 0 ok, 2 config error, 3 capability error, 4 verification
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .channels import PauliChannel
from .errors import CapabilityError, ConfigError, PauliBenchError, UsageError
from .estimation import (
    DEFAULT_LENGTHS,
    benchmark_alg2,
    estimate_alg1,
    required_samples,
)
from .pauli import format_bits, symp_u64
from .sampler import NoiseModel
from .seeding import derive_rng
from .stabilizer import mub_covering, pauli_basis_covering
from .verify import run_checks

_FLOAT = "{:.17g}"

SCHEMA_VERSION = 1


# --- config handling ----------------------------------------------------------


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    return obj


def _require_keys(cfg: dict, required, optional, where: str):
    missing = [key for key in required if key not in cfg]
    if missing:
        raise ConfigError(f"{where}: missing keys {missing}")
    unknown = [key for key in cfg if key not in set(required) | set(optional)]
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")


_CHANNEL_KINDS = {
    "identity": ((), ()),
    "depolarizing": (("rate",), ()),
    "fully-depolarizing": ((), ()),
    "spike": (("label", "sign"), ()),
    "random-dirichlet": ((), ("alpha",)),
    "random-sparse": (("support",), ()),
    "tensor": (("factors",), ()),
    "file": (("path",), ()),
}


def build_channel(spec: dict, n: int, rng: np.random.Generator) -> PauliChannel:
    """Construct a channel from its config spec."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"channel spec must be an object with 'kind': {spec!r}")
    kind = spec["kind"]
    if kind not in _CHANNEL_KINDS:
        raise ConfigError(f"unknown channel kind {kind!r}")
    required, optional = _CHANNEL_KINDS[kind]
    _require_keys(spec, ("kind",) + required, optional, f"channel {kind}")
    if kind == "identity":
        return PauliChannel.identity(n)
    if kind == "depolarizing":
        return PauliChannel.depolarizing(n, float(spec["rate"]))
    if kind == "fully-depolarizing":
        return PauliChannel.fully_depolarizing(n)
    if kind == "spike":
        return PauliChannel.spike(n, spec["label"], int(spec["sign"]))
    if kind == "random-dirichlet":
        return PauliChannel.random_dirichlet(n, rng, float(spec.get("alpha", 1.0)))
    if kind == "random-sparse":
        return PauliChannel.random_sparse(n, int(spec["support"]), rng)
    if kind == "tensor":
        factors = []
        consumed = 0
        for sub in spec["factors"]:
            if not isinstance(sub, dict):
                raise ConfigError(f"tensor factor must be an object: {sub!r}")
            sub_n = int(sub.get("n", 1))
            inner = {key: val for key, val in sub.items() if key != "n"}
            factors.append(build_channel(inner, sub_n, rng))
            consumed += sub_n
        if consumed != n:
            raise ConfigError(f"tensor factors cover {consumed} qubits, expected {n}")
        return PauliChannel.tensor(factors)
    try:
        text = Path(spec["path"]).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read channel file: {exc}") from None
    ch = PauliChannel.loads(text)
    if ch.n != n:
        raise ConfigError(f"channel file has n={ch.n}, config says {n}")
    return ch


def _covering(kind: str, m: int):
    if kind == "mub":
        return mub_covering(m)
    if kind == "pauli-basis":
        return pauli_basis_covering(m)
    raise ConfigError(f"unknown covering kind {kind!r}")


# --- output helpers -------------------------------------------------------------


class RunWriter:
    """Collects output files and run metadata for one CLI invocation."""

    def __init__(self, out_dir: str, fmt: str):
        if fmt not in ("csv", "json"):
            raise ConfigError(f"--format must be csv or json, got {fmt!r}")
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.fmt = fmt
        self.outputs: list[str] = []
        self.start = time.perf_counter()

    def write_table(self, name: str, header: list[str], rows: list[list]):
        if self.fmt == "json":
            path = self.dir / f"{name}.json"
            payload = [dict(zip(header, row)) for row in rows]
            path.write_text(json.dumps(payload, indent=1) + "\n")
        else:
            path = self.dir / f"{name}.csv"
            buf = io.StringIO()
            buf.write(",".join(header) + "\n")
            for row in rows:
                buf.write(",".join(_cell(x) for x in row) + "\n")
            path.write_text(buf.getvalue())
        self.outputs.append(path.name)
        return path

    def write_text(self, name: str, text: str):
        path = self.dir / name
        path.write_text(text)
        self.outputs.append(path.name)
        return path

    def finish(self, command: str, config: dict, seed: int, threads: int,
               summary: dict | None = None):
        canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
        meta = {
            "schema": SCHEMA_VERSION,
            "command": command,
            "config": config,
            "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
            "seed": seed,
            "threads": threads,
            "version": __version__,
            "git": _git_describe(),
            "outputs": self.outputs,
            "wall_time_s": round(time.perf_counter() - self.start, 3),
        }
        if summary is not None:
            meta["summary"] = summary
        (self.dir / "run.json").write_text(json.dumps(meta, indent=1) + "\n")


def _cell(x) -> str:
    if isinstance(x, float):
        return _FLOAT.format(x)
    return str(x)


def _git_describe():
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
            cwd=Path(__file__).parent,
        )
        return out.stdout.strip() or None
    except OSError:
        return None


def _pmap(fn, items, threads: int):
    """Map preserving item order; results independent of thread count."""
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# --- subcommands ----------------------------------------------------------------


def cmd_estimate(cfg: dict, seed: int, threads: int, writer: RunWriter) -> dict:
    _require_keys(
        cfg,
        ("experiment", "n", "k", "channel"),
        ("covering", "epsilon", "delta", "samples", "clamp"),
        "estimate config",
    )
    n = int(cfg["n"])
    k = int(cfg["k"])
    cov = _covering(cfg.get("covering", "mub"), n - k)
    if "samples" in cfg:
        total = int(cfg["samples"])
    else:
        if "epsilon" not in cfg or "delta" not in cfg:
            raise ConfigError("estimate config needs samples or epsilon+delta")
        total = required_samples(n, k, float(cfg["epsilon"]),
                                 float(cfg["delta"]), len(cov.groups))
    channel = build_channel(cfg["channel"], n, derive_rng(seed, "channel"))
    est = estimate_alg1(channel, k, cov, total, derive_rng(seed, "shots"))
    if cfg.get("clamp", False):
        est = est.clamp()
    rows = [
        [format_bits(int(lbl), n), float(lam), int(cnt), float(se)]
        for lbl, lam, cnt, se in zip(est.label_list(), est.lambda_hat,
                                     est.n_shots, est.stderr)
    ]
    writer.write_table("estimates", ["label", "lambda_hat", "n_shots", "stderr"],
                       rows)
    return {
        "samples": total,
        "rounds_per_group": total // len(cov.groups),
        "covering_size": len(cov.groups),
        "max_estimate": float(np.max(est.lambda_hat)),
        "min_estimate": float(np.min(est.lambda_hat)),
    }


def _two_sample_z(est_a, est_b) -> float:
    num = np.abs(est_a.lambda_hat - est_b.lambda_hat)
    den = np.sqrt(est_a.stderr**2 + est_b.stderr**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(num == 0.0, 0.0, num / den)
    return float(np.nanmax(z))


def cmd_benchmark(cfg: dict, seed: int, threads: int, writer: RunWriter) -> dict:
    _require_keys(
        cfg,
        ("experiment", "n", "gate", "shots_per_m"),
        ("m_list", "spam_depolarizing", "spam_sweep", "prep", "meas"),
        "benchmark config",
    )
    n = int(cfg["n"])
    gate = build_channel(cfg["gate"], n, derive_rng(seed, "gate-channel"))
    m_list = [int(m) for m in cfg.get("m_list", DEFAULT_LENGTHS)]
    shots = int(cfg["shots_per_m"])
    explicit_spam = "prep" in cfg or "meas" in cfg
    if explicit_spam and ("spam_sweep" in cfg or "spam_depolarizing" in cfg):
        raise ConfigError("give either prep/meas channels or a SPAM rate, not both")
    if "spam_sweep" in cfg:
        rates = [float(r) for r in cfg["spam_sweep"]]
    elif "spam_depolarizing" in cfg:
        rates = [float(cfg["spam_depolarizing"])]
    else:
        rates = [0.0]

    def one_rate(rate: float):
        if explicit_spam:
            prep = build_channel(cfg["prep"], n, derive_rng(seed, "prep-channel")) \
                if "prep" in cfg else PauliChannel.identity(n)
            meas = build_channel(cfg["meas"], n, derive_rng(seed, "meas-channel")) \
                if "meas" in cfg else PauliChannel.identity(n)
            model = NoiseModel(n, gate, prep, meas)
        else:
            model = NoiseModel.with_depolarizing_spam(gate, rate)
        rng = derive_rng(seed, "benchmark", _FLOAT.format(rate))
        return benchmark_alg2(model, m_list, shots, rng)

    results = _pmap(one_rate, rates, threads)
    est_rows = []
    decay_rows = []
    for rate, res in zip(rates, results):
        labels = res.estimates.label_list()
        stderr = res.estimates.stderr
        for i, lbl in enumerate(labels):
            est_rows.append([
                _FLOAT.format(rate), format_bits(int(lbl), n),
                float(res.estimates.lambda_hat[i]),
                int(res.estimates.n_shots[i]), float(stderr[i]),
            ])
        for series in res.series:
            name = format_bits(series.label, n)
            for m, fm, r in zip(series.lengths, series.f_mean, series.shots):
                decay_rows.append([_FLOAT.format(rate), name, int(m),
                                   float(fm), int(r)])
    writer.write_table("estimates",
                       ["spam_rate", "label", "lambda_hat", "n_shots", "stderr"],
                       est_rows)
    writer.write_table("decays",
                       ["spam_rate", "label", "m", "f_mean", "shots"],
                       decay_rows)
    summary: dict = {
        "fit_errors": {
            _FLOAT.format(rate): {format_bits(lbl, n): msg
                                  for lbl, msg in res.fit_errors.items()}
            for rate, res in zip(rates, results) if res.fit_errors
        },
    }
    if len(results) > 1:
        worst = 0.0
        for i in range(len(results)):
            for j in range(i + 1, len(results)):
                worst = max(worst, _two_sample_z(results[i].estimates,
                                                 results[j].estimates))
        # two-sided normal test at significance 1e-3
        summary["spam_sweep_max_z"] = worst
        summary["spam_sweep_consistent"] = bool(worst < 3.2905267314918945)
    return summary


def cmd_sweep_ancilla(cfg: dict, seed: int, threads: int,
                      writer: RunWriter) -> dict:
    _require_keys(
        cfg,
        ("experiment", "n", "k_list", "epsilon"),
        ("trials", "success_fraction", "covering", "channel_alpha"),
        "sweep-ancilla config",
    )
    n = int(cfg["n"])
    if n > 8:
        raise CapabilityError("sweep-ancilla limited to n <= 8 (dense truth)")
    k_list = [int(k) for k in cfg["k_list"]]
    epsilon = float(cfg["epsilon"])
    trials = int(cfg.get("trials", 20))
    frac = float(cfg.get("success_fraction", 0.9))
    alpha = float(cfg.get("channel_alpha", 1.0))
    needed = int(np.ceil(frac * trials))
    covering_kind = cfg.get("covering", "mub")

    rows = []
    summary = {}
    for k in k_list:
        cov = _covering(covering_kind, n - k)
        size = len(cov.groups)
        channels = [
            PauliChannel.random_dirichlet(n, derive_rng(seed, "sweep-ch", k, t),
                                          alpha)
            for t in range(trials)
        ]
        truths = [ch.eigenvalues for ch in channels]

        def trial_ok(args) -> bool:
            rounds, t = args
            rng = derive_rng(seed, "sweep-shots", k, rounds, t)
            est = estimate_alg1(channels[t], k, cov, rounds * size, rng)
            return bool(est.max_abs_error(truths[t]) <= epsilon)

        def probe(rounds: int, early_stop: bool = True) -> tuple[bool, int]:
            successes = 0
            failures = 0
            if threads > 1 or not early_stop:
                oks = _pmap(trial_ok, [(rounds, t) for t in range(trials)],
                            threads)
                successes = sum(oks)
                return successes >= needed, successes
            for t in range(trials):
                if trial_ok((rounds, t)):
                    successes += 1
                else:
                    failures += 1
                if successes >= needed:
                    return True, successes
                if failures > trials - needed:
                    return False, successes
            return successes >= needed, successes

        base = required_samples(n, k, epsilon, 1.0 - frac, size) // size
        hi = max(base, 2)
        while not probe(hi)[0]:
            hi *= 2
            if hi > base * 64:
                raise PauliBenchError(
                    f"sweep-ancilla: no passing budget found below {hi} rounds"
                )
        lo = 1
        if probe(lo)[0]:
            hi = lo
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if probe(mid)[0]:
                hi = mid
            else:
                lo = mid
        # confirmation pass without early stopping, reported in the table
        _, confirmed = probe(hi, early_stop=False)
        rows.append([k, size, hi, hi * size, confirmed, trials])
        summary[str(k)] = {"rounds_min": hi, "n_min": hi * size}
    writer.write_table(
        "sweep",
        ["k", "covering_size", "rounds_min", "n_min", "successes", "trials"],
        rows,
    )
    return summary


def _discriminate_trial(n: int, mode: str, seed: int, trial: int,
                        max_shots: int) -> tuple[str, str, int]:
    """Sequential decision between the fully-depolarizing channel and a
    random spike channel; returns (truth, declared, shots).

    The running log-likelihood ratio of the composite spike hypothesis
    against the depolarizing one is log2(sum over alive candidates of
    2^consistent-own-group-shots) + shots-in-favor - log2(4^n - 1); the
    trial stops at posterior 0.9, i.e. |log2 ratio| >= log2(9).
    """
    rng = derive_rng(seed, "discriminate", mode, n, trial)
    spike_truth = bool(rng.integers(0, 2))
    a_true = int(rng.integers(1, 4**n)) if spike_truth else 0
    truth = f"spike:{format_bits(a_true, n)}" if spike_truth else "dep"
    if spike_truth:
        channel = PauliChannel.spike(n, a_true, +1)
    else:
        channel = PauliChannel.fully_depolarizing(n)
    count = 4**n - 1
    log2_threshold = float(np.log2(9.0))  # posterior 0.9 under equal priors
    if mode == "bell":
        labels = np.arange(1, 4**n, dtype=np.uint64)
        alive = np.ones(labels.shape, dtype=bool)
        for shot in range(1, max_shots + 1):
            b = np.uint64(channel.sample(rng))
            alive &= symp_u64(labels, b) == 0
            n_alive = int(alive.sum())
            if n_alive == 0:
                return truth, "dep", shot
            log2_ratio = shot + float(np.log2(n_alive)) - float(np.log2(count))
            if log2_ratio <= -log2_threshold:
                return truth, "dep", shot
            if n_alive == 1 and log2_ratio >= log2_threshold:
                winner = int(labels[int(np.argmax(alive))])
                return truth, f"spike:{format_bits(winner, n)}", shot
        return truth, "undecided", max_shots
    if mode != "ancilla-free":
        raise ConfigError(f"unknown discriminate mode {mode!r}")
    cov = mub_covering(n)
    group_members = []
    group_alphas = []
    for grp in cov.groups:
        members = np.asarray(grp.elements()[1:], dtype=np.int64)
        alphas = np.asarray(
            [grp.coefficients(int(lbl)) for lbl in members], dtype=np.uint64
        )
        group_members.append(members)
        group_alphas.append(alphas)
    hits = np.zeros(4**n, dtype=np.float64)  # consistent own-group shots
    alive_full = np.ones(4**n, dtype=bool)
    alive_full[0] = False
    for shot in range(1, max_shots + 1):
        gi = (shot - 1) % len(cov.groups)
        grp = cov.groups[gi]
        e = np.uint64(grp.syndrome(channel.sample(rng)))
        members = group_members[gi]
        alphas = group_alphas[gi]
        consistent = (np.bitwise_count(alphas & e) & np.uint64(1)) == 0
        alive_full[members[~consistent]] = False
        survivors = members[consistent]
        hits[survivors[alive_full[survivors]]] += 1.0
        live = np.nonzero(alive_full)[0]
        if live.size == 0:
            return truth, "dep", shot
        peak = float(hits[live].max())
        log2_ratio = peak + float(
            np.log2(np.exp2(hits[live] - peak).sum())
        ) - float(np.log2(count))
        if log2_ratio <= -log2_threshold:
            return truth, "dep", shot
        if live.size == 1 and log2_ratio >= log2_threshold:
            return truth, f"spike:{format_bits(int(live[0]), n)}", shot
    return truth, "undecided", max_shots


def cmd_discriminate(cfg: dict, seed: int, threads: int,
                     writer: RunWriter) -> dict:
    _require_keys(
        cfg,
        ("experiment", "n_list", "trials"),
        ("modes", "max_shots"),
        "discriminate config",
    )
    n_list = [int(n) for n in cfg["n_list"]]
    if max(n_list) > 10:
        raise CapabilityError("discriminate limited to n <= 10")
    trials = int(cfg["trials"])
    modes = cfg.get("modes", ["bell", "ancilla-free"])
    max_shots = int(cfg.get("max_shots", 100_000))
    rows = []
    summary = {}
    for mode in modes:
        for n in n_list:
            results = _pmap(
                lambda t: _discriminate_trial(n, mode, seed, t, max_shots),
                list(range(trials)), threads,
            )
            shots_correct = []
            for t, (truth, declared, shots) in enumerate(results):
                correct = int(declared == truth)
                rows.append([mode, n, t, truth, declared, correct, shots])
                if correct:
                    shots_correct.append(shots)
            rate = len(shots_correct) / trials
            summary[f"{mode}:n={n}"] = {
                "success_rate": rate,
                "median_shots": float(np.median(shots_correct))
                if shots_correct else None,
            }
    writer.write_table(
        "discriminate",
        ["mode", "n", "trial", "truth", "declared", "correct", "shots"],
        rows,
    )
    return summary


def cmd_verify(level: str, seed: int, writer: RunWriter | None) -> int:
    results = run_checks(level, seed)
    lines = []
    for res in results:
        print(res.line())
        lines.append(res.line())
    if writer is not None:
        writer.write_text("verify.txt", "\n".join(lines) + "\n")
    return 0 if all(r.ok for r in results) else 4


_GNUPLOT_SWEEP = """set datafile separator ','
set logscale y
set xlabel 'ancilla qubits k'
set ylabel 'minimal sample budget N'
plot 'sweep.csv' using 1:4 skip 1 with linespoints title 'N_min(k)'
"""


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="paulibench",
        description="Pauli channel estimation and benchmarking experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("estimate", "benchmark", "sweep-ancilla", "discriminate"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", default=".")
        p.add_argument("--format", default="csv", choices=("csv", "json"))
        p.add_argument("--gnuplot", action="store_true")
    v = sub.add_parser("verify")
    v.add_argument("--level", default="quick", choices=("quick", "full"))
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", default=None)
    args = parser.parse_args(argv)

    try:
        if args.command == "verify":
            writer = RunWriter(args.out, "csv") if args.out else None
            code = cmd_verify(args.level, args.seed, writer)
            if writer is not None:
                writer.finish("verify", {"level": args.level}, args.seed, 1)
            return code
        cfg = _load_config(args.config)
        expected = args.command.replace("-", "_")
        declared = str(cfg.get("experiment", expected)).replace("-", "_")
        if declared != expected:
            raise ConfigError(
                f"config experiment {cfg.get('experiment')!r} does not match "
                f"subcommand {args.command!r}"
            )
        cfg.setdefault("experiment", expected)
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        config_echo = dict(cfg)
        config_echo["seed"] = seed
        writer = RunWriter(args.out, args.format)
        handler = {
            "estimate": cmd_estimate,
            "benchmark": cmd_benchmark,
            "sweep-ancilla": cmd_sweep_ancilla,
            "discriminate": cmd_discriminate,
        }[args.command]
        body = dict(cfg)
        body.pop("seed", None)
        summary = handler(body, seed, args.threads, writer)
        if args.gnuplot and args.command == "sweep-ancilla":
            writer.write_text("sweep.gp", _GNUPLOT_SWEEP)
        writer.finish(args.command, config_echo, seed, args.threads, summary)
        return 0
    except (ConfigError, UsageError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
