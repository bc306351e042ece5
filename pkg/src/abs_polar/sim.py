"""Monte-Carlo frame error rate estimation and decoder timing."""

from __future__ import annotations

import csv
import io
import os
import statistics
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.stats import binomtest

from .channels import LLR_CLAMP, noise_sigma
from .construction import CodeSpec
from .crc import crc_attach, crc_select
from .decoder import FAMILIES, DecoderWorkspace, _decode
from .encoder import encode

DEFAULT_TARGET_ERRORS = 100
BATCH_TRIALS = 16
THREADS_ENV = "ABS_POLAR_THREADS"


@dataclass(frozen=True)
class SimConfig:
    spec: CodeSpec
    channel: str
    list_size: int = 8
    crc_len: int = 0
    trials: int = 1000
    target_errors: int | None = DEFAULT_TARGET_ERRORS
    seed: int = 0
    workers: int = 1
    decoder: str = "auto"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("the trial budget must be at least 1")
        if self.list_size < 1:
            raise ValueError("list size must be at least 1")
        if self.crc_len > self.spec.k:
            raise ValueError("CRC is longer than the information set")
        if self.target_errors is not None and self.target_errors < 1:
            raise ValueError("target error count must be positive")
        if self.decoder != "auto" and self.decoder not in FAMILIES:
            raise ValueError(f"unknown decoder {self.decoder!r}")
        parse_noise(self.channel)

    @property
    def family(self) -> str:
        if self.decoder != "auto":
            return self.decoder
        return "standard" if self.spec.perms.is_standard else "abs"

    @property
    def payload_bits(self) -> int:
        return self.spec.k - self.crc_len


@dataclass(frozen=True)
class SimResult:
    channel: str
    n: int
    k: int
    list_size: int
    crc_len: int
    trials: int
    errors: int
    fer: float
    ci_low: float
    ci_high: float
    # Wall-clock dependent, so left out of equality.
    mean_time: float = field(compare=False)

    def to_csv(self, header: bool = True) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        if header:
            writer.writerow(f.name for f in fields(self))
        writer.writerow(repr(v) if isinstance(v, float) else v for v in asdict(self).values())
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> list["SimResult"]:
        casts = {f.name: f.type for f in fields(cls)}
        convert = {"str": str, "int": int, "float": float}
        rows = csv.DictReader(io.StringIO(text))
        return [cls(**{key: convert[casts[key]](value) for key, value in row.items()})
                for row in rows]


@dataclass(frozen=True)
class TimingResult:
    frames: int
    mean: float
    median: float


def parse_noise(descriptor: str) -> tuple[str, float]:
    """Split ``awgn:<dB>``, ``bec:<eps>``, ``bsc:<p>`` or ``noiseless``."""
    kind, _, value = descriptor.strip().lower().partition(":")
    if kind == "noiseless":
        return kind, 0.0
    if kind not in ("awgn", "bec", "bsc") or not value:
        raise ValueError(f"unknown channel descriptor {descriptor!r}")
    param = float(value)
    if kind == "bec" and not 0.0 <= param <= 1.0:
        raise ValueError("erasure probability must lie in [0, 1]")
    if kind == "bsc" and not 0.0 <= param <= 0.5:
        raise ValueError("crossover probability must lie in [0, 1/2]")
    return kind, param


def channel_llrs(codeword: np.ndarray, descriptor: str, rate: float,
                 rng: np.random.Generator) -> np.ndarray:
    """Transmit a codeword and return the received LLRs (positive favours 0)."""
    kind, param = parse_noise(descriptor)
    sign = 1.0 - 2.0 * codeword
    if kind == "noiseless":
        return LLR_CLAMP * sign
    if kind == "awgn":
        sigma = noise_sigma(param, rate)
        y = sign + sigma * rng.standard_normal(codeword.size)
        return 2.0 * y / sigma**2
    if kind == "bec":
        erased = rng.random(codeword.size) < param
        return np.where(erased, 0.0, LLR_CLAMP * sign)
    flipped = rng.random(codeword.size) < param
    magnitude = LLR_CLAMP if param == 0 else min(LLR_CLAMP, np.log((1 - param) / param))
    return np.where(flipped, -sign, sign) * magnitude


def resolve_workers(requested: int) -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        requested = int(env)
    return max(1, requested)


class _Runner:
    """Runs single trials; each thread lazily gets its own decoder workspace."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.rate = cfg.spec.k / cfg.spec.n
        self.local = threading.local()

    def workspace(self) -> DecoderWorkspace:
        ws = getattr(self.local, "ws", None)
        if ws is None:
            ws = DecoderWorkspace(self.cfg.spec.n, self.cfg.list_size, self.cfg.family)
            self.local.ws = ws
        return ws

    def trial(self, index: int) -> tuple[bool, float]:
        """Frame error flag and decode time for trial ``index``."""
        cfg = self.cfg
        rng = np.random.default_rng([cfg.seed, index])
        payload = rng.integers(0, 2, cfg.payload_bits, dtype=np.uint8)
        codeword = encode(cfg.spec, crc_attach(payload, cfg.crc_len))
        llrs = channel_llrs(codeword, cfg.channel, self.rate, rng)
        start = time.perf_counter()
        result = _decode(cfg.family, cfg.spec, llrs, cfg.list_size, self.workspace())
        decoded, _ = crc_select(result.candidates, cfg.crc_len)
        elapsed = time.perf_counter() - start
        return not np.array_equal(decoded, payload), elapsed

    def batch(self, start: int, stop: int) -> list[tuple[bool, float]]:
        return [self.trial(i) for i in range(start, stop)]


def wilson_interval(errors: int, trials: int) -> tuple[float, float]:
    ci = binomtest(errors, trials).proportion_ci(0.95, method="wilson")
    return float(ci.low), float(ci.high)


def run_fer(cfg: SimConfig) -> SimResult:
    """Estimate the frame error rate.

    Trials are drawn from per-trial random streams keyed by (seed, trial
    index) and merged in trial order, so the result does not depend on the
    worker count. The run stops at the budget or at the trial that brings
    the error count to the target, whichever comes first.
    """
    runner = _Runner(cfg)
    workers = resolve_workers(cfg.workers)
    target = cfg.target_errors
    errors = trials = 0
    total_time = 0.0
    starts = list(range(0, cfg.trials, BATCH_TRIALS))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        done = False
        for window in range(0, len(starts), workers):
            group = starts[window:window + workers]
            futures = [pool.submit(runner.batch, s, min(cfg.trials, s + BATCH_TRIALS))
                       for s in group]
            for future in futures:
                for failed, elapsed in future.result():
                    if done:
                        break
                    trials += 1
                    errors += failed
                    total_time += elapsed
                    done = target is not None and errors >= target
            if done:
                break
    low, high = wilson_interval(errors, trials)
    return SimResult(cfg.channel, cfg.spec.n, cfg.spec.k, cfg.list_size, cfg.crc_len,
                     trials, errors, errors / trials, low, high, total_time / trials)


def time_decoder(cfg: SimConfig, frames: int = 1000, warmup: int = 10) -> TimingResult:
    """Per-frame decode wall time over ``frames`` trials after ``warmup`` discarded ones."""
    if frames < 1 or warmup < 0:
        raise ValueError("frames must be positive and warmup nonnegative")
    runner = _Runner(cfg)
    for i in range(warmup):
        runner.trial(i)
    times = [runner.trial(warmup + i)[1] for i in range(frames)]
    return TimingResult(frames, statistics.fmean(times), statistics.median(times))
