"""Resumable Polya and Turan scans: L(x) = sum lambda(n) and T(x) = sum lambda(n)/n.

Segments live on a fixed grid of multiples of the segment size and checkpoints are only taken on
that grid, so a resumed scan groups its floating-point additions exactly like an uninterrupted one.
"""
import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from trunclab.digest_utils import digest_payload
from trunclab.exceptions import TrunclabCheckpointException, TrunclabConfigException
from trunclab.sieve import DEFAULT_SEGMENT_SIZE, liouville_segment, prime_array, segment_bounds
from trunclab.summation import CompensatedSum, harmonic_terms

CHECKPOINT_VERSION = 1
KINDS = ("polya", "turan")
DEFAULT_SAMPLE_EVERY = 1_000_000
DEFAULT_FLUSH_EVERY = 100_000_000
REPORT_HEADER = ("x", "L", "T", "T_err")


@dataclass
class ScanRecord:
    x: int
    value: float


@dataclass
class ScanCheckpoint:
    kind: str
    next_n: int = 2
    L: int = 1
    T_sum: CompensatedSum = field(default_factory=lambda: CompensatedSum(1.0, 0.0, 0.0))
    records: List[ScanRecord] = field(default_factory=list)
    segment_size: int = DEFAULT_SEGMENT_SIZE
    L_min: Optional[int] = None
    L_max: Optional[int] = None
    T_min: Optional[float] = None
    first_hit: Optional[int] = None
    format_version: int = CHECKPOINT_VERSION

    @classmethod
    def initial(cls, kind, segment_size=DEFAULT_SEGMENT_SIZE):
        if kind not in KINDS:
            raise TrunclabConfigException(f"Unknown scan kind '{kind}'")
        return cls(kind=kind, segment_size=segment_size)

    def copy(self):
        return ScanCheckpoint(
            kind=self.kind,
            next_n=self.next_n,
            L=self.L,
            T_sum=self.T_sum.copy(),
            records=[ScanRecord(r.x, r.value) for r in self.records],
            segment_size=self.segment_size,
            L_min=self.L_min,
            L_max=self.L_max,
            T_min=self.T_min,
            first_hit=self.first_hit,
            format_version=self.format_version,
        )

    def to_dict(self):
        payload = {
            "version": self.format_version,
            "kind": self.kind,
            "next_n": self.next_n,
            "L": self.L,
            "T_value": repr(self.T_sum.value),
            "T_comp": repr(self.T_sum.compensation),
            "T_err": repr(self.T_sum.error_bound),
            "segment_size": self.segment_size,
            "extremes": {
                "L_min": self.L_min,
                "L_max": self.L_max,
                "T_min": None if self.T_min is None else repr(self.T_min),
                "first_hit": self.first_hit,
            },
            "records": [{"x": r.x, "value": _encode_value(self.kind, r.value)} for r in self.records],
        }
        payload["digest"] = digest_payload(payload)
        return payload

    @classmethod
    def from_dict(cls, payload, expected_kind=None):
        payload = dict(payload)
        digest = payload.pop("digest", None)
        if digest is None or digest != digest_payload(payload):
            raise TrunclabCheckpointException("Checkpoint digest mismatch; the file is corrupted or was edited")
        if payload.get("version") != CHECKPOINT_VERSION:
            raise TrunclabCheckpointException(f"Checkpoint format version {payload.get('version')} is not supported "
                                              f"(expected {CHECKPOINT_VERSION})")
        if expected_kind is not None and payload.get("kind") != expected_kind:
            raise TrunclabCheckpointException(f"Checkpoint is for a {payload.get('kind')} scan, not {expected_kind}")

        try:
            extremes = payload["extremes"]
            checkpoint = cls(
                kind=payload["kind"],
                next_n=int(payload["next_n"]),
                L=int(payload["L"]),
                T_sum=CompensatedSum(float(payload["T_value"]), float(payload["T_comp"]), float(payload["T_err"])),
                records=[ScanRecord(int(r["x"]), _decode_value(payload["kind"], r["value"])) for r in payload["records"]],
                segment_size=int(payload["segment_size"]),
                L_min=extremes["L_min"],
                L_max=extremes["L_max"],
                T_min=None if extremes["T_min"] is None else float(extremes["T_min"]),
                first_hit=extremes["first_hit"],
                format_version=payload["version"],
            )
        except (KeyError, TypeError, ValueError) as e:
            raise TrunclabCheckpointException(f"Malformed checkpoint: {e}")

        checkpoint.validate()
        return checkpoint

    def validate(self):
        """Invariant checks that need no recomputation"""
        if self.kind not in KINDS:
            raise TrunclabCheckpointException(f"Unknown scan kind '{self.kind}'")
        if self.next_n < 2:
            raise TrunclabCheckpointException(f"next_n must be at least 2 (got {self.next_n})")
        count = self.next_n - 1
        # L is a sum of count signs
        if abs(self.L) > count or (self.L - count) % 2 != 0:
            raise TrunclabCheckpointException(f"L={self.L} is impossible after {count} terms")
        if abs(self.T_sum.total) > 1 + math.log(count) + 1e-9:
            raise TrunclabCheckpointException(f"T={self.T_sum.total!r} exceeds the harmonic bound after {count} terms")
        if not (self.T_sum.error_bound >= 0 and math.isfinite(self.T_sum.error_bound)):
            raise TrunclabCheckpointException("T error bound must be finite and non-negative")
        xs = [r.x for r in self.records]
        if xs != sorted(xs) or any(x < 2 or x >= self.next_n for x in xs):
            raise TrunclabCheckpointException("Records must be ascending and lie below next_n")
        if self.next_n != 2 and self.next_n % self.segment_size != 0:
            raise TrunclabCheckpointException(f"next_n={self.next_n} is not on the segment grid of {self.segment_size}")
        return self

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def load(cls, path, expected_kind=None):
        try:
            with open(path) as f:
                payload = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise TrunclabCheckpointException(f"Cannot read checkpoint {path}: {e}")
        return cls.from_dict(payload, expected_kind)


@dataclass
class ScanReport:
    kind: str
    bound: int
    rows: List[tuple] = field(default_factory=list)
    L_min: Optional[int] = None
    L_max: Optional[int] = None
    T_min: Optional[float] = None
    first_hit: Optional[int] = None
    final_L: int = 1
    final_T: float = 1.0
    final_T_err: float = 0.0

    @property
    def sign_holds(self):
        """Polya: L(x) <= 0 on [2, bound]; Turan: T(x) exceeds its error bound on [1, bound]"""
        return self.first_hit is None

    def write_csv(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(REPORT_HEADER)
            for x, L, T, T_err in self.rows:
                writer.writerow([x, L, format(T, ".17g"), format(T_err, ".17g")])

    def summary(self):
        return {
            "kind": self.kind,
            "bound": self.bound,
            "L": self.final_L,
            "T": format(self.final_T, ".17g"),
            "T_err": format(self.final_T_err, ".17g"),
            "L_min": self.L_min,
            "L_max": self.L_max,
            "T_min": None if self.T_min is None else format(self.T_min, ".17g"),
            "first_hit": self.first_hit,
            "sign_holds": self.sign_holds,
        }


class Scanner:
    """Runs a Polya or Turan scan segment by segment, sieving segments in parallel"""

    def __init__(self, kind, threads=1, sample_every=DEFAULT_SAMPLE_EVERY, flush_every=DEFAULT_FLUSH_EVERY,
                 segment_size=DEFAULT_SEGMENT_SIZE, on_flush=None):
        if kind not in KINDS:
            raise TrunclabConfigException(f"Unknown scan kind '{kind}'")
        if min(threads, sample_every, flush_every, segment_size) < 1:
            raise TrunclabConfigException("threads, sample_every, flush_every and segment_size must be positive")

        self.kind = kind
        self.threads = threads
        self.sample_every = sample_every
        self.flush_every = flush_every
        self.segment_size = segment_size
        self.on_flush = on_flush

        self.logger = logging.getLogger(__name__)

    def run(self, bound, checkpoint=None):
        if bound < 2:
            raise TrunclabConfigException(f"Scan bound must be at least 2 (got {bound})")

        if checkpoint is None:
            state = ScanCheckpoint.initial(self.kind, self.segment_size)
        else:
            if checkpoint.kind != self.kind:
                raise TrunclabCheckpointException(f"Checkpoint is for a {checkpoint.kind} scan, not {self.kind}")
            if checkpoint.segment_size != self.segment_size:
                raise TrunclabCheckpointException(f"Checkpoint was taken with segment size {checkpoint.segment_size}, "
                                                  f"this scan uses {self.segment_size}")
            if checkpoint.next_n > bound + 1:
                raise TrunclabConfigException(f"Checkpoint is already past the bound ({checkpoint.next_n} > {bound})")
            state = checkpoint.copy().validate()
            self.logger.info(f"Resuming {self.kind} scan at n={state.next_n}")

        report = ScanReport(kind=self.kind, bound=bound)
        anchor = state.copy()
        last_flush = state.next_n
        base_primes = prime_array(math.isqrt(bound))
        bounds = segment_bounds(state.next_n, bound + 1, self.segment_size)
        self.logger.info(f"Scanning {self.kind} up to {bound} in {len(bounds)} segments")

        executor = ThreadPoolExecutor(max_workers=self.threads) if self.threads > 1 else None
        try:
            batch_size = max(self.threads, 1)
            for i in range(0, len(bounds), batch_size):
                batch = bounds[i:i + batch_size]
                if executor is not None:
                    blocks = list(executor.map(lambda b: liouville_segment(b[0], b[1], base_primes), batch))
                else:
                    blocks = [liouville_segment(lo, hi, base_primes) for lo, hi in batch]

                for (lo, hi), lam in zip(batch, blocks):
                    self._reduce_segment(state, report, lo, hi, lam, bound)
                    if hi % self.segment_size == 0:
                        anchor = state.copy()
                        if self.on_flush is not None and hi - last_flush >= self.flush_every:
                            self.logger.info(f"Flushing {self.kind} checkpoint at n={hi}")
                            self.on_flush(anchor)
                            last_flush = hi
        finally:
            if executor is not None:
                executor.shutdown()

        report.L_min, report.L_max, report.T_min = state.L_min, state.L_max, state.T_min
        report.first_hit = state.first_hit
        report.final_L = state.L
        report.final_T = state.T_sum.total
        report.final_T_err = state.T_sum.error_bound
        return anchor, report

    def _reduce_segment(self, state, report, lo, hi, lam, bound):
        n = np.arange(lo, hi, dtype=np.int64)
        L_values = state.L + np.cumsum(lam, dtype=np.int64)
        terms = harmonic_terms(lo, hi, lam)
        T_values, T_bound = state.T_sum.running_values(terms)

        seg_min, seg_max = int(L_values.min()), int(L_values.max())
        state.L_min = seg_min if state.L_min is None else min(state.L_min, seg_min)
        seg_T_min = float(T_values.min())
        previous_T_min = state.T_min
        state.T_min = seg_T_min if previous_T_min is None else min(previous_T_min, seg_T_min)

        record = None
        if self.kind == "polya":
            if state.L_max is None or seg_max > state.L_max:
                i = int(np.argmax(L_values))
                record = ScanRecord(int(n[i]), int(L_values[i]))
            if state.first_hit is None and seg_max > 0:
                state.first_hit = int(n[int(np.argmax(L_values > 0))])
                self.logger.info(f"L(x) > 0 first at x={state.first_hit}")
        else:
            if previous_T_min is None or seg_T_min < previous_T_min:
                i = int(np.argmin(T_values))
                record = ScanRecord(int(n[i]), float(T_values[i]))
            uncertain = T_values <= T_bound
            if state.first_hit is None and uncertain.any():
                state.first_hit = int(n[int(np.argmax(uncertain))])
                self.logger.warning(f"T(x) no longer certified positive at x={state.first_hit}")
        state.L_max = seg_max if state.L_max is None else max(state.L_max, seg_max)

        if record is not None:
            state.records.append(record)

        # sample points, records and the final x
        wanted = set(range(-(-lo // self.sample_every) * self.sample_every, hi, self.sample_every))
        if record is not None:
            wanted.add(record.x)
        if hi == bound + 1:
            wanted.add(bound)
        for x in sorted(wanted):
            i = x - lo
            report.rows.append((x, int(L_values[i]), float(T_values[i]), T_bound))

        state.L = int(L_values[-1])
        state.T_sum.add_segment(terms)
        state.next_n = hi
        self.logger.debug(f"Segment [{lo}, {hi}) reduced: L={state.L}")


def polya_scan(bound, checkpoint=None, **options):
    return Scanner("polya", **options).run(bound, checkpoint)


def turan_scan(bound, checkpoint=None, **options):
    return Scanner("turan", **options).run(bound, checkpoint)


def _encode_value(kind, value):
    return int(value) if kind == "polya" else repr(float(value))


def _decode_value(kind, value):
    return int(value) if kind == "polya" else float(value)
