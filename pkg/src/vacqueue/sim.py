"""Discrete-event simulation of the vacation queue with impatient customers.

Every waiting customer carries its own exponential patience clock, cancelled
when its service starts; customers in service do not renege.  Each server
vacations on its own when it finds no one waiting after a service, so the
number of servers back from vacation plays the role of the phase ``J``.

Replications are independent: replication ``r`` draws from Philox streams
spawned from ``SeedSequence(seed)``, one stream per purpose (arrivals,
services, patience, vacations), so its output depends only on ``(seed, r)``.
"""

from __future__ import annotations

import csv
import heapq
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import InsufficientSamples, InvalidConfig
from .model import Engine, ModelParams, Policy, QueueState, is_valid_state, validate
from .report import round_sig

SOJOURN_MAX_COUNT = 5
MIN_TAGGED = 100

_ARRIVAL, _SERVICE_END, _RENEGE, _VACATION_END = range(4)
_VACATION, _IDLE, _BUSY = range(3)
# per-batch accumulator slots
_TIME_SLOTS = ("p_vac", "p_idle", "p_ser", "mean_n0", "mean_n1", "mean_n_total")


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    horizon: float = 5e5
    warmup: float = 5e4
    replications: int = 20
    seed: int = 20240601
    batch_count: int = 20
    workers: int = 1

    def __post_init__(self):
        problems = []
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            problems.append(f"horizon must be positive, got {self.horizon}")
        if not (0 <= self.warmup < self.horizon):
            problems.append(f"need 0 <= warmup < horizon, got warmup={self.warmup}")
        if int(self.replications) != self.replications or self.replications < 1:
            problems.append(f"replications must be a positive integer, got {self.replications}")
        if self.replications == 1 and self.batch_count < 2:
            problems.append("a single replication needs batch_count >= 2 for batch means")
        if self.batch_count < 1:
            problems.append(f"batch_count must be >= 1, got {self.batch_count}")
        if not (0 <= int(self.seed) < 2**64) or int(self.seed) != self.seed:
            problems.append(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.workers < 1:
            problems.append(f"workers must be >= 1, got {self.workers}")
        check = validate(self.params, Engine.SIMULATION)
        problems.extend(f"{cond} violated ({obs})" for cond, obs in check.violations)
        if problems:
            raise InvalidConfig("; ".join(problems))


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    half_width_95: float
    replications_used: int

    @property
    def low(self) -> float:
        return self.mean - self.half_width_95

    @property
    def high(self) -> float:
        return self.mean + self.half_width_95

    def covers(self, value: float) -> bool:
        return self.low <= value <= self.high


@dataclass
class ReplicationSummary:
    """Raw totals of one replication; ``batches`` holds the per-batch values."""

    index: int
    arrivals: int
    served: int
    reneged: int
    in_system_at_end: int
    measures: dict[str, float]
    tagged: dict[str, tuple[float, int]]
    batches: list[dict[str, float]] = field(default_factory=list)

    @property
    def conserved(self) -> bool:
        return self.arrivals == self.served + self.reneged + self.in_system_at_end


@dataclass
class SimResult:
    config: SimConfig
    estimates: dict[str, SimEstimate]
    replications: list[ReplicationSummary]
    tagged_counts: dict[str, int]

    def __getitem__(self, name: str) -> SimEstimate:
        return self.estimates[name]

    def write_csv(self, target) -> None:
        """Per-replication raw summaries, one row per replication."""
        if isinstance(target, (str, Path)):
            with open(target, "w", newline="") as fh:
                self.write_csv(fh)
            return
        names = sorted({k for r in self.replications for k in r.measures})
        writer = csv.writer(target, lineterminator="\n")
        writer.writerow(["replication", "arrivals", "served", "reneged", "in_system_at_end", *names])
        for r in self.replications:
            row = [r.index, r.arrivals, r.served, r.reneged, r.in_system_at_end]
            row += [repr(round_sig(r.measures.get(n, math.nan))) for n in names]
            writer.writerow(row)


def sojourn_key(phase: int, count: int, served_only: bool = False) -> str:
    return f"sojourn_{'served_' if served_only else ''}{phase}_{count}"


class _ExpStream:
    """Buffered standard exponentials from one Philox stream."""

    __slots__ = ("_gen", "_buf", "_i")

    def __init__(self, seed_seq: np.random.SeedSequence):
        self._gen = np.random.Generator(np.random.Philox(seed_seq))
        self._buf = self._gen.standard_exponential(8192).tolist()
        self._i = 0

    def draw(self, rate: float) -> float:
        if self._i == len(self._buf):
            self._buf = self._gen.standard_exponential(8192).tolist()
            self._i = 0
        x = self._buf[self._i]
        self._i += 1
        return x / rate


def _run_replication(config: SimConfig, index: int) -> ReplicationSummary:
    p = config.params
    lam, mu, gamma, xi = p.lam, p.mu, p.gamma, p.xi
    c = p.servers
    multiple = p.policy is Policy.MULTIPLE
    root = np.random.SeedSequence(int(config.seed)).spawn(config.replications)[index]
    arrival_rng, service_rng, patience_rng, vacation_rng = (_ExpStream(s) for s in root.spawn(4))

    horizon, warmup = config.horizon, config.warmup
    n_batches = config.batch_count
    batch_len = (horizon - warmup) / n_batches
    # time integrals per batch, then customer-cohort sums per batch
    areas = [[0.0] * len(_TIME_SLOTS) for _ in range(n_batches)]
    cohort = [dict(count=0, served=0, sojourn=0.0, sojourn_served=0.0) for _ in range(n_batches)]
    tagged_sum: dict[str, float] = {}
    tagged_n: dict[str, int] = {}

    heap: list = []
    seq = 0

    def push(time, kind, arg):
        nonlocal seq
        heapq.heappush(heap, (time, seq, kind, arg))
        seq += 1

    server_state = [_VACATION] * c
    idle_servers: list[int] = []
    back = 0  # servers not on vacation
    n_sys = 0
    waiting: deque = deque()
    n_waiting = 0
    # customer id -> [arrival time, entry phase, entry count, status]; status 0 waiting, 1 in service
    customers: dict[int, list] = {}
    next_id = 0
    arrivals = served = reneged = 0

    for s in range(c):
        push(vacation_rng.draw(gamma), _VACATION_END, s)
    push(arrival_rng.draw(lam), _ARRIVAL, None)

    def accumulate(t0, t1):
        # time in [t0, t1) spent in the current state, clipped to the window
        lo = max(t0, warmup)
        if t1 <= lo:
            return
        vac = 1.0 if back < c else 0.0
        idle = 1.0 if back == c and n_sys < c else 0.0
        contrib = (vac, idle, 1.0 - vac - idle, n_sys if back == 0 else 0, n_sys if back > 0 else 0, n_sys)
        while lo < t1:
            b = min(int((lo - warmup) / batch_len), n_batches - 1)
            end = min(t1, warmup + (b + 1) * batch_len) if b < n_batches - 1 else t1
            dt = end - lo
            row = areas[b]
            for k in range(6):
                row[k] += contrib[k] * dt
            lo = end

    def finish(cid, t, was_served):
        arrived, phase, count, _ = customers.pop(cid)
        if arrived < warmup:
            return
        b = min(int((arrived - warmup) / batch_len), n_batches - 1)
        stay = t - arrived
        rec = cohort[b]
        rec["count"] += 1
        rec["sojourn"] += stay
        if was_served:
            rec["served"] += 1
            rec["sojourn_served"] += stay
        if count <= SOJOURN_MAX_COUNT:
            keys = [sojourn_key(phase, count)]
            if was_served:
                keys.append(sojourn_key(phase, count, True))
            for key in keys:
                tagged_sum[key] = tagged_sum.get(key, 0.0) + stay
                tagged_n[key] = tagged_n.get(key, 0) + 1

    def start_service(server, cid, t):
        server_state[server] = _BUSY
        customers[cid][3] = 1
        push(t + service_rng.draw(mu), _SERVICE_END, (server, cid))

    def next_waiting():
        nonlocal n_waiting
        while True:
            cid = waiting.popleft()
            rec = customers.get(cid)
            if rec is not None and rec[3] == 0:
                n_waiting -= 1
                return cid

    t = 0.0
    while heap:
        t_next, _, kind, arg = heapq.heappop(heap)
        if t_next > horizon:
            accumulate(t, horizon)
            t = horizon
            break
        accumulate(t, t_next)
        t = t_next
        if kind == _ARRIVAL:
            push(t + arrival_rng.draw(lam), _ARRIVAL, None)
            arrivals += 1
            cid = next_id
            next_id += 1
            customers[cid] = [t, back, n_sys, 0]
            n_sys += 1
            if idle_servers:
                start_service(idle_servers.pop(), cid, t)
            else:
                waiting.append(cid)
                n_waiting += 1
                if xi > 0:
                    push(t + patience_rng.draw(xi), _RENEGE, cid)
        elif kind == _SERVICE_END:
            server, cid = arg
            n_sys -= 1
            served += 1
            finish(cid, t, True)
            if n_waiting:
                start_service(server, next_waiting(), t)
            else:
                server_state[server] = _VACATION
                back -= 1
                push(t + vacation_rng.draw(gamma), _VACATION_END, server)
        elif kind == _RENEGE:
            rec = customers.get(arg)
            if rec is None or rec[3] != 0:
                continue  # already in service
            rec[3] = 2
            n_waiting -= 1
            n_sys -= 1
            reneged += 1
            finish(arg, t, False)
        else:  # vacation end
            server = arg
            if n_waiting:
                back += 1
                start_service(server, next_waiting(), t)
            elif multiple:
                push(t + vacation_rng.draw(gamma), _VACATION_END, server)
            else:
                back += 1
                server_state[server] = _IDLE
                idle_servers.append(server)
    span = horizon - warmup
    batches = []
    for b in range(n_batches):
        row = {name: areas[b][k] / batch_len for k, name in enumerate(_TIME_SLOTS)}
        rec = cohort[b]
        row["fraction_served"] = rec["served"] / rec["count"] if rec["count"] else math.nan
        row["mean_sojourn"] = rec["sojourn"] / rec["count"] if rec["count"] else math.nan
        row["mean_sojourn_served"] = rec["sojourn_served"] / rec["served"] if rec["served"] else math.nan
        batches.append(row)
    measures = {name: sum(a[k] for a in areas) / span for k, name in enumerate(_TIME_SLOTS)}
    total = sum(r["count"] for r in cohort)
    total_served = sum(r["served"] for r in cohort)
    measures["fraction_served"] = total_served / total if total else math.nan
    measures["mean_sojourn"] = sum(r["sojourn"] for r in cohort) / total if total else math.nan
    measures["mean_sojourn_served"] = (
        sum(r["sojourn_served"] for r in cohort) / total_served if total_served else math.nan
    )
    for key, n in tagged_n.items():
        measures[key] = tagged_sum[key] / n
    tagged = {key: (tagged_sum[key], n) for key, n in tagged_n.items()}
    return ReplicationSummary(index, arrivals, served, reneged, n_sys, measures, tagged, batches)


def _interval(samples: list[float]) -> SimEstimate:
    x = np.asarray([s for s in samples if not math.isnan(s)], dtype=float)
    if x.size == 0:
        return SimEstimate(math.nan, math.inf, 0)
    if x.size == 1:
        return SimEstimate(float(x[0]), math.inf, 1)
    half = float(stats.t.ppf(0.975, x.size - 1) * x.std(ddof=1) / math.sqrt(x.size))
    return SimEstimate(float(x.mean()), half, int(x.size))


def simulate(config: SimConfig) -> SimResult:
    """Run every replication and form 95% t-intervals.

    Several replications give one sample per replication.  A single
    replication falls back to batch means over ``batch_count`` equal slices
    of the observation window; the conditional sojourn estimates are then
    reported without an interval.
    """
    if config.workers > 1 and config.replications > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            reps = list(pool.map(_run_replication, [config] * config.replications, range(config.replications)))
    else:
        reps = [_run_replication(config, r) for r in range(config.replications)]
    names = sorted({k for r in reps for k in r.measures})
    estimates = {}
    for name in names:
        if config.replications > 1:
            estimates[name] = _interval([r.measures.get(name, math.nan) for r in reps])
        elif name in reps[0].batches[0]:
            estimates[name] = _interval([b[name] for b in reps[0].batches])
        else:
            estimates[name] = SimEstimate(reps[0].measures[name], math.inf, 1)
    counts: dict[str, int] = {}
    for r in reps:
        for key, (_, n) in r.tagged.items():
            counts[key] = counts.get(key, 0) + n
    return SimResult(config, estimates, reps, counts)


def estimate_conditional_sojourn(
    config: SimConfig | SimResult, entry_state: QueueState, served_only: bool = False
) -> SimEstimate:
    """Mean sojourn of customers whose arrival finds ``entry_state``.

    Reneging customers count with their time until reneging unless
    ``served_only`` is set.
    """
    result = config if isinstance(config, SimResult) else simulate(config)
    params = result.config.params
    if not is_valid_state(params, entry_state) or entry_state.count > SOJOURN_MAX_COUNT:
        raise InvalidConfig(f"entry state {entry_state} is not tracked for {params}")
    key = sojourn_key(entry_state.phase, entry_state.count, served_only)
    count = result.tagged_counts.get(key, 0)
    if count < MIN_TAGGED:
        raise InsufficientSamples(f"only {count} arrivals found {entry_state}; need {MIN_TAGGED}", count)
    return result.estimates[key]


def estimates_asdict(result: SimResult) -> dict:
    return {
        name: {k: round_sig(v) for k, v in asdict(est).items()} for name, est in sorted(result.estimates.items())
    }
