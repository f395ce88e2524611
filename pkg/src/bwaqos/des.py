"""Seeded discrete-event simulation of the admission policy.

Six Poisson arrival streams (new/handoff per class) and exponential
holding times drive the same ``decide``/``restore_on_departure`` functions
the Markov model is built from. Random numbers come from numpy's Philox
counter-based generator; exponentials use inverse transform on its
uniforms, so a seed gives the same run on any platform.
"""

from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .cac import RejectReason, RequestKind, AdmissionRequest, decide, restore_on_departure
from .ctmc import METRIC_NAMES, QosReport
from .model import CLASSES, CellConfig, SystemState, TrafficModel, used_bandwidth
from .scheduler import DEFAULT_ALPHA, reschedule_report

N_BATCHES = 20


class ConfigMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    seed: int
    horizon_events: int
    traffic: TrafficModel
    cell: CellConfig
    warmup_events: int | None = None  # default: first 10% of the horizon
    alpha: float = DEFAULT_ALPHA

    @property
    def warmup(self) -> int:
        if self.warmup_events is None:
            return self.horizon_events // 10
        return self.warmup_events

    def violations(self) -> list[str]:
        out = []
        if self.horizon_events <= 0:
            out.append("horizon_events must be positive")
        if not 0 <= self.warmup < self.horizon_events:
            out.append("need 0 <= warmup_events < horizon_events")
        if self.horizon_events - self.warmup < N_BATCHES:
            out.append(f"need at least {N_BATCHES} events after warmup")
        return out + self.traffic.violations()


SCHEDULE_NAMES = ("bu_before", "bu_after", "jfi_before", "jfi_after")


@dataclass
class SimReport:
    report: QosReport
    half_width: dict[str, float]
    bu_before: float
    bu_after: float
    jfi_before: float
    jfi_after: float
    events_processed: int
    seed: int
    batches: dict[str, list[float]] = field(repr=False)
    occupancy: dict[SystemState, float] = field(repr=False)
    cell: CellConfig = field(repr=False, default=None)


class _Uniforms:
    """Block-buffered uniforms on (0, 1]."""

    def __init__(self, seed: int, block: int = 1 << 16):
        self._gen = np.random.Generator(np.random.Philox(seed))
        self._block = block
        self._buf: list[float] = []
        self._pos = 0

    def expo(self, rate: float) -> float:
        if self._pos == len(self._buf):
            # 1 - U keeps the log argument away from zero
            self._buf = (1.0 - self._gen.random(self._block)).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return -math.log(u) / rate


class _Batch:
    __slots__ = ("offered", "rejected", "outage", "busy", "time",
                 "sched", "sched_n", "jfi_n")

    def __init__(self):
        self.offered = [[0, 0] for _ in CLASSES]  # [new, handoff]
        self.rejected = [[0, 0] for _ in CLASSES]
        self.outage = [0, 0, 0]
        self.busy = 0.0
        self.time = 0.0
        self.sched = [0.0, 0.0, 0.0, 0.0]
        self.sched_n = 0
        self.jfi_n = 0

    def values(self, cap: float) -> dict[str, float]:
        ratio = lambda a, b: a / b if b else 0.0
        v = {}
        for k, c in enumerate(CLASSES):
            v[f"ncbp_{c.value}"] = ratio(self.rejected[k][0], self.offered[k][0])
        for k, c in enumerate(CLASSES):
            v[f"hcdp_{c.value}"] = ratio(self.rejected[k][1], self.offered[k][1])
        for k, c in enumerate(CLASSES):
            v[f"cop_{c.value}"] = ratio(self.outage[k], sum(self.offered[k]))
        v["bu"] = ratio(self.busy, self.time * cap)
        v["bu_before"] = ratio(self.sched[0], self.sched_n)
        v["bu_after"] = ratio(self.sched[1], self.sched_n)
        v["jfi_before"] = ratio(self.sched[2], self.jfi_n)
        v["jfi_after"] = ratio(self.sched[3], self.jfi_n)
        return v


_ARRIVAL, _DEPARTURE = 0, 1


def run(cfg: SimConfig) -> SimReport:
    problems = cfg.violations()
    if problems:
        raise ValueError("; ".join(problems))
    cell, traffic = cfg.cell, cfg.traffic
    rng = _Uniforms(cfg.seed)
    streams = []
    for c in CLASSES:
        streams.append((AdmissionRequest(c, RequestKind.NEW), traffic.new(c)))
        streams.append((AdmissionRequest(c, RequestKind.HANDOFF), traffic.handoff(c)))

    heap: list[tuple[float, int, int, int]] = []
    seq = 0
    for i, (_, rate) in enumerate(streams):
        if rate > 0:
            heapq.heappush(heap, (rng.expo(rate), seq, _ARRIVAL, i))
            seq += 1

    state = cell.empty_state()
    now = 0.0
    warmup = cfg.warmup
    measured = cfg.horizon_events - warmup
    per_batch = measured // N_BATCHES
    batches = [_Batch() for _ in range(N_BATCHES)]
    occupancy: dict[SystemState, float] = {}
    sched_cache: dict[SystemState, tuple] = {}
    processed = 0

    while heap and processed < cfg.horizon_events:
        t, _, kind, idx = heapq.heappop(heap)
        rec = processed >= warmup
        b = batches[min((processed - warmup) // per_batch, N_BATCHES - 1)] if rec else None
        if rec:
            dt = t - now
            b.time += dt
            b.busy += dt * used_bandwidth(state, cell)
            occupancy[state] = occupancy.get(state, 0.0) + dt
        now = t
        processed += 1
        if kind == _DEPARTURE:
            state = restore_on_departure(state, CLASSES[idx], cell)
            continue

        req, rate = streams[idx]
        heapq.heappush(heap, (now + rng.expo(rate), seq, _ARRIVAL, idx))
        seq += 1
        if rec:
            sc = sched_cache.get(state)
            if sc is None:
                before, after = reschedule_report(state, cell, cfg.alpha)
                sc = sched_cache[state] = (before, after)
            before, after = sc
            b.sched[0] += before.utilization
            b.sched[1] += after.utilization
            b.sched_n += 1
            if before.jfi is not None:
                b.sched[2] += before.jfi
                b.sched[3] += after.jfi
                b.jfi_n += 1
        verdict = decide(state, req, cell)
        k = CLASSES.index(req.cls)
        kk = 0 if req.kind is RequestKind.NEW else 1
        if rec:
            b.offered[k][kk] += 1
        if verdict.admitted:
            state = verdict.next_state
            mu = traffic.service(req.cls)
            heapq.heappush(heap, (now + rng.expo(mu), seq, _DEPARTURE, k))
            seq += 1
        elif rec:
            b.rejected[k][kk] += 1
            if verdict.reject_reason is RejectReason.OUTAGE:
                b.outage[k] += 1

    total_time = sum(occupancy.values())
    if total_time > 0:
        occupancy = {s: v / total_time for s, v in occupancy.items()}
    values = [bt.values(cell.total_bandwidth) for bt in batches]
    names = list(METRIC_NAMES) + list(SCHEDULE_NAMES)
    batch_values = {n: [v[n] for v in values] for n in names}
    if not heap:
        # nothing ever arrives: every estimator is exactly zero
        batch_values = {n: [0.0] * N_BATCHES for n in names}
    return _summarise(batch_values, processed, cfg.seed, occupancy, cell)


def _summarise(batch_values, processed, seed, occupancy, cell) -> SimReport:
    means, hw = {}, {}
    for name, xs in batch_values.items():
        arr = np.asarray(xs, dtype=float)
        means[name] = float(arr.mean())
        hw[name] = batch_half_width(arr)
    rep = QosReport(
        tuple(means[f"ncbp_{c.value}"] for c in CLASSES),
        tuple(means[f"hcdp_{c.value}"] for c in CLASSES),
        tuple(means[f"cop_{c.value}"] for c in CLASSES),
        means["bu"],
    )
    return SimReport(rep, hw, means["bu_before"], means["bu_after"], means["jfi_before"],
                     means["jfi_after"], processed, seed, batch_values, occupancy, cell)


def batch_half_width(batch_means, confidence: float = 0.95) -> float:
    """Student-t half-width of the mean of independent batch means."""
    arr = np.asarray(batch_means, dtype=float)
    n = arr.size
    if n < 2:
        return float("inf")
    sd = float(arr.std(ddof=1))
    return float(stats.t.ppf(0.5 + confidence / 2, n - 1) * sd / math.sqrt(n))


def merge(reports: list[SimReport]) -> SimReport:
    """Pool independent replications by concatenating their batch means."""
    if not reports:
        raise ValueError("nothing to merge")
    names = reports[0].batches.keys()
    pooled = {n: [x for r in reports for x in r.batches[n]] for n in names}
    occ: dict[SystemState, float] = {}
    for r in reports:
        for s, p in r.occupancy.items():
            occ[s] = occ.get(s, 0.0) + p / len(reports)
    return _summarise(pooled, sum(r.events_processed for r in reports),
                      reports[0].seed, occ, reports[0].cell)


@dataclass(frozen=True)
class MetricComparison:
    empirical: float
    analytic: float
    half_width: float
    difference: float
    within_ci: bool


def compare_with_ctmc(sim: SimReport, analytic: QosReport,
                      analytic_cell: CellConfig | None = None) -> dict[str, MetricComparison]:
    if analytic_cell is not None and sim.cell is not None and analytic_cell != sim.cell:
        raise ConfigMismatchError("simulation and analytic model use different cells")
    out = {}
    emp = sim.report.metrics()
    for name, a in analytic.metrics().items():
        e = emp[name]
        hw = sim.half_width[name]
        diff = abs(e - a)
        out[name] = MetricComparison(e, a, hw, diff, diff <= hw + 1e-12)
    return out


def total_variation(occupancy: dict[SystemState, float], space, pi) -> float:
    """TV distance between simulated time fractions and a stationary vector."""
    tv = 0.0
    for i, s in enumerate(space.states):
        tv += abs(occupancy.get(s, 0.0) - pi[i])
    tv += sum(p for s, p in occupancy.items() if s not in space.index)
    return 0.5 * tv


SIM_HEADER = (["lambda", "mcs", "seed", "events"] + list(METRIC_NAMES)
              + [f"ci_{n}" for n in METRIC_NAMES] + list(SCHEDULE_NAMES))


def sim_rows_csv(rows: list[tuple[float, str, SimReport]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SIM_HEADER)
    for lam, mcs, r in rows:
        m = r.report.metrics()
        w.writerow([repr(float(lam)), mcs, r.seed, r.events_processed]
                   + [f"{m[n]:.10g}" for n in METRIC_NAMES]
                   + [f"{r.half_width[n]:.10g}" for n in METRIC_NAMES]
                   + [f"{getattr(r, n):.10g}" for n in SCHEDULE_NAMES])
    return buf.getvalue()


def comparison_csv(cmp: dict[str, MetricComparison]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "analytic", "empirical", "ci_half_width", "difference", "within_ci"])
    for name, c in cmp.items():
        w.writerow([name, f"{c.analytic:.10g}", f"{c.empirical:.10g}", f"{c.half_width:.10g}",
                    f"{c.difference:.10g}", str(c.within_ci).lower()])
    return buf.getvalue()
