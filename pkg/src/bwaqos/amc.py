"""Load and E_b/N_0 sweeps, operating ranges, and QoS-driven MCS selection."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from . import ctmc
from .model import CellConfig, TrafficModel
from .phy import ALL_MCS, McsProfile, PhyConfig, raw_data_rate
from .scheduler import DEFAULT_ALPHA, RescheduleSummary, average_reschedule

QPSK_12 = ALL_MCS[0]


def cell_for_mcs(base: CellConfig, mcs: McsProfile, phy: PhyConfig) -> CellConfig:
    """Copy of ``base`` whose total bandwidth is the MCS raw rate (kbps)."""
    return replace(base, total_bandwidth=raw_data_rate(mcs, phy) / 1e3,
                   channel_bandwidth=phy.channel_bandwidth)


def _solve(args):
    cell, traffic, cap = args
    return ctmc.solve(cell, traffic, cap)


def _map(fn, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


# -- E_b/N_0 sweep ----------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    base: CellConfig
    traffic: TrafficModel
    phy: PhyConfig = PhyConfig()
    ebn0_grid: tuple[float, ...] = tuple(float(x) for x in range(1, 21))
    mcs_set: tuple[McsProfile, ...] = ALL_MCS
    epsilon: float = 1e-6
    # grid value that leaves every class at its configured E_b/N_0
    reference_db: Optional[float] = None
    state_cap: int = ctmc.DEFAULT_STATE_CAP

    @property
    def reference(self) -> float:
        return self.base.ugs.eb_n0_db if self.reference_db is None else self.reference_db

    def violations(self) -> list[str]:
        out = []
        if not self.ebn0_grid:
            out.append("ebn0_grid is empty")
        elif list(self.ebn0_grid) != sorted(self.ebn0_grid):
            out.append("ebn0_grid must be sorted")
        if not 0 < self.epsilon < 1:
            out.append("epsilon must lie in (0, 1)")
        if not self.mcs_set:
            out.append("mcs_set is empty")
        return out

    def cell_at(self, mcs: McsProfile, ebn0_db: float) -> CellConfig:
        return cell_for_mcs(self.base, mcs, self.phy).with_ebn0_offset(ebn0_db - self.reference)


SweepResult = dict  # (mcs name, ebn0) -> QosReport


def sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    problems = spec.violations()
    if problems:
        raise ValueError("; ".join(problems))
    keys = [(m, g) for m in spec.mcs_set for g in spec.ebn0_grid]
    jobs = [(spec.cell_at(m, g), spec.traffic, spec.state_cap) for m, g in keys]
    sols = _map(_solve, jobs, workers)
    return {(m.name, g): s.report for (m, g), s in zip(keys, sols)}


@dataclass(frozen=True)
class OperatingRange:
    min_ebn0_zero_blocking: Optional[float]
    min_ebn0_zero_dropping: Optional[float]
    max_ebn0_zero_outage: Optional[float]

    @property
    def has_window(self) -> bool:
        lo, hi = self.min_ebn0_zero_blocking, self.max_ebn0_zero_outage
        return lo is not None and hi is not None and lo <= hi


def _grid(result: SweepResult, mcs_name: str) -> list[float]:
    return sorted(g for m, g in result if m == mcs_name)


def operating_range(result: SweepResult, epsilon: float = 1e-6) -> dict[str, OperatingRange]:
    """Per MCS: where blocking and dropping vanish and where outage does."""
    out = {}
    for name in dict.fromkeys(m for m, _ in result):
        grid = _grid(result, name)
        zero = lambda g, attr: max(getattr(result[name, g], attr)) <= epsilon
        blk = [g for g in grid if zero(g, "ncbp")]
        drp = [g for g in grid if zero(g, "hcdp")]
        out_ = [g for g in grid if zero(g, "cop")]
        out[name] = OperatingRange(min(blk) if blk else None, min(drp) if drp else None,
                                   max(out_) if out_ else None)
    return out


@dataclass(frozen=True)
class QosTargets:
    """Per-class ceilings ordered (UGS, rtPS, nrtPS)."""

    max_ncbp: tuple[float, float, float] = (1.0, 1.0, 1.0)
    max_hcdp: tuple[float, float, float] = (1.0, 1.0, 1.0)
    max_cop: tuple[float, float, float] = (1.0, 1.0, 1.0)

    @classmethod
    def uniform(cls, ncbp=1.0, hcdp=1.0, cop=1.0) -> "QosTargets":
        return cls((ncbp,) * 3, (hcdp,) * 3, (cop,) * 3)

    def met_by(self, rep: ctmc.QosReport) -> bool:
        pairs = ((rep.ncbp, self.max_ncbp), (rep.hcdp, self.max_hcdp), (rep.cop, self.max_cop))
        return all(v <= lim for vals, lims in pairs for v, lim in zip(vals, lims))


def _rate_order(mcs: McsProfile, phy: PhyConfig):
    # equal rates: prefer the sparser constellation
    return (raw_data_rate(mcs, phy), -mcs.bits_per_symbol)


def select_mcs(current_ebn0: float, ranges: dict[str, OperatingRange], targets: QosTargets,
               result: SweepResult, phy: PhyConfig = PhyConfig(),
               mcs_set: Sequence[McsProfile] = ALL_MCS) -> McsProfile:
    """Fastest MCS whose report at the nearest grid point meets ``targets``.

    ``ranges`` is accepted for interface symmetry with the feedback loop;
    the decision itself reads the sweep reports. Falls back to QPSK-1/2.
    """
    ok = []
    for mcs in mcs_set:
        grid = _grid(result, mcs.name)
        if not grid:
            continue
        g = min(grid, key=lambda x: (abs(x - current_ebn0), x))
        if targets.met_by(result[mcs.name, g]):
            ok.append(mcs)
    if not ok:
        return QPSK_12
    return max(ok, key=lambda m: _rate_order(m, phy))


def sweep_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ebn0_db", "mcs"] + list(ctmc.METRIC_NAMES))
    for (mcs, g), rep in result.items():
        w.writerow([repr(float(g)), mcs] + [f"{v:.10g}" for v in rep.metrics().values()])
    return buf.getvalue()


def range_csv(ranges: dict[str, OperatingRange]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mcs", "min_ebn0_blocking_db", "min_ebn0_dropping_db", "max_ebn0_outage_db"])
    cell = lambda v: "" if v is None else f"{v:g}"
    for name, r in ranges.items():
        w.writerow([name, cell(r.min_ebn0_zero_blocking), cell(r.min_ebn0_zero_dropping),
                    cell(r.max_ebn0_zero_outage)])
    return buf.getvalue()


# -- arrival-rate sweep -----------------------------------------------------

@dataclass(frozen=True)
class LoadPoint:
    arrival_rate: float
    mcs: McsProfile
    report: ctmc.QosReport
    schedule: RescheduleSummary


def load_sweep(base: CellConfig, arrival_rates: Sequence[float],
               mcs_set: Sequence[McsProfile] = ALL_MCS, phy: PhyConfig = PhyConfig(),
               mu: float = 0.2, alpha: float = DEFAULT_ALPHA,
               state_cap: int = ctmc.DEFAULT_STATE_CAP, workers: int = 1) -> list[LoadPoint]:
    """CTMC solve plus rescheduling averages for each (MCS, per-stream rate)."""
    keys = [(m, lam) for m in mcs_set for lam in arrival_rates]
    jobs = [(cell_for_mcs(base, m, phy), TrafficModel.uniform(lam, mu), state_cap)
            for m, lam in keys]
    sols = _map(_solve, jobs, workers)
    out = []
    for (m, lam), (cell, _, _), sol in zip(keys, jobs, sols):
        summary = average_reschedule(sol.space.states, sol.stationary.pi, cell, alpha)
        out.append(LoadPoint(lam, m, sol.report, summary))
    return out


def load_sweep_csv(points: list[LoadPoint]) -> str:
    return ctmc.qos_rows_csv([(p.arrival_rate, p.mcs.name, p.report) for p in points])


def schedule_csv(points: list[LoadPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["arrival_rate", "mcs", "bu_before", "bu_after", "jfi_before", "jfi_after"])
    for p in points:
        s = p.schedule
        w.writerow([repr(float(p.arrival_rate)), p.mcs.name]
                   + [f"{v:.10g}" for v in (s.bu_before, s.bu_after, s.jfi_before, s.jfi_after)])
    return buf.getvalue()
