"""Queue-based uplink rescheduling at the subscriber station."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .model import CellConfig, SystemState, used_bandwidth

DEFAULT_ALPHA = 0.5


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ScheduleInput:
    total_bandwidth: float
    n_ugs: int
    ugs_rate: float
    n_rt: int
    n_nrt: int
    max_mpdu_delay: float  # ms
    rtps_max_latency: float  # ms


@dataclass(frozen=True)
class ScheduleResult:
    b_poll: float
    alpha: float
    b_rt_total: float
    b_nrt_total: float


def compute_alpha(max_mpdu_delay: float, rtps_latency: float) -> float:
    if max_mpdu_delay <= 0 or rtps_latency <= 0:
        raise ScheduleError("durations must be positive")
    return max_mpdu_delay / rtps_latency


def split_polling(b_poll: float, n_rt: int, n_nrt: int, alpha: float) -> tuple[float, float]:
    """Real-time / non-real-time shares of the polling bandwidth."""
    weight = n_rt * alpha + n_nrt
    if weight == 0:
        return 0.0, 0.0
    w_rt = n_rt * alpha
    # The larger share is computed directly and kept >= b_poll/2; the other
    # is its complement, which is then exact (Sterbenz), so the two shares
    # add back to b_poll with no rounding error.
    if w_rt >= weight - w_rt:
        b_rt = max(b_poll * w_rt / weight, b_poll / 2)
        return b_rt, b_poll - b_rt
    b_nrt = max(b_poll * (weight - w_rt) / weight, b_poll / 2)
    return b_poll - b_nrt, b_nrt


def allocate(inp: ScheduleInput) -> ScheduleResult:
    if not 0 < inp.max_mpdu_delay <= inp.rtps_max_latency:
        raise ScheduleError("need 0 < max_mpdu_delay <= rtps_max_latency")
    b_ugs = inp.n_ugs * inp.ugs_rate
    if b_ugs > inp.total_bandwidth:
        raise ScheduleError(f"UGS load {b_ugs} exceeds total bandwidth {inp.total_bandwidth}")
    alpha = compute_alpha(inp.max_mpdu_delay, inp.rtps_max_latency)
    b_poll = inp.total_bandwidth - b_ugs
    b_rt, b_nrt = split_polling(b_poll, inp.n_rt, inp.n_nrt, alpha)
    return ScheduleResult(b_poll, alpha, b_rt, b_nrt)


def jain_fairness(rates: Sequence[float]) -> float:
    """Jain's index (sum r)^2 / (n sum r^2), in [1/n, 1]."""
    if len(rates) == 0:
        raise ScheduleError("no rates")
    if any(r < 0 for r in rates):
        raise ScheduleError("negative rate")
    s = sum(rates)
    if s == 0:
        raise ScheduleError("all rates are zero")
    # normalise first so the index is exactly scale free
    peak = max(rates)
    xs = [r / peak for r in rates]
    s = sum(xs)
    return min(1.0, s * s / (len(xs) * sum(x * x for x in xs)))


def _jfi_of_classes(n_u, r_u, n_r, r_r, n_n, r_n) -> Optional[float]:
    n = n_u + n_r + n_n
    if n == 0:
        return None
    s = n_u * r_u + n_r * r_r + n_n * r_n
    if s == 0:
        return None
    sq = n_u * r_u * r_u + n_r * r_r * r_r + n_n * r_n * r_n
    return min(1.0, s * s / (n * sq))


def rescheduled_rates(state: SystemState, cfg: CellConfig,
                      alpha: float = DEFAULT_ALPHA) -> tuple[float, float]:
    """Per-flow (rtPS, nrtPS) rates after rescheduling the polling bandwidth.

    Each pool is split evenly over its flows and capped at the class MSTR;
    what one pool cannot use spills into the other.
    """
    b_poll = cfg.total_bandwidth - state.n_u * cfg.ugs.mstr
    b_rt, b_nrt = split_polling(b_poll, state.n_r, state.n_n, alpha)
    cap_rt = state.n_r * cfg.rtps.mstr
    cap_nrt = state.n_n * cfg.nrtps.mstr
    rt, nrt = min(b_rt, cap_rt), min(b_nrt, cap_nrt)
    spill_rt, spill_nrt = b_rt - rt, b_nrt - nrt
    rt = min(rt + spill_nrt, cap_rt)
    nrt = min(nrt + spill_rt, cap_nrt)
    return (rt / state.n_r if state.n_r else 0.0,
            nrt / state.n_n if state.n_n else 0.0)


@dataclass(frozen=True)
class ScheduleMetrics:
    utilization: float
    jfi: Optional[float]  # None for an empty cell


def reschedule_report(state: SystemState, cfg: CellConfig,
                      alpha: float = DEFAULT_ALPHA) -> tuple[ScheduleMetrics, ScheduleMetrics]:
    """(before, after) utilisation and fairness for one cell state."""
    b = cfg.total_bandwidth
    r_u = cfg.ugs.mstr
    before = ScheduleMetrics(
        used_bandwidth(state, cfg) / b,
        _jfi_of_classes(state.n_u, r_u, state.n_r, state.d_r, state.n_n, state.d_n))
    if state.n_r + state.n_n == 0:
        return before, before
    r_r, r_n = rescheduled_rates(state, cfg, alpha)
    after = ScheduleMetrics(
        (state.n_u * r_u + state.n_r * r_r + state.n_n * r_n) / b,
        _jfi_of_classes(state.n_u, r_u, state.n_r, r_r, state.n_n, r_n))
    return before, after


@dataclass(frozen=True)
class RescheduleSummary:
    bu_before: float
    bu_after: float
    jfi_before: float
    jfi_after: float


def average_reschedule(states, weights, cfg: CellConfig,
                       alpha: float = DEFAULT_ALPHA) -> RescheduleSummary:
    """Probability-weighted means; fairness is averaged over non-empty states."""
    bu_b = bu_a = jf_b = jf_a = mass = 0.0
    for s, w in zip(states, weights):
        before, after = reschedule_report(s, cfg, alpha)
        bu_b += w * before.utilization
        bu_a += w * after.utilization
        if before.jfi is not None:
            jf_b += w * before.jfi
            jf_a += w * after.jfi
            mass += w
    if mass > 0:
        jf_b /= mass
        jf_a /= mass
    else:
        jf_b = jf_a = 1.0
    return RescheduleSummary(bu_b, bu_a, jf_b, jf_a)
