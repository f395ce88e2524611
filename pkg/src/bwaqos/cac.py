"""SINR-based call admission control with adaptive bandwidth degradation.

A request goes through three gates in order: SINR outage, rtPS delay
guarantee, bandwidth (with degradation of lower-priority connections).
The first failing gate names the rejection reason.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional

from .model import (CellConfig, ServiceClass, ServiceClassParams, SystemState,
                    canonical, used_bandwidth)

UGS, RTPS, NRTPS = ServiceClass.UGS, ServiceClass.RTPS, ServiceClass.NRTPS

_BW_TOL = 1e-9


class RequestKind(Enum):
    NEW = "new"
    HANDOFF = "handoff"


class Decision(Enum):
    ADMIT = "admit"
    ADMIT_DEGRADED = "admit_with_degradation"
    REJECT = "reject"


class RejectReason(Enum):
    NONE = "none"
    OUTAGE = "outage"
    DELAY = "delay_violation"
    NO_BANDWIDTH = "no_bandwidth"


class StateUnderflowError(ValueError):
    pass


@dataclass(frozen=True)
class AdmissionRequest:
    cls: ServiceClass
    kind: RequestKind


ALL_REQUESTS = tuple(AdmissionRequest(c, k) for c in (UGS, RTPS, NRTPS)
                     for k in (RequestKind.NEW, RequestKind.HANDOFF))


@dataclass(frozen=True)
class AdmissionVerdict:
    decision: Decision
    reject_reason: RejectReason = RejectReason.NONE
    next_state: Optional[SystemState] = None

    @property
    def admitted(self) -> bool:
        return self.decision is not Decision.REJECT


def sinr_threshold(params: ServiceClassParams, channel_bandwidth: float) -> float:
    """Linear SINR a connection of this class needs at its reserved rate."""
    if channel_bandwidth <= 0:
        raise ValueError("channel bandwidth must be positive")
    return params.eb_n0 * (params.mrtr * 1e3 / channel_bandwidth)


def allocation(c: ServiceClass, state: SystemState, cfg: CellConfig) -> int:
    if c is UGS:
        return cfg.ugs.mstr
    return state.d_r if c is RTPS else state.d_n


def normalized_interference(state: SystemState, cfg: CellConfig) -> float:
    """Received power of admitted connections over thermal noise."""
    w = cfg.channel_bandwidth
    total = 0.0
    for p, n in zip(cfg.classes, (state.n_u, state.n_r, state.n_n)):
        if n:
            total += n * p.eb_n0 * allocation(p.cls, state, cfg) * 1e3 / w
    return total


def measured_sinr(params: ServiceClassParams, state: SystemState, cfg: CellConfig) -> float:
    """SINR of a candidate of ``params.cls`` joining ``state``.

    The interference term covers the connections already in ``state``; the
    candidate transmits at its class's current allocation.
    """
    signal = params.eb_n0 * allocation(params.cls, state, cfg) * 1e3 / cfg.channel_bandwidth
    return signal / (normalized_interference(state, cfg) + 1.0)


def in_outage(c: ServiceClass, state: SystemState, cfg: CellConfig) -> bool:
    p = cfg.params(c)
    # relative slack so an exact tie (empty cell, UGS) is not lost to rounding
    return measured_sinr(p, state, cfg) < sinr_threshold(p, cfg.channel_bandwidth) * (1 - 1e-12)


def delay_guarantee_ok(state_after: SystemState, cfg: CellConfig) -> bool:
    """Token-bucket delay bound for rtPS connections in ``state_after``."""
    if state_after.n_r == 0:
        return True
    p = cfg.rtps
    m = round(p.max_latency / cfg.frame_duration)
    c_rt = state_after.n_r * state_after.d_r
    c_nrt = cfg.total_bandwidth - state_after.n_u * cfg.ugs.mstr - c_rt
    # kbps * ms = bits
    rhs = ((m - 1) * (1 + c_nrt / c_rt) - 1) * p.rate * cfg.frame_duration
    return p.bucket_size <= rhs


def _incremented(state: SystemState, c: ServiceClass) -> SystemState:
    if c is UGS:
        return state._replace(n_u=state.n_u + 1)
    if c is RTPS:
        return state._replace(n_r=state.n_r + 1)
    return state._replace(n_n=state.n_n + 1)


def _baseline(state: SystemState, req: AdmissionRequest, cfg: CellConfig) -> SystemState:
    """Post-admission state before any degradation.

    A new rtPS/nrtPS connection is granted its MSTR; the class shares one
    allocation, so the whole class moves to MSTR.
    """
    s = _incremented(state, req.cls)
    if req.kind is RequestKind.NEW:
        if req.cls is RTPS:
            s = s._replace(d_r=cfg.rtps.mstr)
        elif req.cls is NRTPS:
            s = s._replace(d_n=cfg.nrtps.mstr)
    return s


def _degradable(req: AdmissionRequest) -> tuple[bool, bool]:
    """(may lower d_r, may lower d_n) for this request."""
    if req.kind is RequestKind.HANDOFF:
        return True, True
    # new calls may only squeeze nrtPS, and a new nrtPS call must get MSTR
    return False, req.cls is not NRTPS


def degrade_to_fit(state: SystemState, req: AdmissionRequest,
                   cfg: CellConfig) -> Optional[SystemState]:
    """Cheapest post-admission state that fits the cell bandwidth.

    Cost is the number of grid steps taken off d_r plus those taken off d_n;
    among equal-cost options, the one touching rtPS least wins. Returns
    None when even the floors do not fit.
    """
    base = _baseline(state, req, cfg)
    lower_r, lower_n = _degradable(req)
    step = cfg.degradation_step
    budget = cfg.total_bandwidth + _BW_TOL
    fixed = base.n_u * cfg.ugs.mstr

    r_opts = [base.d_r]
    if lower_r and base.n_r:
        r_opts = [d for d in cfg.grid(RTPS) if d <= base.d_r]
    n_opts = [base.d_n]
    if lower_n and base.n_n:
        n_opts = [d for d in cfg.grid(NRTPS) if d <= base.d_n]

    best = None
    for d_r in r_opts:
        k_r = (base.d_r - d_r) // step
        rem = budget - fixed - base.n_r * d_r
        if rem < 0:
            continue
        # highest feasible d_n for this d_r is the fewest nrtPS steps
        feasible_n = [d for d in n_opts if base.n_n * d <= rem]
        if not feasible_n:
            continue
        d_n = max(feasible_n)
        key = (k_r + (base.d_n - d_n) // step, k_r)
        if best is None or key < best[0]:
            best = (key, base._replace(d_r=d_r, d_n=d_n))
    return None if best is None else canonical(best[1], cfg)


def restore_on_departure(state: SystemState, departed: ServiceClass,
                         cfg: CellConfig) -> SystemState:
    """Remove one connection and hand the freed bandwidth back, rtPS first."""
    if state.count(departed) < 1:
        raise StateUnderflowError(f"no {departed.value} connection in {state}")
    if departed is UGS:
        s = state._replace(n_u=state.n_u - 1)
    elif departed is RTPS:
        s = state._replace(n_r=state.n_r - 1)
    else:
        s = state._replace(n_n=state.n_n - 1)
    s = canonical(s, cfg)
    step = cfg.degradation_step
    for c in (RTPS, NRTPS):
        n = s.count(c)
        d = s.d_r if c is RTPS else s.d_n
        if not n:
            continue
        slack = cfg.total_bandwidth + _BW_TOL - used_bandwidth(s, cfg)
        k = min((cfg.params(c).mstr - d) // step, int(slack // (n * step)))
        if k > 0:
            s = s._replace(d_r=d + k * step) if c is RTPS else s._replace(d_n=d + k * step)
    return s


@lru_cache(maxsize=1 << 20)
def decide(state: SystemState, req: AdmissionRequest, cfg: CellConfig) -> AdmissionVerdict:
    """Admission verdict for ``req`` arriving in ``state``."""
    if cfg.outage_check and in_outage(req.cls, state, cfg):
        return AdmissionVerdict(Decision.REJECT, RejectReason.OUTAGE)
    if not delay_guarantee_ok(_baseline(state, req, cfg), cfg):
        return AdmissionVerdict(Decision.REJECT, RejectReason.DELAY)
    nxt = degrade_to_fit(state, req, cfg)
    if nxt is None:
        return AdmissionVerdict(Decision.REJECT, RejectReason.NO_BANDWIDTH)
    base = canonical(_baseline(state, req, cfg), cfg)
    degraded = nxt.d_r < base.d_r or nxt.d_n < base.d_n
    return AdmissionVerdict(Decision.ADMIT_DEGRADED if degraded else Decision.ADMIT,
                            RejectReason.NONE, nxt)
