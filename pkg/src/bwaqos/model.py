"""Service classes, traffic, cell configuration and the CTMC state tuple.

Rates are kept in kbps throughout the MAC-level code (the total cell
bandwidth included); the channel bandwidth stays in Hz.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple, Optional


class ServiceClass(Enum):
    UGS = "ugs"
    RTPS = "rtps"
    NRTPS = "nrtps"


CLASSES = (ServiceClass.UGS, ServiceClass.RTPS, ServiceClass.NRTPS)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ServiceClassParams:
    cls: ServiceClass
    mstr: int  # kbps
    mrtr: int  # kbps
    bucket_size: float  # bits
    eb_n0_db: float
    max_latency: Optional[float] = None  # ms, rtPS only
    token_rate: Optional[float] = None  # kbps, defaults to mrtr

    @property
    def rate(self) -> float:
        return self.mrtr if self.token_rate is None else self.token_rate

    @property
    def eb_n0(self) -> float:
        return db_to_linear(self.eb_n0_db)


def default_classes() -> tuple[ServiceClassParams, ServiceClassParams, ServiceClassParams]:
    return (
        ServiceClassParams(ServiceClass.UGS, 256, 256, 64, 3.6),
        ServiceClassParams(ServiceClass.RTPS, 1024, 512, 10240, 6.3, max_latency=21.0),
        ServiceClassParams(ServiceClass.NRTPS, 1024, 256, 10240, 8.1),
    )


@dataclass(frozen=True)
class TrafficModel:
    """Per-class rates ordered (UGS, rtPS, nrtPS)."""

    lambda_new: tuple[float, float, float]
    lambda_handoff: tuple[float, float, float]
    mu: tuple[float, float, float] = (0.2, 0.2, 0.2)

    @classmethod
    def uniform(cls, lam: float, mu: float = 0.2) -> "TrafficModel":
        return cls((lam,) * 3, (lam,) * 3, (mu,) * 3)

    def new(self, c: ServiceClass) -> float:
        return self.lambda_new[CLASSES.index(c)]

    def handoff(self, c: ServiceClass) -> float:
        return self.lambda_handoff[CLASSES.index(c)]

    def service(self, c: ServiceClass) -> float:
        return self.mu[CLASSES.index(c)]

    def violations(self) -> list[str]:
        out = []
        for name, rates in (("lambda_new", self.lambda_new),
                            ("lambda_handoff", self.lambda_handoff)):
            if len(rates) != 3:
                out.append(f"{name} needs 3 entries")
            elif any(r < 0 for r in rates):
                out.append(f"{name} has a negative rate")
        if len(self.mu) != 3 or any(m <= 0 for m in self.mu):
            out.append("mu must have 3 positive entries")
        return out


class SystemState(NamedTuple):
    n_u: int
    n_r: int
    d_r: int  # kbps per rtPS connection
    n_n: int
    d_n: int  # kbps per nrtPS connection

    def count(self, c: ServiceClass) -> int:
        return (self.n_u, self.n_r, self.n_n)[CLASSES.index(c)]


@dataclass(frozen=True)
class CellConfig:
    total_bandwidth: float  # kbps available for uplink connections
    frame_duration: float = 1.0  # ms
    channel_bandwidth: float = 20e6  # Hz
    classes: tuple[ServiceClassParams, ServiceClassParams, ServiceClassParams] = field(
        default_factory=default_classes)
    degradation_step: int = 64  # kbps
    outage_check: bool = True

    @property
    def ugs(self) -> ServiceClassParams:
        return self.classes[0]

    @property
    def rtps(self) -> ServiceClassParams:
        return self.classes[1]

    @property
    def nrtps(self) -> ServiceClassParams:
        return self.classes[2]

    def params(self, c: ServiceClass) -> ServiceClassParams:
        return self.classes[CLASSES.index(c)]

    def grid(self, c: ServiceClass) -> range:
        """Allowed per-connection allocations, floor to ceiling."""
        p = self.params(c)
        if c is ServiceClass.UGS:
            return range(p.mstr, p.mstr + 1)
        return range(p.mrtr, p.mstr + 1, self.degradation_step)

    def empty_state(self) -> SystemState:
        return SystemState(0, 0, self.rtps.mstr, 0, self.nrtps.mstr)

    def with_ebn0_offset(self, offset_db: float) -> "CellConfig":
        return replace(self, classes=tuple(
            replace(p, eb_n0_db=p.eb_n0_db + offset_db) for p in self.classes))


def used_bandwidth(s: SystemState, cfg: CellConfig) -> int:
    return s.n_u * cfg.ugs.mstr + s.n_r * s.d_r + s.n_n * s.d_n


def canonical(s: SystemState, cfg: CellConfig) -> SystemState:
    """Pin the allocation of an empty class to its MSTR."""
    if s.n_r == 0 and s.d_r != cfg.rtps.mstr:
        s = s._replace(d_r=cfg.rtps.mstr)
    if s.n_n == 0 and s.d_n != cfg.nrtps.mstr:
        s = s._replace(d_n=cfg.nrtps.mstr)
    return s


def state_violations(s: SystemState, cfg: CellConfig, tol: float = 1e-9) -> list[str]:
    out = []
    if min(s.n_u, s.n_r, s.n_n) < 0:
        out.append(f"negative count in {s}")
    if used_bandwidth(s, cfg) > cfg.total_bandwidth + tol:
        out.append(f"{s} exceeds bandwidth {cfg.total_bandwidth}")
    for c, d, n in ((ServiceClass.RTPS, s.d_r, s.n_r), (ServiceClass.NRTPS, s.d_n, s.n_n)):
        if d not in cfg.grid(c):
            out.append(f"{c.value} allocation {d} off grid")
        if n == 0 and d != cfg.params(c).mstr:
            out.append(f"empty {c.value} class not canonical in {s}")
    return out


def validate(cfg: CellConfig) -> list[str]:
    """Every invariant violation of ``cfg``; an empty list means valid."""
    out = []
    if not cfg.total_bandwidth > 0:
        out.append("total_bandwidth must be positive")
    if not cfg.frame_duration > 0:
        out.append("frame_duration must be positive")
    if not cfg.channel_bandwidth > 0:
        out.append("channel_bandwidth must be positive")
    if cfg.degradation_step <= 0:
        out.append("degradation_step must be positive")
    expected = CLASSES
    if tuple(p.cls for p in cfg.classes) != expected:
        out.append("classes must be ordered (ugs, rtps, nrtps)")
        return out
    for p in cfg.classes:
        name = p.cls.value
        if p.mrtr <= 0:
            out.append(f"{name}: mrtr must be positive")
        if p.mrtr > p.mstr:
            out.append(f"{name}: mrtr {p.mrtr} exceeds mstr {p.mstr}")
        if p.cls is ServiceClass.UGS and p.mstr != p.mrtr:
            out.append(f"{name}: mstr must equal mrtr for fixed-rate service")
        if p.bucket_size < 0:
            out.append(f"{name}: bucket_size must be non-negative")
        if p.token_rate is not None and p.token_rate <= 0:
            out.append(f"{name}: token_rate must be positive")
        if p.cls is ServiceClass.RTPS:
            if p.max_latency is None:
                out.append(f"{name}: max_latency is required")
            elif cfg.frame_duration > 0:
                if p.max_latency <= cfg.frame_duration:
                    out.append(f"{name}: max_latency must exceed the frame duration")
                m = p.max_latency / cfg.frame_duration
                if abs(m - round(m)) > 1e-9:
                    out.append(f"{name}: max_latency / frame_duration = {m:g} is not an integer")
        elif p.max_latency is not None:
            out.append(f"{name}: max_latency only applies to rtps")
        if p.cls is not ServiceClass.UGS and cfg.degradation_step > 0:
            span = p.mstr - p.mrtr
            if span % cfg.degradation_step:
                out.append(f"{name}: degradation_step {cfg.degradation_step} "
                           f"does not divide mstr-mrtr span {span}")
    return out
