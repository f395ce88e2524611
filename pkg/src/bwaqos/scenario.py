"""Flat ``key = value`` scenario files.

Lines starting with ``#`` and blank lines are ignored. Overrides from the
command line are applied to the raw key table before anything is built or
validated. Unknown keys are an error.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional

from .model import CellConfig, ServiceClass, ServiceClassParams, TrafficModel, validate
from .phy import InvalidConfigError, McsProfile, PhyConfig, raw_data_rate


class ScenarioError(ValueError):
    """The scenario text does not parse or does not validate."""


_CLASS_KEYS = ("mstr", "mrtr", "bucket_size", "eb_n0_db", "token_rate", "max_latency_ms")

KEYS = {
    "mcs", "channel_bandwidth_hz", "fft_size", "sampling_factor", "cyclic_prefix",
    "total_bandwidth_kbps", "frame_duration_ms", "degradation_step_kbps", "outage_check",
    "lambda_new", "lambda_handoff", "mu", "alpha", "seed", "events", "warmup_events",
    "epsilon", "state_cap", "load_grid", "ebn0_grid", "ebn0_reference_db",
} | {f"{c.value}.{k}" for c in ServiceClass for k in _CLASS_KEYS}


@dataclass(frozen=True)
class Scenario:
    mcs: McsProfile
    phy: PhyConfig
    cell: CellConfig
    traffic: TrafficModel
    alpha: float = 0.5
    seed: Optional[int] = None
    events: int = 1_000_000
    warmup_events: Optional[int] = None
    epsilon: float = 1e-6
    state_cap: int = 2_000_000
    load_grid: tuple[float, ...] = tuple(float(x) for x in range(1, 11))
    ebn0_grid: tuple[float, ...] = tuple(float(x) for x in range(1, 21))
    ebn0_reference_db: Optional[float] = None


def parse_pairs(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in KEYS:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def apply_overrides(pairs: dict[str, str], overrides: list[str]) -> dict[str, str]:
    pairs = dict(pairs)
    for item in overrides:
        if "=" not in item:
            raise ScenarioError(f"override {item!r} is not key=value")
        key, value = (p.strip() for p in item.split("=", 1))
        if key not in KEYS:
            raise ScenarioError(f"override of unknown key {key!r}")
        pairs[key] = value
    return pairs


def _num_list(text: str) -> tuple[float, ...]:
    """Comma list, or ``start:stop:step`` inclusive."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        n = int(round((stop - start) / step))
        return tuple(start + i * step for i in range(n + 1))
    return tuple(float(x) for x in text.split(",") if x.strip())


def _triple(text: str) -> tuple[float, float, float]:
    vals = _num_list(text)
    if len(vals) == 1:
        return (vals[0],) * 3
    if len(vals) != 3:
        raise ScenarioError(f"expected one value or three (ugs, rtps, nrtps): {text!r}")
    return vals


def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ScenarioError(f"not a boolean: {text!r}")


_CLASS_DEFAULTS = {
    ServiceClass.UGS: dict(mstr="256", mrtr="256", bucket_size="64", eb_n0_db="3.6"),
    ServiceClass.RTPS: dict(mstr="1024", mrtr="512", bucket_size="10240", eb_n0_db="6.3",
                            max_latency_ms="21"),
    ServiceClass.NRTPS: dict(mstr="1024", mrtr="256", bucket_size="10240", eb_n0_db="8.1"),
}


def build(pairs: dict[str, str]) -> Scenario:
    get = pairs.get
    try:
        mcs = McsProfile.parse(get("mcs", "QPSK-1/2"))
        phy = PhyConfig(float(get("channel_bandwidth_hz", "20e6")), int(get("fft_size", "2048")),
                        Fraction(get("sampling_factor", "8/7")),
                        Fraction(get("cyclic_prefix", "1/32")))
        classes = []
        for c in ServiceClass:
            vals = dict(_CLASS_DEFAULTS[c])
            vals.update({k: pairs[f"{c.value}.{k}"] for k in _CLASS_KEYS
                         if f"{c.value}.{k}" in pairs})
            latency = vals.get("max_latency_ms")
            classes.append(ServiceClassParams(
                c, int(vals["mstr"]), int(vals["mrtr"]), float(vals["bucket_size"]),
                float(vals["eb_n0_db"]),
                max_latency=float(latency) if latency not in (None, "", "none") else None,
                token_rate=float(vals["token_rate"]) if vals.get("token_rate") else None))
        if "total_bandwidth_kbps" in pairs:
            total = float(pairs["total_bandwidth_kbps"])
        else:
            total = raw_data_rate(mcs, phy) / 1e3
        cell = CellConfig(total, float(get("frame_duration_ms", "1")), phy.channel_bandwidth,
                          tuple(classes), int(get("degradation_step_kbps", "64")),
                          _bool(get("outage_check", "true")))
        traffic = TrafficModel(_triple(get("lambda_new", "10")),
                               _triple(get("lambda_handoff", "10")), _triple(get("mu", "0.2")))
        kw = {}
        if "seed" in pairs:
            kw["seed"] = int(pairs["seed"])
        if "warmup_events" in pairs:
            kw["warmup_events"] = int(pairs["warmup_events"])
        if "ebn0_reference_db" in pairs:
            kw["ebn0_reference_db"] = float(pairs["ebn0_reference_db"])
        if "load_grid" in pairs:
            kw["load_grid"] = _num_list(pairs["load_grid"])
        if "ebn0_grid" in pairs:
            kw["ebn0_grid"] = _num_list(pairs["ebn0_grid"])
        scn = Scenario(mcs, phy, cell, traffic, alpha=float(get("alpha", "0.5")),
                       events=int(float(get("events", "1e6"))),
                       epsilon=float(get("epsilon", "1e-6")),
                       state_cap=int(float(get("state_cap", "2e6"))), **kw)
    except (ValueError, ZeroDivisionError, InvalidConfigError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc)) from exc
    problems = validate(scn.cell) + scn.traffic.violations()
    if not 0 < scn.alpha <= 1:
        problems.append("alpha must lie in (0, 1]")
    if not 0 < scn.epsilon < 1:
        problems.append("epsilon must lie in (0, 1)")
    if problems:
        raise ScenarioError("; ".join(problems))
    return scn


def load(path: str | Path | None = None, overrides: list[str] = ()) -> Scenario:
    """Read a scenario file (the bundled default when ``path`` is None)."""
    if path is None:
        text = resources.files("bwaqos.scenarios").joinpath("default.cfg").read_text()
    else:
        text = Path(path).read_text()
    return build(apply_overrides(parse_pairs(text), list(overrides)))


def bundled(name: str) -> Path:
    return Path(str(resources.files("bwaqos.scenarios").joinpath(name)))
