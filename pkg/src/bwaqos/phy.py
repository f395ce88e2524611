"""OFDMA raw data rate and spectrum efficiency per modulation/coding scheme."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from fractions import Fraction


class InvalidConfigError(ValueError):
    pass


class Modulation(Enum):
    QPSK = "QPSK"
    QAM16 = "16QAM"
    QAM64 = "64QAM"

    @property
    def bits_per_symbol(self) -> int:
        return _BITS[self]


_BITS = {Modulation.QPSK: 2, Modulation.QAM16: 4, Modulation.QAM64: 6}

# FFT size -> number of used sub-carriers
USED_SUBCARRIERS = {2048: 1440, 1024: 720, 512: 360, 128: 72}

CYCLIC_PREFIXES = (Fraction(1, 32), Fraction(1, 16), Fraction(1, 8), Fraction(1, 4))


@dataclass(frozen=True)
class McsProfile:
    modulation: Modulation
    coding_rate: Fraction

    def __post_init__(self):
        object.__setattr__(self, "coding_rate", Fraction(self.coding_rate))
        if (self.modulation, self.coding_rate) not in _VALID_MCS:
            raise InvalidConfigError(
                f"unsupported MCS {self.modulation.value}-{self.coding_rate}"
            )

    @property
    def bits_per_symbol(self) -> int:
        return self.modulation.bits_per_symbol

    @property
    def name(self) -> str:
        return f"{self.modulation.value}-{self.coding_rate}"

    @classmethod
    def parse(cls, text: str) -> "McsProfile":
        """Parse names such as ``QPSK-1/2`` or ``64QAM-3/4``."""
        try:
            mod, rate = text.strip().split("-")
            modulation = Modulation(mod.upper())
        except ValueError:
            raise InvalidConfigError(f"cannot parse MCS name {text!r}") from None
        return cls(modulation, Fraction(rate))

    def __str__(self):
        return self.name


_VALID_MCS = {
    (Modulation.QPSK, Fraction(1, 2)),
    (Modulation.QPSK, Fraction(3, 4)),
    (Modulation.QAM16, Fraction(1, 2)),
    (Modulation.QAM16, Fraction(3, 4)),
    (Modulation.QAM64, Fraction(1, 2)),
    (Modulation.QAM64, Fraction(2, 3)),
    (Modulation.QAM64, Fraction(3, 4)),
}

# Table order, lowest rate first
ALL_MCS = tuple(
    McsProfile(m, Fraction(c))
    for m, c in [
        (Modulation.QPSK, "1/2"),
        (Modulation.QPSK, "3/4"),
        (Modulation.QAM16, "1/2"),
        (Modulation.QAM16, "3/4"),
        (Modulation.QAM64, "1/2"),
        (Modulation.QAM64, "2/3"),
        (Modulation.QAM64, "3/4"),
    ]
)


@dataclass(frozen=True)
class PhyConfig:
    channel_bandwidth: float = 20e6  # Hz
    fft_size: int = 2048
    sampling_factor: Fraction = Fraction(8, 7)
    cyclic_prefix: Fraction = Fraction(1, 32)

    def __post_init__(self):
        object.__setattr__(self, "sampling_factor", Fraction(self.sampling_factor))
        object.__setattr__(self, "cyclic_prefix", Fraction(self.cyclic_prefix))
        if not self.channel_bandwidth > 0:
            raise InvalidConfigError("channel_bandwidth must be positive")
        if self.fft_size not in USED_SUBCARRIERS:
            raise InvalidConfigError(
                f"fft_size {self.fft_size} not in {sorted(USED_SUBCARRIERS)}"
            )
        if self.cyclic_prefix not in CYCLIC_PREFIXES:
            raise InvalidConfigError(f"cyclic_prefix {self.cyclic_prefix} not allowed")
        if self.sampling_factor <= 0:
            raise InvalidConfigError("sampling_factor must be positive")

    @property
    def used_subcarriers(self) -> int:
        return USED_SUBCARRIERS[self.fft_size]


def _exact_symbol_duration(cfg: PhyConfig) -> Fraction:
    # Exact as long as the bandwidth is a finite float; 8/7 never gets rounded
    w = Fraction(cfg.channel_bandwidth)
    useful = Fraction(cfg.fft_size) / (cfg.sampling_factor * w)
    return useful * (1 + cfg.cyclic_prefix)


def symbol_duration(cfg: PhyConfig) -> float:
    """OFDM symbol duration in seconds, useful time plus cyclic prefix."""
    return float(_exact_symbol_duration(cfg))


def useful_symbol_time(cfg: PhyConfig) -> float:
    w = Fraction(cfg.channel_bandwidth)
    return float(Fraction(cfg.fft_size) / (cfg.sampling_factor * w))


def raw_data_rate(mcs: McsProfile, cfg: PhyConfig) -> float:
    """Raw data rate in bit/s."""
    bits = cfg.used_subcarriers * mcs.bits_per_symbol * mcs.coding_rate
    return float(bits / _exact_symbol_duration(cfg))


def spectrum_efficiency(mcs: McsProfile, cfg: PhyConfig) -> float:
    """Raw data rate over channel bandwidth, in b/s/Hz."""
    bits = cfg.used_subcarriers * mcs.bits_per_symbol * mcs.coding_rate
    return float(bits / _exact_symbol_duration(cfg) / Fraction(cfg.channel_bandwidth))


@dataclass(frozen=True)
class RateRow:
    mcs: McsProfile
    cyclic_prefix: Fraction
    rate_bps: float
    efficiency: float

    @property
    def rate_mbps(self) -> float:
        return self.rate_bps / 1e6


def rate_table(cfg_base: PhyConfig) -> list[RateRow]:
    """All 7 MCS x 4 cyclic prefixes at the base bandwidth/FFT/sampling factor."""
    rows = []
    for mcs in ALL_MCS:
        for g in CYCLIC_PREFIXES:
            cfg = PhyConfig(cfg_base.channel_bandwidth, cfg_base.fft_size,
                            cfg_base.sampling_factor, g)
            rows.append(RateRow(mcs, g, raw_data_rate(mcs, cfg),
                                spectrum_efficiency(mcs, cfg)))
    return rows


def fmt4(x: float) -> str:
    """Round half-up to 4 decimals."""
    return str(Decimal(repr(x)).quantize(Decimal("0.0001"), rounding=ROUND_HALF_UP))


def rate_table_csv(rows: list[RateRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["modulation", "coding_rate", "cyclic_prefix", "rate_mbps", "efficiency"])
    for r in rows:
        w.writerow([r.mcs.modulation.value, str(r.mcs.coding_rate), str(r.cyclic_prefix),
                    fmt4(r.rate_mbps), fmt4(r.efficiency)])
    return buf.getvalue()
