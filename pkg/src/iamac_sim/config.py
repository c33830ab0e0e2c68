"""Scenario configuration: defaults, presets and the plain-text loader.

The defaults reproduce the reference settings: 200 nodes on 100x100 m^2, sink
at the middle of the top edge, FSK/NRZ radio at 19200 bps and 0 dBm, 45-byte
data frames, and the tabulated ARQ/Seda lengths. Scenario files are flat
`key = value` lines using exactly the field names below; unknown keys are
rejected so a typo can never silently fall back to a default.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .channel import LinkModel
from .energy import EnergyTable
from .recovery import RecoveryParams


class ConfigError(ValueError):
    pass


@dataclass
class Scenario:
    seed: int = 1
    node_count: int = 200
    area: tuple = (100.0, 100.0)
    protocol: str = "iamac"            # iamac | smac | adaptive-smac
    recovery: str = "arq"              # arq | seda
    frame_s: float = 1.0
    sampling_interval_s: float = 60.0
    horizon_s: float = 300.0
    output_power_dbm: float = 0.0
    stop_on_first_death: bool = True
    control_corruption_disabled: bool = False
    collect_detail: bool = False
    symmetric_shadowing: bool = False

    # routing
    broadcast_count: int = 25
    max_children: int = 8              # 0 disables the cap
    report_rounds: int = 3

    # packet sizes (bytes)
    control_bytes: int = 18            # 28 is the large-control variant
    header_bytes: int = 16
    payload_bytes: int = 29

    # slotted MAC layout
    synch_slot_s: float = 0.05
    w: int = 8
    mini_slot_s: float = 0.016
    cts_slot_s: float = 0.05
    max_backoff_s: float = 0.0015
    sifs_s: float = 0.001
    smac_adaptive_err: float = 0.1

    # link model
    path_loss_exponent: float = 4.0
    pl_d0: float = 55.0
    d0: float = 1.0
    noise_floor: float = -105.0
    shadowing_sigma: float = 4.0
    bandwidth_to_rate: float = 1.5625   # noise bandwidth / bit rate
    radio_speed: float = 19200.0
    cs_threshold: float = 3.0
    disjoint_tolerance: float = 0.05   # stranded fraction that aborts the run

    # energy table
    sleep_ma: float = 0.03
    listen_ma: float = 15.0
    tx0_ma: float = 25.4
    voltage: float = 3.0
    switch_mj: float = 0.002
    sample_mj: float = 0.09
    battery_mah: float = 2400.0

    # error recovery
    ack_len: int = 23
    block_overhead: int = 2
    rf_overhead: int = 5
    gamma_s: float = 0.0
    retry_cap: int = 1
    turnaround_s: float = 0.0
    tx_buffer: int = 128
    rx_buffer: int = 128

    def validate(self):
        if self.node_count < 2:
            raise ConfigError("node_count: need at least a sink and one node")
        if self.area[0] <= 0 or self.area[1] <= 0:
            raise ConfigError("area: dimensions must be positive")
        if self.protocol not in ("iamac", "smac", "adaptive-smac"):
            raise ConfigError(f"protocol: unknown value {self.protocol!r}")
        if self.recovery not in ("arq", "seda"):
            raise ConfigError(f"recovery: unknown value {self.recovery!r}")
        if self.sampling_interval_s <= 0:
            raise ConfigError("sampling_interval_s: must be > 0")
        if self.horizon_s <= self.frame_s:
            raise ConfigError("horizon_s: must exceed one frame")
        if self.w < 1:
            raise ConfigError("w: need at least one contention mini-slot")
        rts_air = 8.0 * (self.control_bytes + self.header_bytes) / self.radio_speed
        if self.mini_slot_s <= self.max_backoff_s + rts_air:
            raise ConfigError(
                "mini_slot_s: must exceed max_backoff_s + RTS airtime "
                f"({self.max_backoff_s + rts_air:.4f} s)")
        if self.cts_slot_s <= rts_air + 0.002:
            raise ConfigError(
                f"cts_slot_s: must exceed one grant airtime plus guard ({rts_air + 0.002:.4f} s)")
        return self

    # -- derived objects -------------------------------------------------

    def link_model(self):
        return LinkModel(
            path_loss_exponent=self.path_loss_exponent, pl_d0=self.pl_d0,
            d0=self.d0, noise_floor=self.noise_floor,
            shadowing_sigma=self.shadowing_sigma,
            bandwidth_to_rate=self.bandwidth_to_rate,
            radio_speed=self.radio_speed, cs_threshold=self.cs_threshold,
        )

    def energy_table(self):
        return EnergyTable(
            sleep_ma=self.sleep_ma, listen_ma=self.listen_ma, tx0_ma=self.tx0_ma,
            voltage=self.voltage, switch_mj=self.switch_mj,
            sample_mj=self.sample_mj, battery_mah=self.battery_mah,
        )

    def recovery_params(self):
        return RecoveryParams(
            payload_len=self.payload_bytes, hdr_len=self.header_bytes,
            block_overhead=self.block_overhead, ack_len=self.ack_len,
            rf_overhead=self.rf_overhead, radio_speed=self.radio_speed,
            gamma=self.gamma_s, retry_cap=self.retry_cap,
            turnaround=self.turnaround_s,
            tx_buffer=self.tx_buffer, rx_buffer=self.rx_buffer,
        )


def paper_preset(**overrides):
    """The full-scale tabulated configuration."""
    return replace(Scenario(), **overrides).validate()


def desk_preset(**overrides):
    """CI-sized scenario: 50 nodes, short horizon, small battery so lifetime
    events land within minutes of simulated time.

    The layout is half the reference node density, so the default output
    power is raised to keep the expected usable-neighbor count comparable;
    radio/medium constants are otherwise untouched.
    """
    base = Scenario(
        node_count=50, area=(70.0, 70.0), horizon_s=240.0,
        sampling_interval_s=20.0, battery_mah=0.6, output_power_dbm=8.0,
    )
    return replace(base, **overrides).validate()


def paper_density_preset(**overrides):
    """50 nodes at the reference 0.02 nodes/m^2 density (50x50 m^2): the
    power-sweep and interference studies keep the tabulated 0 dBm physics."""
    base = Scenario(
        node_count=50, area=(50.0, 50.0), horizon_s=240.0,
        sampling_interval_s=20.0, battery_mah=0.6,
    )
    return replace(base, **overrides).validate()


PRESETS = {"paper": paper_preset, "desk": desk_preset,
           "paper-density": paper_density_preset}

_FIELDS = {f.name: f for f in fields(Scenario)}


def _coerce(name, raw):
    f = _FIELDS[name]
    kind = f.type
    raw = raw.strip()
    try:
        if kind == "bool":
            if raw.lower() in ("true", "yes", "1", "on"):
                return True
            if raw.lower() in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "tuple":
            parts = raw.replace("x", " ").replace(",", " ").split()
            return tuple(float(p) for p in parts)
        return raw
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from exc


def parse_scenario(text, base=None):
    """Build a Scenario from `key = value` lines; `preset = name` applies a
    preset base before the remaining keys override it."""
    values = {}
    preset = None
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {body!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key == "preset":
            if raw not in PRESETS:
                raise ConfigError(f"preset: unknown preset {raw!r}")
            preset = raw
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _coerce(key, raw)
    if preset is not None:
        base = PRESETS[preset]()
    elif base is None:
        base = Scenario()
    return replace(base, **values).validate()


def load_scenario(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())
