"""Radio-state energy accounting."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class RadioState(Enum):
    SLEEP = "sleep"
    LISTEN = "listen"    # idle listen and receive draw the same current
    TX = "tx"


@dataclass
class EnergyTable:
    """Current draw per radio state. The defaults are order-of-magnitude
    realistic for a MICA2-class radio; they are NOT taken from any published
    measurement table and every ordering-based study is insensitive to them."""

    sleep_ma: float = 0.03
    listen_ma: float = 15.0
    tx0_ma: float = 25.4          # at 0 dBm output power
    voltage: float = 3.0
    switch_mj: float = 0.002      # per radio state transition
    sample_mj: float = 0.09       # per sensor sample
    battery_mah: float = 2400.0

    def __post_init__(self):
        if min(self.sleep_ma, self.listen_ma, self.tx0_ma, self.voltage) <= 0:
            raise ValueError("all currents and the supply voltage must be positive")
        if self.sleep_ma >= self.listen_ma:
            raise ValueError("sleep current must be the smallest draw")

    def tx_ma(self, power_dbm):
        """Transmit current scales with radiated power, never below listen."""
        scaled = self.listen_ma + (self.tx0_ma - self.listen_ma) * 10.0 ** (power_dbm / 10.0)
        return max(scaled, self.listen_ma)

    def current_ma(self, state, power_dbm=0.0):
        if state is RadioState.SLEEP:
            return self.sleep_ma
        if state is RadioState.LISTEN:
            return self.listen_ma
        return self.tx_ma(power_dbm)

    def energy_mj(self, state, duration, power_dbm=0.0):
        if duration < 0:
            raise ValueError("duration must be >= 0")
        return self.current_ma(state, power_dbm) * self.voltage * duration

    @property
    def battery_mj(self):
        return self.battery_mah * 3600.0 * self.voltage
