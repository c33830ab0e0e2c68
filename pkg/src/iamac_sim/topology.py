"""Node placement and the quasi-static per-link channel realization."""

from __future__ import annotations

import numpy as np

from .channel import dbm_to_mw


class Topology:
    """Positions plus frozen per-ordered-pair shadowing and received powers.

    The sink sits at the middle of the top edge unless positions are given
    explicitly. Shadowing offsets are drawn once per ordered pair (A->B and
    B->A independent by default, symmetric mode for debugging).
    """

    def __init__(self, positions, sink, model, tx_power_dbm, rng=None,
                 symmetric_shadowing=False, influence_margin_db=6.0):
        self.positions = np.asarray(positions, dtype=float)
        self.n = len(self.positions)
        self.sink = sink
        self.model = model
        self.tx_power_dbm = tx_power_dbm

        diff = self.positions[:, None, :] - self.positions[None, :, :]
        self.dist = np.sqrt((diff ** 2).sum(axis=2))
        np.fill_diagonal(self.dist, np.inf)
        self.dist = np.maximum(self.dist, 1e-3)

        if rng is None:
            shadow = np.zeros((self.n, self.n))
        else:
            shadow = rng.normal(0.0, model.shadowing_sigma, size=(self.n, self.n))
            if symmetric_shadowing:
                shadow = np.triu(shadow, 1)
                shadow = shadow + shadow.T
        np.fill_diagonal(shadow, 0.0)
        self.shadow = shadow

        pl = (model.pl_d0
              + 10.0 * model.path_loss_exponent * np.log10(self.dist / model.d0)
              + shadow)
        self.rx_dbm = tx_power_dbm - pl          # rx_dbm[i, j]: i transmits, heard at j
        self.rx_mw = np.power(10.0, self.rx_dbm / 10.0)

        busy_thr = model.busy_threshold_dbm
        self.sense_out = []       # j can sense/decode i's transmissions
        self.influence_out = []   # i's power is non-negligible at j (SINR bookkeeping)
        infl_thr = model.noise_floor - influence_margin_db
        for i in range(self.n):
            row = self.rx_dbm[i]
            self.sense_out.append(np.nonzero(row >= busy_thr)[0])
            self.influence_out.append(np.nonzero(row >= infl_thr)[0])

        self.busy_thr_mw = dbm_to_mw(busy_thr)

    def in_sense_range(self, tx, rx):
        return self.rx_dbm[tx, rx] >= self.model.busy_threshold_dbm

    def distance(self, a, b):
        return self.dist[a, b]

    def average_neighbor_count(self):
        return float(np.mean([len(s) for s in self.sense_out]))


def random_topology(n, width, height, model, tx_power_dbm, streams,
                    symmetric_shadowing=False):
    """Uniform placement with the sink injected at the middle of the top edge."""
    rng_pos = streams.stream("topology")
    pts = np.column_stack([
        rng_pos.uniform(0.0, width, size=n - 1),
        rng_pos.uniform(0.0, height, size=n - 1),
    ])
    sink_pos = np.array([[width / 2.0, height]])
    positions = np.vstack([sink_pos, pts])
    return Topology(
        positions, sink=0, model=model, tx_power_dbm=tx_power_dbm,
        rng=streams.stream("shadowing"), symmetric_shadowing=symmetric_shadowing,
    )


def fixed_topology(positions, sink, model, tx_power_dbm):
    """Hand-built layout with zero shadowing (fixture scenarios)."""
    return Topology(positions, sink=sink, model=model, tx_power_dbm=tx_power_dbm, rng=None)
