"""Experiment execution: single runs, parameter sweeps, the analytic report
and declarative trend checks over swept metrics."""

from __future__ import annotations

import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from .recovery import RecoveryParams, arq_capacity, rts_success_prob, seda_capacity
from .simulation import Simulation

RUN_COLUMNS = ["scenario", "protocol", "recovery", "frame_s", "seed", "metric", "value"]
SWEEP_COLUMNS = ["param", "value", "seed", "metric", "metric_value", "status"]
ANALYTICS_COLUMNS = ["ber", "arq_mpf", "seda_mpf", "arq_payload_bytes", "seda_payload_bytes"]

RUN_METRICS = [
    "status_code", "frames", "lifetime_s", "lifetime_censored",
    "delivered_packets", "delivered_payload", "throughput_bps",
    "mean_latency_s", "p95_latency_s", "mean_queue_len", "mean_duty_cycle",
    "cs_mean_sum", "cs_max_sum", "generated_packets", "dropped_packets",
    "queued_packets", "avg_neighbors", "stranded",
]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def run_experiment(scenario, name="run", trace=False, return_sim=False):
    """Bootstrap, duty-cycled frames until the horizon or the lifetime event,
    and a deterministic long-format CSV of every metric."""
    sim = Simulation(scenario, trace=trace)
    result = sim.run()
    result["status_code"] = {"ok": 0, "disjoint": 3}.get(result["status"], 1)
    rows = []
    for metric in RUN_METRICS:
        rows.append([name, scenario.protocol, scenario.recovery,
                     _fmt(scenario.frame_s), str(scenario.seed),
                     metric, _fmt(result.get(metric))])
    if return_sim:
        return result, rows, sim
    return result, rows


def rows_to_csv(columns, rows):
    out = io.StringIO()
    out.write(",".join(columns) + "\n")
    for row in rows:
        out.write(",".join(str(c) for c in row) + "\n")
    return out.getvalue()


def _sweep_point(args):
    base, param, value, seed = args
    scenario = replace(base, **{param: value, "seed": seed}).validate()
    result, _ = run_experiment(scenario)
    return value, seed, result


def sweep(base, param, values, seeds, workers=0):
    """One run per (value, seed); output ordered by (value, seed) regardless
    of execution order, so concurrent and serial sweeps emit identical CSV."""
    points = [(base, param, v, s) for v in values for s in seeds]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_point, points))
    else:
        outcomes = [_sweep_point(p) for p in points]
    outcomes.sort(key=lambda t: (t[0], t[1]))
    rows = []
    table = {}
    for value, seed, result in outcomes:
        table[(value, seed)] = result
        for metric in RUN_METRICS:
            rows.append([param, _fmt(value), str(seed), metric,
                         _fmt(result.get(metric)), result["status"]])
    return table, rows


def analytic_report(ber_grid, d_s=1.0, params=None):
    """Closed-form capacities per bit error rate; no simulation involved."""
    params = params or RecoveryParams()
    rows = []
    for ber in ber_grid:
        a = arq_capacity(d_s, ber, params)
        s = seda_capacity(d_s, ber, params)
        rows.append([_fmt(ber), str(a), str(s),
                     str(a * params.payload_len), str(s * params.payload_len)])
    return rows


def p0_table(w_values, modes=("paper", "distinct-slot")):
    rows = []
    for w in w_values:
        for n in range(1, w + 1):
            row = [str(w), str(n)]
            for mode in modes:
                row.append(_fmt(rts_success_prob(n, w, mode)))
            rows.append(row)
    return rows


# -- trend checks ----------------------------------------------------------------

def isotonic_fit(values, increasing=True):
    """Pool-adjacent-violators fit; returns fitted sequence."""
    vals = [float(v) for v in values]
    if not increasing:
        vals = [-v for v in vals]
    blocks = [[v, 1.0] for v in vals]
    i = 0
    while i < len(blocks) - 1:
        if blocks[i][0] > blocks[i + 1][0] + 1e-15:
            total = blocks[i][0] * blocks[i][1] + blocks[i + 1][0] * blocks[i + 1][1]
            weight = blocks[i][1] + blocks[i + 1][1]
            blocks[i] = [total / weight, weight]
            del blocks[i + 1]
            i = max(i - 1, 0)
        else:
            i += 1
    fitted = []
    for mean, weight in blocks:
        fitted.extend([mean] * int(weight))
    if not increasing:
        fitted = [-v for v in fitted]
    return fitted


def trend_monotone(values, increasing=True, rel_residual=0.15):
    """True when an isotonic fit explains the series to within the given
    residual share of its range (stochastic series need slack)."""
    if len(values) < 2:
        return True
    fitted = isotonic_fit(values, increasing)
    rng = max(values) - min(values)
    if rng <= 0:
        return True
    resid = max(abs(a - b) for a, b in zip(values, fitted))
    return resid <= rel_residual * rng


def trend_interior_max(values):
    """True when the series peaks strictly inside its range."""
    if len(values) < 3:
        return False
    peak = max(range(len(values)), key=lambda i: values[i])
    return 0 < peak < len(values) - 1


def star_simulation(scenario, children=6, radius=6.0):
    """A saturated single-parent star with a preset tree: the clean setting
    for buffer studies, where the transfer procedure is the bottleneck."""
    import math

    from .routing import NeighborEntry, RouteState
    from .topology import fixed_topology

    positions = [(0.0, 0.0)]
    for k in range(children):
        ang = 2.0 * math.pi * k / children
        positions.append((radius * math.cos(ang), radius * math.sin(ang)))
    topo = fixed_topology(positions, sink=0, model=scenario.link_model(),
                          tx_power_dbm=scenario.output_power_dbm)
    states = [RouteState(node=0, is_sink=True)]
    for k in range(1, children + 1):
        st = RouteState(node=k)
        st.parent = 0
        st.my_cost = 1.0
        states.append(st)
        states[0].children.add(k)
    for i in range(children + 1):
        for j in topo.sense_out[i]:
            states[i].neighbors.setdefault(
                int(j), NeighborEntry(neighbor=int(j), etx=1.0, advertised_cost=0.0))
    return Simulation(scenario, topology=topo, route_states=states)


# -- standalone transfer benchmark (analytics <-> simulation consistency) -----------


class _BenchScenario:
    """Minimal two-node scenario for isolated link transfers."""

    def __init__(self, base, ber):
        self.base = base
        self.ber = ber


def transfer_benchmark(recovery, d_s, ber, frames, seed=7, params=None,
                       supply=None, block_draw_override=None):
    """Repeated single-link transfers: a fresh saturated queue each frame of
    budget d_s, over a channel whose SNR realizes the requested bit error
    rate. Returns per-frame means of packets sent and payload delivered."""
    import math
    import types

    from .channel import LinkModel
    from .energy import EnergyTable, RadioState
    from .engine import Engine, RandomStreams
    from .medium import Medium
    from .metrics import MetricsLedger
    from .packets import PacketKind, make_data_packet
    from .recovery import ArqSession, SedaSession
    from .simulation import Node
    from .topology import Topology

    params = params or RecoveryParams()
    model = LinkModel(shadowing_sigma=0.0)
    if ber > 0:
        # invert the FSK map: ber = 0.5*exp(-snr_lin/2 * k)
        snr_lin = 2.0 * math.log(0.5 / ber) / model.bandwidth_to_rate
        snr_db = 10.0 * math.log10(snr_lin)
    else:
        snr_db = 80.0
    rx_dbm = model.noise_floor + snr_db
    # place two nodes at the distance realizing that received power
    d = 10.0 ** ((0.0 - model.pl_d0 - rx_dbm) / (10.0 * model.path_loss_exponent))
    topo = Topology([[0.0, 0.0], [d, 0.0]], sink=0, model=model, tx_power_dbm=0.0)

    class _Shim:
        pass

    sim = _Shim()
    sim.engine = Engine()
    sim.streams = RandomStreams(seed)
    sim.medium = Medium(sim.engine, topo, sim.streams)
    sim.ledger = MetricsLedger(2, EnergyTable(), topo)
    sim.scenario = _Shim()
    sim.scenario.output_power_dbm = 0.0

    counts = {"recovery_frames": 0}
    original_transmit = sim.medium.transmit

    def counting_transmit(sender, packet, on_resolved=None):
        if packet.kind is PacketKind.RECOVERY_FRAME:
            counts["recovery_frames"] += 1
        return original_transmit(sender, packet, on_resolved)

    sim.medium.transmit = counting_transmit
    if block_draw_override is not None:
        sim.medium.block_corruption_draws = types.MethodType(
            block_draw_override, sim.medium)

    nodes = [Node(sim, 0), Node(sim, 1)]
    sim.nodes = nodes
    sim.medium.nodes = nodes
    delivered_payload = []
    delivered_packets = []
    sent_packets = []
    elapsed_first = None

    def deliver_to(nid, pkt):
        delivered_payload[-1] += pkt.payload_len
        delivered_packets[-1] += 1

    def remove_from_queue(nid, uid):
        q = nodes[nid].queue
        for i, p in enumerate(q):
            if p.uid == uid:
                del q[i]
                return p
        return None

    sim.deliver_to = deliver_to
    sim.remove_from_queue = remove_from_queue

    gap = 1.0  # idle spacing between benchmark frames
    if supply is None:
        supply = max(arq_capacity(d_s, 0.0, params),
                     seda_capacity(d_s, 0.0, params)) + 20
    for k in range(frames):
        t0 = sim.engine.now if k == 0 else sim.engine.now + gap
        sim.engine.run_until(t0)
        for node in nodes:
            node.state = RadioState.LISTEN
            node._state_since = sim.engine.now
        nodes[1].queue = [
            make_data_packet(origin=1, src=1, dst=0, born_at=t0,
                             payload_len=params.payload_len, header=params.hdr_len)
            for _ in range(supply)
        ]
        delivered_payload.append(0)
        delivered_packets.append(0)
        before = sim.ledger.data_packets_started
        sessions = []
        windows = [(t0, t0 + d_s)]
        if recovery == "seda":
            session = SedaSession(sim, 1, 0, windows, params,
                                  lambda s: sessions.append(s), link_ber=ber)
        else:
            session = ArqSession(sim, 1, 0, windows, params,
                                 lambda s: sessions.append(s))
        nodes[0].active_session = session
        nodes[1].active_session = session
        session.start()
        sim.engine.run_until(t0 + d_s + 0.2)
        sent_packets.append(sim.ledger.data_packets_started - before)
        if k == 0 and sessions:
            elapsed_first = sessions[0].result.elapsed
        nodes[0].active_session = None
        nodes[1].active_session = None

    mean_sent = sum(sent_packets) / frames
    mean_payload = sum(delivered_payload) / frames
    return {
        "mean_packets_sent": mean_sent,
        "mean_sent_payload": mean_sent * params.payload_len,
        "mean_delivered_payload": mean_payload,
        "delivered_per_frame": delivered_packets[0],
        "elapsed_first": elapsed_first,
        "recovery_frames": counts["recovery_frames"],
        "frames": frames,
    }
