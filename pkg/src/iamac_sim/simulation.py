"""Run wiring: nodes, bootstrap routing, traffic, the protocol driver and the
result summary. One Simulation owns one engine, one RNG family and one ledger;
independent runs share nothing."""

from __future__ import annotations

from .energy import RadioState
from .engine import Engine, RandomStreams
from .medium import Medium
from .metrics import MetricsLedger
from .packets import PacketKind, make_data_packet
from .routing import build_tree, disjoint_nodes, estimate_links, tree_is_acyclic
from .topology import random_topology


class Node:
    """Radio-state bookkeeping and queue ownership for one sensor node."""

    def __init__(self, sim, nid):
        self.sim = sim
        self.id = nid
        self.alive = True
        self.queue = []
        self.mac = None
        self.active_session = None
        self.last_rise_t = -1.0
        self.state = RadioState.SLEEP
        self._state_since = 0.0
        self._tx_until = -1.0

    # -- radio state --------------------------------------------------------

    def set_radio(self, state):
        if not self.alive:
            return
        now = self.sim.engine.now
        elapsed = now - self._state_since
        if elapsed > 0:
            self.sim.ledger.account(self.id, self.state, elapsed,
                                    self.sim.scenario.output_power_dbm)
        self._state_since = now
        if state is not self.state:
            was_listening = self.state is RadioState.LISTEN
            self.state = state
            self.sim.ledger.account_switch(self.id)
            if was_listening:
                self.sim.medium.abort_receptions(self.id)
        self._check_energy()

    def flush_energy(self):
        if not self.alive:
            return
        now = self.sim.engine.now
        elapsed = now - self._state_since
        if elapsed > 0:
            self.sim.ledger.account(self.id, self.state, elapsed,
                                    self.sim.scenario.output_power_dbm)
            self._state_since = now
            self._check_energy()

    def _check_energy(self):
        if self.alive and self.sim.ledger.node_depleted(self.id):
            self.alive = False
            self.sim.ledger.record_death(self.id, self.sim.engine.now)
            self.sim.medium.abort_receptions(self.id)

    def radio_begin_tx(self, t_end):
        if t_end > self._tx_until:
            self._tx_until = t_end
        self.set_radio(RadioState.TX)

    def radio_maybe_end_tx(self):
        if self.alive and self.state is RadioState.TX \
                and self.sim.engine.now >= self._tx_until - 1e-12:
            self.set_radio(RadioState.LISTEN)

    def radio_listening(self):
        return self.alive and self.state is RadioState.LISTEN

    # -- medium callbacks -----------------------------------------------------

    def on_air_rise(self, tx):
        self.last_rise_t = self.sim.engine.now
        if self.mac is not None:
            self.mac.on_air_rise(self, tx)

    def on_packet(self, pkt, sinr):
        if self.active_session is not None and pkt.kind in (
                PacketKind.DATA, PacketKind.ACK,
                PacketKind.SEDA_BLOCK, PacketKind.RECOVERY_FRAME):
            self.active_session.on_packet(self.id, pkt, sinr)
            return
        if self.mac is not None:
            self.mac.on_packet(self, pkt, sinr)

    def on_air_resolved_corrupt(self, tx):
        if self.active_session is not None:
            self.active_session.on_corrupt(self.id, tx)
            return
        if self.mac is not None:
            self.mac.on_corrupt(self, tx)


class Simulation:
    def __init__(self, scenario, topology=None, route_states=None,
                 fixed_contention=None, trace=False):
        self.scenario = scenario
        self.streams = RandomStreams(scenario.seed)
        self.engine = Engine()
        self.model = scenario.link_model()
        self.energy_table = scenario.energy_table()

        if topology is None:
            topology = random_topology(
                scenario.node_count, scenario.area[0], scenario.area[1],
                self.model, scenario.output_power_dbm, self.streams,
                symmetric_shadowing=scenario.symmetric_shadowing,
            )
        self.topo = topology
        self.medium = Medium(self.engine, topology, self.streams,
                             control_corruption_disabled=scenario.control_corruption_disabled)
        self.ledger = MetricsLedger(topology.n, self.energy_table, topology,
                                    collect_detail=scenario.collect_detail)
        self.nodes = [Node(self, i) for i in range(topology.n)]
        self.medium.nodes = self.nodes
        self.medium.on_data_reception_resolved = self._data_reception_resolved

        self.route_states = route_states
        self.fixed_contention = dict(fixed_contention or {})
        self.trace_enabled = trace
        self.trace_log = []
        self.status = "ok"
        self.stranded = []
        self.stopped = False
        self.frame_idx = -1
        self.measured_until = 0.0
        self.driver = None
        self.rx_log = [] if scenario.collect_detail else None
        if scenario.collect_detail:
            self.medium.tx_log = []

    # -- tracing ---------------------------------------------------------------

    def trace(self, node, label, detail=""):
        if self.trace_enabled:
            self.trace_log.append((round(self.engine.now, 9), node, label, detail))

    # -- routing ----------------------------------------------------------------

    def bootstrap_routing(self):
        """Link estimation and tree construction before duty cycling begins."""
        sc = self.scenario
        if self.route_states is None:
            states = estimate_links(
                self.topo, self.streams,
                broadcast_count=sc.broadcast_count,
                report_rounds=sc.report_rounds,
                control_bytes=sc.control_bytes + sc.header_bytes,
            )
            build_tree(states, sc.max_children)
            self.route_states = states
        stranded = disjoint_nodes(self.route_states)
        allowed = sc.disjoint_tolerance * (self.topo.n - 1)
        if len(stranded) > allowed:
            self.status = "disjoint"
        elif not tree_is_acyclic(self.route_states):
            raise AssertionError("routing produced a cyclic parent graph")
        self.stranded = stranded
        return stranded

    def parent_of(self, nid):
        return self.route_states[nid].parent

    def refresh_routing(self):
        """Synch/Routing advertisement pass: costs and children counts are
        re-announced to usable neighbors; static topologies rarely change."""
        states = self.route_states
        for st in states:
            if not self.nodes[st.node].alive:
                continue
            for j, entry in st.neighbors.items():
                other = states[j]
                entry.advertised_cost = other.my_cost
                entry.advertised_children = len(other.children)

    # -- traffic -----------------------------------------------------------------

    def start_traffic(self):
        rng = self.streams.stream("traffic")
        interval = self.scenario.sampling_interval_s
        for node in self.nodes:
            if node.id == self.topo.sink:
                continue
            first = float(rng.uniform(0.0, interval))
            self.engine.schedule(first, self._sample, kind="sample", target=node.id)

    def _sample(self, event):
        if self.stopped:
            return
        nid = event.target
        node = self.nodes[nid]
        if node.alive:
            pkt = make_data_packet(
                origin=nid, src=nid, dst=self.parent_of(nid) or 0,
                born_at=self.engine.now,
                payload_len=self.scenario.payload_bytes,
                header=self.scenario.header_bytes,
            )
            self.enqueue(nid, pkt)
            self.ledger.record_generated()
            self.ledger.account_sample(nid)
            self.engine.schedule(
                self.engine.now + self.scenario.sampling_interval_s,
                self._sample, kind="sample", target=nid)

    # -- queue plumbing -------------------------------------------------------------

    def enqueue(self, nid, pkt):
        node = self.nodes[nid]
        node.queue.append(pkt)
        self.ledger.queue_changed(nid, len(node.queue), self.engine.now)

    def remove_from_queue(self, nid, uid):
        node = self.nodes[nid]
        for i, p in enumerate(node.queue):
            if p.uid == uid:
                del node.queue[i]
                self.ledger.queue_changed(nid, len(node.queue), self.engine.now)
                return p
        return None

    def deliver_to(self, nid, pkt):
        if nid == self.topo.sink:
            self.ledger.record_delivery(pkt.origin, pkt.born_at,
                                        self.engine.now, pkt.payload_len)
        else:
            self.enqueue(nid, pkt)

    # -- metrics hooks -----------------------------------------------------------------

    def _data_reception_resolved(self, rec, delivered):
        # the colliding-set metric is about the addressee's own reception,
        # not about bystanders who merely overheard the data
        if rec.tx.packet.dst != rec.listener:
            return
        self.ledger.record_data_reception(rec.listener, rec.tx.sender, rec.interferers)
        if self.rx_log is not None:
            self.rx_log.append((rec.listener, rec.tx.sender,
                                rec.tx.t_start, rec.tx.t_end, self.frame_idx))

    # -- run ----------------------------------------------------------------------------

    def run(self):
        sc = self.scenario
        stranded = self.bootstrap_routing()
        if self.status == "disjoint":
            return self._result(stranded=stranded)

        from .mac_iamac import IamacDriver
        from .mac_smac import SmacDriver

        if sc.protocol == "iamac":
            self.driver = IamacDriver(self)
        elif sc.protocol in ("smac", "adaptive-smac"):
            self.driver = SmacDriver(self, adaptive=(sc.protocol == "adaptive-smac"))
        else:
            raise ValueError(f"unknown protocol {sc.protocol!r}")

        self.start_traffic()
        self.ledger.measure_start = 0.0
        self.driver.start()
        self.engine.run_until(sc.horizon_s)
        end = self.measured_until if self.measured_until > 0 else sc.horizon_s
        self.ledger.measure_end = end
        self.ledger.close_queues(end)
        return self._result(stranded=self.stranded)

    def _result(self, stranded):
        ledger = self.ledger
        lat = ledger.latency_stats()
        cs = ledger.cs_stats()
        res = {
            "status": self.status,
            "stranded": len(stranded),
            "frames": self.frame_idx + 1,
            "lifetime_s": (ledger.first_death_time
                           if ledger.first_death_time is not None
                           else self.scenario.horizon_s),
            "lifetime_censored": ledger.first_death_time is None,
            "delivered_packets": len(ledger.delivered_records),
            "delivered_payload": sum(r[3] for r in ledger.delivered_records),
            "throughput_bps": ledger.throughput_bps(),
            "mean_latency_s": lat["mean"] if lat else None,
            "p95_latency_s": lat["p95"] if lat else None,
            "mean_queue_len": ledger.mean_queue_len(),
            "mean_duty_cycle": ledger.mean_duty_cycle(),
            "cs_mean_sum": cs["mean_sum"],
            "cs_max_sum": cs["max_sum"],
            "generated_packets": ledger.generated_packets,
            "dropped_packets": ledger.dropped_packets,
            "queued_packets": sum(len(n.queue) for n in self.nodes),
            "avg_neighbors": self.topo.average_neighbor_count(),
        }
        res["conserved"] = (res["generated_packets"]
                            == res["delivered_packets"] + res["dropped_packets"]
                            + res["queued_packets"])
        return res

    # -- helpers shared by drivers ----------------------------------------------------

    def link_ber_estimate(self, child, parent):
        """Zero-interference BER on the child->parent link (the nodes' own
        link-quality knowledge is assumed accurate)."""
        snr = self.topo.rx_dbm[child, parent] - self.model.noise_floor
        return self.model.bit_error_rate(snr)

    def wake(self, nid):
        node = self.nodes[nid]
        if node.alive and node.state is RadioState.SLEEP:
            node.set_radio(RadioState.LISTEN)

    def sleep(self, nid):
        node = self.nodes[nid]
        if node.alive and node.state is not RadioState.SLEEP:
            node.set_radio(RadioState.SLEEP)

    def charge_synch_slot(self, synch_airtime):
        """Synchronization beacons are modeled as airtime and energy only:
        every awake node pays one transmit burst, receptions are abstract."""
        for node in self.nodes:
            if node.alive and node.state is RadioState.LISTEN:
                self.ledger.account(node.id, RadioState.TX, synch_airtime,
                                    self.scenario.output_power_dbm)
                # the transmit burst replaces listen time inside the slot
                node._state_since += synch_airtime
                node._check_energy()
