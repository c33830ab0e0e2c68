"""S-MAC and its adaptive-listening variant, sharing the channel, routing and
metrics infrastructure with the slotted MAC.

Plain mode: a common listen period carries RTS/CTS contention; overhearers of
either control packet set their NAV from its duration field and sleep; one
data+ack exchange per granted pair per frame, so a packet advances at most one
hop per frame. Adaptive mode additionally wakes overhearers at the (imprecise)
estimated exchange end, where they may contend immediately and forward packets
several hops within one frame; it also wakes the just-finished participants,
which is exactly what lets a hidden wake-up interfere with an ongoing
reception elsewhere.
"""

from __future__ import annotations

from .energy import RadioState
from .packets import Packet, PacketKind


class SmacNodeState:
    __slots__ = ("nav_until", "engaged", "peer", "role", "exchange",
                 "pending_ev", "window_start", "awaiting", "done_frame",
                 "awake_until", "wake_ev", "frame_stamp")

    def __init__(self):
        self.reset(-1)

    def reset(self, frame_stamp):
        self.nav_until = 0.0
        self.engaged = False
        self.peer = None
        self.role = None
        self.exchange = None
        self.pending_ev = None
        self.window_start = 0.0
        self.awaiting = False
        self.done_frame = False
        self.awake_until = 0.0
        self.wake_ev = None
        self.frame_stamp = frame_stamp


class SmacDriver:
    def __init__(self, sim, adaptive=False):
        self.sim = sim
        self.engine = sim.engine
        self.adaptive = adaptive
        sc = sim.scenario
        speed = sim.model.radio_speed
        self.rts_air = 8.0 * (sc.control_bytes + sc.header_bytes) / speed
        self.cts_air = self.rts_air
        self.ack_air = 8.0 * sc.recovery_params().ack_len / speed
        self.sifs = sc.sifs_s
        self.synch_slot = sc.synch_slot_s
        # listen budget mirrors the slotted MAC's RTS+CTS share for fairness
        self.contention_window = sc.w * sc.mini_slot_s + sc.cts_slot_s
        self.adaptive_window = self.contention_window
        self.frame = sc.frame_s
        self.err = sc.smac_adaptive_err
        self.rng = sim.streams.stream("contention")
        self.rng_adaptive = sim.streams.stream("adaptive")
        self._injected = {nid: list(v) for nid, v in sim.fixed_contention.items()}
        self.states = [SmacNodeState() for _ in range(sim.topo.n)]
        self.frame_idx_stamp = -1
        self.cycle_start = 0.0
        for node in sim.nodes:
            node.mac = self

    # -- frame scheduling ------------------------------------------------------

    def start(self):
        self.engine.schedule(0.0, self._frame_begin, kind="slot")

    def _frame_begin(self, event):
        sim = self.sim
        self.cycle_start = self.engine.now
        sim.frame_idx += 1
        self.frame_idx_stamp += 1
        sim.ledger.mark_frame_state()
        for st in self.states:
            st.reset(self.frame_idx_stamp)
        for node in sim.nodes:
            sim.wake(node.id)
        sim.refresh_routing()
        sim.charge_synch_slot(self.rts_air)
        self.engine.schedule(self.cycle_start + self.synch_slot,
                             self._contention_begin, kind="slot")
        self.engine.schedule(self.cycle_start + self.frame, self._frame_end,
                             kind="slot")

    def _frame_end(self, event):
        sim = self.sim
        for node in sim.nodes:
            node.flush_energy()
        sim.ledger.flush_frame_cs(sim.frame_idx)
        if sim.scenario.collect_detail:
            sim.ledger.snap_frame_state()
        sim.measured_until = self.engine.now
        sc = sim.scenario
        stop = (sc.stop_on_first_death and sim.ledger.first_death_time is not None)
        if not stop and self.engine.now + self.frame <= sc.horizon_s + 1e-9:
            self._frame_begin(event)
        else:
            sim.stopped = True

    @property
    def _listen_end(self):
        return self.cycle_start + self.synch_slot + self.contention_window

    def _contention_begin(self, event):
        for node in self.sim.nodes:
            if node.alive and node.queue and self.sim.parent_of(node.id) is not None:
                self._backoff(node.id)
        # nodes beyond the contention outcome sleep when the listen period ends
        self.engine.schedule(self._listen_end, self._listen_over, kind="slot")

    def _listen_over(self, event):
        for node in self.sim.nodes:
            st = self.states[node.id]
            if (node.alive and not st.engaged
                    and node.state is RadioState.LISTEN
                    and self.engine.now >= st.awake_until):
                self.sim.sleep(node.id)

    # -- contention -----------------------------------------------------------------

    def _window_limit(self, nid):
        """Transmission attempts must finish inside the node's awake span."""
        limit = self._listen_end
        st = self.states[nid]
        if st.awake_until > self.engine.now:
            limit = max(limit, st.awake_until)
        return limit

    def _exchange_span(self, nid):
        node = self.sim.nodes[nid]
        if not node.queue:
            return None
        data_air = 8.0 * (node.queue[0].payload_len + self.sim.scenario.header_bytes) \
            / self.sim.model.radio_speed
        return (self.rts_air + self.sifs + self.cts_air + self.sifs
                + data_air + self.sifs + self.ack_air)

    def _backoff(self, nid):
        st = self.states[nid]
        if st.engaged or st.done_frame:
            return
        now = self.engine.now
        if now < st.nav_until:
            return
        self._cancel_pending(st)
        span = self._exchange_span(nid)
        if span is None:
            return
        # the whole exchange must finish inside this frame
        latest_start = min(self._window_limit(nid) - self.rts_air,
                           self.cycle_start + self.frame - span - 1e-3)
        room = latest_start - now
        if room <= 0:
            return
        st.window_start = now
        st.awaiting = False
        injected = self._injected.get(nid)
        if injected:
            delay = float(injected.pop(0))
        else:
            delay = float(self.rng.uniform(0.0, min(room, self.contention_window / 4)))
        st.pending_ev = self.engine.schedule(now + delay, self._attempt,
                                             kind="timer", target=nid)

    def _attempt(self, event):
        nid = event.target
        sim = self.sim
        node = sim.nodes[nid]
        st = self.states[nid]
        st.pending_ev = None
        if (not node.alive or st.engaged or st.done_frame
                or not node.queue or node.state is not RadioState.LISTEN):
            return
        assert self.engine.now >= st.nav_until, "transmission during NAV"
        if sim.medium.carrier_busy(nid) or node.last_rise_t >= st.window_start:
            st.awaiting = True
            return
        parent = sim.parent_of(nid)
        if parent is None:
            return
        span = self._exchange_span(nid)
        end = self.engine.now + span
        if end > self.cycle_start + self.frame - 1e-3:
            return
        sc = sim.scenario
        rts = Packet(kind=PacketKind.RTS, src=nid, dst=parent,
                     length=sc.control_bytes, header=sc.header_bytes,
                     exchange_end=end)
        sim.medium.transmit(nid, rts)
        ex = {"sender": nid, "parent": parent, "uid": node.queue[0].uid,
              "data_received": False, "end": end, "stamp": self.frame_idx_stamp}
        st.engaged = True
        st.role = "tx"
        st.peer = parent
        st.exchange = ex
        sim.trace(nid, "smac-rts", f"dst={parent}")
        timeout = self.engine.now + self.rts_air + self.sifs + self.cts_air + 2e-3
        st.pending_ev = self.engine.schedule(timeout, self._cts_timeout,
                                             kind="timer", target=nid)

    def _cts_timeout(self, event):
        nid = event.target
        st = self.states[nid]
        st.pending_ev = None
        if st.engaged and st.role == "tx" and not st.exchange.get("cts_seen"):
            # collision or lost CTS: retry next frame
            self.sim.trace(nid, "smac-no-cts")
            self._exchange_over(nid, success=False)

    # -- packet handling -------------------------------------------------------------

    def on_packet(self, node, pkt, sinr):
        nid = node.id
        st = self.states[nid]
        sim = self.sim
        kind = pkt.kind

        if kind is PacketKind.RTS:
            if pkt.dst == nid:
                if st.engaged or st.done_frame or self.engine.now < st.nav_until:
                    return
                self._cancel_pending(st)
                st.engaged = True
                st.role = "rx"
                st.peer = pkt.src
                st.exchange = {"sender": pkt.src, "parent": nid, "uid": None,
                               "data_received": False, "end": pkt.exchange_end,
                               "stamp": self.frame_idx_stamp}
                peer_st = self.states[pkt.src]
                if peer_st.engaged and peer_st.exchange is not None \
                        and peer_st.exchange.get("parent") == nid:
                    st.exchange = peer_st.exchange
                cts = Packet(kind=PacketKind.CTS, src=nid, dst=pkt.src,
                             length=sim.scenario.control_bytes,
                             header=sim.scenario.header_bytes,
                             exchange_end=pkt.exchange_end)
                self.engine.schedule(self.engine.now + self.sifs,
                                     lambda ev: sim.medium.transmit(nid, cts))
                sim.trace(nid, "smac-cts", f"dst={pkt.src}")
                # release the reservation if the data never shows up
                st.pending_ev = self.engine.schedule(
                    pkt.exchange_end + 2e-3, self._rx_timeout,
                    kind="timer", target=nid)
            else:
                self._overheard(nid, pkt)
        elif kind is PacketKind.CTS:
            if pkt.dst == nid:
                if st.engaged and st.role == "tx":
                    st.exchange["cts_seen"] = True
                    self._cancel_pending(st)
                    self.engine.schedule(self.engine.now + self.sifs,
                                         lambda ev: self._send_data(nid))
            else:
                self._overheard(nid, pkt)
        elif kind is PacketKind.DATA:
            if pkt.dst == nid and st.engaged and st.role == "rx" \
                    and pkt.src == st.peer:
                if not st.exchange["data_received"]:
                    st.exchange["data_received"] = True
                    sim.deliver_to(nid, pkt)
                ack = Packet(kind=PacketKind.ACK, src=nid, dst=pkt.src,
                             length=sim.scenario.recovery_params().ack_len, header=0)
                self.engine.schedule(
                    self.engine.now + self.sifs,
                    lambda ev: sim.medium.transmit(
                        nid, ack, on_resolved=lambda tx: self._exchange_over(nid, True)))
        elif kind is PacketKind.ACK:
            if pkt.dst == nid and st.engaged and st.role == "tx":
                self._cancel_pending(st)
                self._exchange_over(nid, success=True)
            elif st.awaiting and not st.engaged:
                st.awaiting = False
                self._backoff(nid)

        if kind is PacketKind.DATA and pkt.dst != nid \
                and st.awaiting and not st.engaged:
            # overheard someone else's data while deferring: contend again
            st.awaiting = False
            self._backoff(nid)

    def _send_data(self, nid):
        sim = self.sim
        node = sim.nodes[nid]
        st = self.states[nid]
        if not node.alive or not st.engaged or not node.queue:
            return
        pkt = node.queue[0]
        data = Packet(kind=PacketKind.DATA, src=nid, dst=st.peer,
                      length=pkt.payload_len, header=sim.scenario.header_bytes,
                      born_at=pkt.born_at, origin=pkt.origin,
                      payload_len=pkt.payload_len, uid=pkt.uid)
        sim.ledger.data_packets_started += 1
        sim.medium.transmit(nid, data)
        ack_deadline = (self.engine.now + data.airtime(sim.model.radio_speed)
                        + self.sifs + self.ack_air + 2e-3)
        st.pending_ev = self.engine.schedule(ack_deadline, self._ack_timeout,
                                             kind="timer", target=nid)

    def _ack_timeout(self, event):
        nid = event.target
        st = self.states[nid]
        st.pending_ev = None
        if st.engaged and st.role == "tx":
            self._exchange_over(nid, success=st.exchange.get("data_received", False))

    def _rx_timeout(self, event):
        nid = event.target
        st = self.states[nid]
        if st.frame_stamp != self.frame_idx_stamp:
            return
        if st.engaged and st.role == "rx" and not st.exchange.get("data_received"):
            st.pending_ev = None
            self.sim.trace(nid, "smac-rx-timeout")
            self._exchange_over(nid, success=False)

    def _exchange_over(self, nid, success):
        sim = self.sim
        st = self.states[nid]
        if not st.engaged:
            return
        if st.role == "tx":
            if success or st.exchange.get("data_received"):
                # reconcile: the parent holds the packet even if the ack died
                sim.remove_from_queue(nid, st.exchange["uid"])
        st.engaged = False
        st.role = None
        st.peer = None
        st.done_frame = not self.adaptive
        self._cancel_pending(st)
        if self.adaptive:
            self._stay_awake(nid, self.adaptive_window)
        else:
            sim.sleep(nid)

    def _cancel_pending(self, st):
        if st.pending_ev is not None:
            self.engine.cancel(st.pending_ev)
            st.pending_ev = None

    # -- overhearing and adaptive wakeups ------------------------------------------------

    def _overheard(self, nid, pkt):
        """Foreign RTS or CTS: sleep through the announced exchange."""
        sim = self.sim
        st = self.states[nid]
        if st.engaged:
            return
        st.nav_until = max(st.nav_until, pkt.exchange_end)
        self._cancel_pending(st)
        st.awake_until = 0.0
        if self.adaptive:
            remaining = max(pkt.exchange_end - self.engine.now, 0.0)
            err = float(self.rng_adaptive.uniform(-self.err, self.err))
            wake_at = self.engine.now + remaining * (1.0 + err)
            if st.wake_ev is not None:
                self.engine.cancel(st.wake_ev)
            st.wake_ev = self.engine.schedule(wake_at, self._adaptive_wake,
                                              kind="timer", target=nid)
            sim.trace(nid, "nav-sleep", f"until~{wake_at:.4f}")
        else:
            sim.trace(nid, "nav-sleep", f"until={pkt.exchange_end:.4f}")
            if st.wake_ev is not None:
                self.engine.cancel(st.wake_ev)
            st.wake_ev = self.engine.schedule(st.nav_until, self._plain_nav_wake,
                                              kind="timer", target=nid)
        sim.sleep(nid)

    def _plain_nav_wake(self, event):
        nid = event.target
        st = self.states[nid]
        st.wake_ev = None
        if self.states[nid].frame_stamp != self.frame_idx_stamp:
            return
        if not self.sim.nodes[nid].alive or st.engaged:
            return
        if self.engine.now < self._listen_end:
            self.sim.wake(nid)   # listen out the rest of the common period
        # otherwise stay asleep until the next frame

    def _adaptive_wake(self, event):
        nid = event.target
        sim = self.sim
        st = self.states[nid]
        st.wake_ev = None
        if st.frame_stamp != self.frame_idx_stamp:
            return
        node = sim.nodes[nid]
        if not node.alive or st.engaged:
            return
        sim.wake(nid)
        sim.trace(nid, "adaptive-wake")
        self._stay_awake(nid, self.adaptive_window)

    def _stay_awake(self, nid, window):
        st = self.states[nid]
        st.awake_until = max(st.awake_until, self.engine.now + window)
        self.engine.schedule(st.awake_until, self._awake_expiry,
                             kind="timer", target=nid)
        if self.sim.nodes[nid].queue and self.sim.parent_of(nid) is not None:
            self._backoff(nid)

    def _awake_expiry(self, event):
        nid = event.target
        st = self.states[nid]
        if st.frame_stamp != self.frame_idx_stamp:
            return
        node = self.sim.nodes[nid]
        if (node.alive and not st.engaged and self.engine.now >= st.awake_until
                and node.state is RadioState.LISTEN
                and self.engine.now >= self._listen_end):
            self.sim.sleep(nid)

    def on_corrupt(self, node, tx):
        st = self.states[node.id]
        if not node.alive or st.engaged:
            return
        if st.awaiting and node.state is RadioState.LISTEN:
            st.awaiting = False
            self._backoff(node.id)

    def on_air_rise(self, node, tx):
        pass
