"""The slotted interference-avoiding MAC.

Each wake cycle runs Synch/Routing, RTS, CTS and Sleep/Communication slots
(long cycles chain Time Frames, with RTS/CTS only in the first). Cross-layer
parent knowledge drives the interference rules: an overheard RTS headed for a
node's own parent flips it from prospective receiver to prospective sender; an
overheard RTS or CTS belonging to any other pair deactivates it until the next
frame. Granted children transfer to their parent back to back in grant order.
"""

from __future__ import annotations

from .energy import RadioState
from .frames import build_frame_plan
from .packets import Packet, PacketKind
from .recovery import ArqSession, SedaSession

CTS_GUARD = 0.001


class IamacNodeState:
    __slots__ = ("active", "received_rtss", "cancel_rts", "cancel_cts",
                 "contending", "awaiting", "sent_rts", "granted",
                 "committed_rx", "pending_ev", "pending_slot", "window_start",
                 "grants")

    def __init__(self):
        self.reset()

    def reset(self):
        self.active = True
        self.received_rtss = []
        self.cancel_rts = False
        self.cancel_cts = False
        self.contending = False
        self.awaiting = False
        self.sent_rts = False
        self.granted = False
        self.committed_rx = False
        self.pending_ev = None
        self.pending_slot = -1
        self.window_start = 0.0
        self.grants = []


class IamacDriver:
    def __init__(self, sim):
        self.sim = sim
        self.engine = sim.engine
        sc = sim.scenario
        self.rts_airtime = 8.0 * (sc.control_bytes + sc.header_bytes) / sim.model.radio_speed
        self.cts_airtime = self.rts_airtime
        self.plan = build_plan(sc, self.rts_airtime)
        self.params = sc.recovery_params()
        self.rng = sim.streams.stream("contention")
        self.states = [IamacNodeState() for _ in range(sim.topo.n)]
        self.phase = "idle"
        self.cycle_start = 0.0
        self._injected = {nid: list(plans) for nid, plans in sim.fixed_contention.items()}
        self.cts_timer_override = {}
        for node in sim.nodes:
            node.mac = self

    # -- cycle scheduling --------------------------------------------------------

    def start(self):
        self.engine.schedule(0.0, self._cycle_begin, kind="slot")

    def _cycle_begin(self, event):
        sim = self.sim
        plan = self.plan
        self.cycle_start = self.engine.now
        sim.frame_idx += 1
        sim.ledger.mark_frame_state()
        self.phase = "synch"
        for st in self.states:
            st.reset()
        for node in sim.nodes:
            node.active_session = None
            sim.wake(node.id)
        sim.refresh_routing()
        sim.charge_synch_slot(self.rts_airtime)

        self._rx_schedules = {}
        t0 = self.cycle_start
        self.engine.schedule(plan.rts_start(t0), self._rts_begin, kind="slot")
        self.engine.schedule(plan.cts_start(t0), self._cts_begin, kind="slot")
        self.engine.schedule(plan.cts_start(t0) + plan.cts_slot, self._comm_begin,
                             kind="slot")
        for k, t_synch in enumerate(plan.synch_starts(t0)):
            if k > 0:
                self.engine.schedule(t_synch, self._mid_synch_begin, kind="slot")
                self.engine.schedule(t_synch + plan.synch_slot, self._mid_synch_end,
                                     kind="slot")
        self.engine.schedule(t0 + plan.cycle, self._cycle_end, kind="slot")

    def _cycle_end(self, event):
        sim = self.sim
        for node in sim.nodes:
            node.flush_energy()
        sim.ledger.flush_frame_cs(sim.frame_idx)
        if sim.scenario.collect_detail:
            sim.ledger.snap_frame_state()
        sim.measured_until = self.engine.now
        sc = sim.scenario
        stop = (sc.stop_on_first_death and sim.ledger.first_death_time is not None)
        next_end = self.engine.now + self.plan.cycle
        if not stop and next_end <= sc.horizon_s + 1e-9:
            self._cycle_begin(event)
        else:
            sim.stopped = True

    def _mid_synch_begin(self, event):
        # deactivated nodes stay asleep until the next frame boundary
        for node in self.sim.nodes:
            if self.states[node.id].active:
                self.sim.wake(node.id)
        self.sim.refresh_routing()
        self.sim.charge_synch_slot(self.rts_airtime)

    def _mid_synch_end(self, event):
        # only transfer participants stay awake once the beacon slot closes
        for node in self.sim.nodes:
            if node.active_session is None and node.state is RadioState.LISTEN:
                keep = (node.mac is self and self.states[node.id].committed_rx
                        and self._schedule_of(node.id) is not None)
                if not keep:
                    self.sim.sleep(node.id)

    def _schedule_of(self, nid):
        sched = getattr(self, "_rx_schedules", None)
        if not sched:
            return None
        return sched.get(nid)

    # -- RTS slot -------------------------------------------------------------------

    def _rts_begin(self, event):
        self.phase = "rts"
        sim = self.sim
        for node in sim.nodes:
            st = self.states[node.id]
            if not node.alive or not st.active:
                continue
            parent = sim.parent_of(node.id)
            if parent is None or not node.queue or st.cancel_rts:
                continue
            self._pick_contention(node.id, min_slot=0)

    def _pick_contention(self, nid, min_slot):
        st = self.states[nid]
        plan = self.plan
        remaining = plan.w - min_slot
        if remaining <= 0:
            st.contending = False
            st.awaiting = False
            self.sim.trace(nid, "contention-exhausted")
            return
        injected = self._injected.get(nid)
        if injected:
            slot, backoff = injected.pop(0)
        else:
            slot = min_slot + int(self.rng.integers(0, remaining))
            backoff = float(self.rng.uniform(0.0, plan.max_backoff))
        st.contending = True
        st.awaiting = False
        st.pending_slot = slot
        st.window_start = plan.mini_slot_start(self.cycle_start, slot)
        st.pending_ev = self.engine.schedule(
            st.window_start + backoff, self._rts_attempt, kind="timer", target=nid)

    def _rts_attempt(self, event):
        nid = event.target
        sim = self.sim
        node = sim.nodes[nid]
        st = self.states[nid]
        st.pending_ev = None
        if not node.alive or not st.active or st.cancel_rts or not st.contending:
            return
        if sim.medium.carrier_busy(nid) or node.last_rise_t >= st.window_start:
            # something was on the air during the sensing window: hold off and
            # act on whatever that packet turns out to be
            st.awaiting = True
            return
        parent = sim.parent_of(nid)
        if parent is None:
            st.contending = False
            return
        sc = sim.scenario
        rts = Packet(kind=PacketKind.RTS, src=nid, dst=parent,
                     length=sc.control_bytes, header=sc.header_bytes)
        sim.medium.transmit(nid, rts)
        st.sent_rts = True
        st.contending = False
        st.cancel_cts = True
        st.received_rtss = []
        sim.trace(nid, "rts-tx", f"dst={parent}")

    def _current_mini_slot(self):
        rel = self.engine.now - self.plan.rts_start(self.cycle_start)
        return int(rel / self.plan.mini_slot)

    def _handle_rts(self, node, pkt):
        sim = self.sim
        nid = node.id
        st = self.states[nid]
        parent = sim.parent_of(nid)
        if pkt.dst == nid:
            st.received_rtss.append(pkt)
            sim.trace(nid, "rts-queued", f"from={pkt.src}")
            if not st.sent_rts:
                st.cancel_rts = True
                self._cancel_pending(st)
        elif parent is not None and pkt.dst == parent:
            # answering a child now could collide with the overheard pair's
            # transfer at my parent, so the responder role is off for this
            # frame no matter what arrives later
            st.cancel_cts = True
            if st.received_rtss:
                st.received_rtss = []
                st.cancel_rts = False
                sim.trace(nid, "rts-queue-deleted", f"overheard={pkt.src}->{pkt.dst}")
                if node.queue and not st.sent_rts:
                    self._pick_contention(nid, self._current_mini_slot() + 1)
                    sim.trace(nid, "became-prospective-sender")
            elif st.contending and not st.sent_rts:
                self._cancel_pending(st)
                self._pick_contention(nid, self._current_mini_slot() + 1)
                sim.trace(nid, "repick", f"after-slot={self._current_mini_slot()}")
            # already-transmitted contenders and idle listeners stay as they are
        else:
            self._deactivate(nid, "rts-for-other-pair")

    def _cancel_pending(self, st):
        if st.pending_ev is not None:
            self.engine.cancel(st.pending_ev)
            st.pending_ev = None
        st.contending = False
        st.awaiting = False

    # -- CTS slot -----------------------------------------------------------------------

    def _cts_begin(self, event):
        self.phase = "cts"
        sim = self.sim
        plan = self.plan
        fit_cap = max(1, int((plan.cts_slot - CTS_GUARD) / self.cts_airtime))
        for node in sim.nodes:
            st = self.states[node.id]
            if not node.alive or not st.active:
                continue
            if not st.received_rtss or st.cancel_cts:
                continue
            st.grants = [p.src for p in st.received_rtss[:fit_cap]]
            train = len(st.grants) * self.cts_airtime
            headroom = max(plan.cts_slot - train - CTS_GUARD, 0.0)
            if node.id in self.cts_timer_override:
                timer = self.cts_timer_override[node.id]
            else:
                timer = float(self.rng.uniform(0.0, headroom)) if headroom > 0 else 0.0
            self.engine.schedule(self.engine.now + timer, self._cts_attempt,
                                 kind="timer", target=node.id)

    def _cts_attempt(self, event):
        nid = event.target
        sim = self.sim
        node = sim.nodes[nid]
        st = self.states[nid]
        if not node.alive or not st.active or st.cancel_cts:
            return
        if sim.medium.carrier_busy(nid):
            sim.trace(nid, "cts-suppressed-busy")
            self._deactivate(nid, "busy-at-cts-timer")
            return
        st.committed_rx = True
        sim.trace(nid, "cts-train", f"grants={st.grants}")
        self._send_cts(nid, 0)

    def _send_cts(self, nid, idx):
        st = self.states[nid]
        node = self.sim.nodes[nid]
        if not node.alive or idx >= len(st.grants):
            return
        sc = self.sim.scenario
        cts = Packet(kind=PacketKind.CTS, src=nid, dst=st.grants[idx],
                     length=sc.control_bytes, header=sc.header_bytes,
                     grant_order=tuple(st.grants))
        self.sim.medium.transmit(nid, cts,
                                 on_resolved=lambda tx: self._send_cts(nid, idx + 1))

    def _handle_cts(self, node, pkt):
        sim = self.sim
        nid = node.id
        st = self.states[nid]
        if pkt.dst == nid:
            st.granted = True
            sim.trace(nid, "granted", f"by={pkt.src}")
        elif pkt.src == sim.parent_of(nid):
            pass  # a sibling's grant in my own parent's train: mine may follow
        elif st.committed_rx or st.granted:
            pass  # committed roles ride out foreign grants
        else:
            self._deactivate(nid, "cts-for-other-pair")

    # -- Sleep/Communication slot ----------------------------------------------------------

    def _comm_begin(self, event):
        self.phase = "comm"
        sim = self.sim
        self._rx_schedules = {}
        receivers = []
        for node in sim.nodes:
            st = self.states[node.id]
            if node.alive and st.committed_rx and st.grants:
                receivers.append(node.id)
        party = set()
        for rid in receivers:
            party.add(rid)
            party.update(self.states[rid].grants)
        for node in sim.nodes:
            if node.alive and node.id not in party:
                sim.sleep(node.id)
        # shave the window tail so trailing timers resolve inside the frame
        guard = (self.params.airtime_bytes(self.params.rf_overhead + self.params.hdr_len)
                 + self.params.turnaround + 0.001)
        windows = [(s, e - guard) for s, e in self.plan.comm_windows(self.cycle_start)
                   if e - guard > s]
        for rid in receivers:
            sched = _ReceiverSchedule(self, rid, list(self.states[rid].grants), windows)
            self._rx_schedules[rid] = sched
            sched.next_child()

    # -- shared handlers ----------------------------------------------------------------------

    def on_packet(self, node, pkt, sinr):
        st = self.states[node.id]
        if not st.active:
            return
        if pkt.kind is PacketKind.RTS and self.phase == "rts":
            self._handle_rts(node, pkt)
        elif pkt.kind is PacketKind.CTS and self.phase == "cts":
            self._handle_cts(node, pkt)

    def on_corrupt(self, node, tx):
        st = self.states[node.id]
        if not st.active:
            return
        if self.phase == "rts":
            if st.awaiting and st.contending and not st.sent_rts:
                self._pick_contention(node.id, self._current_mini_slot() + 1)
                self.sim.trace(node.id, "repick-undecodable")
        elif self.phase == "cts":
            if not (st.committed_rx or st.granted):
                self._deactivate(node.id, "undecodable-in-cts")

    def on_air_rise(self, node, tx):
        pass

    def _deactivate(self, nid, why):
        st = self.states[nid]
        if not st.active:
            return
        st.active = False
        self._cancel_pending(st)
        self.sim.sleep(nid)
        self.sim.trace(nid, "deactivated", why)


class _ReceiverSchedule:
    """Greedy grant-order handoff: each granted child transfers to the parent
    until its queue empties or the communication budget runs out."""

    def __init__(self, driver, parent, children, windows):
        self.driver = driver
        self.sim = driver.sim
        self.parent = parent
        self.children = children
        self.windows = windows
        self.idx = 0

    def next_child(self):
        sim = self.sim
        if self.idx >= len(self.children) or not sim.nodes[self.parent].alive:
            self._finish()
            return
        child = self.children[self.idx]
        self.idx += 1
        st_child = self.driver.states[child]
        if not (st_child.granted and st_child.active):
            # the grant never reached this child (it deactivated or slept
            # through the train): its window is forfeited, not resurrected
            self.next_child()
            return
        if not sim.nodes[child].alive or not sim.nodes[child].queue:
            self.next_child()
            return
        sim.wake(child)
        sc = sim.scenario
        params = self.driver.params
        if sc.recovery == "seda":
            session = SedaSession(sim, child, self.parent, self.windows, params,
                                  self._child_done,
                                  link_ber=sim.link_ber_estimate(child, self.parent))
        else:
            session = ArqSession(sim, child, self.parent, self.windows, params,
                                 self._child_done)
        sim.nodes[child].active_session = session
        sim.nodes[self.parent].active_session = session
        session.start()

    def _child_done(self, session):
        sim = self.sim
        child = session.child
        sim.nodes[child].active_session = None
        sim.nodes[self.parent].active_session = None
        sim.sleep(child)
        self.next_child()

    def _finish(self):
        sched = getattr(self.driver, "_rx_schedules", None)
        if sched is not None:
            sched.pop(self.parent, None)
        if self.sim.nodes[self.parent].alive:
            self.sim.sleep(self.parent)


def build_plan(scenario, rts_airtime):
    return build_frame_plan(
        scenario.frame_s,
        synch_slot=scenario.synch_slot_s,
        w=scenario.w,
        mini_slot=scenario.mini_slot_s,
        cts_slot=scenario.cts_slot_s,
        max_backoff=scenario.max_backoff_s,
        rts_airtime=rts_airtime,
    )
