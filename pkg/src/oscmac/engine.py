"""Deterministic discrete-event core for the cooperative duty-cycle MAC.

Single-threaded event loop over a (time, sequence) heap; time is kept in
integer microseconds so ordering and trace equality are exact. Idle and
sleep power draws are accounted lazily by integrating each node's duty
schedule (plus reservation wake-ups) between the events that touch it,
with an exact binary search for the moment a battery empties.
"""

import heapq
import json
import math
import random
from dataclasses import dataclass, field

from . import mac as macmod
from .channel import AirTransmission, distance, in_reach, ct_reach, resolve_slot
from .config import ScenarioConfig
from .energy import Battery, RadioEnergyParams, rx_energy, tx_energy
from .mac import DutySchedule, MacState, Packet, Phase, build_schedules, compose_superframe
from .selection import CtRequest, WiLemStation

US = 1_000_000  # microseconds per second
TURNAROUND_US = 1000  # rx-to-tx turnaround before replies
_CONTENTION_FRAMES = 8  # frames a reservation attempt may be deferred over


def _mix(a: int, b: int) -> int:
    """Deterministic integer hash used to desynchronize contenders."""
    x = ((a + 1) * 2654435761 ^ (b + 1) * 2246822519) & 0xFFFFFFFF
    x = (x * 2654435761) & 0xFFFFFFFF
    return x >> 16

__all__ = ["Simulator", "Metrics", "run", "in_reach", "ct_reach", "resolve_slot"]


class SimulationError(RuntimeError):
    pass


@dataclass
class Metrics:
    network_lifetime_first_death_s: float = None  # type: ignore[assignment]
    trn_death_time_s: float = None                # type: ignore[assignment]
    packets_offered: int = 0
    packets_delivered: int = 0
    packets_failed: int = 0
    collisions: int = 0
    collision_losses: int = 0
    events_processed: int = 0
    energy_by_category: dict = field(default_factory=dict)  # node -> {cat: J}
    initial_by_node: dict = field(default_factory=dict)
    residual_by_node: dict = field(default_factory=dict)
    energy_timeline: list = field(default_factory=list)     # (t_s, node, residual)

    @property
    def delivery_ratio(self) -> float:
        return self.packets_delivered / self.packets_offered if self.packets_offered else 0.0

    def to_dict(self) -> dict:
        return {
            "network_lifetime_first_death_s": self.network_lifetime_first_death_s,
            "trn_death_time_s": self.trn_death_time_s,
            "packets_offered": self.packets_offered,
            "packets_delivered": self.packets_delivered,
            "packets_failed": self.packets_failed,
            "delivery_ratio": self.delivery_ratio,
            "collisions": self.collisions,
            "collision_losses": self.collision_losses,
            "events_processed": self.events_processed,
            "energy_by_category": {str(k): v for k, v in sorted(self.energy_by_category.items())},
            "initial_by_node": {str(k): v for k, v in sorted(self.initial_by_node.items())},
            "residual_by_node": {str(k): v for k, v in sorted(self.residual_by_node.items())},
            "energy_timeline": self.energy_timeline,
        }


@dataclass
class SimNode:
    id: int
    pos: tuple
    role: str
    battery: Battery
    schedule: DutySchedule
    mac: MacState
    next_hop: int = None          # type: ignore[assignment]
    depth: int = 0
    last_accounted_us: int = 0
    death_us: int = None          # type: ignore[assignment]


@dataclass
class _Transfer:
    """Engine-side bookkeeping for one node's in-flight batch."""
    batch: list = field(default_factory=list)
    mode: str = None              # type: ignore[assignment]
    request: CtRequest = None     # type: ignore[assignment]
    elected = None
    sf = None
    got_broadcast: dict = field(default_factory=dict)  # slot index -> set of helper ids
    noct_index: int = 0
    attempts: int = 0
    retries: int = 0
    active: bool = False
    hop_scheduled: bool = False


@dataclass
class _Txn:
    txn_id: int
    air: AirTransmission
    packet: Packet
    tag: str            # superframe | sf_relay | ct_broadcast | ct_coop | noct_request | noct_reply | data | data_ack | ct_ack
    meta: dict
    resolved: bool = False


class Simulator:
    def __init__(self, cfg: ScenarioConfig, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.rng = random.Random(seed)
        self.params: RadioEnergyParams = cfg.radio
        self.frame_us = int(round(cfg.mac.frame_ms * 1000))
        self.active_us = int(round(cfg.mac.active_ms * 1000))
        self.slot_us = int(round(cfg.mac.slot_ms * 1000))
        self.timeout_us = int(round(cfg.mac.timeout_slots * self.slot_us))
        self.horizon_us = int(round(cfg.sim.horizon_s * US))
        self.bitrate = cfg.mac.bit_rate_bps
        self.base_range = cfg.sim.base_range_m
        self.d0 = self.params.d0

        self.heap = []
        self._seq = 0
        self.rows = []          # trace rows
        self.metrics = Metrics()
        self.now = 0
        self._txn_counter = 0
        self._rdv_counter = 0
        self.txns = {}
        self.unresolved = []

        self._build_topology()
        self._build_station()
        self._transfers = {nid: _Transfer() for nid in self.nodes}
        self._init_traffic()
        self._init_housekeeping()

    # ------------------------------------------------------------------
    # construction

    def _build_topology(self):
        cfg = self.cfg
        nodes = {}
        if cfg.topology.nodes is not None:
            specs = {n.id: n for n in cfg.topology.nodes}
            self.fr = cfg.topology.fr
            positions = {n.id: (float(n.x), float(n.y)) for n in cfg.topology.nodes}
            initial = {n.id: n.initial_j for n in cfg.topology.nodes}
        else:
            gen = cfg.topology.generator
            grng = random.Random(gen["seed"])
            count = int(gen["node_count"])
            area = float(gen["area_m"])
            self.fr = 0
            positions = {0: (area / 2.0, area / 2.0)}
            for i in range(1, count):
                positions[i] = (grng.uniform(0, area), grng.uniform(0, area))
            initial = {i: cfg.sim.battery_j for i in positions}
            specs = None

        # routes and hop depths toward the final receiver
        ids = sorted(positions)
        if cfg.topology.routes is not None:
            routes = dict(cfg.topology.routes)
            depths = {self.fr: 0}
            for nid in ids:
                if nid == self.fr or nid not in routes:
                    continue  # routeless nodes never originate or forward
                chain, cur = [], nid
                while cur != self.fr:
                    if cur in chain or cur not in routes:
                        raise SimulationError(f"route from node {nid} does not reach the receiver")
                    chain.append(cur)
                    cur = routes[cur]
                for hop_up, member in enumerate(reversed(chain), start=1):
                    depths[member] = hop_up
        else:
            routes, depths = self._bfs_routes(positions, ids)

        max_depth = max(depths.values()) if depths else 0
        for nid in ids:
            if nid not in depths:
                depths[nid] = max_depth + 1  # unreachable; still duty-cycles

        schedules = build_schedules(positions, depths, self.base_range,
                                    self.frame_us, self.active_us)
        for nid in ids:
            role = "fr" if nid == self.fr else (specs[nid].role if specs else "relay")
            nodes[nid] = SimNode(
                id=nid, pos=positions[nid], role=role,
                battery=Battery(initial=initial[nid]),
                schedule=schedules[nid],
                mac=MacState(node=nid),
                next_hop=routes.get(nid), depth=depths[nid])
        self.nodes = nodes
        self.positions = positions
        self.metrics.initial_by_node = {nid: nodes[nid].battery.initial for nid in ids}

    def _bfs_routes(self, positions, ids):
        adj = {i: [] for i in ids}
        for i in ids:
            for j in ids:
                if i < j and distance(positions[i], positions[j]) <= self.base_range:
                    adj[i].append(j)
                    adj[j].append(i)
        depths = {self.fr: 0}
        routes = {}
        frontier = [self.fr]
        while frontier:
            nxt = []
            for cur in sorted(frontier):
                for nb in sorted(adj[cur]):
                    if nb not in depths:
                        depths[nb] = depths[cur] + 1
                        routes[nb] = cur
                        nxt.append(nb)
            frontier = nxt
        return routes, depths

    def _build_station(self):
        pos = self.cfg.topology.wilem or self.positions[self.fr]
        self.station = WiLemStation(positions=dict(self.positions))
        self.station_pos = tuple(pos)

    def _resolve_sources(self):
        spec = self.cfg.traffic.sources
        candidates = [nid for nid in sorted(self.nodes) if nid != self.fr]
        if isinstance(spec, int):
            ranked = sorted(candidates,
                            key=lambda n: (-self.nodes[n].depth,
                                           -distance(self.positions[n], self.positions[self.fr]),
                                           n))
            return ranked[:spec]
        for nid in spec:
            if nid not in self.nodes or nid == self.fr:
                raise SimulationError(f"traffic source {nid} is not a sensor node")
        return list(spec)

    def _init_traffic(self):
        self.sources = self._resolve_sources()
        self.trn = self.sources[0] if self.sources else None
        jitter_us = int(round(self.cfg.traffic.jitter_ms * 1000))
        base = int(round(self.cfg.traffic.start_s * US))
        seq = 0
        for src in self.sources:
            t0 = base + (self.rng.randrange(jitter_us + 1) if jitter_us else 0)
            packets = []
            for _ in range(self.cfg.traffic.packets_per_source):
                packets.append(Packet(seq=seq, size_bits=8 * self.cfg.traffic.packet_size_bytes,
                                      source=src, destination=self.fr, kind="data"))
                seq += 1
            if packets:
                self._schedule(t0, "traffic", {"node": src, "packets": packets})

    def _init_housekeeping(self):
        period = self.cfg.sim.housekeeping_frames * self.frame_us
        for nid in sorted(self.nodes):
            self._schedule(min(period, self.horizon_us), "housekeeping", {"node": nid})

    # ------------------------------------------------------------------
    # event plumbing

    def _schedule(self, t_us, kind, data):
        self._seq += 1
        heapq.heappush(self.heap, (t_us, self._seq, kind, data))

    def _emit(self, node, event, detail):
        residual = self.nodes[node].battery.residual if node in self.nodes else ""
        self.rows.append((self.now, len(self.rows), node, event,
                          json.dumps(detail, sort_keys=True), repr(residual) if residual != "" else ""))
        self.metrics.events_processed += 1

    def _new_rdv(self):
        self._rdv_counter += 1
        return self._rdv_counter

    # ------------------------------------------------------------------
    # energy accounting

    def _sched_extra_awake(self, node, t0, t1):
        """(scheduled awake, reservation-only awake) microseconds in [t0, t1)."""
        sched = node.schedule.awake_time(t0, t1)
        ivs = sorted((max(s, t0), min(e, t1)) for s, e, _ in node.mac.reservations
                     if s < t1 and e > t0)
        merged = []
        for s, e in ivs:
            if merged and s <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], e)
            else:
                merged.append([s, e])
        extra = sum((e - s) - node.schedule.awake_time(s, e) for s, e in merged)
        return sched, extra

    def _interval_cost(self, node, t0, t1):
        sched, extra = self._sched_extra_awake(node, t0, t1)
        awake = sched + extra
        asleep = (t1 - t0) - awake
        return (awake / US) * self.params.p_rx + (asleep / US) * self.params.p_sleep, awake, asleep

    def _account(self, node, now=None):
        """Charge idle/sleep power since the node was last accounted."""
        now = self.now if now is None else now
        t0 = node.last_accounted_us
        if now <= t0 or not node.battery.alive:
            node.last_accounted_us = max(t0, now)
            return
        cost, awake, asleep = self._interval_cost(node, t0, now)
        if cost >= node.battery.residual:
            lo, hi = t0 + 1, now
            while lo < hi:
                mid = (lo + hi) // 2
                c, _, _ = self._interval_cost(node, t0, mid)
                if c >= node.battery.residual:
                    hi = mid
                else:
                    lo = mid + 1
            death = lo
            _, awake, asleep = self._interval_cost(node, t0, death)
            idle = node.battery.drain((awake / US) * self.params.p_rx, "idle_listen")
            slept = node.battery.drain((asleep / US) * self.params.p_sleep, "sleep")
            # any residue from float rounding is absorbed as idle draw
            if node.battery.alive:
                idle += node.battery.drain(node.battery.residual, "idle_listen")
            node.death_us = death
            node.last_accounted_us = now
            self._emit(node.id, "energy_account", {"idle_j": idle, "sleep_j": slept})
            self._register_death(node, death)
            return
        idle = node.battery.drain((awake / US) * self.params.p_rx, "idle_listen")
        slept = node.battery.drain((asleep / US) * self.params.p_sleep, "sleep")
        node.last_accounted_us = now
        if idle or slept:
            self._emit(node.id, "energy_account", {"idle_j": idle, "sleep_j": slept})
        node.mac.reservations = [r for r in node.mac.reservations if r[1] > now]

    def _register_death(self, node, death_us):
        self._emit(node.id, "node_died", {"death_time_us": death_us})
        t = death_us / US
        if (self.metrics.network_lifetime_first_death_s is None
                or t < self.metrics.network_lifetime_first_death_s):
            self.metrics.network_lifetime_first_death_s = t
        if node.id == self.trn and self.metrics.trn_death_time_s is None:
            self.metrics.trn_death_time_s = t

    def _charge(self, node, amount, category, event, detail):
        self._account(node)
        if not node.battery.alive:
            self._emit(node.id, "charge_skipped_dead", {"event": event})
            return 0.0
        drawn = node.battery.drain(amount, category)
        self._emit(node.id, event, dict(detail, j=drawn, category=category))
        if not node.battery.alive and node.death_us is None:
            node.death_us = self.now
            self._register_death(node, self.now)
        return drawn

    # ------------------------------------------------------------------
    # wakefulness and reservations

    def _is_awake(self, node, t_us):
        if not node.battery.alive or (node.death_us is not None and t_us >= node.death_us):
            return False
        if node.schedule.is_awake(t_us):
            return True
        return any(s <= t_us < e for s, e, _ in node.mac.reservations)

    def _add_reservation(self, node, start, end, rdv, kind):
        ok = macmod.reserve(node.mac, start, end, rdv)
        self._emit(node.id, "reserve",
                   {"start_us": start, "end_us": end, "rdv": rdv, "kind": kind,
                    "accepted": ok})
        return ok

    def _ensure_awake_for(self, node, start, end, rdv, kind):
        # reservation-based wake-up: nodes force-wake for their own actions
        if node.schedule.awake_time(start, end) < end - start:
            self._add_reservation(node, start, end, rdv, kind)

    # ------------------------------------------------------------------
    # radio

    def _tx_duration_us(self, bits):
        return max(1, int(math.ceil(bits / self.bitrate * US)))

    def _send(self, sender_specs, addressed, packet, tag, meta, coop=False, rdv=None):
        """Put one transmission on the air.

        sender_specs: list of (node_id, nominal_tx_distance). Dead
        senders are dropped; each live sender is charged the two-regime
        transmit energy over its own nominal distance.
        """
        rdv = self._new_rdv() if rdv is None else rdv
        dur = self._tx_duration_us(packet.size_bits)
        live = []
        for nid, dist in sender_specs:
            node = self.nodes[nid]
            self._account(node)
            if not node.battery.alive:
                self._emit(nid, "tx_skipped_dead", {"tag": tag})
                continue
            self._ensure_awake_for(node, self.now, self.now + dur, rdv, "tx")
            self._charge(node, tx_energy(packet.size_bits, dist, self.params),
                         "transmit", "tx",
                         {"tag": tag, "rdv": rdv, "bits": packet.size_bits,
                          "distance_m": dist, "end_us": self.now + dur,
                          "coop": coop, "packet": packet.seq, "pkind": packet.kind})
            if node.battery.alive:
                live.append(nid)
        if not live:
            return None
        air = AirTransmission(
            rdv_id=rdv,
            sender_positions=tuple(self.nodes[n].pos for n in live),
            sender_ids=tuple(live),
            addressed_to=tuple(addressed),
            cooperative=coop,
            start_us=self.now, end_us=self.now + dur)
        self._txn_counter += 1
        txn = _Txn(self._txn_counter, air, packet, tag, meta)
        self.txns[txn.txn_id] = txn
        self.unresolved.append(txn)
        self._schedule(self.now + dur, "tx_end", {"txn": txn.txn_id})
        return txn

    def _on_tx_end(self, data):
        txn = self.txns[data["txn"]]
        if txn.resolved:
            return
        cluster = [txn]
        changed = True
        while changed:
            changed = False
            for other in self.unresolved:
                if other in cluster or other.resolved:
                    continue
                if any(other.air.start_us < t.air.end_us and t.air.start_us < other.air.end_us
                       for t in cluster):
                    cluster.append(other)
                    changed = True
        if any(t.air.end_us > self.now for t in cluster):
            return  # a later-ending member of the cluster resolves it
        for t in cluster:
            t.resolved = True
        self.unresolved = [t for t in self.unresolved if not t.resolved]
        self._resolve_cluster(cluster)

    def _resolve_cluster(self, cluster):
        for rid in sorted(self.nodes):
            receiver = self.nodes[rid]
            audible = []
            for t in cluster:
                if rid in t.air.sender_ids:
                    continue
                if not self._is_awake(receiver, t.air.start_us):
                    continue
                if self._audible(t.air, receiver.pos):
                    audible.append(t)
            if not audible:
                continue
            rdvs = {t.air.rdv_id for t in audible}
            if len(rdvs) > 1:
                self.metrics.collisions += 1
                lost = [t.packet.seq for t in audible if rid in t.air.addressed_to]
                self.metrics.collision_losses += len(lost)
                self._emit(rid, "collision",
                           {"rdvs": sorted(rdvs), "lost_packets": lost})
                for t in audible:
                    cat = "receive" if rid in t.air.addressed_to else "overhear"
                    self._charge(receiver, rx_energy(t.packet.size_bits, self.params),
                                 cat, "rx_corrupt",
                                 {"rdv": t.air.rdv_id, "bits": t.packet.size_bits,
                                  "packet": t.packet.seq})
                continue
            t = audible[0]
            if rid in t.air.addressed_to:
                self._charge(receiver, rx_energy(t.packet.size_bits, self.params),
                             "receive", "rx",
                             {"rdv": t.air.rdv_id, "tag": t.tag, "bits": t.packet.size_bits,
                              "packet": t.packet.seq, "pkind": t.packet.kind})
                if receiver.battery.alive:
                    self._dispatch(receiver, t)
            else:
                self._charge(receiver, rx_energy(t.packet.size_bits, self.params),
                             "overhear", "overhear",
                             {"rdv": t.air.rdv_id, "tag": t.tag,
                              "bits": t.packet.size_bits, "packet": t.packet.seq})

    def _audible(self, air, pos):
        if air.cooperative:
            return ct_reach(air.sender_positions, pos, self.base_range, self.d0)
        return in_reach(air.sender_positions[0], pos, self.base_range)

    # ------------------------------------------------------------------
    # protocol: hop orchestration

    def _resolve_mode(self, node, elected):
        mode = self.cfg.mac.mode
        if mode == "noct":
            return "noct"
        if not elected or not elected.helpers:
            return "noct"
        if mode == "ct":
            return "ct"
        # auto: cooperate when the hop is out of direct reach or the
        # sender has fallen well below its neighbourhood's mean energy
        nxt = self.nodes[node.next_hop]
        if not in_reach(node.pos, nxt.pos, self.base_range):
            return "ct"
        neigh = [self.nodes[n].battery.residual for n in sorted(self.nodes)
                 if n != node.id and self.nodes[n].battery.alive
                 and distance(self.positions[n], node.pos) <= self.base_range]
        if neigh and node.battery.residual < self.cfg.mac.ct_energy_fraction * (sum(neigh) / len(neigh)):
            return "ct"
        return "noct"

    def _on_traffic(self, data):
        node = self.nodes[data["node"]]
        packets = data["packets"]
        self.metrics.packets_offered += len(packets)
        self._emit(node.id, "offered", {"count": len(packets),
                                        "seqs": [p.seq for p in packets]})
        node.mac.pending_packets.extend(packets)
        self._kick_hop(node)

    def _kick_hop(self, node):
        xfer = self._transfers[node.id]
        if xfer.active or xfer.hop_scheduled or not node.mac.pending_packets:
            return
        if node.next_hop is None:
            self._emit(node.id, "delivery_failure",
                       {"reason": "no route to receiver",
                        "seqs": [p.seq for p in node.mac.pending_packets]})
            self.metrics.packets_failed += len(node.mac.pending_packets)
            node.mac.pending_packets.clear()
            return
        t = node.schedule.next_wake(self.now)
        xfer.hop_scheduled = True
        self._schedule(max(t, self.now), "start_hop", {"node": node.id})

    def _on_start_hop(self, data):
        node = self.nodes[data["node"]]
        xfer = self._transfers[node.id]
        xfer.hop_scheduled = False
        self._account(node)
        if not node.battery.alive or not node.mac.pending_packets or xfer.active:
            return
        xfer.active = True
        xfer.batch = list(node.mac.pending_packets)
        xfer.retries = 0
        if self.cfg.mac.mode == "noct":
            xfer.mode = "noct"
            self._noct_begin(node)
        else:
            self._ct_query(node)

    def _finish_batch(self, node, delivered_here):
        xfer = self._transfers[node.id]
        for p in xfer.batch:
            if p in node.mac.pending_packets:
                node.mac.pending_packets.remove(p)
        self._transfers[node.id] = _Transfer()
        self._emit(node.id, "batch_done", {"count": len(xfer.batch)})
        self._kick_hop(node)

    # --- cooperative path -------------------------------------------------

    def _ct_query(self, node):
        xfer = self._transfers[node.id]
        nxt = self.nodes[node.next_hop]
        neighbors = tuple(n for n in sorted(self.nodes)
                          if n not in (node.id, node.next_hop, self.fr)
                          and self.nodes[n].battery.alive
                          and distance(self.positions[n], node.pos) <= self.base_range)
        xfer.request = CtRequest(
            requester=node.id,
            packet_size_bytes=self.cfg.traffic.packet_size_bytes,
            packet_count=max(1, len(xfer.batch)),
            next_hop_distance=distance(node.pos, nxt.pos),
            neighbor_ids=neighbors)
        ctrl_dur = self._tx_duration_us(self.cfg.mac.ctrl_bits)
        node.mac.phase = Phase.AWAITING_CANDIDATES
        self._ensure_awake_for(node, self.now, self.now + 2 * ctrl_dur + TURNAROUND_US,
                               self._new_rdv(), "station_exchange")
        d_station = distance(node.pos, self.station_pos)
        self._charge(node, tx_energy(self.cfg.mac.ctrl_bits, d_station, self.params),
                     "transmit", "ct_request",
                     {"neighbors": list(neighbors), "n": xfer.request.packet_count,
                      "d": xfer.request.next_hop_distance, "bits": self.cfg.mac.ctrl_bits})
        if not node.battery.alive:
            return
        self._schedule(self.now + 2 * ctrl_dur + TURNAROUND_US, "station_reply",
                       {"node": node.id})

    def _on_station_reply(self, data):
        node = self.nodes[data["node"]]
        xfer = self._transfers[node.id]
        if xfer.request is None:
            return
        self._account(node)
        if not node.battery.alive:
            return
        # the station meters every battery losslessly and instantly
        for nid in sorted(self.nodes):
            self.station.update_energy(nid, self.nodes[nid].battery.residual)
        elected, skipped = self.station.handle_ct_request(xfer.request, self.params)
        xfer.elected = elected
        self._emit(node.id, "candidate_reply",
                   {"helpers": list(elected.helpers), "leader": elected.leader,
                    "skipped": skipped})
        self._charge(node, rx_energy(self.cfg.mac.ctrl_bits, self.params),
                     "receive", "rx",
                     {"tag": "candidate_reply", "bits": self.cfg.mac.ctrl_bits,
                      "rdv": None, "packet": None, "pkind": "candidate_reply"})
        macmod.step(node.mac, "candidate_reply", self.now)
        xfer.mode = self._resolve_mode(node, elected)
        self._emit(node.id, "mode_selected", {"mode": xfer.mode})
        if xfer.mode == "noct":
            self._noct_begin(node)
            return
        origin = self.now + TURNAROUND_US
        xfer.sf = compose_superframe(node.id, elected, node.next_hop,
                                     len(xfer.batch), origin,
                                     self.slot_us, self.frame_us)
        if xfer.sf.continued:
            self._emit(node.id, "superframe_continued",
                       {"slots": len(xfer.sf.rdv_slots()), "frame_us": self.frame_us})
        # station-assisted wake bootstrap: elected helpers and the next
        # hop are told (out of band) when to listen for the superframe
        control_end = origin + self.slot_us
        for h in elected.helpers:
            helper = self.nodes[h]
            self._charge(helper, rx_energy(self.cfg.mac.ctrl_bits, self.params),
                         "receive", "station_notify", {"listen_from_us": origin,
                                                       "listen_until_us": control_end})
            if helper.battery.alive:
                self._add_reservation(helper, origin, control_end, self._new_rdv(),
                                      "sf_listen")
        nxt = self.nodes[node.next_hop]
        self._charge(nxt, rx_energy(self.cfg.mac.ctrl_bits, self.params),
                     "receive", "station_notify", {"listen_from_us": origin,
                                                   "listen_until_us": control_end})
        if nxt.battery.alive:
            self._add_reservation(nxt, origin, control_end, self._new_rdv(), "sf_listen")
        self._schedule(origin, "sf_announce", {"node": node.id})

    def _on_sf_announce(self, data):
        node = self.nodes[data["node"]]
        xfer = self._transfers[node.id]
        if xfer.sf is None:
            return
        sf = xfer.sf
        addressed = list(sf.helpers)
        nxt = self.nodes[node.next_hop]
        if in_reach(node.pos, nxt.pos, self.base_range):
            addressed.append(node.next_hop)
        dists = [distance(node.pos, self.nodes[h].pos) for h in addressed] or [0.0]
        pkt = Packet(seq=-1, size_bits=self.cfg.mac.superframe_bits,
                     source=node.id, destination=-1, kind="superframe")
        self._ensure_awake_for(node, sf.origin_us,
                               sf.rdv_slots()[-1].end_us if sf.rdv_slots() else sf.origin_us + self.slot_us,
                               self._new_rdv(), "sf_span")
        node.mac.phase = Phase.AWAITING_CT_ACK
        self._send([(node.id, max(dists))], addressed, pkt, "superframe",
                   {"origin": node.id})
        self._set_timer(node, "ct_ack", self.timeout_us)

    def _on_superframe_rx(self, receiver, txn):
        origin = self.nodes[txn.meta["origin"]]
        sf = self._transfers[origin.id].sf
        if sf is None:
            return
        rdv = self._new_rdv()
        _, is_leader = macmod.on_superframe(receiver.mac, sf, rdv)
        for s in sf.rdv_slots():
            self._emit(receiver.id, "reserve",
                       {"start_us": s.start_us, "end_us": s.end_us, "rdv": rdv,
                        "kind": "ct_rdv", "accepted": True})
        if is_leader:
            self._schedule(self.now + TURNAROUND_US, "send_ct_ack",
                           {"node": receiver.id, "origin": origin.id})

    def _on_send_ct_ack(self, data):
        leader = self.nodes[data["node"]]
        origin = self.nodes[data["origin"]]
        pkt = Packet(seq=-2, size_bits=self.cfg.mac.ctrl_bits,
                     source=leader.id, destination=origin.id, kind="ct_ack")
        self._send([(leader.id, distance(leader.pos, origin.pos))],
                   [origin.id], pkt, "ct_ack", {"origin": origin.id})

    def _on_ct_ack_rx(self, node, txn):
        xfer = self._transfers[node.id]
        if xfer.sf is None or node.mac.phase is not Phase.AWAITING_CT_ACK:
            return
        macmod.step(node.mac, "ct_ack", self.now)
        self._cancel_timer(node)
        self._emit(node.id, "ct_reserved", {"leader": txn.air.sender_ids[0]})
        nxt = self.nodes[node.next_hop]
        if not in_reach(node.pos, nxt.pos, self.base_range):
            self._schedule(self.now + TURNAROUND_US, "sf_relay", {"node": node.id})
        for i, slot in enumerate(xfer.sf.rdv_slots()):
            self._schedule(slot.start_us, "ct_slot", {"node": node.id, "index": i})

    def _on_sf_relay(self, data):
        node = self.nodes[data["node"]]
        xfer = self._transfers[node.id]
        if xfer.sf is None:
            return
        nxt = self.nodes[node.next_hop]
        senders = [(node.id, distance(node.pos, nxt.pos))]
        for h in xfer.sf.helpers:
            senders.append((h, distance(self.nodes[h].pos, nxt.pos)))
        pkt = Packet(seq=-1, size_bits=self.cfg.mac.superframe_bits,
                     source=node.id, destination=node.next_hop, kind="superframe")
        self._send(senders, [node.next_hop], pkt, "superframe",
                   {"origin": node.id}, coop=True)

    def _on_ct_slot(self, data):
        node = self.nodes[data["node"]]
        xfer = self._transfers[node.id]
        if xfer.sf is None:
            return
        i = data["index"]
        self._account(node)
        if not node.battery.alive:
            self._emit(node.id, "ct_slot_skipped", {"index": i, "reason": "transmitter dead"})
            return
        if i >= len(xfer.batch):
            return
        macmod.step(node.mac, "slot_start", self.now)
        packet = xfer.batch[i]
        helpers_alive = [h for h in xfer.sf.helpers if self.nodes[h].battery.alive]
        xfer.got_broadcast[i] = set()
        if helpers_alive:
            dist = max(distance(node.pos, self.nodes[h].pos) for h in helpers_alive)
            self._send([(node.id, dist)], helpers_alive, packet, "ct_broadcast",
                       {"origin": node.id, "index": i})
        slot = xfer.sf.rdv_slots()[i]
        self._schedule(slot.start_us + slot.duration_us // 2, "ct_coop",
                       {"node": node.id, "index": i})

    def _on_ct_broadcast_rx(self, receiver, txn):
        origin = txn.meta["origin"]
        self._transfers[origin].got_broadcast[txn.meta["index"]].add(receiver.id)

    def _on_ct_coop(self, data):
        node = self.nodes[data["node"]]
        xfer = self._transfers[node.id]
        if xfer.sf is None:
            return
        i = data["index"]
        if i >= len(xfer.batch):
            return
        macmod.step(node.mac, "broadcast_done", self.now)
        packet = xfer.batch[i]
        nxt = self.nodes[node.next_hop]
        senders = []
        self._account(node)
        if node.battery.alive:
            senders.append((node.id, distance(node.pos, nxt.pos)))
        for h in xfer.sf.helpers:
            if h in xfer.got_broadcast.get(i, ()) and self.nodes[h].battery.alive:
                senders.append((h, distance(self.nodes[h].pos, nxt.pos)))
        if not senders:
            self._emit(node.id, "delivery_failure",
                       {"reason": "no live cooperative senders", "seqs": [packet.seq]})
        else:
            self._send(senders, [node.next_hop], packet, "ct_coop",
                       {"origin": node.id, "index": i}, coop=True)
        macmod.step(node.mac, "coop_done", self.now)
        if i == len(xfer.batch) - 1:
            slot = xfer.sf.rdv_slots()[i]
            self._schedule(slot.end_us, "ct_batch_done", {"node": node.id})

    def _on_ct_batch_done(self, data):
        node = self.nodes[data["node"]]
        self._finish_batch(node, delivered_here=False)

    # --- no-CT path -------------------------------------------------------

    def _noct_begin(self, node):
        xfer = self._transfers[node.id]
        xfer.mode = "noct"
        xfer.noct_index = 0
        xfer.attempts = 0
        self._emit(node.id, "mode_selected", {"mode": "noct"})
        self._noct_next(node)

    def _noct_next(self, node):
        xfer = self._transfers[node.id]
        if xfer.noct_index >= len(xfer.batch):
            self._finish_batch(node, delivered_here=False)
            return
        xfer.attempts = 0
        self._noct_request(node)

    def _noct_request(self, node):
        xfer = self._transfers[node.id]
        if not xfer.active or xfer.noct_index >= len(xfer.batch):
            return
        nxt = self.nodes[node.next_hop]
        t_req = nxt.schedule.next_wake(self.now)
        if t_req > self.now:
            # one handshake fits per wake window, so contenders spread over
            # the next few frames by a deterministic per-(sender, attempt)
            # draw instead of piling into the same window
            frame_pick = _mix(node.id, xfer.attempts) % _CONTENTION_FRAMES
            self._schedule(t_req + frame_pick * self.frame_us, "noct_request",
                           {"node": node.id})
            return
        self._account(node)
        if not node.battery.alive:
            return
        interval_start = self.now + self.timeout_us + TURNAROUND_US
        data_bits = 8 * self.cfg.traffic.packet_size_bytes
        interval_us = (self._tx_duration_us(data_bits)
                       + self._tx_duration_us(self.cfg.mac.ctrl_bits)
                       + 3 * TURNAROUND_US)
        rdv = self._new_rdv()
        self._ensure_awake_for(node, self.now, self.now + self.timeout_us, rdv, "noct_wait")
        pkt = Packet(seq=-3, size_bits=self.cfg.mac.ctrl_bits, source=node.id,
                     destination=node.next_hop, kind="noct_request")
        node.mac.phase = Phase.AWAITING_NOCT_REPLY
        self._send([(node.id, distance(node.pos, nxt.pos))], [node.next_hop], pkt,
                   "noct_request",
                   {"origin": node.id, "interval_start": interval_start,
                    "interval_us": interval_us, "rdv": rdv})
        self._set_timer(node, "noct_reply", self.timeout_us)

    def _on_noct_request_rx(self, receiver, txn):
        sender_id = txn.meta["origin"]
        start = txn.meta["interval_start"]
        dur = txn.meta["interval_us"]
        accepted = macmod.reserve_noct(receiver.mac, start, dur, txn.meta["rdv"])
        self._emit(receiver.id, "reserve",
                   {"start_us": start, "end_us": start + dur, "rdv": txn.meta["rdv"],
                    "kind": "noct_rdv", "accepted": accepted})
        self._schedule(self.now + TURNAROUND_US, "send_noct_reply",
                       {"node": receiver.id, "to": sender_id, "accepted": accepted,
                        "interval_start": start, "interval_us": dur})

    def _on_send_noct_reply(self, data):
        receiver = self.nodes[data["node"]]
        target = self.nodes[data["to"]]
        pkt = Packet(seq=-4, size_bits=self.cfg.mac.ctrl_bits, source=receiver.id,
                     destination=target.id, kind="noct_reply")
        self._send([(receiver.id, distance(receiver.pos, target.pos))], [target.id],
                   pkt, "noct_reply",
                   {"accepted": data["accepted"], "interval_start": data["interval_start"],
                    "interval_us": data["interval_us"]})

    def _on_noct_reply_rx(self, node, txn):
        xfer = self._transfers[node.id]
        if node.mac.phase is not Phase.AWAITING_NOCT_REPLY:
            return
        macmod.step(node.mac, "noct_reply", self.now)
        self._cancel_timer(node)
        if txn.meta["accepted"]:
            start = txn.meta["interval_start"]
            rdv = self._new_rdv()
            self._add_reservation(node, start, start + txn.meta["interval_us"], rdv, "noct_tx")
            self._schedule(start, "noct_data", {"node": node.id})
        else:
            self._noct_retry(node, "reservation rejected")

    def _noct_retry(self, node, reason):
        xfer = self._transfers[node.id]
        xfer.attempts += 1
        if xfer.attempts > self.cfg.mac.retry_cap:
            packet = xfer.batch[xfer.noct_index]
            self._emit(node.id, "delivery_failure",
                       {"reason": reason, "seqs": [packet.seq],
                        "attempts": xfer.attempts})
            self.metrics.packets_failed += 1
            xfer.noct_index += 1
            self._noct_next_packet_after_failure(node)
            return
        # the re-request path re-draws its contention frame, so the local
        # backoff only needs to clear the current exchange
        backoff = self.slot_us
        self._emit(node.id, "retry", {"attempt": xfer.attempts, "reason": reason})
        self._schedule(self.now + backoff, "noct_request", {"node": node.id})

    def _noct_next_packet_after_failure(self, node):
        xfer = self._transfers[node.id]
        if xfer.noct_index >= len(xfer.batch):
            self._finish_batch(node, delivered_here=False)
        else:
            xfer.attempts = 0
            self._schedule(self.now, "noct_request", {"node": node.id})

    def _on_noct_data(self, data):
        node = self.nodes[data["node"]]
        xfer = self._transfers[node.id]
        if xfer.noct_index >= len(xfer.batch):
            return
        self._account(node)
        if not node.battery.alive:
            return
        packet = xfer.batch[xfer.noct_index]
        nxt = self.nodes[node.next_hop]
        node.mac.phase = Phase.TRANSMITTING
        self._send([(node.id, distance(node.pos, nxt.pos))], [node.next_hop], packet,
                   "data", {"origin": node.id, "mode": "noct"})
        node.mac.phase = Phase.AWAITING_NOCT_REPLY  # waiting for the data ack
        self._set_timer(node, "data_ack", self.timeout_us)

    def _on_data_rx(self, receiver, txn):
        if txn.tag == "ct_broadcast":
            self._on_ct_broadcast_rx(receiver, txn)
            return
        origin = self.nodes[txn.meta["origin"]]
        self._accept_packet(receiver, txn.packet, origin)
        ack = Packet(seq=-5, size_bits=self.cfg.mac.ctrl_bits, source=receiver.id,
                     destination=origin.id, kind="data_ack")
        self._schedule(self.now + TURNAROUND_US, "send_data_ack",
                       {"node": receiver.id, "to": origin.id, "packet": txn.packet.seq})

    def _on_send_data_ack(self, data):
        receiver = self.nodes[data["node"]]
        target = self.nodes[data["to"]]
        pkt = Packet(seq=-5, size_bits=self.cfg.mac.ctrl_bits, source=receiver.id,
                     destination=target.id, kind="data_ack")
        self._send([(receiver.id, distance(receiver.pos, target.pos))], [target.id],
                   pkt, "data_ack", {"packet": data["packet"]})

    def _on_data_ack_rx(self, node, txn):
        xfer = self._transfers[node.id]
        if xfer.mode == "noct" and xfer.active:
            self._cancel_timer(node)
            node.mac.phase = Phase.IDLE_LISTENING
            xfer.noct_index += 1
            self._noct_next(node)

    def _accept_packet(self, receiver, packet, origin):
        if receiver.id == self.fr or receiver.id == packet.destination:
            self.metrics.packets_delivered += 1
            self._emit(receiver.id, "delivered",
                       {"seq": packet.seq, "source": packet.source, "from": origin.id})
        else:
            self._emit(receiver.id, "forwarding", {"seq": packet.seq, "from": origin.id})
            receiver.mac.pending_packets.append(packet)
            self._kick_hop(receiver)

    # ------------------------------------------------------------------
    # timers

    def _set_timer(self, node, tag, delay_us):
        node.mac.timer_token += 1
        self._schedule(self.now + delay_us, "timer",
                       {"node": node.id, "tag": tag, "token": node.mac.timer_token})

    def _cancel_timer(self, node):
        node.mac.timer_token += 1

    def _on_timer(self, data):
        node = self.nodes[data["node"]]
        if data["token"] != node.mac.timer_token:
            return
        self._account(node)
        if not node.battery.alive:
            return
        tag = data["tag"]
        xfer = self._transfers[node.id]
        self._emit(node.id, "timeout", {"tag": tag})
        if tag == "ct_ack":
            macmod.step(node.mac, "timeout", self.now)
            xfer.retries += 1
            xfer.sf = None
            if xfer.retries <= self.cfg.mac.retry_cap:
                self._ct_query(node)
            else:
                self._noct_begin(node)
        elif tag in ("noct_reply", "data_ack"):
            macmod.step(node.mac, "timeout", self.now)
            self._noct_retry(node, f"{tag} timeout")

    # ------------------------------------------------------------------
    # housekeeping and run loop

    def _on_housekeeping(self, data):
        node = self.nodes[data["node"]]
        self._account(node)
        self.metrics.energy_timeline.append(
            (self.now / US, node.id, node.battery.residual))
        nxt = self.now + self.cfg.sim.housekeeping_frames * self.frame_us
        if nxt <= self.horizon_us and node.battery.alive:
            self._schedule(nxt, "housekeeping", {"node": node.id})

    _HANDLERS = {
        "traffic": "_on_traffic",
        "start_hop": "_on_start_hop",
        "station_reply": "_on_station_reply",
        "sf_announce": "_on_sf_announce",
        "send_ct_ack": "_on_send_ct_ack",
        "sf_relay": "_on_sf_relay",
        "ct_slot": "_on_ct_slot",
        "ct_coop": "_on_ct_coop",
        "ct_batch_done": "_on_ct_batch_done",
        "noct_request": "_on_noct_request_wrap",
        "noct_data": "_on_noct_data",
        "send_noct_reply": "_on_send_noct_reply",
        "send_data_ack": "_on_send_data_ack",
        "tx_end": "_on_tx_end",
        "timer": "_on_timer",
        "housekeeping": "_on_housekeeping",
    }

    def _on_noct_request_wrap(self, data):
        self._noct_request(self.nodes[data["node"]])

    def _dispatch(self, receiver, txn):
        kind = txn.packet.kind
        if kind == "superframe":
            self._on_superframe_rx(receiver, txn)
        elif kind == "ct_ack":
            self._on_ct_ack_rx(receiver, txn)
        elif kind == "noct_request":
            self._on_noct_request_rx(receiver, txn)
        elif kind == "noct_reply":
            self._on_noct_reply_rx(receiver, txn)
        elif kind == "data":
            self._on_data_rx(receiver, txn)
        elif kind == "data_ack":
            self._on_data_ack_rx(receiver, txn)

    def run(self) -> Metrics:
        while self.heap:
            t, _, kind, data = heapq.heappop(self.heap)
            if t > self.horizon_us:
                break
            self.now = t
            getattr(self, self._HANDLERS[kind])(data)
        # settle every node's power draw up to the horizon
        self.now = self.horizon_us
        for nid in sorted(self.nodes):
            node = self.nodes[nid]
            self._account(node)
            self.metrics.energy_timeline.append(
                (self.now / US, nid, node.battery.residual))
        for nid in sorted(self.nodes):
            node = self.nodes[nid]
            self.metrics.residual_by_node[nid] = node.battery.residual
            self.metrics.energy_by_category[nid] = dict(node.battery.consumed_by_category)
        undeliverable = self.metrics.packets_offered - self.metrics.packets_delivered
        self.metrics.packets_failed = max(self.metrics.packets_failed, undeliverable)
        self.metrics.events_processed = len(self.rows)
        return self.metrics


def run(cfg: ScenarioConfig, seed: int):
    """Execute one scenario; returns (Metrics, trace rows)."""
    sim = Simulator(cfg, seed)
    metrics = sim.run()
    return metrics, sim.rows
