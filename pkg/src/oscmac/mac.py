"""Duty-cycle schedules, superframes, reservations, and the node state machine.

Schedules are pipelined (a node wakes one active window after its
downstream hop) and orthogonalized (nodes within two hops never share a
wake window unless they are the same pipeline stage out of interference
range). Time is integer microseconds throughout.
"""

from dataclasses import dataclass, field
from enum import Enum

from .channel import distance


class ConfigurationError(ValueError):
    """A scenario parameter combination that cannot be scheduled."""


# ---------------------------------------------------------------------------
# duty-cycle schedules


@dataclass(frozen=True)
class DutySchedule:
    frame_us: int
    active_us: int
    wake_offset_us: int

    def __post_init__(self):
        if not 0 < self.active_us <= self.frame_us:
            raise ValueError("active window must lie in (0, frame]")
        if not 0 <= self.wake_offset_us < self.frame_us:
            raise ValueError("wake offset must lie in [0, frame)")

    def _windows(self):
        """Wake window(s) inside one frame, split if it wraps the frame edge."""
        start, width = self.wake_offset_us, self.active_us
        if start + width <= self.frame_us:
            return ((start, start + width),)
        return ((start, self.frame_us), (0, start + width - self.frame_us))

    def is_awake(self, t_us: int) -> bool:
        r = t_us % self.frame_us
        return any(a <= r < b for a, b in self._windows())

    def next_wake(self, t_us: int) -> int:
        """Earliest time >= t_us inside a wake window."""
        if self.is_awake(t_us):
            return t_us
        r = t_us % self.frame_us
        starts = sorted(a for a, _ in self._windows())
        for a in starts:
            if r < a:
                return t_us - r + a
        return t_us - r + self.frame_us + starts[0]

    def awake_time(self, t0_us: int, t1_us: int) -> int:
        """Total scheduled-awake microseconds within [t0, t1)."""
        if t1_us <= t0_us:
            return 0
        return self._awake_before(t1_us) - self._awake_before(t0_us)

    def _awake_before(self, t_us: int) -> int:
        total = 0
        for a, b in self._windows():
            q, r = divmod(t_us - a, self.frame_us)
            if t_us < a:
                continue
            total += q * (b - a) + min(max(r, 0), b - a)
        return total


def two_hop_sets(positions, base_range):
    """Node id -> set of ids within two unit-disk hops (excluding self)."""
    ids = sorted(positions)
    adj = {i: set() for i in ids}
    for i in ids:
        for j in ids:
            if i < j and distance(positions[i], positions[j]) <= base_range:
                adj[i].add(j)
                adj[j].add(i)
    two = {}
    for i in ids:
        reach = set(adj[i])
        for j in adj[i]:
            reach |= adj[j]
        reach.discard(i)
        two[i] = reach
    return two


def build_schedules(positions, depths, base_range, frame_us, active_us):
    """Assign pipelined, orthogonal wake offsets.

    Base offset is (max_depth - depth) active windows, so a packet can
    descend one hop per window. Nodes sharing a 2-hop neighbourhood are
    pushed to later window slots until disjoint; running out of window
    slots in a neighbourhood is a configuration error.
    """
    slots_avail = frame_us // active_us
    if slots_avail < 1:
        raise ConfigurationError("frame shorter than one active window")
    two = two_hop_sets(positions, base_range)
    max_depth = max(depths.values()) if depths else 0
    assigned = {}  # node -> slot index
    order = sorted(depths, key=lambda n: (-depths[n], n))
    for node in order:
        base = (max_depth - depths[node]) % slots_avail
        taken = {assigned[m] for m in two[node] if m in assigned}
        for bump in range(slots_avail):
            slot = (base + bump) % slots_avail
            if slot not in taken:
                assigned[node] = slot
                break
        else:
            raise ConfigurationError(
                f"frame of {slots_avail} windows cannot orthogonalize the "
                f"2-hop neighbourhood of node {node} ({sorted(two[node])})")
    return {n: DutySchedule(frame_us, active_us, assigned[n] * active_us)
            for n in assigned}


# ---------------------------------------------------------------------------
# packets and superframes


@dataclass(frozen=True)
class Packet:
    seq: int
    size_bits: int
    source: int
    destination: int
    kind: str  # data, ct_request, candidate_reply, superframe, ct_ack,
               # noct_request, noct_reply, data_ack

    def __post_init__(self):
        if self.size_bits <= 0:
            raise ValueError("size_bits must be positive")


@dataclass(frozen=True)
class Slot:
    kind: str  # free | ct_rdv | noct_rdv | control
    start_us: int
    duration_us: int
    participants: tuple = ()

    @property
    def end_us(self) -> int:
        return self.start_us + self.duration_us


@dataclass(frozen=True)
class Superframe:
    origin_us: int
    slots: tuple
    transmitter: int = None          # type: ignore[assignment]
    helpers: tuple = ()
    leader: int = None               # type: ignore[assignment]
    next_hop: int = None             # type: ignore[assignment]
    continued: bool = False          # rendezvous slots spill past one frame

    def __post_init__(self):
        ordered = sorted(self.slots, key=lambda s: s.start_us)
        for a, b in zip(ordered, ordered[1:]):
            if a.end_us > b.start_us:
                raise ValueError("superframe slots overlap")

    def rdv_slots(self):
        return [s for s in self.slots if s.kind == "ct_rdv"]


def compose_superframe(transmitter, elected, next_hop, packet_count,
                       now_us, slot_us, frame_us):
    """One control slot, then one CT rendezvous slot per pending packet.

    Leftover frame time becomes a free slot; if the rendezvous slots do
    not fit in a single frame the superframe simply continues into the
    next ones and is flagged ``continued``.
    """
    participants = (transmitter, *elected.helpers, next_hop)
    slots = []
    if packet_count > 0:
        slots.append(Slot("control", now_us, slot_us, participants))
        for i in range(packet_count):
            slots.append(Slot("ct_rdv", now_us + (i + 1) * slot_us, slot_us, participants))
    used = (packet_count + 1) * slot_us if packet_count > 0 else 0
    continued = used > frame_us
    if used < frame_us:
        slots.append(Slot("free", now_us + used, frame_us - used))
    return Superframe(origin_us=now_us, slots=tuple(slots),
                      transmitter=transmitter, helpers=elected.helpers,
                      leader=elected.leader, next_hop=next_hop,
                      continued=continued)


# ---------------------------------------------------------------------------
# node state machine


class Phase(Enum):
    SLEEPING = "Sleeping"
    IDLE_LISTENING = "IdleListening"
    AWAITING_CANDIDATES = "AwaitingCandidates"
    AWAITING_CT_ACK = "AwaitingCtAck"
    AWAITING_NOCT_REPLY = "AwaitingNoCtReply"
    CT_BROADCAST = "CtBroadcast"
    CT_COOPERATIVE = "CtCooperative"
    RECEIVING = "Receiving"
    TRANSMITTING = "Transmitting"


@dataclass
class MacState:
    node: int
    phase: Phase = Phase.SLEEPING
    pending_packets: list = field(default_factory=list)
    reservations: list = field(default_factory=list)  # (start_us, end_us, rdv_id)
    retries: int = 0
    timer_token: int = 0
    last_event_us: int = 0


def reserve(state: MacState, start_us: int, end_us: int, rdv_id: int) -> bool:
    """Book an interval iff it overlaps no existing reservation."""
    for s, e, _ in state.reservations:
        if start_us < e and s < end_us:
            return False
    state.reservations.append((start_us, end_us, rdv_id))
    return True


def reserve_noct(receiver: MacState, start_us: int, duration_us: int, rdv_id: int) -> bool:
    """Next-hop side of the no-CT handshake: accept iff the interval is free."""
    return reserve(receiver, start_us, start_us + duration_us, rdv_id)


def on_superframe(state: MacState, sf: Superframe, rdv_id: int):
    """Helper/next-hop reaction to a superframe announcement.

    Participants book wake-ups covering every rendezvous slot (temporary
    synchrony); exactly the leader answers with a ct_ack. Non-participants
    ignore it (the caller charges overhearing).
    """
    member = any(state.node in s.participants for s in sf.slots if s.kind == "ct_rdv")
    if not member:
        return state, False
    for s in sf.slots:
        if s.kind == "ct_rdv":
            reserve(state, s.start_us, s.end_us, rdv_id)
    return state, state.node == sf.leader


# (phase, event kind) -> (new phase or None, effect or None); the engine
# interprets effects. Anything not listed is an explicit recorded no-op.
_TRANSITIONS = {
    (Phase.SLEEPING, "wake"): (Phase.IDLE_LISTENING, None),
    (Phase.IDLE_LISTENING, "sleep"): (Phase.SLEEPING, None),
    (Phase.AWAITING_CANDIDATES, "candidate_reply"): (Phase.IDLE_LISTENING, "candidates"),
    (Phase.AWAITING_CANDIDATES, "timeout"): (Phase.IDLE_LISTENING, "retry_or_fallback"),
    (Phase.AWAITING_CT_ACK, "ct_ack"): (Phase.IDLE_LISTENING, "ct_confirmed"),
    (Phase.AWAITING_CT_ACK, "timeout"): (Phase.IDLE_LISTENING, "retry_or_fallback"),
    (Phase.AWAITING_NOCT_REPLY, "noct_reply"): (Phase.IDLE_LISTENING, "noct_reply"),
    (Phase.AWAITING_NOCT_REPLY, "timeout"): (Phase.IDLE_LISTENING, "retry_or_fail"),
    (Phase.IDLE_LISTENING, "slot_start"): (Phase.CT_BROADCAST, "ct_slot"),
    (Phase.CT_BROADCAST, "broadcast_done"): (Phase.CT_COOPERATIVE, "ct_coop"),
    (Phase.CT_COOPERATIVE, "coop_done"): (Phase.IDLE_LISTENING, None),
}


def step(state: MacState, event_kind: str, t_us: int = None, payload=None):
    """Total transition function; unknown combinations are recorded no-ops.

    Returns (state, effects) where effects is a list of (tag, payload)
    the caller acts on.
    """
    if t_us is not None:
        if t_us < state.last_event_us:
            raise ValueError("events must arrive in non-decreasing time order")
        state.last_event_us = t_us
    key = (state.phase, event_kind)
    if key not in _TRANSITIONS:
        return state, [("noop", f"{state.phase.value}/{event_kind}")]
    new_phase, effect = _TRANSITIONS[key]
    if new_phase is not None:
        state.phase = new_phase
    effects = [(effect, payload)] if effect is not None else []
    return state, effects
