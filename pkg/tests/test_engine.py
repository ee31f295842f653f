import json

import pytest

from oscmac.energy import rx_energy, tx_energy
from oscmac.engine import Simulator, run
from conftest import generated_doc, make_config, range_extension_doc, two_node_doc


def rows_for(rows, event=None, node=None):
    out = []
    for r in rows:
        if event is not None and r[3] != event:
            continue
        if node is not None and r[2] != node:
            continue
        out.append(r)
    return out


def detail(row):
    return json.loads(row[4])


# ---------------------------------------------------------------------------
# determinism


def test_same_seed_same_trace():
    cfg = make_config(generated_doc())
    m1, r1 = run(cfg, 5)
    m2, r2 = run(cfg, 5)
    assert r1 == r2
    assert m1.to_dict() == m2.to_dict()


def test_different_seed_different_jitter():
    cfg = make_config(generated_doc(jitter_ms=500.0))
    _, r1 = run(cfg, 1)
    _, r2 = run(cfg, 2)
    assert r1 != r2


# ---------------------------------------------------------------------------
# a hand-checkable two-node exchange


def test_two_node_noct_delivery_and_energy():
    cfg = make_config(two_node_doc(d=50.0, packets=1))
    metrics, rows = run(cfg, 0)
    assert metrics.packets_offered == 1
    assert metrics.packets_delivered == 1
    assert metrics.packets_failed == 0
    assert metrics.collisions == 0

    # sender: one 64-bit request plus one 800-bit data packet over 50 m,
    # and receptions of the reply and the ack
    p = cfg.radio
    sender = metrics.energy_by_category[1]
    assert sender["transmit"] == pytest.approx(
        tx_energy(64, 50.0, p) + tx_energy(800, 50.0, p), rel=1e-12)
    assert sender["receive"] == pytest.approx(2 * rx_energy(64, p), rel=1e-12)

    # receiver: reply and ack out, request and data in
    receiver = metrics.energy_by_category[0]
    assert receiver["transmit"] == pytest.approx(2 * tx_energy(64, 50.0, p), rel=1e-12)
    assert receiver["receive"] == pytest.approx(
        rx_energy(64, p) + rx_energy(800, p), rel=1e-12)

    assert len(rows_for(rows, event="delivered", node=0)) == 1


def test_zero_traffic_only_duty_cycles():
    doc = two_node_doc(packets=0)
    metrics, rows = run(make_config(doc), 0)
    assert metrics.packets_offered == 0
    assert metrics.packets_delivered == 0
    assert not rows_for(rows, event="tx")
    for cats in metrics.energy_by_category.values():
        assert cats.get("transmit", 0.0) == 0.0
        assert cats.get("receive", 0.0) == 0.0
        assert cats["idle_listen"] > 0.0
        assert cats["sleep"] > 0.0


# ---------------------------------------------------------------------------
# cooperative range extension


def test_ct_closes_link_noct_cannot():
    m_ct, _ = run(make_config(range_extension_doc(mode="ct")), 0)
    m_no, _ = run(make_config(range_extension_doc(mode="noct")), 0)
    assert m_ct.packets_delivered == m_ct.packets_offered == 3
    assert m_no.packets_delivered == 0
    assert m_no.packets_failed == m_no.packets_offered == 3


def test_ct_trace_shows_cooperative_slots():
    _, rows = run(make_config(range_extension_doc(mode="ct")), 0)
    coop = [r for r in rows_for(rows, event="tx") if detail(r)["coop"]]
    assert coop
    senders_by_rdv = {}
    for r in coop:
        senders_by_rdv.setdefault(detail(r)["rdv"], set()).add(r[2])
    assert any(len(s) >= 3 for s in senders_by_rdv.values())


# ---------------------------------------------------------------------------
# conservation and bookkeeping


@pytest.mark.parametrize("doc", [
    two_node_doc(packets=3),
    range_extension_doc(mode="ct"),
    generated_doc(),
])
def test_energy_conservation(doc):
    metrics, rows = run(make_config(doc), 4)
    for nid, initial in metrics.initial_by_node.items():
        consumed = sum(metrics.energy_by_category[nid].values())
        assert consumed + metrics.residual_by_node[nid] == pytest.approx(
            initial, abs=1e-9)
    assert metrics.events_processed == len(rows)


def test_packet_accounting_closes():
    metrics, _ = run(make_config(generated_doc()), 2)
    assert metrics.packets_offered == 3 * 4
    assert metrics.packets_delivered + metrics.packets_failed == metrics.packets_offered
    assert 0.0 <= metrics.delivery_ratio <= 1.0
    assert metrics.collision_losses <= metrics.packets_offered * (1 + 3)  # retries included


def test_battery_exhaustion_sets_lifetimes():
    doc = generated_doc(horizon_s=400.0)
    doc["sim"]["battery_j"] = 0.0005  # a fraction of a second of idle power
    metrics, rows = run(make_config(doc), 0)
    assert metrics.network_lifetime_first_death_s is not None
    assert metrics.network_lifetime_first_death_s < 400.0
    assert metrics.trn_death_time_s is not None
    died = {r[2] for r in rows_for(rows, event="node_died")}
    for nid in died:
        assert metrics.residual_by_node[nid] == 0.0
    assert metrics.energy_timeline


# ---------------------------------------------------------------------------
# no radio activity while dead or asleep


def scan_radio_rows(sim, rows):
    """Check every on-air row against schedules, reservations, deaths."""
    death = {r[2]: detail(r)["death_time_us"] for r in rows_for(rows, event="node_died")}
    reserved = {}
    for r in rows_for(rows, event="reserve"):
        d = detail(r)
        if d["accepted"]:
            reserved.setdefault(r[2], []).append((d["start_us"], d["end_us"]))
    tx_start = {}
    for r in rows_for(rows, event="tx"):
        rdv = detail(r)["rdv"]
        tx_start[rdv] = min(tx_start.get(rdv, r[0]), r[0])

    def awake(nid, t):
        if sim.nodes[nid].schedule.is_awake(t):
            return True
        return any(s <= t < e for s, e in reserved.get(nid, ()))

    checked = 0
    for r in rows:
        event = r[3]
        if event == "tx":
            t = r[0]
        elif event in ("rx", "rx_corrupt", "overhear"):
            rdv = detail(r).get("rdv")
            if rdv is None or rdv not in tx_start:
                continue  # out-of-band exchange, not a radio slot
            t = tx_start[rdv]
        else:
            continue
        nid = r[2]
        assert nid not in death or t <= death[nid], (
            f"node {nid} active at {t} after dying at {death[nid]}")
        assert awake(nid, t), f"node {nid} {event} at {t} while asleep"
        checked += 1
    return checked


@pytest.mark.parametrize("doc", [
    range_extension_doc(mode="ct"),
    generated_doc(),
])
def test_no_radio_activity_while_asleep_or_dead(doc):
    cfg = make_config(doc)
    sim = Simulator(cfg, 3)
    sim.run()
    assert scan_radio_rows(sim, sim.rows) > 0


# ---------------------------------------------------------------------------
# mode selection


def test_forced_modes_recorded_in_trace():
    for mode in ("ct", "noct"):
        _, rows = run(make_config(range_extension_doc(mode=mode)), 0)
        modes = {detail(r)["mode"] for r in rows_for(rows, event="mode_selected")}
        assert modes == {mode}


def test_auto_mode_prefers_ct_for_unreachable_hop():
    _, rows = run(make_config(range_extension_doc(mode="auto")), 0)
    modes = {detail(r)["mode"] for r in rows_for(rows, event="mode_selected")}
    assert "ct" in modes
