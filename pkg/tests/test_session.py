import numpy as np
import pytest

from gazerelay.protocol import encode, make_gaze, make_observe, make_signal
from gazerelay.session import ServerConfig, SessionCore


def core(**kw):
    return SessionCore(ServerConfig(**kw))


def join_n(sess, n, role="participant"):
    return [sess.join(role).client_id for _ in range(n)]


def gaze(sess, sender, seq, target, at_ms=None):
    sess.ingest_gaze(
        sender, make_gaze(seq, sender, target, 0.0), at_ms=at_ms
    )


def test_first_join_gets_welcome_only():
    sess = core()
    res = sess.join()
    assert res.accepted and res.client_id == "u1" and res.role == "participant"
    assert [kind for _, kind in ((r, m["kind"]) for r, m in res.outbox)] == ["welcome"]
    recipient, welcome = res.outbox[0]
    assert recipient == "u1"
    assert welcome == {"kind": "welcome", "id": "u1", "members": ["u1"], "tick_ms": 16}


def test_fifth_join_fans_out_to_the_other_four():
    sess = core()
    join_n(sess, 4)
    res = sess.join()
    assert res.client_id == "u5"
    welcome = res.outbox[0][1]
    assert welcome["members"] == ["u1", "u2", "u3", "u4", "u5"]
    peer_msgs = res.outbox[1:]
    assert [r for r, _ in peer_msgs] == ["u1", "u2", "u3", "u4"]
    assert all(m == {"kind": "peer-joined", "id": "u5"} for _, m in peer_msgs)


def test_capacity_refusal():
    sess = core(capacity=2)
    join_n(sess, 2)
    res = sess.join()
    assert not res.accepted and res.client_id is None
    assert res.refusal["kind"] == "error" and res.refusal["code"] == "capacity"
    assert res.outbox == []
    assert len(sess.members) == 2


def test_second_host_is_downgraded():
    sess = core()
    first = sess.join("host")
    assert first.role == "host" and sess.host == first.client_id
    second = sess.join("host")
    assert second.role == "participant"
    kinds = [m["kind"] for _, m in second.outbox]
    assert kinds[0] == "error" and second.outbox[0][1]["code"] == "host-taken"
    assert kinds[1] == "welcome"
    assert sess.host == first.client_id


def test_client_ids_are_never_reused():
    sess = core()
    join_n(sess, 2)
    sess.leave("u2")
    assert sess.join().client_id == "u3"


def test_leave_fans_out_and_prunes_edges():
    sess = core()
    join_n(sess, 3)
    gaze(sess, "u1", 1, "u2")
    gaze(sess, "u3", 1, "u2")
    gaze(sess, "u2", 1, "u3")
    out = sess.leave("u2")
    assert sorted(r for r, _ in out) == ["u1", "u3"]
    assert all(m == {"kind": "peer-left", "id": "u2"} for _, m in out)
    assert sess.edges == {}  # u2 as source and as target both gone
    assert sess.leave("u2") == []


def test_signal_relays_verbatim_in_order():
    sess = core()
    join_n(sess, 2)
    sent = []
    for i in range(100):
        msg = make_signal("u1", "u2", f"blob-{i}")
        out = sess.signal("u1", msg)
        assert out == [("u2", msg)]
        assert out[0][1] is msg  # relayed object, never re-built
        sent.append(encode(out[0][1]))
    assert sent == [encode(make_signal("u1", "u2", f"blob-{i}")) for i in range(100)]


def test_signal_to_unknown_recipient():
    sess = core()
    join_n(sess, 2)
    out = sess.signal("u1", make_signal("u1", "zz", "x"))
    assert out[0][0] == "u1" and out[0][1]["code"] == "unknown-recipient"


def test_signal_with_forged_sender():
    sess = core()
    join_n(sess, 2)
    out = sess.signal("u2", make_signal("u1", "u2", "x"))
    assert out[0][0] == "u2" and out[0][1]["code"] == "bad-sender"
    assert sess.anomalies == 1


def test_gaze_updates_edge_map():
    sess = core()
    join_n(sess, 3)
    gaze(sess, "u1", 1, "u2")
    assert sess.edges == {"u1": "u2"}
    gaze(sess, "u1", 2, "u3")
    assert sess.edges == {"u1": "u3"}
    gaze(sess, "u1", 3, None)
    assert sess.edges == {}
    assert sess.anomalies == 0 and sess.stale_dropped == 0


def test_stale_gaze_dropped():
    sess = core()
    join_n(sess, 3)
    gaze(sess, "u1", 5, "u2")
    gaze(sess, "u1", 5, "u3")
    gaze(sess, "u1", 4, "u3")
    assert sess.edges == {"u1": "u2"}
    assert sess.stale_dropped == 2


def test_gaze_fold_matches_independent_replay():
    # random arrival interleavings with duplicated/reordered seqs must fold
    # to last-fresh-wins per sender
    rng = np.random.default_rng(13)
    sess = core()
    join_n(sess, 4)
    senders = ["u1", "u2", "u3", "u4"]
    targets = [None, "u1", "u2", "u3", "u4"]
    applied_seq = {s: -1 for s in senders}
    want_edges = {}
    for _ in range(500):
        s = senders[int(rng.integers(0, 4))]
        seq = int(rng.integers(0, 60))
        t = targets[int(rng.integers(0, 5))]
        gaze(sess, s, seq, t)
        if seq > applied_seq[s]:
            applied_seq[s] = seq
            eff = None if t == s else t
            if eff is None:
                want_edges.pop(s, None)
            else:
                want_edges[s] = eff
    assert sess.edges == want_edges


def test_self_gaze_is_no_edge():
    sess = core()
    join_n(sess, 2)
    gaze(sess, "u1", 1, "u2")
    gaze(sess, "u1", 2, "u1")
    assert sess.edges == {}
    assert sess.anomalies == 0


def test_gaze_to_unknown_target_is_anomalous():
    sess = core()
    join_n(sess, 2)
    gaze(sess, "u1", 1, "zz")
    assert sess.edges == {} and sess.anomalies == 1


def test_forged_gaze_source_is_anomalous():
    sess = core()
    join_n(sess, 2)
    sess.ingest_gaze("u2", make_gaze(1, "u1", None, 0.0))
    assert sess.anomalies == 1


def test_audio_levels_fold_by_seq():
    sess = core()
    join_n(sess, 2)
    sess.ingest_audio("u1", {"kind": "audio", "seq": 1, "source": "u1", "level": 0.8})
    sess.ingest_audio("u1", {"kind": "audio", "seq": 1, "source": "u1", "level": 0.1})
    assert sess.audio == {"u1": 0.8}
    assert sess.stale_dropped == 1


def test_host_state_is_isolated():
    sess = core()
    host = sess.join("host").client_id
    join_n(sess, 2)
    assert sess.participants() == ["u2", "u3"]
    gaze(sess, host, 1, "u2")
    sess.ingest_audio(host, {"kind": "audio", "seq": 1, "source": host, "level": 1.0})
    assert sess.edges == {} and sess.audio == {}
    assert sess.anomalies == 2
    # the host still receives the tick broadcast
    out = sess.run_tick()
    assert host in [r for r, _ in out]


def test_tick_broadcast_is_one_shared_message():
    sess = core()
    join_n(sess, 3)
    gaze(sess, "u3", 1, "u1")
    gaze(sess, "u2", 1, "u3")
    out = sess.run_tick()
    states = [m for _, m in out if m["kind"] == "state"]
    assert len(states) == 3
    assert all(s is states[0] for s in states)  # encoded once by the transport
    assert states[0]["tick"] == 0
    # edge order follows join order, not arrival order
    assert states[0]["edges"] == [
        {"source": "u2", "target": "u3"},
        {"source": "u3", "target": "u1"},
    ]
    assert sess.tick == 1 and sess.now_ms() == 16.0


def test_observe_requires_host():
    sess = core()
    join_n(sess, 2)
    out = sess.observe("u1", make_observe("u2"))
    assert out[0][1]["code"] == "not-host"
    assert sess.observed is None


def test_observe_unknown_target():
    sess = core()
    host = sess.join("host").client_id
    join_n(sess, 1)
    out = sess.observe(host, make_observe("zz"))
    assert out[0][1]["code"] == "unknown-target"
    out = sess.observe(host, make_observe(host))
    assert out[0][1]["code"] == "unknown-target"  # the host has no view


def test_observe_streams_snapshots_to_host():
    sess = core()
    host = sess.join("host").client_id
    join_n(sess, 2)
    assert sess.observe(host, make_observe("u2")) == []
    out = sess.run_tick()
    snaps = [(r, m) for r, m in out if m["kind"] == "snapshot"]
    assert len(snaps) == 1
    recipient, snap = snaps[0]
    assert recipient == host
    assert snap["viewer"] == "u2" and snap["tick"] == 0
    assert snap["frame"]["viewer"] == "u2"
    # observe null stops the stream
    assert sess.observe(host, make_observe(None)) == []
    out = sess.run_tick()
    assert not any(m["kind"] == "snapshot" for _, m in out)


def test_no_snapshot_until_viewer_has_a_layout():
    sess = core()
    host = sess.join("host").client_id
    join_n(sess, 1)
    sess.observe(host, make_observe("u2"))
    out = sess.run_tick()
    assert not any(m["kind"] == "snapshot" for _, m in out)
    join_n(sess, 1)  # second participant makes a 2-tile layout possible
    out = sess.run_tick()
    assert any(m["kind"] == "snapshot" for _, m in out)


def test_eviction_after_miss_threshold():
    sess = core(miss_threshold=3)
    join_n(sess, 3)
    assert sess.mark_undeliverable("u2") == []
    assert sess.mark_undeliverable("u2") == []
    out = sess.mark_undeliverable("u2")
    assert sorted(r for r, _ in out) == ["u1", "u3"]
    assert "u2" not in sess.members


def test_delivery_resets_miss_count():
    sess = core(miss_threshold=3)
    join_n(sess, 2)
    sess.mark_undeliverable("u2")
    sess.mark_undeliverable("u2")
    sess.mark_delivered("u2")
    sess.mark_undeliverable("u2")
    assert "u2" in sess.members


def test_config_fingerprint_round_trip():
    config = ServerConfig(tick_ms=20, capacity=6)
    restored = ServerConfig.from_engine_fingerprint(config.engine_fingerprint())
    assert restored.tick_ms == 20
    assert restored.mode == config.mode
    assert restored.layout == config.layout
    assert restored.render == config.render
