import json

import pytest

from gazerelay.frames import LayoutMode, frame_to_dict
from gazerelay.protocol import make_gaze
from gazerelay.recording import (
    SCHEMA,
    EventLogWriter,
    LogError,
    config_hash,
    read_log,
    replay,
    replay_file,
)
from gazerelay.session import ServerConfig, SessionCore


def write_demo_log(path, n_ticks=20):
    """Three participants, one steady edge, one audio blip, one leave."""
    config = ServerConfig()
    with EventLogWriter(str(path), config) as writer:
        sess = SessionCore(config, recorder=writer)
        for _ in range(3):
            sess.join()
        for k in range(n_ticks):
            if k == 2:
                sess.ingest_gaze("u1", make_gaze(1, "u1", "u2", sess.now_ms()))
            if k == 8:
                sess.ingest_audio(
                    "u2", {"kind": "audio", "seq": 1, "source": "u2", "level": 0.9}
                )
            if k == 12:
                sess.leave("u3")
            sess.run_tick()
    return config


def test_log_round_trips_byte_exact(tmp_path):
    path = tmp_path / "session.ndjson"
    write_demo_log(path)
    header, records = read_log(str(path))
    assert header["schema"] == SCHEMA
    assert header["config_hash"] == config_hash(header["config"])
    raw_lines = path.read_text().splitlines()
    assert raw_lines[0] == json.dumps(header, separators=(",", ":"))
    assert raw_lines[1:] == [r.to_line() for r in records]
    kinds = [r.kind for r in records]
    assert kinds.count("join") == 3
    assert kinds.count("tick") == 20
    assert kinds.count("leave") == 1


def test_truncated_log_fails_at_the_partial_line(tmp_path):
    path = tmp_path / "session.ndjson"
    write_demo_log(path)
    raw = path.read_text()
    n_lines = raw.count("\n")
    path.write_text(raw[:-10])  # chop mid-record, losing the final newline
    with pytest.raises(LogError) as err:
        read_log(str(path))
    assert err.value.line_no == n_lines
    assert "truncated" in err.value.reason


def test_corrupt_line_reports_its_position(tmp_path):
    path = tmp_path / "session.ndjson"
    write_demo_log(path)
    lines = path.read_text().splitlines()
    lines[3] = '{"t": broken'
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(LogError) as err:
        read_log(str(path))
    assert err.value.line_no == 4
    assert "JSON" in err.value.reason


def header_line(config):
    fp = config.engine_fingerprint()
    return json.dumps(
        {"schema": SCHEMA, "config": fp, "config_hash": config_hash(fp)},
        separators=(",", ":"),
    )


def test_out_of_order_timestamps_rejected_on_read(tmp_path):
    path = tmp_path / "bad.ndjson"
    path.write_text(
        "\n".join([
            header_line(ServerConfig()),
            '{"t":32.0,"kind":"tick","payload":{"tick":2}}',
            '{"t":16.0,"kind":"tick","payload":{"tick":1}}',
        ]) + "\n"
    )
    with pytest.raises(LogError) as err:
        read_log(str(path))
    assert err.value.line_no == 3 and "regression" in err.value.reason


def test_unknown_kind_and_missing_fields_rejected(tmp_path):
    path = tmp_path / "bad.ndjson"
    path.write_text(
        header_line(ServerConfig()) + "\n"
        + '{"t":0.0,"kind":"boom","payload":{}}' + "\n"
    )
    with pytest.raises(LogError, match="unknown event kind"):
        read_log(str(path))
    path.write_text(
        header_line(ServerConfig()) + "\n" + '{"t":0.0,"kind":"tick"}' + "\n"
    )
    with pytest.raises(LogError, match="missing"):
        read_log(str(path))


def test_header_validation(tmp_path):
    path = tmp_path / "bad.ndjson"
    path.write_text('{"schema":"something-else/9"}\n')
    with pytest.raises(LogError) as err:
        read_log(str(path))
    assert err.value.line_no == 1
    fp = ServerConfig().engine_fingerprint()
    path.write_text(
        json.dumps({"schema": SCHEMA, "config": fp, "config_hash": "0" * 16}) + "\n"
    )
    with pytest.raises(LogError, match="hash mismatch"):
        read_log(str(path))
    path.write_text("")
    with pytest.raises(LogError, match="empty"):
        read_log(str(path))


def test_writer_rejects_regression_and_unknown_kind(tmp_path):
    path = tmp_path / "w.ndjson"
    with EventLogWriter(str(path), ServerConfig()) as writer:
        writer.append(16.0, "tick", {"tick": 1})
        with pytest.raises(ValueError, match="regression"):
            writer.append(15.0, "tick", {"tick": 2})
        with pytest.raises(ValueError, match="unknown event kind"):
            writer.append(17.0, "boom", {})
        writer.append(16.0, "tick", {"tick": 2})  # equal timestamps are fine


def test_header_only_log_replays_to_nothing(tmp_path):
    path = tmp_path / "empty.ndjson"
    EventLogWriter(str(path), ServerConfig()).close()
    assert replay_file(str(path), "u1") == []


def test_replay_for_absent_viewer_is_empty(tmp_path):
    path = tmp_path / "session.ndjson"
    write_demo_log(path)
    assert replay_file(str(path), "zz") == []


def test_replay_is_deterministic(tmp_path):
    path = tmp_path / "session.ndjson"
    write_demo_log(path)

    def run():
        return [
            (rf.tick, json.dumps(frame_to_dict(rf.frame)))
            for rf in replay_file(str(path), "u3")
        ]

    first = run()
    assert first == run()
    assert len(first) == 12  # u3's leave precedes tick 12, so ticks 0..11


def test_replay_shows_the_recorded_edge(tmp_path):
    path = tmp_path / "session.ndjson"
    write_demo_log(path)
    frames = replay_file(str(path), "u3")
    by_tick = {rf.tick: rf.frame for rf in frames}
    assert not by_tick[1].arrows  # edge lands during tick 2
    arrows = by_tick[6].arrows
    assert len(arrows) == 1
    assert (arrows[0].source, arrows[0].target) == ("u1", "u2")
    assert arrows[0].opacity > 0.0
    mic = {m.owner: m.on for m in by_tick[9].mic_icons}
    assert mic["u2"]


def test_replay_viewer_sees_departures(tmp_path):
    path = tmp_path / "session.ndjson"
    write_demo_log(path)
    frames = replay_file(str(path), "u1")
    by_tick = {rf.tick: rf.frame for rf in frames}
    assert by_tick[11].tiles.owners == ("u1", "u2", "u3")
    assert by_tick[12].tiles.owners == ("u1", "u2")
    assert by_tick[19].tiles.owners == ("u1", "u2")


def test_replay_mode_override(tmp_path):
    path = tmp_path / "session.ndjson"
    write_demo_log(path)
    frames = replay_file(str(path), "u3", mode=LayoutMode.PERSPECTIVE)
    assert frames
    for rf in frames:
        assert rf.frame.mode == "perspective"
        assert not rf.frame.arrows
    assert any(p.yaw_deg != 0.0 for rf in frames for p in rf.frame.poses)


def test_replay_streams_from_records(tmp_path):
    path = tmp_path / "session.ndjson"
    write_demo_log(path)
    header, records = read_log(str(path))
    streamed = list(replay(header, iter(records), "u2"))
    assert len(streamed) == len(replay_file(str(path), "u2"))
