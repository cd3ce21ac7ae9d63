import { describe, expect, it } from "vitest";
import {
  decode,
  encode,
  makeAudio,
  makeGaze,
  makeJoin,
  makeObserve,
  makeSignal,
  ProtocolError,
  type Msg,
} from "../src/protocol.js";

// wire strings as the relay server emits them, key order included
const GOLDEN: [Msg, string][] = [
  [makeJoin("demo"), '{"kind":"join","session":"demo","role":"participant"}'],
  [makeJoin("demo", "host"), '{"kind":"join","session":"demo","role":"host"}'],
  [
    { kind: "welcome", id: "u3", members: ["u1", "u2", "u3"], tick_ms: 16 },
    '{"kind":"welcome","id":"u3","members":["u1","u2","u3"],"tick_ms":16}',
  ],
  [{ kind: "peer-joined", id: "u4" }, '{"kind":"peer-joined","id":"u4"}'],
  [{ kind: "peer-left", id: "u2" }, '{"kind":"peer-left","id":"u2"}'],
  [
    makeSignal("u1", "u2", "offer-sdp-blob"),
    '{"kind":"signal","from":"u1","to":"u2","payload":"offer-sdp-blob"}',
  ],
  [
    makeGaze(7, "u1", "u2", 112),
    '{"kind":"gaze","seq":7,"source":"u1","target":"u2","t":112}',
  ],
  [
    makeGaze(8, "u1", null, 128),
    '{"kind":"gaze","seq":8,"source":"u1","target":null,"t":128}',
  ],
  [
    makeAudio(3, "u2", 0.5),
    '{"kind":"audio","seq":3,"source":"u2","level":0.5}',
  ],
  [
    {
      kind: "state",
      tick: 42,
      edges: [
        { source: "u1", target: "u2" },
        { source: "u3", target: null },
      ],
      audio: [{ id: "u1", level: 0.25 }],
    },
    '{"kind":"state","tick":42,"edges":[{"source":"u1","target":"u2"},' +
      '{"source":"u3","target":null}],"audio":[{"id":"u1","level":0.25}]}',
  ],
  [makeObserve("u2"), '{"kind":"observe","target":"u2"}'],
  [makeObserve(null), '{"kind":"observe","target":null}'],
  [
    { kind: "error", code: "capacity", message: "session full" },
    '{"kind":"error","code":"capacity","message":"session full"}',
  ],
];

describe("wire format", () => {
  it.each(GOLDEN.map(([msg, wire]) => [msg.kind, msg, wire] as const))(
    "round-trips %s",
    (_kind, msg, wire) => {
      expect(encode(msg)).toBe(wire);
      expect(decode(wire)).toEqual(msg);
    },
  );

  it("accepts float timestamps from the server", () => {
    const msg = decode('{"kind":"gaze","seq":7,"source":"u1","target":"u2","t":112.0}');
    expect(msg).toEqual(makeGaze(7, "u1", "u2", 112));
  });

  it("rejects garbage and structural errors", () => {
    expect(() => decode("{nope")).toThrow(ProtocolError);
    expect(() => decode("[1,2]")).toThrow(ProtocolError);
    expect(() => decode('{"kind":"teleport"}')).toThrow(/unknown message kind/);
    expect(() => decode('{"kind":"join","session":"x"}')).toThrow(/missing field role/);
    expect(() => decode('{"kind":"join","session":7,"role":"host"}')).toThrow(
      /must be string/,
    );
    expect(() =>
      decode('{"kind":"join","session":"x","role":"admin"}'),
    ).toThrow(/unknown role/);
    expect(() =>
      decode('{"kind":"audio","seq":1,"source":"u1","level":1.5}'),
    ).toThrow(/outside \[0, 1\]/);
    expect(() =>
      decode('{"kind":"gaze","seq":1,"source":"u1","target":7,"t":0}'),
    ).toThrow(/string or null/);
  });
});
