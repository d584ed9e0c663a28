import { describe, expect, it } from "vitest";
import { parsePpm, parseWav, resample } from "../src/media";
import { encodePpm, encodeWav } from "./helpers";

describe("PPM parsing", () => {
  it("parses pixel data in row-major RGB order", () => {
    const buf = encodePpm(2, 1, (x) => (x === 0 ? [255, 0, 0] : [0, 0, 255]));
    const frame = parsePpm(buf);
    expect(frame.width).toBe(2);
    expect(frame.height).toBe(1);
    expect([...frame.pixels]).toEqual([255, 0, 0, 0, 0, 255]);
  });

  it("skips header comments", () => {
    const buf = Buffer.concat([
      Buffer.from("P6\n# a comment\n1 1\n255\n", "ascii"),
      Buffer.from([10, 20, 30]),
    ]);
    expect([...parsePpm(buf).pixels]).toEqual([10, 20, 30]);
  });

  it("rejects non-P6 data", () => {
    expect(() => parsePpm(Buffer.from("P3\n1 1\n255\n0 0 0", "ascii"))).toThrow(
      /P6/
    );
  });

  it("rejects short payloads", () => {
    const buf = encodePpm(2, 2, () => [1, 2, 3]).subarray(0, 14);
    expect(() => parsePpm(buf)).toThrow(/too short/);
  });
});

describe("WAV parsing", () => {
  it("decodes mono PCM16 to [-1, 1] floats", () => {
    const samples = new Float32Array([0, 0.5, -0.5, 1]);
    const track = parseWav(encodeWav(8000, samples));
    expect(track.sampleRate).toBe(8000);
    expect(track.samples.length).toBe(4);
    expect(track.samples[1]).toBeCloseTo(0.5, 3);
    expect(track.samples[2]).toBeCloseTo(-0.5, 3);
  });

  it("averages stereo channels", () => {
    const samples = new Float32Array([0.5, -0.25]);
    const track = parseWav(encodeWav(8000, samples, 2));
    expect(track.samples.length).toBe(2);
    expect(track.samples[0]).toBeCloseTo(0.5, 3);
  });

  it("rejects non-RIFF data", () => {
    expect(() => parseWav(Buffer.alloc(64))).toThrow(/RIFF/);
  });
});

describe("resampling", () => {
  it("is the identity at matching rates", () => {
    const track = { sampleRate: 8000, samples: new Float32Array([1, 2, 3]) };
    expect(resample(track, 8000).samples).toBe(track.samples);
  });

  it("halves the sample count when downsampling 2x", () => {
    const track = { sampleRate: 8000, samples: new Float32Array(800) };
    expect(resample(track, 4000).samples.length).toBe(400);
  });

  it("preserves a constant signal", () => {
    const track = {
      sampleRate: 6000,
      samples: new Float32Array(600).fill(0.25),
    };
    const out = resample(track, 8000);
    for (const v of out.samples) expect(v).toBeCloseTo(0.25, 6);
  });
});
