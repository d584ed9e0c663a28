/** Builders for synthetic PPM frames, WAV tracks, and toy corpora. */
import * as fs from "fs";
import * as path from "path";

export function encodePpm(
  width: number,
  height: number,
  rgbAt: (x: number, y: number) => [number, number, number]
): Buffer {
  const header = Buffer.from(`P6\n${width} ${height}\n255\n`, "ascii");
  const pixels = Buffer.alloc(3 * width * height);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const [r, g, b] = rgbAt(x, y);
      const off = 3 * (y * width + x);
      pixels[off] = r;
      pixels[off + 1] = g;
      pixels[off + 2] = b;
    }
  }
  return Buffer.concat([header, pixels]);
}

export function encodeWav(
  sampleRate: number,
  samples: Float32Array,
  channels = 1
): Buffer {
  const dataBytes = 2 * samples.length * channels;
  const buf = Buffer.alloc(44 + dataBytes);
  buf.write("RIFF", 0, "ascii");
  buf.writeUInt32LE(36 + dataBytes, 4);
  buf.write("WAVE", 8, "ascii");
  buf.write("fmt ", 12, "ascii");
  buf.writeUInt32LE(16, 16);
  buf.writeUInt16LE(1, 20); // PCM
  buf.writeUInt16LE(channels, 22);
  buf.writeUInt32LE(sampleRate, 24);
  buf.writeUInt32LE(sampleRate * 2 * channels, 28);
  buf.writeUInt16LE(2 * channels, 32);
  buf.writeUInt16LE(16, 34);
  buf.write("data", 36, "ascii");
  buf.writeUInt32LE(dataBytes, 40);
  for (let i = 0; i < samples.length; i++) {
    const v = Math.max(-1, Math.min(1, samples[i]));
    for (let c = 0; c < channels; c++) {
      buf.writeInt16LE(Math.round(v * 32767), 44 + 2 * (i * channels + c));
    }
  }
  return buf;
}

export function tone(
  sampleRate: number,
  seconds: number,
  hz: number,
  amplitude = 0.5
): Float32Array {
  const out = new Float32Array(Math.round(sampleRate * seconds));
  for (let i = 0; i < out.length; i++) {
    out[i] = amplitude * Math.sin((2 * Math.PI * hz * i) / sampleRate);
  }
  return out;
}

export interface ToyVideoSpec {
  id: string;
  nFrames: number;
  fps: number;
  /** base color per frame index */
  color: (frame: number) => [number, number, number];
  toneHz: number;
  split: "train" | "val" | "test";
  category?: string;
  ratings?: number[];
  ratingScale?: { min: number; max: number; veryGood: number };
}

export function writeToyVideo(
  corpusDir: string,
  spec: ToyVideoSpec,
  sampleRate = 8000
): void {
  const dir = path.join(corpusDir, spec.id);
  fs.mkdirSync(dir, { recursive: true });
  for (let f = 0; f < spec.nFrames; f++) {
    const [r, g, b] = spec.color(f);
    const frame = encodePpm(4, 4, (x, y) => [
      Math.min(255, r + 7 * x),
      Math.min(255, g + 7 * y),
      b,
    ]);
    const name = `frame_${String(f).padStart(4, "0")}.ppm`;
    fs.writeFileSync(path.join(dir, name), frame);
  }
  const seconds = spec.nFrames / spec.fps;
  fs.writeFileSync(
    path.join(dir, "audio.wav"),
    encodeWav(sampleRate, tone(sampleRate, seconds, spec.toneHz))
  );
  const meta: Record<string, unknown> = { fps: spec.fps, split: spec.split };
  if (spec.category !== undefined) meta.category = spec.category;
  if (spec.ratings !== undefined) {
    meta.ratings = spec.ratings;
    meta.ratingScale = spec.ratingScale ?? { min: 1, max: 3, veryGood: 3 };
  }
  fs.writeFileSync(path.join(dir, "meta.json"), JSON.stringify(meta));
}
