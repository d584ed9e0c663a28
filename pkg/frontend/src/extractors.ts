/**
 * Feature extractors and the extraction spec.
 *
 * Only the lightweight "toy" backbones run here; the ids of the full
 * pretrained backbones are reserved and fail fast with a clear error, since
 * their weights are not bundled.
 */
import { z } from "zod";
import { Frame } from "./media";

export const ExtractorSpecSchema = z.object({
  visualBackbone: z.string().default("toy-histogram"),
  audioBackbone: z.string().default("toy-spectral"),
  /** frames per clip; clips are non-overlapping and aligned across modalities */
  clipLengthFrames: z.number().int().positive().default(4),
  /** audio is resampled to this rate before windowing */
  targetSampleRate: z.number().int().positive().default(8000),
});

export type ExtractorSpec = z.infer<typeof ExtractorSpecSchema>;

export function parseSpec(raw: unknown): ExtractorSpec {
  return ExtractorSpecSchema.parse(raw ?? {});
}

const RESERVED_BACKBONES = new Set([
  "3d-resnet34",
  "slowfast",
  "slowfast+clip",
  "clip",
  "pann",
]);

const HIST_BINS = 8;
export const TOY_VISUAL_DIM = 3 + 3 + HIST_BINS; // mean RGB, std RGB, gray histogram
const AUDIO_BANDS = 6;
export const TOY_AUDIO_DIM = 2 + AUDIO_BANDS; // rms, zcr, band energies

export function visualDim(backbone: string): number {
  if (backbone === "toy-histogram") return TOY_VISUAL_DIM;
  if (RESERVED_BACKBONES.has(backbone)) {
    throw new Error(
      `visual backbone "${backbone}" requires pretrained weights that are not available; use "toy-histogram"`
    );
  }
  throw new Error(`unknown visual backbone "${backbone}"`);
}

export function audioDim(backbone: string): number {
  if (backbone === "toy-spectral") return TOY_AUDIO_DIM;
  if (RESERVED_BACKBONES.has(backbone)) {
    throw new Error(
      `audio backbone "${backbone}" requires pretrained weights that are not available; use "toy-spectral"`
    );
  }
  throw new Error(`unknown audio backbone "${backbone}"`);
}

/**
 * Clip-level visual features: per-channel mean and standard deviation plus
 * a normalized grayscale histogram, aggregated over all frames of the clip.
 */
export function visualFeatures(frames: Frame[]): Float32Array {
  if (frames.length === 0) throw new Error("clip has no frames");
  const sums = [0, 0, 0];
  const sqSums = [0, 0, 0];
  const hist = new Array(HIST_BINS).fill(0);
  let pixelCount = 0;
  for (const frame of frames) {
    const px = frame.pixels;
    for (let i = 0; i < px.length; i += 3) {
      for (let c = 0; c < 3; c++) {
        const v = px[i + c] / 255;
        sums[c] += v;
        sqSums[c] += v * v;
      }
      const gray = (px[i] + px[i + 1] + px[i + 2]) / (3 * 255);
      hist[Math.min(HIST_BINS - 1, Math.floor(gray * HIST_BINS))]++;
      pixelCount++;
    }
  }
  const out = new Float32Array(TOY_VISUAL_DIM);
  for (let c = 0; c < 3; c++) {
    const mean = sums[c] / pixelCount;
    out[c] = mean;
    out[3 + c] = Math.sqrt(Math.max(0, sqSums[c] / pixelCount - mean * mean));
  }
  for (let b = 0; b < HIST_BINS; b++) {
    out[6 + b] = hist[b] / pixelCount;
  }
  return out;
}

/**
 * Clip-level audio features: RMS energy, zero-crossing rate, and the energy
 * of six log-spaced frequency bands from a direct DFT over (at most) the
 * first 2048 samples of the window. Silent windows yield all zeros.
 */
export function audioFeatures(
  samples: Float32Array,
  sampleRate: number
): Float32Array {
  const out = new Float32Array(TOY_AUDIO_DIM);
  const n = samples.length;
  if (n === 0) return out;
  let energy = 0;
  let crossings = 0;
  for (let i = 0; i < n; i++) {
    energy += samples[i] * samples[i];
    if (i > 0 && samples[i - 1] * samples[i] < 0) crossings++;
  }
  out[0] = Math.sqrt(energy / n);
  out[1] = n > 1 ? crossings / (n - 1) : 0;

  const m = Math.min(n, 2048);
  const nyquist = sampleRate / 2;
  // log-spaced band edges from 50 Hz up to Nyquist
  const fLow = Math.min(50, nyquist / 2);
  for (let b = 0; b < AUDIO_BANDS; b++) {
    const lo = fLow * Math.pow(nyquist / fLow, b / AUDIO_BANDS);
    const hi = fLow * Math.pow(nyquist / fLow, (b + 1) / AUDIO_BANDS);
    // DFT bins covering [lo, hi)
    let bandEnergy = 0;
    const kLo = Math.max(1, Math.ceil((lo * m) / sampleRate));
    const kHi = Math.max(kLo, Math.floor((hi * m) / sampleRate));
    for (let k = kLo; k <= kHi && k < m / 2; k++) {
      let re = 0;
      let im = 0;
      const w = (-2 * Math.PI * k) / m;
      for (let i = 0; i < m; i++) {
        re += samples[i] * Math.cos(w * i);
        im += samples[i] * Math.sin(w * i);
      }
      bandEnergy += (re * re + im * im) / (m * m);
    }
    out[2 + b] = Math.log1p(bandEnergy);
  }
  return out;
}
