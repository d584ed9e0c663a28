/**
 * Export a directory of raw toy videos into an AVHF dataset root.
 *
 * Corpus layout: one subdirectory per video containing numbered PPM frames,
 * an optional audio.wav, and a meta.json:
 *
 *   { "fps": 8, "split": "train", "category": "guitar",
 *     "ratings": [3, 1, 2, ...],                 // one per clip, optional
 *     "ratingScale": { "min": 1, "max": 3, "veryGood": 3 } }
 *
 * Ordinal ratings are mapped linearly onto [0, 1] and the mapped "very good"
 * cutoff is recorded in the manifest so downstream binarization reproduces
 * the top-rating rule. Videos that cannot be decoded are skipped with a log
 * line rather than aborting the export.
 */
import * as fs from "fs";
import * as path from "path";
import { z } from "zod";
import {
  Manifest,
  ManifestVideo,
  Matrix,
  writeAvhf,
  writeManifest,
} from "./avhf";
import {
  ExtractorSpec,
  audioDim,
  audioFeatures,
  visualDim,
  visualFeatures,
} from "./extractors";
import { Frame, parsePpm, parseWav, resample } from "./media";

const VideoMetaSchema = z.object({
  fps: z.number().positive(),
  split: z.enum(["train", "val", "test"]).default("train"),
  category: z.string().optional(),
  ratings: z.array(z.number()).optional(),
  ratingScale: z
    .object({
      min: z.number(),
      max: z.number(),
      veryGood: z.number(),
    })
    .optional(),
});

export type VideoMeta = z.infer<typeof VideoMetaSchema>;

export interface ExportResult {
  root: string;
  exported: string[];
  skipped: { id: string; reason: string }[];
}

interface DecodedVideo {
  id: string;
  meta: VideoMeta;
  frames: Frame[];
  samples: Float32Array;
  sampleRate: number;
}

function loadVideo(dir: string, spec: ExtractorSpec): DecodedVideo {
  const id = path.basename(dir);
  const metaPath = path.join(dir, "meta.json");
  const meta = VideoMetaSchema.parse(
    JSON.parse(fs.readFileSync(metaPath, "utf8"))
  );
  const frameFiles = fs
    .readdirSync(dir)
    .filter((f) => f.endsWith(".ppm"))
    .sort();
  if (frameFiles.length === 0) throw new Error("no PPM frames");
  const frames = frameFiles.map((f) =>
    parsePpm(fs.readFileSync(path.join(dir, f)))
  );
  const wavPath = path.join(dir, "audio.wav");
  let samples: Float32Array = new Float32Array(0);
  let sampleRate = spec.targetSampleRate;
  if (fs.existsSync(wavPath)) {
    const track = resample(parseWav(fs.readFileSync(wavPath)), spec.targetSampleRate);
    samples = track.samples;
    sampleRate = track.sampleRate;
  }
  return { id, meta, frames, samples, sampleRate };
}

function mapRatings(
  meta: VideoMeta,
  nClips: number
): { gt: Float32Array; veryGoodMapped: number } | null {
  if (!meta.ratings) return null;
  const scale = meta.ratingScale ?? { min: 0, max: 1, veryGood: 1 };
  if (meta.ratings.length !== nClips) {
    throw new Error(
      `ratings length ${meta.ratings.length} does not match n_clips ${nClips}`
    );
  }
  const span = scale.max - scale.min;
  if (span <= 0) throw new Error("ratingScale max must exceed min");
  const gt = new Float32Array(nClips);
  for (let i = 0; i < nClips; i++) {
    const r = meta.ratings[i];
    if (r < scale.min || r > scale.max) {
      throw new Error(`rating ${r} outside scale [${scale.min}, ${scale.max}]`);
    }
    gt[i] = (r - scale.min) / span;
  }
  return { gt, veryGoodMapped: (scale.veryGood - scale.min) / span };
}

function extract(video: DecodedVideo, spec: ExtractorSpec): {
  visual: Matrix;
  audio: Matrix;
} {
  const dV = visualDim(spec.visualBackbone);
  const dA = audioDim(spec.audioBackbone);
  const clipLen = spec.clipLengthFrames;
  const nClips = Math.floor(video.frames.length / clipLen);
  if (nClips < 1) {
    throw new Error(
      `only ${video.frames.length} frames for clip length ${clipLen}`
    );
  }
  const fps = video.meta.fps;
  const samplesPerClip = Math.round((clipLen / fps) * video.sampleRate);
  const visual = new Float32Array(nClips * dV);
  const audio = new Float32Array(nClips * dA);
  for (let i = 0; i < nClips; i++) {
    const frameSlice = video.frames.slice(i * clipLen, (i + 1) * clipLen);
    visual.set(visualFeatures(frameSlice), i * dV);
    const start = Math.min(i * samplesPerClip, video.samples.length);
    const end = Math.min((i + 1) * samplesPerClip, video.samples.length);
    audio.set(
      audioFeatures(video.samples.subarray(start, end), video.sampleRate),
      i * dA
    );
  }
  return {
    visual: { rows: nClips, cols: dV, data: visual },
    audio: { rows: nClips, cols: dA, data: audio },
  };
}

export function exportDataset(
  videosDir: string,
  spec: ExtractorSpec,
  outRoot: string
): ExportResult {
  const dV = visualDim(spec.visualBackbone);
  const dA = audioDim(spec.audioBackbone);
  const dirs = fs
    .readdirSync(videosDir)
    .map((name) => path.join(videosDir, name))
    .filter((p) => fs.statSync(p).isDirectory())
    .sort();
  if (dirs.length === 0) {
    throw new Error(`no video directories under ${videosDir}`);
  }
  fs.mkdirSync(outRoot, { recursive: true });

  const videos: ManifestVideo[] = [];
  const exported: string[] = [];
  const skipped: { id: string; reason: string }[] = [];
  let veryGoodThreshold: number | null = null;

  for (const dir of dirs) {
    const id = path.basename(dir);
    try {
      const video = loadVideo(dir, spec);
      const { visual, audio } = extract(video, spec);
      const entry: ManifestVideo = {
        id,
        n_clips: visual.rows,
        split: video.meta.split,
        visual_file: `${id}.visual.avhf`,
        audio_file: `${id}.audio.avhf`,
      };
      writeAvhf(path.join(outRoot, entry.visual_file), visual);
      writeAvhf(path.join(outRoot, entry.audio_file), audio);
      const ratings = mapRatings(video.meta, visual.rows);
      if (ratings) {
        entry.labels_file = `${id}.labels.avhf`;
        writeAvhf(path.join(outRoot, entry.labels_file), {
          rows: visual.rows,
          cols: 1,
          data: ratings.gt,
        });
        if (veryGoodThreshold === null) {
          veryGoodThreshold = ratings.veryGoodMapped;
        } else if (Math.abs(veryGoodThreshold - ratings.veryGoodMapped) > 1e-9) {
          throw new Error("inconsistent ratingScale across videos");
        }
      }
      if (video.meta.category !== undefined) {
        entry.category = video.meta.category;
      }
      videos.push(entry);
      exported.push(id);
    } catch (err) {
      const reason = err instanceof Error ? err.message : String(err);
      console.error(`skipping ${id}: ${reason}`);
      skipped.push({ id, reason });
    }
  }
  if (videos.length === 0) {
    throw new Error("every video failed to export");
  }
  const manifest: Manifest = {
    name: path.basename(videosDir),
    d_v: dV,
    d_a: dA,
    very_good_threshold: veryGoodThreshold ?? 1.0,
    videos,
  };
  writeManifest(outRoot, manifest);
  return { root: outRoot, exported, skipped };
}
