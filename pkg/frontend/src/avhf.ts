/**
 * AVHF binary feature files and the dataset manifest.
 *
 * Layout: magic "AVHF" | version u32 (=1) | n u32 | d u32 | n*d float32,
 * all little-endian, row-major. Ground-truth labels are stored as d=1 files.
 */
import * as fs from "fs";
import * as path from "path";

export const MAGIC = "AVHF";
export const VERSION = 1;
const HEADER_BYTES = 16;

export interface Matrix {
  rows: number;
  cols: number;
  /** row-major, rows*cols entries */
  data: Float32Array;
}

export interface ManifestVideo {
  id: string;
  n_clips: number;
  split: "train" | "val" | "test";
  visual_file: string;
  audio_file: string;
  labels_file?: string;
  category?: string;
}

export interface Manifest {
  name: string;
  d_v: number;
  d_a: number;
  very_good_threshold: number;
  videos: ManifestVideo[];
}

export function encodeAvhf(matrix: Matrix): Buffer {
  const { rows, cols, data } = matrix;
  if (data.length !== rows * cols) {
    throw new Error(
      `matrix data length ${data.length} does not match ${rows}x${cols}`
    );
  }
  const buf = Buffer.alloc(HEADER_BYTES + 4 * rows * cols);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(VERSION, 4);
  buf.writeUInt32LE(rows, 8);
  buf.writeUInt32LE(cols, 12);
  for (let i = 0; i < data.length; i++) {
    buf.writeFloatLE(data[i], HEADER_BYTES + 4 * i);
  }
  return buf;
}

export function decodeAvhf(buf: Buffer): Matrix {
  if (buf.length < HEADER_BYTES) {
    throw new Error("file shorter than AVHF header");
  }
  if (buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new Error(`bad magic ${JSON.stringify(buf.toString("ascii", 0, 4))}`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) {
    throw new Error(`unsupported version ${version}`);
  }
  const rows = buf.readUInt32LE(8);
  const cols = buf.readUInt32LE(12);
  if (buf.length !== HEADER_BYTES + 4 * rows * cols) {
    throw new Error(
      `payload length ${buf.length - HEADER_BYTES} does not match n=${rows} d=${cols}`
    );
  }
  const data = new Float32Array(rows * cols);
  for (let i = 0; i < data.length; i++) {
    data[i] = buf.readFloatLE(HEADER_BYTES + 4 * i);
  }
  return { rows, cols, data };
}

export function writeAvhf(filePath: string, matrix: Matrix): void {
  fs.writeFileSync(filePath, encodeAvhf(matrix));
}

export function readAvhf(filePath: string): Matrix {
  return decodeAvhf(fs.readFileSync(filePath));
}

export function writeManifest(root: string, manifest: Manifest): void {
  fs.writeFileSync(
    path.join(root, "manifest.json"),
    JSON.stringify(manifest, null, 2) + "\n"
  );
}
