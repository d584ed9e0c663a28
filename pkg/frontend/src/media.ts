/**
 * Minimal decoders for the toy corpus media formats:
 * binary PPM (P6, 8-bit) frames and PCM WAV audio.
 */

export interface Frame {
  width: number;
  height: number;
  /** interleaved RGB, 3 bytes per pixel */
  pixels: Uint8Array;
}

export interface AudioTrack {
  sampleRate: number;
  /** mono samples in [-1, 1]; multi-channel input is averaged */
  samples: Float32Array;
}

/** Read the next whitespace-delimited token, skipping '#' comments. */
function nextToken(buf: Buffer, pos: { i: number }): string {
  while (pos.i < buf.length) {
    const c = buf[pos.i];
    if (c === 0x23) {
      // comment until end of line
      while (pos.i < buf.length && buf[pos.i] !== 0x0a) pos.i++;
    } else if (c === 0x20 || c === 0x09 || c === 0x0a || c === 0x0d) {
      pos.i++;
    } else {
      break;
    }
  }
  const start = pos.i;
  while (pos.i < buf.length && !/\s/.test(String.fromCharCode(buf[pos.i]))) {
    pos.i++;
  }
  if (start === pos.i) throw new Error("truncated PPM header");
  return buf.toString("ascii", start, pos.i);
}

export function parsePpm(buf: Buffer): Frame {
  const pos = { i: 0 };
  if (nextToken(buf, pos) !== "P6") {
    throw new Error("not a binary PPM (P6) file");
  }
  const width = parseInt(nextToken(buf, pos), 10);
  const height = parseInt(nextToken(buf, pos), 10);
  const maxval = parseInt(nextToken(buf, pos), 10);
  if (!(width > 0 && height > 0)) throw new Error("bad PPM dimensions");
  if (maxval !== 255) throw new Error(`unsupported PPM maxval ${maxval}`);
  pos.i++; // single whitespace after maxval
  const need = 3 * width * height;
  if (buf.length - pos.i < need) {
    throw new Error(
      `PPM payload too short: have ${buf.length - pos.i}, need ${need}`
    );
  }
  return {
    width,
    height,
    pixels: new Uint8Array(buf.subarray(pos.i, pos.i + need)),
  };
}

export function parseWav(buf: Buffer): AudioTrack {
  if (buf.length < 44 || buf.toString("ascii", 0, 4) !== "RIFF" ||
      buf.toString("ascii", 8, 12) !== "WAVE") {
    throw new Error("not a RIFF/WAVE file");
  }
  let offset = 12;
  let sampleRate = 0;
  let channels = 0;
  let bitsPerSample = 0;
  let dataStart = -1;
  let dataLength = 0;
  while (offset + 8 <= buf.length) {
    const chunkId = buf.toString("ascii", offset, offset + 4);
    const chunkSize = buf.readUInt32LE(offset + 4);
    if (chunkId === "fmt ") {
      const format = buf.readUInt16LE(offset + 8);
      if (format !== 1) throw new Error(`unsupported WAV format code ${format}`);
      channels = buf.readUInt16LE(offset + 10);
      sampleRate = buf.readUInt32LE(offset + 12);
      bitsPerSample = buf.readUInt16LE(offset + 22);
    } else if (chunkId === "data") {
      dataStart = offset + 8;
      dataLength = chunkSize;
    }
    offset += 8 + chunkSize + (chunkSize % 2);
  }
  if (sampleRate === 0 || dataStart < 0) {
    throw new Error("WAV file missing fmt or data chunk");
  }
  if (bitsPerSample !== 16) {
    throw new Error(`unsupported WAV bit depth ${bitsPerSample}`);
  }
  if (dataStart + dataLength > buf.length) {
    throw new Error("WAV data chunk extends past end of file");
  }
  const frameCount = Math.floor(dataLength / (2 * channels));
  const samples = new Float32Array(frameCount);
  for (let i = 0; i < frameCount; i++) {
    let acc = 0;
    for (let c = 0; c < channels; c++) {
      acc += buf.readInt16LE(dataStart + 2 * (i * channels + c));
    }
    samples[i] = acc / channels / 32768;
  }
  return { sampleRate, samples };
}

/** Linear resampling to a target rate; identity when rates match. */
export function resample(track: AudioTrack, targetRate: number): AudioTrack {
  if (track.sampleRate === targetRate || track.samples.length === 0) {
    return { sampleRate: targetRate, samples: track.samples };
  }
  const ratio = track.sampleRate / targetRate;
  const outLength = Math.max(1, Math.round(track.samples.length / ratio));
  const out = new Float32Array(outLength);
  for (let i = 0; i < outLength; i++) {
    const t = i * ratio;
    const lo = Math.min(Math.floor(t), track.samples.length - 1);
    const hi = Math.min(lo + 1, track.samples.length - 1);
    const frac = t - lo;
    out[i] = track.samples[lo] * (1 - frac) + track.samples[hi] * frac;
  }
  return { sampleRate: targetRate, samples: out };
}
