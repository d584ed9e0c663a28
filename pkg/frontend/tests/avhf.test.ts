import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { describe, expect, it } from "vitest";
import { decodeAvhf, encodeAvhf, readAvhf, writeAvhf } from "../src/avhf";

describe("AVHF encoding", () => {
  it("round-trips a matrix bit-exactly", () => {
    const data = new Float32Array([1.5, -2.25, 3.125, 0.1, 1e-30, 1e30]);
    const back = decodeAvhf(encodeAvhf({ rows: 2, cols: 3, data }));
    expect(back.rows).toBe(2);
    expect(back.cols).toBe(3);
    expect(Buffer.from(back.data.buffer).equals(Buffer.from(data.buffer))).toBe(
      true
    );
  });

  it("round-trips through the filesystem", () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "avhf-"));
    const data = new Float32Array([0.25, 0.5, 0.75]);
    const file = path.join(dir, "x.avhf");
    writeAvhf(file, { rows: 3, cols: 1, data });
    const back = readAvhf(file);
    expect([...back.data]).toEqual([0.25, 0.5, 0.75]);
  });

  it("writes the documented header layout", () => {
    const buf = encodeAvhf({ rows: 1, cols: 2, data: new Float32Array([0, 0]) });
    expect(buf.toString("ascii", 0, 4)).toBe("AVHF");
    expect(buf.readUInt32LE(4)).toBe(1);
    expect(buf.readUInt32LE(8)).toBe(1);
    expect(buf.readUInt32LE(12)).toBe(2);
    expect(buf.length).toBe(16 + 8);
  });

  it("rejects bad magic", () => {
    const buf = encodeAvhf({ rows: 1, cols: 1, data: new Float32Array([1]) });
    buf.write("NOPE", 0, "ascii");
    expect(() => decodeAvhf(buf)).toThrow(/magic/);
  });

  it("rejects truncated payloads", () => {
    const buf = encodeAvhf({ rows: 2, cols: 2, data: new Float32Array(4) });
    expect(() => decodeAvhf(buf.subarray(0, buf.length - 3))).toThrow(
      /payload length/
    );
  });

  it("rejects size mismatches at encode time", () => {
    expect(() =>
      encodeAvhf({ rows: 2, cols: 2, data: new Float32Array(3) })
    ).toThrow(/does not match/);
  });
});
