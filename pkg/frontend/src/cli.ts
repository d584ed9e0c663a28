#!/usr/bin/env node
/**
 * avhf-export: convert a raw toy video corpus into an AVHF dataset root.
 */
import * as fs from "fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { exportDataset } from "./export";
import { parseSpec } from "./extractors";

export function run(argv: string[]): number {
  const args = yargs(argv)
    .option("videos", {
      type: "string",
      demandOption: true,
      describe: "directory with one subdirectory per video",
    })
    .option("spec", {
      type: "string",
      describe: "ExtractorSpec JSON file (defaults used when omitted)",
    })
    .option("out", {
      type: "string",
      demandOption: true,
      describe: "output dataset root",
    })
    .strict()
    .parseSync();

  try {
    const raw = args.spec
      ? JSON.parse(fs.readFileSync(args.spec, "utf8"))
      : {};
    const spec = parseSpec(raw);
    const result = exportDataset(args.videos, spec, args.out);
    console.log(
      `exported ${result.exported.length} videos to ${result.root}` +
        (result.skipped.length ? ` (${result.skipped.length} skipped)` : "")
    );
    return 0;
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return 1;
  }
}

if (require.main === module) {
  process.exit(run(hideBin(process.argv)));
}
