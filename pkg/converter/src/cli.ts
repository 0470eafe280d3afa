/** CLI: `convert-scene` and `convert-queries` subcommands. */

import { convertQueries } from "./convertQueries.js";
import { convertScene } from "./convertScene.js";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) throw new Error(`unexpected argument '${arg}'`);
    const value = argv[i + 1];
    if (value === undefined || value.startsWith("--")) throw new Error(`flag ${arg} needs a value`);
    flags.set(arg.slice(2), value);
    i++;
  }
  return flags;
}

function requireFlag(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (value === undefined) throw new Error(`missing required flag --${name}`);
  return value;
}

function optionalInt(flags: Map<string, string>, name: string): number | undefined {
  const value = flags.get(name);
  if (value === undefined) return undefined;
  const parsed = parseInt(value, 10);
  if (!Number.isInteger(parsed)) throw new Error(`--${name} must be an integer`);
  return parsed;
}

const USAGE = `usage:
  convert convert-scene --scene <dir> --masks <file> --out <bundle-dir>
          [--scene-id <id>] [--depth-scale 1000] [--frame-interval 1] [--limit N]
  convert convert-queries --annotations <file> --out <queries.jsonl> [--limit N]
`;

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "convert-scene") {
      const flags = parseFlags(rest);
      const result = convertScene({
        sceneDir: requireFlag(flags, "scene"),
        masksPath: requireFlag(flags, "masks"),
        outDir: requireFlag(flags, "out"),
        sceneId: flags.get("scene-id"),
        depthScale: flags.has("depth-scale") ? Number(flags.get("depth-scale")) : undefined,
        frameInterval: optionalInt(flags, "frame-interval"),
        limit: optionalInt(flags, "limit"),
      });
      if (result.status === "skipped") {
        console.error(`skipped: ${result.reason}`);
        return 3;
      }
      const m = result.manifest;
      console.log(
        `converted ${m.source_scene_id}: ${m.frames_after_filtering}/${m.frames_before_filtering} frames, ` +
          `${Object.keys(m.checksums).length} files -> ${m.output_dir}`,
      );
      for (const drop of m.dropped_frames) {
        console.error(`dropped frame ${drop.frame_id}: ${drop.reason}`);
      }
      return 0;
    }
    if (command === "convert-queries") {
      const flags = parseFlags(rest);
      const report = convertQueries({
        annotationsPath: requireFlag(flags, "annotations"),
        outPath: requireFlag(flags, "out"),
        limit: optionalInt(flags, "limit"),
      });
      console.log(
        `wrote ${report.written} queries (${report.skipped_missing_box} skipped without a box)`,
      );
      return 0;
    }
    console.error(USAGE);
    return 2;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

process.exitCode = main(process.argv.slice(2));
