/**
 * Full cross-package flow: a geometry-consistent source scan is converted by
 * the CLI, then the grounding pipeline localizes a query in the emitted
 * bundle through its own CLI. The expected box is computed here, from the
 * source cloud, independently of the pipeline.
 */

import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, describe, expect, it } from "vitest";

import { writeAnnotations, writeSourceScene, SourceScene } from "./fixtures.js";

const PYTHON = process.env.MVGROUND_PYTHON ?? "python3";
const converterRoot = path.resolve(path.dirname(fileURLToPath(import.meta.url)), "..");
const CLI = path.join(converterRoot, "dist", "cli.js");
const tmpRoot = fs.mkdtempSync(path.join(os.tmpdir(), "integration-test-"));

afterAll(() => {
  fs.rmSync(tmpRoot, { recursive: true, force: true });
});

function expectedBox(scene: SourceScene, maskIndex: number): number[] {
  const [from, to] = scene.maskRanges[maskIndex];
  const lo = [Infinity, Infinity, Infinity];
  const hi = [-Infinity, -Infinity, -Infinity];
  for (let i = from; i < to; i++) {
    for (let d = 0; d < 3; d++) {
      lo[d] = Math.min(lo[d], scene.xyz[i * 3 + d]);
      hi[d] = Math.max(hi[d], scene.xyz[i * 3 + d]);
    }
  }
  return [...lo, ...hi];
}

describe("converted bundles drive the grounding pipeline", () => {
  const sceneDir = path.join(tmpRoot, "scans", "scene0042_00");
  const bundleRoot = path.join(tmpRoot, "bundles");
  const bundleDir = path.join(bundleRoot, "scene0042_00");
  const scene = writeSourceScene(sceneDir, { consistentDepth: true, width: 64, height: 48 });

  const converted = spawnSync(
    "node",
    [
      CLI, "convert-scene",
      "--scene", sceneDir,
      "--masks", scene.masksPath,
      "--out", bundleDir,
      "--depth-scale", "2000",
    ],
    { encoding: "utf-8" },
  );

  it("converts the consistent-depth scan", () => {
    expect(converted.status).toBe(0);
  });

  it("grounds a query against the converted bundle", () => {
    const proc = spawnSync(
      PYTHON,
      [
        "-m", "mvground", "ground",
        "--bundle", bundleDir,
        "--query", "the chair by the window",
        "--judge", "oracle:0",
        "--frame-interval", "1",
      ],
      { encoding: "utf-8" },
    );
    expect(proc.stderr).toBe("");
    expect(proc.status).toBe(0);
    const payload = JSON.parse(proc.stdout);
    expect(payload.instance_id).toBe(0);
    expect(payload.fallback).toBe(false);
    expect(payload.target_category).toBe("chair");
    expect(payload.candidates).toEqual([0, 1]); // both chairs, not the table
    const expected = expectedBox(scene, 0);
    for (let d = 0; d < 6; d++) {
      expect(Math.abs(payload.box[d] - expected[d])).toBeLessThan(1e-6);
    }
  });

  it("benchmarks converted queries at full accuracy with an oracle judge", () => {
    const annotations = writeAnnotations(path.join(tmpRoot, "annotations.json"), [
      {
        scene_id: "scene0042_00",
        description: "the chair by the window",
        object_name: "chair",
        object_id: 0,
        box: expectedBox(scene, 0),
      },
      {
        scene_id: "scene0042_00",
        description: "the table in the corner",
        object_name: "table",
        object_id: 2,
        box: expectedBox(scene, 2),
      },
    ]);
    const queriesPath = path.join(tmpRoot, "queries.jsonl");
    const convertedQueries = spawnSync(
      "node",
      [CLI, "convert-queries", "--annotations", annotations, "--out", queriesPath],
      { encoding: "utf-8" },
    );
    expect(convertedQueries.status).toBe(0);

    const outDir = path.join(tmpRoot, "bench");
    const proc = spawnSync(
      PYTHON,
      [
        "-m", "mvground", "bench",
        "--bundles", bundleRoot,
        "--queries", queriesPath,
        "--out", outDir,
        "--judge", "oracle",
        "--frame-interval", "1",
      ],
      { encoding: "utf-8" },
    );
    expect(proc.stderr).toBe("");
    expect(proc.status).toBe(0);
    const report = JSON.parse(fs.readFileSync(path.join(outDir, "report.json"), "utf-8"));
    expect(report.metrics.overall.accuracy["0.5"]).toBe(1.0);
    expect(report.metrics.fallback_count).toBe(0);
    expect(report.metrics.unique.count).toBe(1); // the table query
    expect(report.metrics.multiple.count).toBe(1); // the chair query has a distractor
  });
});
