/**
 * Convert one extracted RGB-D scan into a scene bundle.
 *
 * Expected source layout (ScanNet-style extraction):
 *
 *     <scene>/
 *       intrinsic/intrinsic_depth.txt   4x4 (or 3x3) camera matrix
 *       pose/<i>.txt                    4x4 camera-to-world
 *       color/<i>.png                   8-bit RGB or RGBA
 *       depth/<i>.png                   16-bit grayscale, `depthScale` units per meter
 *       *.ply                           colored point cloud (ascii or binary LE)
 *
 * plus a segmenter output file: a JSON array of
 * ``{"label", "score", "indices", "instance_id"?}`` with point indices into
 * the cloud. Bundles store poses world-to-camera, so every source pose is
 * inverted; a non-invertible pose skips the whole scene. Depth is rescaled
 * to whole millimeters. Frames with missing color or depth are dropped and
 * noted in the manifest.
 */

import { createHash } from "node:crypto";
import * as fs from "node:fs";
import * as path from "node:path";

import { formatMatrixText, identityError, invert4, Mat4, parseMatrixText } from "./matrix.js";
import { decodeColorPng, decodeDepthPng, encodeColorPng, encodeDepthPng } from "./png.js";
import { readPly, writeBundlePly } from "./ply.js";

export interface ConvertSceneOptions {
  sceneDir: string;
  masksPath: string;
  outDir: string;
  sceneId?: string;
  /** Source depth units per meter; ScanNet stores millimeters, hence 1000. */
  depthScale?: number;
  /** Keep every k-th frame before emitting. */
  frameInterval?: number;
  /** Keep at most this many frames after interval filtering. */
  limit?: number;
}

export interface ConversionManifest {
  source_scene_id: string;
  source_dir: string;
  output_dir: string;
  frames_before_filtering: number;
  frames_after_filtering: number;
  dropped_frames: { frame_id: number; reason: string }[];
  mask_source: string;
  checksums: Record<string, string>;
}

export type ConversionResult =
  | { status: "converted"; manifest: ConversionManifest }
  | { status: "skipped"; reason: string };

interface SegmenterInstance {
  label: string;
  score: number;
  indices: number[];
  instance_id?: number;
}

function sha256(bytes: Buffer): string {
  return createHash("sha256").update(bytes).digest("hex");
}

function listFrameIds(sceneDir: string): number[] {
  const poseDir = path.join(sceneDir, "pose");
  if (!fs.existsSync(poseDir)) throw new Error(`${poseDir}: missing pose directory`);
  return fs
    .readdirSync(poseDir)
    .filter((name) => name.endsWith(".txt"))
    .map((name) => parseInt(name.slice(0, -4), 10))
    .filter((id) => Number.isInteger(id) && id >= 0)
    .sort((a, b) => a - b);
}

function readIntrinsicsLine(sceneDir: string): string {
  const file = path.join(sceneDir, "intrinsic", "intrinsic_depth.txt");
  if (!fs.existsSync(file)) throw new Error(`${file}: missing intrinsics file`);
  const values = fs.readFileSync(file, "ascii").trim().split(/\s+/).map(Number);
  let fx: number, fy: number, cx: number, cy: number;
  if (values.length === 16) {
    [fx, fy, cx, cy] = [values[0], values[5], values[2], values[6]];
  } else if (values.length === 9) {
    [fx, fy, cx, cy] = [values[0], values[4], values[2], values[5]];
  } else {
    throw new Error(`${file}: expected a 4x4 or 3x3 matrix, got ${values.length} values`);
  }
  if (!(fx > 0) || !(fy > 0)) throw new Error(`${file}: non-positive focal length`);
  return `${fx} ${fy} ${cx} ${cy}\n`;
}

function readMasks(masksPath: string, pointCount: number): SegmenterInstance[] {
  const raw = JSON.parse(fs.readFileSync(masksPath, "utf-8"));
  if (!Array.isArray(raw)) throw new Error(`${masksPath}: expected a JSON array of instances`);
  return raw.map((entry, i) => {
    for (const key of ["label", "score", "indices"]) {
      if (!(key in entry)) throw new Error(`${masksPath}: instance ${i} missing '${key}'`);
    }
    const indices: number[] = [...entry.indices].sort((a, b) => a - b);
    if (indices.length === 0) throw new Error(`${masksPath}: instance ${i} has no points`);
    if (indices[0] < 0 || indices[indices.length - 1] >= pointCount) {
      throw new Error(`${masksPath}: instance ${i} index out of cloud range`);
    }
    return {
      label: String(entry.label),
      score: Number(entry.score),
      indices,
      instance_id: entry.instance_id,
    };
  });
}

function findCloudFile(sceneDir: string): string {
  const entries = fs.readdirSync(sceneDir).filter((name) => name.endsWith(".ply")).sort();
  if (entries.length === 0) throw new Error(`${sceneDir}: no .ply point cloud found`);
  return path.join(sceneDir, entries[0]);
}

const POSE_INVERSION_TOL = 1e-6;

export function convertScene(options: ConvertSceneOptions): ConversionResult {
  const {
    sceneDir,
    masksPath,
    outDir,
    depthScale = 1000,
    frameInterval = 1,
    limit,
  } = options;
  const sceneId = options.sceneId ?? path.basename(path.resolve(sceneDir));
  if (frameInterval < 1) throw new Error(`frame interval must be >= 1, got ${frameInterval}`);
  if (!(depthScale > 0)) throw new Error(`depth scale must be positive, got ${depthScale}`);

  const allFrameIds = listFrameIds(sceneDir);
  let keptIds = allFrameIds.filter((_, position) => position % frameInterval === 0);
  if (limit !== undefined) keptIds = keptIds.slice(0, limit);

  // invert every pose up front: one bad pose skips the scene
  const poses = new Map<number, Mat4>();
  for (const frameId of keptIds) {
    const poseFile = path.join(sceneDir, "pose", `${frameId}.txt`);
    let cameraToWorld: Mat4;
    try {
      cameraToWorld = parseMatrixText(fs.readFileSync(poseFile, "ascii"), 4, 4);
    } catch (err) {
      return { status: "skipped", reason: `${poseFile}: ${(err as Error).message}` };
    }
    const worldToCamera = invert4(cameraToWorld);
    if (worldToCamera === null || identityError(worldToCamera, cameraToWorld) > POSE_INVERSION_TOL) {
      return { status: "skipped", reason: `${poseFile}: pose is not invertible` };
    }
    poses.set(frameId, worldToCamera);
  }

  const cloud = readPly(fs.readFileSync(findCloudFile(sceneDir)));
  const instances = readMasks(masksPath, cloud.count);

  fs.mkdirSync(outDir, { recursive: true });
  const checksums: Record<string, string> = {};
  const writeOut = (relative: string, bytes: Buffer | string) => {
    const target = path.join(outDir, relative);
    fs.mkdirSync(path.dirname(target), { recursive: true });
    const data = typeof bytes === "string" ? Buffer.from(bytes, "utf-8") : bytes;
    fs.writeFileSync(target, data);
    checksums[relative] = sha256(data);
  };

  writeOut("cloud.ply", writeBundlePly(cloud));

  const intrinsicsLine = readIntrinsicsLine(sceneDir);
  const dropped: { frame_id: number; reason: string }[] = [];
  const emittedIds: number[] = [];
  for (const frameId of keptIds) {
    const colorFile = path.join(sceneDir, "color", `${frameId}.png`);
    const depthFile = path.join(sceneDir, "depth", `${frameId}.png`);
    if (!fs.existsSync(depthFile)) {
      dropped.push({ frame_id: frameId, reason: "missing depth" });
      continue;
    }
    if (!fs.existsSync(colorFile)) {
      dropped.push({ frame_id: frameId, reason: "missing color" });
      continue;
    }
    const color = decodeColorPng(fs.readFileSync(colorFile));
    const depth = decodeDepthPng(fs.readFileSync(depthFile));
    if (depth.width !== color.width || depth.height !== color.height) {
      dropped.push({ frame_id: frameId, reason: "depth/color size mismatch" });
      continue;
    }
    // rescale to whole millimeters, the bundle depth unit
    const millimeters = new Uint16Array(depth.values.length);
    for (let i = 0; i < depth.values.length; i++) {
      millimeters[i] = Math.min(65535, Math.round((depth.values[i] / depthScale) * 1000));
    }
    writeOut(`frames/${frameId}/color.png`, encodeColorPng(color));
    writeOut(
      `frames/${frameId}/depth.png`,
      encodeDepthPng({ width: depth.width, height: depth.height, values: millimeters }),
    );
    writeOut(`frames/${frameId}/pose.txt`, formatMatrixText(poses.get(frameId)!));
    writeOut(`frames/${frameId}/intrinsics.txt`, intrinsicsLine);
    emittedIds.push(frameId);
  }

  const masksJson = instances.map((inst, i) => ({
    instance_id: inst.instance_id ?? i,
    category: inst.label,
    confidence: inst.score,
    point_indices: inst.indices,
  }));
  writeOut("masks.json", JSON.stringify(masksJson, null, 2) + "\n");

  writeOut(
    "scene.json",
    JSON.stringify(
      {
        scene_id: sceneId,
        point_count: cloud.count,
        frame_ids: emittedIds,
        mask_count: masksJson.length,
      },
      null,
      2,
    ) + "\n",
  );

  const manifest: ConversionManifest = {
    source_scene_id: sceneId,
    source_dir: path.resolve(sceneDir),
    output_dir: path.resolve(outDir),
    frames_before_filtering: allFrameIds.length,
    frames_after_filtering: emittedIds.length,
    dropped_frames: dropped,
    mask_source: path.resolve(masksPath),
    checksums,
  };
  fs.writeFileSync(
    path.join(outDir, "manifest.json"),
    JSON.stringify(manifest, null, 2) + "\n",
  );
  return { status: "converted", manifest };
}
