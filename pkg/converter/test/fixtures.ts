/**
 * Synthetic source scenes in the extracted-scan layout the converter consumes:
 * pose/<i>.txt (camera-to-world), color/<i>.png, depth/<i>.png,
 * intrinsic/intrinsic_depth.txt, a colored PLY cloud, plus a segmenter
 * output file and a referring-expression annotation file.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { PNG } from "pngjs";

import { invert4, Mat4, multiply4 } from "../src/matrix.js";

/** Deterministic PRNG so fixtures are stable across runs. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function rotationXYZ(ax: number, ay: number, az: number): Mat4 {
  const [cx, sx, cy, sy, cz, sz] = [
    Math.cos(ax), Math.sin(ax), Math.cos(ay), Math.sin(ay), Math.cos(az), Math.sin(az),
  ];
  const rx: Mat4 = [1, 0, 0, 0, 0, cx, -sx, 0, 0, sx, cx, 0, 0, 0, 0, 1];
  const ry: Mat4 = [cy, 0, sy, 0, 0, 1, 0, 0, -sy, 0, cy, 0, 0, 0, 0, 1];
  const rz: Mat4 = [cz, -sz, 0, 0, sz, cz, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1];
  return multiply4(rz, multiply4(ry, rx));
}

export function cameraToWorldPose(ax: number, ay: number, az: number, t: number[]): Mat4 {
  const pose = rotationXYZ(ax, ay, az);
  pose[3] = t[0];
  pose[7] = t[1];
  pose[11] = t[2];
  return pose;
}

export interface SourceSceneOptions {
  pointCount?: number;
  frameCount?: number;
  width?: number;
  height?: number;
  /** Source depth units per meter; the converter must rescale to millimeters. */
  depthScale?: number;
  corruptPoseFrame?: number; // write a zero rotation block for this frame
  /** Render depth by z-buffering the cloud so projections verify end to end. */
  consistentDepth?: boolean;
}

export interface SourceScene {
  dir: string;
  masksPath: string;
  pointCount: number;
  frameIds: number[];
  cameraToWorld: Map<number, Mat4>;
  depthValues: Map<number, Uint16Array>;
  width: number;
  height: number;
  /** Cloud coordinates exactly as written (float32). */
  xyz: Float32Array;
  /** Point index ranges of the segmenter instances, in file order. */
  maskRanges: [number, number][];
}

function writeRgbaPng(file: string, width: number, height: number, rng: () => number): void {
  const png = new PNG({ width, height });
  for (let i = 0; i < width * height; i++) {
    png.data[i * 4] = Math.floor(rng() * 256);
    png.data[i * 4 + 1] = Math.floor(rng() * 256);
    png.data[i * 4 + 2] = Math.floor(rng() * 256);
    png.data[i * 4 + 3] = 255;
  }
  fs.writeFileSync(file, PNG.sync.write(png)); // RGBA on purpose: converter must re-encode as RGB
}

function writeDepth16Png(file: string, width: number, height: number, values: Uint16Array): void {
  const png = new PNG({
    width, height, colorType: 0, inputColorType: 0, bitDepth: 16, inputHasAlpha: false,
  });
  png.data = Buffer.from(values.buffer.slice(0)) as PNG["data"];
  fs.writeFileSync(
    file,
    PNG.sync.write(png, { colorType: 0, inputColorType: 0, bitDepth: 16, inputHasAlpha: false }),
  );
}

/** Binary little-endian PLY with an alpha channel and a trailing face element. */
function writeSourcePly(file: string, pointCount: number, rng: () => number): Float32Array {
  const header =
    "ply\nformat binary_little_endian 1.0\n" +
    `element vertex ${pointCount}\n` +
    "property float x\nproperty float y\nproperty float z\n" +
    "property uchar red\nproperty uchar green\nproperty uchar blue\nproperty uchar alpha\n" +
    "element face 2\nproperty list uchar int vertex_indices\n" +
    "end_header\n";
  const stride = 16; // 3 * float32 + 4 * uint8
  const body = Buffer.alloc(pointCount * stride);
  const xyz = new Float32Array(pointCount * 3);
  for (let i = 0; i < pointCount; i++) {
    const base = i * stride;
    xyz[i * 3] = Math.fround(rng() * 3 - 1.5);
    xyz[i * 3 + 1] = Math.fround(rng() * 2 - 1);
    xyz[i * 3 + 2] = Math.fround(rng() * 2 + 1.5);
    body.writeFloatLE(xyz[i * 3], base);
    body.writeFloatLE(xyz[i * 3 + 1], base + 4);
    body.writeFloatLE(xyz[i * 3 + 2], base + 8);
    body.writeUInt8(Math.floor(rng() * 256), base + 12);
    body.writeUInt8(Math.floor(rng() * 256), base + 13);
    body.writeUInt8(Math.floor(rng() * 256), base + 14);
    body.writeUInt8(255, base + 15);
  }
  const faces = Buffer.alloc(2 * 13);
  for (let f = 0; f < 2; f++) {
    faces.writeUInt8(3, f * 13);
    faces.writeInt32LE(f, f * 13 + 1);
    faces.writeInt32LE(f + 1, f * 13 + 5);
    faces.writeInt32LE(f + 2, f * 13 + 9);
  }
  fs.writeFileSync(file, Buffer.concat([Buffer.from(header, "ascii"), body, faces]));
  return xyz;
}

/** Z-buffer the cloud through one camera: nearest point wins each pixel. */
function renderDepth(
  xyz: Float32Array,
  cameraToWorld: Mat4,
  width: number,
  height: number,
  depthScale: number,
  intrinsics: { fx: number; fy: number; cx: number; cy: number },
): Uint16Array {
  const w2c = invert4(cameraToWorld);
  if (w2c === null) throw new Error("fixture pose not invertible");
  const zbuf = new Float64Array(width * height).fill(Number.POSITIVE_INFINITY);
  for (let i = 0; i < xyz.length / 3; i++) {
    const [x, y, z] = [xyz[i * 3], xyz[i * 3 + 1], xyz[i * 3 + 2]];
    const xc = w2c[0] * x + w2c[1] * y + w2c[2] * z + w2c[3];
    const yc = w2c[4] * x + w2c[5] * y + w2c[6] * z + w2c[7];
    const zc = w2c[8] * x + w2c[9] * y + w2c[10] * z + w2c[11];
    if (zc <= 1e-6) continue;
    const u = Math.round((xc * intrinsics.fx) / zc + intrinsics.cx);
    const v = Math.round((yc * intrinsics.fy) / zc + intrinsics.cy);
    if (u < 0 || u >= width || v < 0 || v >= height) continue;
    const at = v * width + u;
    if (zc < zbuf[at]) zbuf[at] = zc;
  }
  const depth = new Uint16Array(width * height);
  for (let i = 0; i < depth.length; i++) {
    if (Number.isFinite(zbuf[i])) {
      depth[i] = Math.min(65535, Math.round(zbuf[i] * depthScale));
    }
  }
  return depth;
}

export function writeSourceScene(dir: string, options: SourceSceneOptions = {}): SourceScene {
  const {
    pointCount = 1000,
    frameCount = 3,
    width = 32,
    height = 24,
    depthScale = 2000,
    corruptPoseFrame,
    consistentDepth = false,
  } = options;
  const rng = mulberry32(1234);

  fs.mkdirSync(path.join(dir, "pose"), { recursive: true });
  fs.mkdirSync(path.join(dir, "color"), { recursive: true });
  fs.mkdirSync(path.join(dir, "depth"), { recursive: true });
  fs.mkdirSync(path.join(dir, "intrinsic"), { recursive: true });

  const xyz = writeSourcePly(path.join(dir, "scan_clean.ply"), pointCount, rng);

  // 4x4 intrinsics matrix, extraction style
  const intrinsics = { fx: 57.5, fy: 57.5, cx: width / 2, cy: height / 2 };
  fs.writeFileSync(
    path.join(dir, "intrinsic", "intrinsic_depth.txt"),
    `${intrinsics.fx} 0 ${intrinsics.cx} 0\n0 ${intrinsics.fy} ${intrinsics.cy} 0\n0 0 1 0\n0 0 0 1\n`,
  );

  const frameIds: number[] = [];
  const cameraToWorld = new Map<number, Mat4>();
  const depthValues = new Map<number, Uint16Array>();
  for (let frameId = 0; frameId < frameCount; frameId++) {
    let pose: Mat4;
    if (frameId === corruptPoseFrame) {
      pose = [0, 0, 0, 0.5, 0, 0, 0, 0.2, 0, 0, 0, 1.0, 0, 0, 0, 1]; // zero rotation block
    } else {
      pose = cameraToWorldPose(
        (rng() - 0.5) * 0.2,
        (rng() - 0.5) * 0.2,
        (rng() - 0.5) * 0.2,
        [rng() * 0.4 - 0.2, rng() * 0.4 - 0.2, rng() * 0.2 - 0.1],
      );
    }
    fs.writeFileSync(
      path.join(dir, "pose", `${frameId}.txt`),
      [0, 1, 2, 3].map((r) => pose.slice(r * 4, r * 4 + 4).join(" ")).join("\n") + "\n",
    );
    writeRgbaPng(path.join(dir, "color", `${frameId}.png`), width, height, rng);
    let depth: Uint16Array;
    if (consistentDepth && frameId !== corruptPoseFrame) {
      depth = renderDepth(xyz, pose, width, height, depthScale, intrinsics);
    } else {
      depth = new Uint16Array(width * height);
      for (let i = 0; i < depth.length; i++) {
        depth[i] = 2 * Math.floor(rng() * 4000); // even values divide exactly by scale 2000
      }
    }
    writeDepth16Png(path.join(dir, "depth", `${frameId}.png`), width, height, depth);
    frameIds.push(frameId);
    cameraToWorld.set(frameId, pose);
    depthValues.set(frameId, depth);
  }

  // segmenter output: three instances over disjoint index ranges, unsorted on purpose
  const masksPath = path.join(dir, "instances.json");
  const maskRanges: [number, number][] = [
    [0, 60],
    [60, 150],
    [150, 220],
  ];
  const shuffle = (ids: number[]) => ids.sort(() => rng() - 0.5);
  fs.writeFileSync(
    masksPath,
    JSON.stringify(
      [
        { label: "chair", score: 0.91, indices: shuffle(range(...maskRanges[0])) },
        { label: "chair", score: 0.77, indices: shuffle(range(...maskRanges[1])) },
        { label: "table", score: 0.31, indices: shuffle(range(...maskRanges[2])) },
      ],
      null,
      2,
    ),
  );

  return {
    dir, masksPath, pointCount, frameIds, cameraToWorld, depthValues, width, height,
    xyz, maskRanges,
  };
}

function range(from: number, to: number): number[] {
  return Array.from({ length: to - from }, (_, i) => from + i);
}

export function writeAnnotations(file: string, entries: unknown[]): string {
  fs.writeFileSync(file, JSON.stringify(entries, null, 2));
  return file;
}

export function completeAnnotations(): unknown[] {
  return [0, 1, 2, 3, 4].map((i) => ({
    scene_id: `scene${i % 2}`,
    description: `the chair number ${i}  with  double spaces preserved`,
    object_name: "chair",
    object_id: i,
    box: [0 + i, 0, 0, 1 + i, 1, 1],
  }));
}
