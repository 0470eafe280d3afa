/**
 * Minimal 4x4 matrix helpers for camera pose handling.
 *
 * Poses are row-major number[16]. Source scans store camera-to-world poses;
 * bundles need world-to-camera, so the central operation here is a full 4x4
 * inversion with singularity detection (a damaged pose file must skip the
 * scene rather than emit garbage).
 */

export type Mat4 = number[]; // 16 entries, row-major

export const IDENTITY4: Mat4 = [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1];

export function multiply4(a: Mat4, b: Mat4): Mat4 {
  const out = new Array<number>(16).fill(0);
  for (let i = 0; i < 4; i++) {
    for (let j = 0; j < 4; j++) {
      let sum = 0;
      for (let k = 0; k < 4; k++) {
        sum += a[i * 4 + k] * b[k * 4 + j];
      }
      out[i * 4 + j] = sum;
    }
  }
  return out;
}

/** Gauss-Jordan inversion with partial pivoting; null when singular. */
export function invert4(m: Mat4): Mat4 | null {
  if (m.length !== 16 || m.some((v) => !Number.isFinite(v))) return null;
  const a = m.map((row) => row); // copy
  const inv = [...IDENTITY4];

  for (let col = 0; col < 4; col++) {
    let pivotRow = col;
    for (let row = col + 1; row < 4; row++) {
      if (Math.abs(a[row * 4 + col]) > Math.abs(a[pivotRow * 4 + col])) pivotRow = row;
    }
    const pivot = a[pivotRow * 4 + col];
    if (Math.abs(pivot) < 1e-12) return null;
    if (pivotRow !== col) {
      for (let k = 0; k < 4; k++) {
        [a[col * 4 + k], a[pivotRow * 4 + k]] = [a[pivotRow * 4 + k], a[col * 4 + k]];
        [inv[col * 4 + k], inv[pivotRow * 4 + k]] = [inv[pivotRow * 4 + k], inv[col * 4 + k]];
      }
    }
    const scale = 1 / a[col * 4 + col];
    for (let k = 0; k < 4; k++) {
      a[col * 4 + k] *= scale;
      inv[col * 4 + k] *= scale;
    }
    for (let row = 0; row < 4; row++) {
      if (row === col) continue;
      const factor = a[row * 4 + col];
      if (factor === 0) continue;
      for (let k = 0; k < 4; k++) {
        a[row * 4 + k] -= factor * a[col * 4 + k];
        inv[row * 4 + k] -= factor * inv[col * 4 + k];
      }
    }
  }
  return inv;
}

/** Largest absolute deviation of a*b from the identity. */
export function identityError(a: Mat4, b: Mat4): number {
  const product = multiply4(a, b);
  let worst = 0;
  for (let i = 0; i < 16; i++) {
    worst = Math.max(worst, Math.abs(product[i] - IDENTITY4[i]));
  }
  return worst;
}

export function parseMatrixText(text: string, rows: number, cols: number): Mat4 {
  const values = text.trim().split(/\s+/).map(Number);
  if (values.length !== rows * cols || values.some((v) => Number.isNaN(v))) {
    throw new Error(`expected ${rows}x${cols} whitespace-separated numbers`);
  }
  return values;
}

export function formatMatrixText(m: Mat4): string {
  const lines: string[] = [];
  for (let row = 0; row < 4; row++) {
    lines.push(m.slice(row * 4, row * 4 + 4).map(String).join(" "));
  }
  return lines.join("\n") + "\n";
}
