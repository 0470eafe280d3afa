/**
 * PLY point cloud IO.
 *
 * Reading accepts the shapes real scans come in: ascii or binary
 * little-endian, x/y/z as float or double, optional red/green/blue(/alpha)
 * channels, and trailing elements such as mesh faces (ignored as long as the
 * vertex element comes first). Writing always emits the fixed bundle schema:
 * binary little-endian, x,y,z float32 + red,green,blue uint8.
 */

export interface Cloud {
  count: number;
  xyz: Float64Array; // count*3
  rgb: Uint8Array; // count*3
}

interface Property {
  type: string;
  name: string;
}

const SCALAR_BYTES: Record<string, number> = {
  char: 1, int8: 1, uchar: 1, uint8: 1,
  short: 2, int16: 2, ushort: 2, uint16: 2,
  int: 4, int32: 4, uint: 4, uint32: 4,
  float: 4, float32: 4,
  double: 8, float64: 8,
};

function readScalar(view: DataView, offset: number, type: string): number {
  switch (type) {
    case "char": case "int8": return view.getInt8(offset);
    case "uchar": case "uint8": return view.getUint8(offset);
    case "short": case "int16": return view.getInt16(offset, true);
    case "ushort": case "uint16": return view.getUint16(offset, true);
    case "int": case "int32": return view.getInt32(offset, true);
    case "uint": case "uint32": return view.getUint32(offset, true);
    case "float": case "float32": return view.getFloat32(offset, true);
    case "double": case "float64": return view.getFloat64(offset, true);
    default: throw new Error(`unsupported PLY scalar type '${type}'`);
  }
}

export function readPly(bytes: Buffer): Cloud {
  const headerEnd = bytes.indexOf("end_header\n");
  if (!bytes.subarray(0, 4).toString("ascii").startsWith("ply") || headerEnd < 0) {
    throw new Error("not a PLY file");
  }
  const header = bytes.subarray(0, headerEnd).toString("ascii").split(/\r?\n/);
  let format = "";
  let vertexCount = -1;
  const vertexProps: Property[] = [];
  let currentElement = "";
  for (const line of header.slice(1)) {
    const parts = line.trim().split(/\s+/);
    if (parts[0] === "format") format = parts[1];
    else if (parts[0] === "element") {
      currentElement = parts[1];
      if (currentElement === "vertex") {
        if (vertexProps.length > 0) throw new Error("duplicate vertex element");
        vertexCount = parseInt(parts[2], 10);
      } else if (vertexCount < 0) {
        throw new Error("vertex element must come first");
      }
    } else if (parts[0] === "property" && currentElement === "vertex") {
      if (parts[1] === "list") throw new Error("list properties on vertices are unsupported");
      vertexProps.push({ type: parts[1], name: parts[2] });
    }
  }
  if (vertexCount < 0) throw new Error("missing vertex element");
  const names = vertexProps.map((p) => p.name);
  for (const axis of ["x", "y", "z"]) {
    if (!names.includes(axis)) throw new Error(`vertex element lacks '${axis}' property`);
  }
  const hasColor = ["red", "green", "blue"].every((c) => names.includes(c));

  const xyz = new Float64Array(vertexCount * 3);
  const rgb = new Uint8Array(vertexCount * 3);
  rgb.fill(128); // colorless scans get mid-gray

  const body = bytes.subarray(headerEnd + "end_header\n".length);
  const index = (name: string) => names.indexOf(name);

  if (format === "ascii") {
    const lines = body.toString("ascii").split(/\r?\n/);
    for (let i = 0; i < vertexCount; i++) {
      const fields = lines[i].trim().split(/\s+/).map(Number);
      if (fields.length < vertexProps.length || fields.some(Number.isNaN)) {
        throw new Error(`malformed ascii vertex at line ${i + 1}`);
      }
      xyz[i * 3] = fields[index("x")];
      xyz[i * 3 + 1] = fields[index("y")];
      xyz[i * 3 + 2] = fields[index("z")];
      if (hasColor) {
        rgb[i * 3] = fields[index("red")];
        rgb[i * 3 + 1] = fields[index("green")];
        rgb[i * 3 + 2] = fields[index("blue")];
      }
    }
  } else if (format === "binary_little_endian") {
    const stride = vertexProps.reduce((sum, p) => {
      const size = SCALAR_BYTES[p.type];
      if (!size) throw new Error(`unsupported PLY scalar type '${p.type}'`);
      return sum + size;
    }, 0);
    if (body.length < vertexCount * stride) {
      throw new Error(`vertex data truncated: ${body.length} bytes < ${vertexCount * stride}`);
    }
    const offsets: number[] = [];
    let acc = 0;
    for (const p of vertexProps) {
      offsets.push(acc);
      acc += SCALAR_BYTES[p.type];
    }
    const view = new DataView(body.buffer, body.byteOffset, vertexCount * stride);
    for (let i = 0; i < vertexCount; i++) {
      const base = i * stride;
      xyz[i * 3] = readScalar(view, base + offsets[index("x")], vertexProps[index("x")].type);
      xyz[i * 3 + 1] = readScalar(view, base + offsets[index("y")], vertexProps[index("y")].type);
      xyz[i * 3 + 2] = readScalar(view, base + offsets[index("z")], vertexProps[index("z")].type);
      if (hasColor) {
        rgb[i * 3] = readScalar(view, base + offsets[index("red")], vertexProps[index("red")].type);
        rgb[i * 3 + 1] = readScalar(view, base + offsets[index("green")], vertexProps[index("green")].type);
        rgb[i * 3 + 2] = readScalar(view, base + offsets[index("blue")], vertexProps[index("blue")].type);
      }
    }
  } else {
    throw new Error(`unsupported PLY format '${format}'`);
  }
  return { count: vertexCount, xyz, rgb };
}

/** Bundle cloud.ply: binary little-endian, x,y,z float32 + red,green,blue uint8. */
export function writeBundlePly(cloud: Cloud): Buffer {
  const header =
    "ply\nformat binary_little_endian 1.0\n" +
    `element vertex ${cloud.count}\n` +
    "property float x\nproperty float y\nproperty float z\n" +
    "property uchar red\nproperty uchar green\nproperty uchar blue\n" +
    "end_header\n";
  const stride = 15; // 3 * float32 + 3 * uint8
  const body = Buffer.alloc(cloud.count * stride);
  for (let i = 0; i < cloud.count; i++) {
    const base = i * stride;
    body.writeFloatLE(Math.fround(cloud.xyz[i * 3]), base);
    body.writeFloatLE(Math.fround(cloud.xyz[i * 3 + 1]), base + 4);
    body.writeFloatLE(Math.fround(cloud.xyz[i * 3 + 2]), base + 8);
    body.writeUInt8(cloud.rgb[i * 3], base + 12);
    body.writeUInt8(cloud.rgb[i * 3 + 1], base + 13);
    body.writeUInt8(cloud.rgb[i * 3 + 2], base + 14);
  }
  return Buffer.concat([Buffer.from(header, "ascii"), body]);
}
