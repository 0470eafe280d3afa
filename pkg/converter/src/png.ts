/**
 * PNG helpers over pngjs: 8-bit RGB color rasters and 16-bit grayscale
 * depth rasters, matching the bundle contract (color.png colorType 2,
 * depth.png colorType 0 / bit depth 16).
 */

import { PNG } from "pngjs";

export interface ColorImage {
  width: number;
  height: number;
  rgb: Uint8Array; // width*height*3
}

export interface DepthImage {
  width: number;
  height: number;
  values: Uint16Array; // width*height
}

export function decodeColorPng(bytes: Buffer): ColorImage {
  const png = PNG.sync.read(bytes); // normalizes to 8-bit RGBA
  const rgb = new Uint8Array(png.width * png.height * 3);
  for (let i = 0; i < png.width * png.height; i++) {
    rgb[i * 3] = png.data[i * 4];
    rgb[i * 3 + 1] = png.data[i * 4 + 1];
    rgb[i * 3 + 2] = png.data[i * 4 + 2];
  }
  return { width: png.width, height: png.height, rgb };
}

export function encodeColorPng(image: ColorImage): Buffer {
  const png = new PNG({ width: image.width, height: image.height });
  for (let i = 0; i < image.width * image.height; i++) {
    png.data[i * 4] = image.rgb[i * 3];
    png.data[i * 4 + 1] = image.rgb[i * 3 + 1];
    png.data[i * 4 + 2] = image.rgb[i * 3 + 2];
    png.data[i * 4 + 3] = 255;
  }
  return PNG.sync.write(png, { colorType: 2 }); // RGB, no alpha channel on disk
}

export function decodeDepthPng(bytes: Buffer): DepthImage {
  const png = PNG.sync.read(bytes, { skipRescale: true });
  if (png.depth !== 16) {
    throw new Error(`depth image must be 16-bit, got bit depth ${png.depth}`);
  }
  const n = png.width * png.height;
  const values = new Uint16Array(n);
  // with skipRescale the data buffer holds 16-bit RGBA channels
  const channels = new Uint16Array(png.data.buffer, png.data.byteOffset, n * 4);
  for (let i = 0; i < n; i++) {
    values[i] = channels[i * 4];
  }
  return { width: png.width, height: png.height, values };
}

export function encodeDepthPng(image: DepthImage): Buffer {
  const png = new PNG({
    width: image.width,
    height: image.height,
    colorType: 0,
    inputColorType: 0,
    bitDepth: 16,
    inputHasAlpha: false,
  });
  const bytes = image.values.buffer.slice(
    image.values.byteOffset,
    image.values.byteOffset + image.values.byteLength,
  );
  png.data = Buffer.from(bytes) as PNG["data"];
  return PNG.sync.write(png, {
    colorType: 0,
    inputColorType: 0,
    bitDepth: 16,
    inputHasAlpha: false,
  });
}
