/**
 * Client-side sphere preview: inverse-map an orbit camera view of an
 * equirectangular image into an output pixel buffer. Pure math over
 * typed arrays so it runs (and is tested) without a GPU; the canvas
 * layer just blits the result. Falls back gracefully because it never
 * needs a 3D context in the first place.
 */

export interface EquirectImage {
  width: number;
  height: number;
  data: Uint8ClampedArray; // RGBA
}

export function renderSphereView(
  src: EquirectImage,
  yaw: number,
  pitch: number,
  outSize: number,
  fovDeg = 75,
): Uint8ClampedArray {
  const out = new Uint8ClampedArray(outSize * outSize * 4);
  const f = outSize / 2 / Math.tan(((fovDeg / 2) * Math.PI) / 180);
  const cy = Math.cos(yaw);
  const sy = Math.sin(yaw);
  const cp = Math.cos(pitch);
  const sp = Math.sin(pitch);
  for (let j = 0; j < outSize; j++) {
    for (let i = 0; i < outSize; i++) {
      // camera ray (x right, y up, z forward), then yaw/pitch orbit
      const rx = i + 0.5 - outSize / 2;
      const ry = outSize / 2 - (j + 0.5);
      const rz = f;
      const n = Math.hypot(rx, ry, rz);
      let x = rx / n;
      let y = ry / n;
      let z = rz / n;
      // pitch about the x axis (positive pitch looks up)
      const y2 = y * cp + z * sp;
      const z2 = -y * sp + z * cp;
      y = y2;
      z = z2;
      // yaw about the vertical
      const x3 = x * cy + z * sy;
      const z3 = -x * sy + z * cy;
      x = x3;
      z = z3;
      // world frame: panorama up is +y here; phi from +z toward +x
      const phi = Math.atan2(x, z) + Math.PI;
      const theta = Math.acos(Math.max(-1, Math.min(1, y)));
      const u = (phi / (2 * Math.PI)) * src.width;
      const v = (theta / Math.PI) * src.height;
      const si = Math.min(src.width - 1, Math.max(0, Math.floor(u)));
      const sj = Math.min(src.height - 1, Math.max(0, Math.floor(v)));
      const sidx = (sj * src.width + si) * 4;
      const oidx = (j * outSize + i) * 4;
      out[oidx] = src.data[sidx];
      out[oidx + 1] = src.data[sidx + 1];
      out[oidx + 2] = src.data[sidx + 2];
      out[oidx + 3] = 255;
    }
  }
  return out;
}
