/** Analytic signed distance targets on the unit cube, centred at (.5,.5,.5). */

export type SdfFn = (x: number, y: number, z: number) => number;

export function sphereSdf(radius = 0.3, cx = 0.5, cy = 0.5, cz = 0.5): SdfFn {
  return (x, y, z) => Math.hypot(x - cx, y - cy, z - cz) - radius;
}

export function torusSdf(major = 0.25, minor = 0.1, cx = 0.5, cy = 0.5, cz = 0.5): SdfFn {
  return (x, y, z) => {
    const qx = Math.hypot(x - cx, y - cy) - major;
    return Math.hypot(qx, z - cz) - minor;
  };
}

export function makeSdf(shape: string): SdfFn {
  if (shape === "sphere") return sphereSdf();
  if (shape === "torus") return torusSdf();
  throw new Error(`unknown shape: ${shape}`);
}
