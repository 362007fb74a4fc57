/** Multi-resolution trilinear grid encoder mirroring the extractor's
 * conventions: vertex k of a level sits at (k - 1/2) * step, so cell
 * boundaries carry the half-step offset; dense levels index the lattice
 * directly, others hash with the classic three-prime XOR. */

export interface GridSpec {
  levels: number;
  featuresPerLevel: number;
  nMin: number;
  nMax: number;
  tableSize: number;
}

export const HASH_PRIMES: [bigint, bigint, bigint] = [1n, 2654435761n, 805459861n];

export function growth(spec: GridSpec): number {
  if (spec.levels === 1) return 0;
  return Math.log2(spec.nMax / spec.nMin) / (spec.levels - 1);
}

export function levelScale(spec: GridSpec, level: number): number {
  return spec.nMin * Math.pow(2, level * growth(spec)) - 1;
}

export function numCells(spec: GridSpec, level: number): number {
  return Math.floor(levelScale(spec, level) + 0.5) + 1;
}

export function vertsPerAxis(spec: GridSpec, level: number): number {
  return numCells(spec, level) + 1;
}

export function levelIsDense(spec: GridSpec, level: number): boolean {
  return Math.pow(vertsPerAxis(spec, level), 3) <= spec.tableSize;
}

export function levelEntries(spec: GridSpec, level: number, dense: boolean): number {
  return dense ? Math.pow(vertsPerAxis(spec, level), 3) : spec.tableSize;
}

export function cornerHash(ix: number, iy: number, iz: number, tableSize: number): number {
  const h =
    (BigInt(ix) * HASH_PRIMES[0]) ^
    (BigInt(iy) * HASH_PRIMES[1]) ^
    (BigInt(iz) * HASH_PRIMES[2]);
  return Number(h % BigInt(tableSize));
}

export interface EncodeCache {
  /** per level: 8 table row indices and 8 interpolation weights */
  idx: Int32Array[];
  wgt: Float64Array[];
}

export class Encoder {
  readonly spec: GridSpec;
  readonly dense: boolean[];
  readonly tables: Float64Array[]; // level-major rows of featuresPerLevel
  readonly outputDim: number;

  constructor(spec: GridSpec) {
    this.spec = spec;
    this.dense = [];
    this.tables = [];
    for (let l = 0; l < spec.levels; l++) {
      const dense = levelIsDense(spec, l);
      this.dense.push(dense);
      this.tables.push(
        new Float64Array(levelEntries(spec, l, dense) * spec.featuresPerLevel)
      );
    }
    this.outputDim = spec.levels * spec.featuresPerLevel;
  }

  newCache(): EncodeCache {
    return {
      idx: Array.from({ length: this.spec.levels }, () => new Int32Array(8)),
      wgt: Array.from({ length: this.spec.levels }, () => new Float64Array(8)),
    };
  }

  /** Features at (x,y,z) into `out`; gather indices/weights land in `cache`. */
  encode(x: number, y: number, z: number, out: Float64Array, cache: EncodeCache): void {
    const f = this.spec.featuresPerLevel;
    for (let l = 0; l < this.spec.levels; l++) {
      const scale = levelScale(this.spec, l);
      const cells = numCells(this.spec, l);
      const v = vertsPerAxis(this.spec, l);
      const px = x * scale + 0.5;
      const py = y * scale + 0.5;
      const pz = z * scale + 0.5;
      const cx = Math.min(Math.max(Math.floor(px), 0), cells - 1);
      const cy = Math.min(Math.max(Math.floor(py), 0), cells - 1);
      const cz = Math.min(Math.max(Math.floor(pz), 0), cells - 1);
      const wx = px - cx;
      const wy = py - cy;
      const wz = pz - cz;
      const table = this.tables[l];
      const idx = cache.idx[l];
      const wgt = cache.wgt[l];
      for (let k = 0; k < f; k++) out[l * f + k] = 0;
      for (let ci = 0; ci < 8; ci++) {
        const bx = ci & 1;
        const by = (ci >> 1) & 1;
        const bz = (ci >> 2) & 1;
        const gx = cx + bx;
        const gy = cy + by;
        const gz = cz + bz;
        const row = this.dense[l]
          ? gx + v * (gy + v * gz)
          : cornerHash(gx, gy, gz, this.spec.tableSize);
        const w =
          (bx ? wx : 1 - wx) * (by ? wy : 1 - wy) * (bz ? wz : 1 - wz);
        idx[ci] = row;
        wgt[ci] = w;
        for (let k = 0; k < f; k++) out[l * f + k] += w * table[row * f + k];
      }
    }
  }

  /** Scatter d(loss)/d(features) into the table gradient using a cache. */
  backward(cache: EncodeCache, dFeat: Float64Array, gradTables: Float64Array[]): void {
    const f = this.spec.featuresPerLevel;
    for (let l = 0; l < this.spec.levels; l++) {
      const idx = cache.idx[l];
      const wgt = cache.wgt[l];
      const grad = gradTables[l];
      for (let ci = 0; ci < 8; ci++) {
        const row = idx[ci];
        const w = wgt[ci];
        for (let k = 0; k < f; k++) grad[row * f + k] += w * dFeat[l * f + k];
      }
    }
  }
}
