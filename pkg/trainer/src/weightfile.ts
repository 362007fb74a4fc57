/** PTNW checkpoint writer/reader: magic, uint32 length-prefixed JSON header,
 * float32 little-endian payload (tables per level, then W row-major and b
 * per layer). */

import { readFileSync, writeFileSync } from "node:fs";

import { GridSpec, levelEntries, levelIsDense } from "./encoder.js";
import { Model } from "./model.js";

const MAGIC = "PTNW";
const VERSION = 1;

export function exportWeights(model: Model, path: string): void {
  const spec = model.encoder.spec;
  const dense = model.encoder.dense;
  const header = {
    version: VERSION,
    dims: 3,
    encoder: {
      levels: spec.levels,
      features_per_level: spec.featuresPerLevel,
      n_min: spec.nMin,
      n_max: spec.nMax,
      table_size: spec.tableSize,
      dense,
    },
    mlp_dims: model.dims,
  };
  const blob = Buffer.from(stableJson(header), "utf-8");
  const arrays: Float64Array[] = [...model.encoder.tables];
  for (let l = 0; l < model.numLayers; l++) {
    arrays.push(model.w[l]);
    arrays.push(model.b[l]);
  }
  const floats = arrays.reduce((n, a) => n + a.length, 0);
  const out = Buffer.alloc(4 + 4 + blob.length + 4 * floats);
  out.write(MAGIC, 0, "ascii");
  out.writeUInt32LE(blob.length, 4);
  blob.copy(out, 8);
  let off = 8 + blob.length;
  for (const a of arrays) {
    for (let i = 0; i < a.length; i++) {
      out.writeFloatLE(Math.fround(a[i]), off);
      off += 4;
    }
  }
  writeFileSync(path, out);
}

/** Key order matching the exporter in the extractor package (sorted). */
function stableJson(value: unknown): string {
  if (Array.isArray(value)) {
    return `[${value.map(stableJson).join(",")}]`;
  }
  if (value !== null && typeof value === "object") {
    const entries = Object.entries(value as Record<string, unknown>)
      .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
      .map(([k, v]) => `${JSON.stringify(k)}:${stableJson(v)}`);
    return `{${entries.join(",")}}`;
  }
  return JSON.stringify(value);
}

export interface LoadedWeights {
  spec: GridSpec;
  dense: boolean[];
  mlpDims: number[];
  tables: Float64Array[];
  w: Float64Array[];
  b: Float64Array[];
}

export function loadWeights(path: string): LoadedWeights {
  const raw = readFileSync(path);
  if (raw.subarray(0, 4).toString("ascii") !== MAGIC) {
    throw new Error(`${path}: bad magic`);
  }
  const blobLen = raw.readUInt32LE(4);
  const header = JSON.parse(raw.subarray(8, 8 + blobLen).toString("utf-8"));
  if (header.version !== VERSION) throw new Error(`${path}: unsupported version`);
  const enc = header.encoder;
  const spec: GridSpec = {
    levels: enc.levels,
    featuresPerLevel: enc.features_per_level,
    nMin: enc.n_min,
    nMax: enc.n_max,
    tableSize: enc.table_size,
  };
  const dense: boolean[] = enc.dense;
  const mlpDims: number[] = header.mlp_dims;
  const sizes: number[] = [];
  for (let l = 0; l < spec.levels; l++) {
    sizes.push(levelEntries(spec, l, dense[l]) * spec.featuresPerLevel);
  }
  for (let i = 0; i < mlpDims.length - 1; i++) {
    sizes.push(mlpDims[i + 1] * mlpDims[i]);
    sizes.push(mlpDims[i + 1]);
  }
  const expected = sizes.reduce((a, b) => a + b, 0) * 4;
  const payload = raw.subarray(8 + blobLen);
  if (payload.length !== expected) {
    throw new Error(`${path}: payload ${payload.length} bytes, expected ${expected}`);
  }
  const arrays: Float64Array[] = [];
  let off = 0;
  for (const n of sizes) {
    const a = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      a[i] = payload.readFloatLE(off);
      off += 4;
    }
    arrays.push(a);
  }
  const tables = arrays.slice(0, spec.levels);
  const w: Float64Array[] = [];
  const b: Float64Array[] = [];
  for (let i = 0; i < mlpDims.length - 1; i++) {
    w.push(arrays[spec.levels + 2 * i]);
    b.push(arrays[spec.levels + 2 * i + 1]);
  }
  return { spec, dense, mlpDims, tables, w, b };
}

export function dumpModelInto(model: Model, loaded: LoadedWeights): void {
  for (let l = 0; l < loaded.tables.length; l++) {
    model.encoder.tables[l].set(loaded.tables[l]);
  }
  for (let l = 0; l < loaded.w.length; l++) {
    model.w[l].set(loaded.w[l]);
    model.b[l].set(loaded.b[l]);
  }
}
