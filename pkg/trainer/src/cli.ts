/** CLI: `train --shape sphere --lambda 1e-2 --out w.ptnw --seed 0` plus an
 * optional JSON config file via --config, and `probe` for cross-checking a
 * checkpoint's forward pass against the extractor. */

import { readFileSync } from "node:fs";

import { Model } from "./model.js";
import { Rng } from "./rng.js";
import { train, TRAIN_DEFAULTS, TrainConfig } from "./train.js";
import { dumpModelInto, exportWeights, loadWeights } from "./weightfile.js";

function parseArgs(argv: string[]): Map<string, string> {
  const out = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const tok = argv[i];
    if (!tok.startsWith("--")) continue;
    const key = tok.slice(2);
    const val = i + 1 < argv.length && !argv[i + 1].startsWith("--") ? argv[++i] : "true";
    out.set(key, val);
  }
  return out;
}

function cmdTrain(args: Map<string, string>): number {
  let fileCfg: Partial<TrainConfig> = {};
  const cfgPath = args.get("config");
  if (cfgPath) {
    fileCfg = JSON.parse(readFileSync(cfgPath, "utf-8"));
  }
  const cfg: TrainConfig = {
    ...TRAIN_DEFAULTS,
    shape: "sphere",
    lambda: 1e-2,
    seed: 0,
    ...fileCfg,
    ...(args.has("shape") ? { shape: args.get("shape")! } : {}),
    ...(args.has("lambda") ? { lambda: Number(args.get("lambda")) } : {}),
    ...(args.has("seed") ? { seed: Number(args.get("seed")) } : {}),
    ...(args.has("steps") ? { steps: Number(args.get("steps")) } : {}),
    ...(args.has("batch") ? { batch: Number(args.get("batch")) } : {}),
    ...(args.has("lr") ? { lr: Number(args.get("lr")) } : {}),
  };
  const out = args.get("out");
  if (!out) {
    console.error("error: --out is required");
    return 2;
  }
  try {
    const t0 = Date.now();
    const result = train(cfg, (line) => console.error(line));
    exportWeights(result.model, out);
    console.log(`wrote=${out}`);
    console.log(`fit_l1=${result.fitLoss.toExponential(6)}`);
    console.log(`eikonal=${result.eikonalLoss.toExponential(6)}`);
    console.log(`seconds=${((Date.now() - t0) / 1000).toFixed(1)}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

/** Print `x y z f` lines at seeded probe points. */
function cmdProbe(args: Map<string, string>): number {
  const path = args.get("weights");
  if (!path) {
    console.error("error: --weights is required");
    return 2;
  }
  const count = args.has("count") ? Number(args.get("count")) : 64;
  const seed = args.has("seed") ? Number(args.get("seed")) : 0;
  const loaded = loadWeights(path);
  const model = new Model(
    { spec: loaded.spec, hidden: 0, hiddenLayers: 0, dims: loaded.mlpDims },
    new Rng(0)
  );
  dumpModelInto(model, loaded);
  const rng = new Rng(seed);
  const cache = model.newCache();
  for (let i = 0; i < count; i++) {
    const x = rng.next();
    const y = rng.next();
    const z = rng.next();
    const f = model.forward(x, y, z, cache);
    console.log(
      `${x.toPrecision(17)} ${y.toPrecision(17)} ${z.toPrecision(17)} ${f.toPrecision(17)}`
    );
  }
  return 0;
}

export function main(argv: string[]): number {
  if (argv[0] === "train") return cmdTrain(parseArgs(argv.slice(1)));
  if (argv[0] === "probe") return cmdProbe(parseArgs(argv.slice(1)));
  console.error("usage: train --shape sphere|torus --lambda L --out FILE --seed N");
  console.error("           [--steps N] [--batch N] [--lr F] [--config FILE.json]");
  console.error("       probe --weights FILE [--count N] [--seed N]");
  return 2;
}

const code = main(process.argv.slice(2));
if (code !== 0) process.exit(code);
