/** Training loop: L1 fit to the analytic SDF plus an eikonal penalty on
 * near-surface samples, with the input gradient taken by central
 * differences so only first-order backprop is needed. */

import { Adam, ADAM_DEFAULTS } from "./adam.js";
import { GridSpec } from "./encoder.js";
import { Model, newGradients, zeroGradients } from "./model.js";
import { Rng } from "./rng.js";
import { makeSdf, SdfFn } from "./sdf.js";

export interface TrainConfig {
  shape: string;
  spec: GridSpec;
  hidden: number;
  hiddenLayers: number;
  lambda: number;
  steps: number;
  batch: number;
  seed: number;
  lr: number;
  nearBand: number; // eikonal applies where |sdf_gt| is below this
  clampDist: number; // distance supervision saturates beyond this
  fdStep: number;
}

export const TRAIN_DEFAULTS: Omit<TrainConfig, "shape" | "lambda" | "seed"> = {
  spec: { levels: 2, featuresPerLevel: 2, nMin: 2, nMax: 4, tableSize: 1 << 14 },
  hidden: 16,
  hiddenLayers: 2,
  steps: 4000,
  batch: 192,
  lr: 5e-3,
  nearBand: 0.1,
  clampDist: 0.05,
  fdStep: 5e-4,
};

function clamp(v: number, lim: number): number {
  return v > lim ? lim : v < -lim ? -lim : v;
}

export interface TrainResult {
  model: Model;
  fitLoss: number;
  eikonalLoss: number;
}

export function train(cfg: TrainConfig, log?: (line: string) => void): TrainResult {
  const rng = new Rng(cfg.seed);
  const model = new Model(
    { spec: cfg.spec, hidden: cfg.hidden, hiddenLayers: cfg.hiddenLayers },
    rng
  );
  const sdf: SdfFn = makeSdf(cfg.shape);
  const opt = new Adam(model, { ...ADAM_DEFAULTS, lr: cfg.lr });
  const grads = newGradients(model);
  const cache = model.newCache();
  const fdCaches = Array.from({ length: 6 }, () => model.newCache());
  const h = cfg.fdStep;
  let fitLoss = 0;
  let eikLoss = 0;
  for (let step = 0; step < cfg.steps; step++) {
    zeroGradients(grads);
    let fitAcc = 0;
    let eikAcc = 0;
    let nearCount = 0;
    const pts: number[][] = [];
    for (let i = 0; i < cfg.batch; i++) {
      pts.push([rng.next(), rng.next(), rng.next()]);
    }
    for (const [x, y, z] of pts) {
      if (Math.abs(sdf(x, y, z)) < cfg.nearBand) nearCount++;
    }
    for (const [x, y, z] of pts) {
      const target = sdf(x, y, z);
      const f = model.forward(x, y, z, cache);
      // clamped distance supervision: far-field targets saturate at the
      // clamp, leaving headroom for the eikonal term to shape the gradient
      const err = f - clamp(target, cfg.clampDist);
      fitAcc += Math.abs(err);
      if (err !== 0) {
        model.backward(Math.sign(err) / cfg.batch, cache, grads);
      }
      if (Math.abs(target) < cfg.nearBand && cfg.lambda > 0 && nearCount > 0) {
        // central-difference gradient, then backprop through all six probes
        const g = new Float64Array(3);
        for (let ax = 0; ax < 3; ax++) {
          const p = [x, y, z];
          const lo = Math.max(0, p[ax] - h);
          const hi = Math.min(1, p[ax] + h);
          const span = hi - lo;
          p[ax] = hi;
          const fp = model.forward(p[0], p[1], p[2], fdCaches[2 * ax]);
          p[ax] = lo;
          const fm = model.forward(p[0], p[1], p[2], fdCaches[2 * ax + 1]);
          g[ax] = (fp - fm) / span;
        }
        const norm = Math.hypot(g[0], g[1], g[2]);
        eikAcc += (norm - 1) ** 2;
        if (norm > 1e-9) {
          const coef = (cfg.lambda * 2 * (norm - 1)) / norm / nearCount;
          for (let ax = 0; ax < 3; ax++) {
            const p = [x, y, z];
            const lo = Math.max(0, p[ax] - h);
            const hi = Math.min(1, p[ax] + h);
            const span = hi - lo;
            const c = (coef * g[ax]) / span;
            model.backward(c, fdCaches[2 * ax], grads);
            model.backward(-c, fdCaches[2 * ax + 1], grads);
          }
        }
      }
    }
    opt.update(grads);
    fitLoss = fitAcc / cfg.batch;
    eikLoss = nearCount > 0 ? eikAcc / nearCount : 0;
    if (!Number.isFinite(fitLoss)) {
      throw new Error(`training diverged at step ${step} (seed ${cfg.seed})`);
    }
    if (log && (step + 1) % 500 === 0) {
      log(`step=${step + 1} fit_l1=${fitLoss.toExponential(3)} eikonal=${eikLoss.toExponential(3)}`);
    }
  }
  return { model, fitLoss, eikonalLoss: eikLoss };
}
