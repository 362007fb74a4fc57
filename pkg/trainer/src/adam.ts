/** Adam over the flattened parameter groups. */

import { Gradients, Model } from "./model.js";

export interface AdamConfig {
  lr: number;
  beta1: number;
  beta2: number;
  eps: number;
}

export const ADAM_DEFAULTS: AdamConfig = { lr: 5e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 };

export class Adam {
  private m: Float64Array[];
  private v: Float64Array[];
  private step = 0;
  private params: Float64Array[];

  constructor(model: Model, readonly cfg: AdamConfig = ADAM_DEFAULTS) {
    this.params = [...model.encoder.tables, ...model.w, ...model.b];
    this.m = this.params.map((p) => new Float64Array(p.length));
    this.v = this.params.map((p) => new Float64Array(p.length));
  }

  update(grads: Gradients): void {
    const gs = [...grads.tables, ...grads.w, ...grads.b];
    this.step += 1;
    const { lr, beta1, beta2, eps } = this.cfg;
    const bc1 = 1 - Math.pow(beta1, this.step);
    const bc2 = 1 - Math.pow(beta2, this.step);
    for (let gi = 0; gi < gs.length; gi++) {
      const p = this.params[gi];
      const g = gs[gi];
      const m = this.m[gi];
      const v = this.v[gi];
      for (let i = 0; i < p.length; i++) {
        const gv = g[i];
        m[i] = beta1 * m[i] + (1 - beta1) * gv;
        v[i] = beta2 * v[i] + (1 - beta2) * gv * gv;
        p[i] -= (lr * (m[i] / bc1)) / (Math.sqrt(v[i] / bc2) + eps);
      }
    }
  }
}
