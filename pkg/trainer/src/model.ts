/** The trainable network: grid encoder followed by a small ReLU MLP. */

import { Encoder, EncodeCache, GridSpec } from "./encoder.js";
import { Rng } from "./rng.js";

export interface ModelConfig {
  spec: GridSpec;
  hidden: number;
  hiddenLayers: number;
  /** explicit layer sizes [featDim, hidden..., 1]; overrides hidden fields */
  dims?: number[];
}

export interface ForwardCache {
  enc: EncodeCache;
  feat: Float64Array;
  z: Float64Array[]; // preactivations per layer
  a: Float64Array[]; // post-ReLU activations per hidden layer
}

export class Model {
  readonly encoder: Encoder;
  readonly dims: number[]; // [featDim, hidden..., 1]
  readonly w: Float64Array[]; // row-major (out x in)
  readonly b: Float64Array[];

  constructor(cfg: ModelConfig, rng: Rng) {
    this.encoder = new Encoder(cfg.spec);
    if (cfg.dims) {
      if (cfg.dims[0] !== this.encoder.outputDim || cfg.dims[cfg.dims.length - 1] !== 1) {
        throw new Error("dims must run from the encoder output dim to 1");
      }
      this.dims = [...cfg.dims];
    } else {
      this.dims = [this.encoder.outputDim];
      for (let i = 0; i < cfg.hiddenLayers; i++) this.dims.push(cfg.hidden);
      this.dims.push(1);
    }
    this.w = [];
    this.b = [];
    for (let l = 0; l < this.dims.length - 1; l++) {
      const fanIn = this.dims[l];
      const fanOut = this.dims[l + 1];
      const std = Math.sqrt(2 / fanIn);
      const wl = new Float64Array(fanOut * fanIn);
      for (let i = 0; i < wl.length; i++) wl[i] = std * rng.normal();
      this.w.push(wl);
      this.b.push(new Float64Array(fanOut));
    }
    for (const t of this.encoder.tables) {
      for (let i = 0; i < t.length; i++) t[i] = 1e-2 * rng.normal();
    }
  }

  get numLayers(): number {
    return this.dims.length - 1;
  }

  newCache(): ForwardCache {
    return {
      enc: this.encoder.newCache(),
      feat: new Float64Array(this.encoder.outputDim),
      z: this.dims.slice(1).map((d) => new Float64Array(d)),
      a: this.dims.slice(1, -1).map((d) => new Float64Array(d)),
    };
  }

  forward(x: number, y: number, zc: number, cache: ForwardCache): number {
    this.encoder.encode(x, y, zc, cache.feat, cache.enc);
    let input: Float64Array = cache.feat;
    for (let l = 0; l < this.numLayers; l++) {
      const out = cache.z[l];
      const wl = this.w[l];
      const bl = this.b[l];
      const nIn = this.dims[l];
      const nOut = this.dims[l + 1];
      for (let o = 0; o < nOut; o++) {
        let acc = bl[o];
        const base = o * nIn;
        for (let i = 0; i < nIn; i++) acc += wl[base + i] * input[i];
        out[o] = acc;
      }
      if (l < this.numLayers - 1) {
        const act = cache.a[l];
        for (let o = 0; o < nOut; o++) act[o] = out[o] > 0 ? out[o] : 0;
        input = act;
      }
    }
    return cache.z[this.numLayers - 1][0];
  }

  /** Accumulate parameter gradients for d(loss)/d(output) = coef. */
  backward(coef: number, cache: ForwardCache, grads: Gradients): void {
    const L = this.numLayers;
    let delta = new Float64Array([coef]);
    for (let l = L - 1; l >= 0; l--) {
      const nIn = this.dims[l];
      const nOut = this.dims[l + 1];
      const input = l === 0 ? cache.feat : cache.a[l - 1];
      const gw = grads.w[l];
      const gb = grads.b[l];
      for (let o = 0; o < nOut; o++) {
        const d = delta[o];
        if (d === 0) continue;
        gb[o] += d;
        const base = o * nIn;
        for (let i = 0; i < nIn; i++) gw[base + i] += d * input[i];
      }
      if (l > 0) {
        const wl = this.w[l];
        const prev = new Float64Array(nIn);
        for (let i = 0; i < nIn; i++) {
          let acc = 0;
          for (let o = 0; o < nOut; o++) acc += wl[o * nIn + i] * delta[o];
          prev[i] = cache.z[l - 1][i] > 0 ? acc : 0;
        }
        delta = prev;
      } else {
        const wl = this.w[0];
        const dFeat = new Float64Array(nIn);
        for (let i = 0; i < nIn; i++) {
          let acc = 0;
          for (let o = 0; o < nOut; o++) acc += wl[o * nIn + i] * delta[o];
          dFeat[i] = acc;
        }
        this.encoder.backward(cache.enc, dFeat, grads.tables);
      }
    }
  }
}

export interface Gradients {
  tables: Float64Array[];
  w: Float64Array[];
  b: Float64Array[];
}

export function newGradients(model: Model): Gradients {
  return {
    tables: model.encoder.tables.map((t) => new Float64Array(t.length)),
    w: model.w.map((t) => new Float64Array(t.length)),
    b: model.b.map((t) => new Float64Array(t.length)),
  };
}

export function zeroGradients(g: Gradients): void {
  for (const t of g.tables) t.fill(0);
  for (const t of g.w) t.fill(0);
  for (const t of g.b) t.fill(0);
}
