/** Layers with hand-derived backward passes over float64 HWC tensors.
 * Every layer caches what its backward needs, so a layer instance handles
 * one sample at a time: forward, then backward, then the next sample. */

import { Rng } from "./rng.js";
import { Tensor, zeros } from "./tensor.js";

export interface Param {
  name: string;
  value: Float64Array;
  grad: Float64Array;
}

export function makeParam(name: string, size: number): Param {
  return { name, value: new Float64Array(size), grad: new Float64Array(size) };
}

export interface Layer {
  forward(x: Tensor, training: boolean): Tensor;
  backward(gradOut: Tensor): Tensor;
  params(): Param[];
}

/** 3x3 (or kxk) convolution, stride 1, zero same-padding, optional dilation. */
export class Conv2d implements Layer {
  readonly weight: Param;
  readonly bias: Param;
  private input: Tensor | null = null;

  constructor(
    readonly cin: number,
    readonly cout: number,
    readonly kernel: number,
    readonly dilation: number,
    rng?: Rng,
  ) {
    this.weight = makeParam(`conv${kernel}x${kernel}d${dilation}.w`, kernel * kernel * cin * cout);
    this.bias = makeParam(`conv${kernel}x${kernel}d${dilation}.b`, cout);
    if (rng) {
      const scale = Math.sqrt(2.0 / (kernel * kernel * cin));
      for (let i = 0; i < this.weight.value.length; i++) {
        this.weight.value[i] = rng.gauss() * scale;
      }
    }
  }

  private wIndex(ky: number, kx: number, ci: number, co: number): number {
    return ((ky * this.kernel + kx) * this.cin + ci) * this.cout + co;
  }

  forward(x: Tensor, _training: boolean): Tensor {
    if (x.c !== this.cin) {
      throw new Error(`conv expects ${this.cin} channels, got ${x.c}`);
    }
    this.input = x;
    const out = zeros(x.h, x.w, this.cout);
    const center = Math.floor(this.kernel / 2);
    const w = this.weight.value;
    for (let y = 0; y < x.h; y++) {
      for (let xx = 0; xx < x.w; xx++) {
        for (let co = 0; co < this.cout; co++) {
          let acc = this.bias.value[co];
          for (let ky = 0; ky < this.kernel; ky++) {
            const sy = y + (ky - center) * this.dilation;
            if (sy < 0 || sy >= x.h) continue;
            for (let kx = 0; kx < this.kernel; kx++) {
              const sx = xx + (kx - center) * this.dilation;
              if (sx < 0 || sx >= x.w) continue;
              const base = (sy * x.w + sx) * x.c;
              for (let ci = 0; ci < this.cin; ci++) {
                acc += w[this.wIndex(ky, kx, ci, co)] * x.data[base + ci];
              }
            }
          }
          out.data[(y * x.w + xx) * this.cout + co] = acc;
        }
      }
    }
    return out;
  }

  backward(gradOut: Tensor): Tensor {
    const x = this.input;
    if (!x) throw new Error("backward before forward");
    const gradIn = zeros(x.h, x.w, x.c);
    const center = Math.floor(this.kernel / 2);
    const w = this.weight.value;
    for (let y = 0; y < x.h; y++) {
      for (let xx = 0; xx < x.w; xx++) {
        for (let co = 0; co < this.cout; co++) {
          const g = gradOut.data[(y * x.w + xx) * this.cout + co];
          if (g === 0) continue;
          this.bias.grad[co] += g;
          for (let ky = 0; ky < this.kernel; ky++) {
            const sy = y + (ky - center) * this.dilation;
            if (sy < 0 || sy >= x.h) continue;
            for (let kx = 0; kx < this.kernel; kx++) {
              const sx = xx + (kx - center) * this.dilation;
              if (sx < 0 || sx >= x.w) continue;
              const base = (sy * x.w + sx) * x.c;
              for (let ci = 0; ci < this.cin; ci++) {
                const idx = this.wIndex(ky, kx, ci, co);
                this.weight.grad[idx] += x.data[base + ci] * g;
                gradIn.data[base + ci] += w[idx] * g;
              }
            }
          }
        }
      }
    }
    return gradIn;
  }

  params(): Param[] {
    return [this.weight, this.bias];
  }
}

/** Group normalization over (H, W, channels-per-group), learnable scale/shift. */
export class GroupNorm implements Layer {
  readonly gamma: Param;
  readonly beta: Param;
  private readonly eps = 1e-5;
  private input: Tensor | null = null;
  private normalized: Tensor | null = null;
  private means: Float64Array | null = null;
  private invStds: Float64Array | null = null;

  constructor(readonly groups: number, readonly channels: number) {
    if (channels % groups !== 0) {
      throw new Error(`group count ${groups} must divide channel count ${channels}`);
    }
    this.gamma = makeParam("gn.gamma", channels);
    this.beta = makeParam("gn.beta", channels);
    this.gamma.value.fill(1.0);
  }

  forward(x: Tensor, _training: boolean): Tensor {
    this.input = x;
    const per = this.channels / this.groups;
    const out = zeros(x.h, x.w, x.c);
    const normalized = zeros(x.h, x.w, x.c);
    const means = new Float64Array(this.groups);
    const invStds = new Float64Array(this.groups);
    const spatial = x.h * x.w;
    for (let g = 0; g < this.groups; g++) {
      let sum = 0;
      for (let p = 0; p < spatial; p++) {
        for (let ch = g * per; ch < (g + 1) * per; ch++) sum += x.data[p * x.c + ch];
      }
      const n = spatial * per;
      const mean = sum / n;
      let varSum = 0;
      for (let p = 0; p < spatial; p++) {
        for (let ch = g * per; ch < (g + 1) * per; ch++) {
          const d = x.data[p * x.c + ch] - mean;
          varSum += d * d;
        }
      }
      const invStd = 1.0 / Math.sqrt(varSum / n + this.eps);
      means[g] = mean;
      invStds[g] = invStd;
      for (let p = 0; p < spatial; p++) {
        for (let ch = g * per; ch < (g + 1) * per; ch++) {
          const xn = (x.data[p * x.c + ch] - mean) * invStd;
          normalized.data[p * x.c + ch] = xn;
          out.data[p * x.c + ch] = this.gamma.value[ch] * xn + this.beta.value[ch];
        }
      }
    }
    this.normalized = normalized;
    this.means = means;
    this.invStds = invStds;
    return out;
  }

  backward(gradOut: Tensor): Tensor {
    const x = this.input;
    const xn = this.normalized;
    if (!x || !xn || !this.means || !this.invStds) throw new Error("backward before forward");
    const per = this.channels / this.groups;
    const spatial = x.h * x.w;
    const gradIn = zeros(x.h, x.w, x.c);
    for (let g = 0; g < this.groups; g++) {
      const invStd = this.invStds[g];
      const n = spatial * per;
      // accumulate dL/dxn plus the two reduction terms of the norm backward
      let sumDxn = 0;
      let sumDxnXn = 0;
      for (let p = 0; p < spatial; p++) {
        for (let ch = g * per; ch < (g + 1) * per; ch++) {
          const go = gradOut.data[p * x.c + ch];
          const xhat = xn.data[p * x.c + ch];
          this.gamma.grad[ch] += go * xhat;
          this.beta.grad[ch] += go;
          const dxn = go * this.gamma.value[ch];
          sumDxn += dxn;
          sumDxnXn += dxn * xhat;
        }
      }
      for (let p = 0; p < spatial; p++) {
        for (let ch = g * per; ch < (g + 1) * per; ch++) {
          const go = gradOut.data[p * x.c + ch];
          const xhat = xn.data[p * x.c + ch];
          const dxn = go * this.gamma.value[ch];
          gradIn.data[p * x.c + ch] =
            invStd * (dxn - sumDxn / n - (xhat * sumDxnXn) / n);
        }
      }
    }
    return gradIn;
  }

  params(): Param[] {
    return [this.gamma, this.beta];
  }
}

export class ReLU implements Layer {
  private mask: Uint8Array | null = null;

  forward(x: Tensor, _training: boolean): Tensor {
    const out = zeros(x.h, x.w, x.c);
    const mask = new Uint8Array(x.data.length);
    for (let i = 0; i < x.data.length; i++) {
      if (x.data[i] > 0) {
        out.data[i] = x.data[i];
        mask[i] = 1;
      }
    }
    this.mask = mask;
    return out;
  }

  backward(gradOut: Tensor): Tensor {
    if (!this.mask) throw new Error("backward before forward");
    const gradIn = zeros(gradOut.h, gradOut.w, gradOut.c);
    for (let i = 0; i < gradOut.data.length; i++) {
      if (this.mask[i]) gradIn.data[i] = gradOut.data[i];
    }
    return gradIn;
  }

  params(): Param[] {
    return [];
  }
}

/** 2x2 max pooling, stride 2. Input sides must be even. */
export class MaxPool2 implements Layer {
  private argmax: Int32Array | null = null;
  private inShape: [number, number, number] | null = null;

  forward(x: Tensor, _training: boolean): Tensor {
    if (x.h % 2 !== 0 || x.w % 2 !== 0) {
      throw new Error(`max pooling needs even sides, got ${x.h}x${x.w}`);
    }
    const oh = x.h / 2;
    const ow = x.w / 2;
    const out = zeros(oh, ow, x.c);
    const argmax = new Int32Array(oh * ow * x.c);
    for (let y = 0; y < oh; y++) {
      for (let xx = 0; xx < ow; xx++) {
        for (let ch = 0; ch < x.c; ch++) {
          let best = -Infinity;
          let bestIdx = -1;
          for (let dy = 0; dy < 2; dy++) {
            for (let dx = 0; dx < 2; dx++) {
              const idx = ((2 * y + dy) * x.w + (2 * xx + dx)) * x.c + ch;
              if (x.data[idx] > best) {
                best = x.data[idx];
                bestIdx = idx;
              }
            }
          }
          out.data[(y * ow + xx) * x.c + ch] = best;
          argmax[(y * ow + xx) * x.c + ch] = bestIdx;
        }
      }
    }
    this.argmax = argmax;
    this.inShape = [x.h, x.w, x.c];
    return out;
  }

  backward(gradOut: Tensor): Tensor {
    if (!this.argmax || !this.inShape) throw new Error("backward before forward");
    const [h, w, c] = this.inShape;
    const gradIn = zeros(h, w, c);
    for (let i = 0; i < gradOut.data.length; i++) {
      gradIn.data[this.argmax[i]] += gradOut.data[i];
    }
    return gradIn;
  }

  params(): Param[] {
    return [];
  }
}

/** Channel-wise (spatial) dropout; active only during training. */
export class SpatialDropout implements Layer {
  private mask: Float64Array | null = null;

  constructor(readonly rate: number, private readonly rng: Rng) {
    if (rate < 0 || rate >= 1) throw new Error(`dropout rate must be in [0, 1), got ${rate}`);
  }

  forward(x: Tensor, training: boolean): Tensor {
    const mask = new Float64Array(x.c);
    if (!training || this.rate === 0) {
      mask.fill(1.0);
    } else {
      const keep = 1.0 - this.rate;
      for (let ch = 0; ch < x.c; ch++) {
        mask[ch] = this.rng.next() < keep ? 1.0 / keep : 0.0;
      }
    }
    this.mask = mask;
    const out = zeros(x.h, x.w, x.c);
    for (let p = 0; p < x.h * x.w; p++) {
      for (let ch = 0; ch < x.c; ch++) {
        out.data[p * x.c + ch] = x.data[p * x.c + ch] * mask[ch];
      }
    }
    return out;
  }

  backward(gradOut: Tensor): Tensor {
    const mask = this.mask;
    if (!mask) throw new Error("backward before forward");
    const gradIn = zeros(gradOut.h, gradOut.w, gradOut.c);
    for (let p = 0; p < gradOut.h * gradOut.w; p++) {
      for (let ch = 0; ch < gradOut.c; ch++) {
        gradIn.data[p * gradOut.c + ch] = gradOut.data[p * gradOut.c + ch] * mask[ch];
      }
    }
    return gradIn;
  }

  params(): Param[] {
    return [];
  }
}

/** Fully connected head over a flat feature vector. */
export class Dense {
  readonly weight: Param;
  readonly bias: Param;
  private input: Float64Array | null = null;

  constructor(readonly inSize: number, readonly outSize: number, rng?: Rng) {
    this.weight = makeParam("dense.w", inSize * outSize);
    this.bias = makeParam("dense.b", outSize);
    if (rng) {
      const scale = Math.sqrt(1.0 / inSize);
      for (let i = 0; i < this.weight.value.length; i++) {
        this.weight.value[i] = rng.gauss() * scale;
      }
    }
  }

  forward(x: Float64Array): Float64Array {
    this.input = x;
    const out = new Float64Array(this.outSize);
    for (let o = 0; o < this.outSize; o++) {
      let acc = this.bias.value[o];
      const row = o * this.inSize;
      for (let i = 0; i < this.inSize; i++) acc += this.weight.value[row + i] * x[i];
      out[o] = acc;
    }
    return out;
  }

  backward(gradOut: Float64Array): Float64Array {
    const x = this.input;
    if (!x) throw new Error("backward before forward");
    const gradIn = new Float64Array(this.inSize);
    for (let o = 0; o < this.outSize; o++) {
      const g = gradOut[o];
      this.bias.grad[o] += g;
      const row = o * this.inSize;
      for (let i = 0; i < this.inSize; i++) {
        this.weight.grad[row + i] += x[i] * g;
        gradIn[i] += this.weight.value[row + i] * g;
      }
    }
    return gradIn;
  }

  params(): Param[] {
    return [this.weight, this.bias];
  }
}

/** Second-order pooling: spatial average of per-position outer products,
 * vectorized upper triangle. Output length is C(C+1)/2. */
export function secondOrderPoolingForward(x: Tensor): Float64Array {
  const c = x.c;
  const spatial = x.h * x.w;
  const out = new Float64Array((c * (c + 1)) / 2);
  for (let p = 0; p < spatial; p++) {
    const base = p * c;
    let k = 0;
    for (let a = 0; a < c; a++) {
      const fa = x.data[base + a];
      for (let b = a; b < c; b++) {
        out[k++] += fa * x.data[base + b];
      }
    }
  }
  for (let i = 0; i < out.length; i++) out[i] /= spatial;
  return out;
}

export function secondOrderPoolingBackward(x: Tensor, gradOut: Float64Array): Tensor {
  const c = x.c;
  const spatial = x.h * x.w;
  // symmetric matrix view of the upper-triangle gradient
  const sym = new Float64Array(c * c);
  let k = 0;
  for (let a = 0; a < c; a++) {
    for (let b = a; b < c; b++) {
      sym[a * c + b] = gradOut[k];
      sym[b * c + a] = gradOut[k];
      k++;
    }
  }
  const gradIn = zeros(x.h, x.w, x.c);
  for (let p = 0; p < spatial; p++) {
    const base = p * c;
    for (let ch = 0; ch < c; ch++) {
      let acc = 0;
      for (let b = 0; b < c; b++) acc += sym[ch * c + b] * x.data[base + b];
      // the diagonal entry contributes twice (d(f_c^2)/df_c = 2 f_c)
      acc += sym[ch * c + ch] * x.data[base + ch];
      gradIn.data[base + ch] = acc / spatial;
    }
  }
  return gradIn;
}

export class SecondOrderPooling {
  private input: Tensor | null = null;

  forward(x: Tensor): Float64Array {
    this.input = x;
    return secondOrderPoolingForward(x);
  }

  backward(gradOut: Float64Array): Tensor {
    if (!this.input) throw new Error("backward before forward");
    return secondOrderPoolingBackward(this.input, gradOut);
  }
}

export function sigmoid(logits: Float64Array): Float64Array {
  const out = new Float64Array(logits.length);
  for (let i = 0; i < logits.length; i++) out[i] = 1.0 / (1.0 + Math.exp(-logits[i]));
  return out;
}
