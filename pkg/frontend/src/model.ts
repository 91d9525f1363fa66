/** The toy fine-grained classifier.
 *
 * Two small convolutional backbones run in parallel; feature maps of equal
 * spatial size are concatenated level by level, fused by 1x1 convolutions,
 * and refined by dilated blocks cascaded with max pooling. Second-order
 * pooling maps the last feature map to a covariance-style vector feeding a
 * sigmoid multi-label head.
 */

import {
  Conv2d,
  Dense,
  GroupNorm,
  Layer,
  MaxPool2,
  Param,
  ReLU,
  SecondOrderPooling,
  sigmoid,
  SpatialDropout,
} from "./layers.js";
import { Rng } from "./rng.js";
import { addInPlace, concatChannels, splitChannels, Tensor, zeros } from "./tensor.js";

export interface ModelConfig {
  inputSize: [number, number];
  backboneA: number[];
  backboneB: number[];
  fusedChannels: number[];
  dilationRates: number[];
  dropout: number;
  normGroups: number;
  labelCount: number;
}

export const DEFAULT_MODEL_CONFIG: ModelConfig = {
  inputSize: [24, 24],
  backboneA: [4, 8, 16],
  backboneB: [8, 16, 32],
  fusedChannels: [8, 16, 24],
  dilationRates: [1, 2],
  dropout: 0.1,
  normGroups: 4,
  labelCount: 6,
};

function groupsFor(requested: number, channels: number): number {
  let groups = Math.min(requested, channels);
  while (channels % groups !== 0) groups--;
  return groups;
}

export function validateConfig(config: ModelConfig): void {
  const [h, w] = config.inputSize;
  const levels = config.backboneA.length;
  if (config.backboneB.length !== levels) {
    throw new Error(
      `backbones must have the same number of stages so paired feature maps ` +
        `share spatial sizes; got ${levels} vs ${config.backboneB.length}`,
    );
  }
  if (config.fusedChannels.length !== levels) {
    throw new Error(`fusedChannels must list one width per level, got ${config.fusedChannels.length}`);
  }
  const downsampling = 2 ** levels;
  if (h % downsampling !== 0 || w % downsampling !== 0) {
    throw new Error(`input ${h}x${w} must be divisible by ${downsampling} for ${levels} pooling stages`);
  }
  if (config.labelCount < 1) throw new Error("labelCount must be positive");
  if (config.dilationRates.length === 0) throw new Error("at least one dilation rate");
  for (const rate of config.dilationRates) {
    if (rate < 1) throw new Error(`dilation rates must be >= 1, got ${rate}`);
  }
}

/** Dilated convolutions in parallel, summed, normalized, regularized, fused
 * by a 1x1 convolution, added back onto the identity path. */
export class DilatedBlock implements Layer {
  readonly convs: Conv2d[];
  readonly norm: GroupNorm;
  readonly relu: ReLU;
  readonly dropout: SpatialDropout;
  readonly fuse: Conv2d;
  private input: Tensor | null = null;

  constructor(
    readonly channels: number,
    rates: number[],
    dropoutRate: number,
    normGroups: number,
    rng: Rng,
  ) {
    this.convs = rates.map((rate) => new Conv2d(channels, channels, 3, rate, rng));
    this.norm = new GroupNorm(groupsFor(normGroups, channels), channels);
    this.relu = new ReLU();
    this.dropout = new SpatialDropout(dropoutRate, rng);
    this.fuse = new Conv2d(channels, channels, 1, 1, rng);
  }

  forward(x: Tensor, training: boolean): Tensor {
    if (x.c !== this.channels) {
      throw new Error(`identity skip needs ${this.channels} channels, got ${x.c}`);
    }
    this.input = x;
    const summed = zeros(x.h, x.w, x.c);
    for (const conv of this.convs) addInPlace(summed, conv.forward(x, training));
    let out = this.norm.forward(summed, training);
    out = this.relu.forward(out, training);
    out = this.dropout.forward(out, training);
    out = this.fuse.forward(out, training);
    addInPlace(out, x);
    return out;
  }

  backward(gradOut: Tensor): Tensor {
    if (!this.input) throw new Error("backward before forward");
    let g = this.fuse.backward(gradOut);
    g = this.dropout.backward(g);
    g = this.relu.backward(g);
    g = this.norm.backward(g);
    const gradIn = zeros(gradOut.h, gradOut.w, gradOut.c);
    addInPlace(gradIn, gradOut); // identity path
    for (const conv of this.convs) addInPlace(gradIn, conv.backward(g));
    return gradIn;
  }

  params(): Param[] {
    return [
      ...this.convs.flatMap((c) => c.params()),
      ...this.norm.params(),
      ...this.fuse.params(),
    ];
  }
}

/** conv -> group norm -> relu -> pool; halves the spatial size. */
class BackboneStage {
  readonly conv: Conv2d;
  readonly norm: GroupNorm;
  readonly relu: ReLU;
  readonly pool: MaxPool2;

  constructor(cin: number, cout: number, normGroups: number, rng: Rng) {
    this.conv = new Conv2d(cin, cout, 3, 1, rng);
    this.norm = new GroupNorm(groupsFor(normGroups, cout), cout);
    this.relu = new ReLU();
    this.pool = new MaxPool2();
  }

  forward(x: Tensor, training: boolean): Tensor {
    let out = this.conv.forward(x, training);
    out = this.norm.forward(out, training);
    out = this.relu.forward(out, training);
    return this.pool.forward(out, training);
  }

  backward(gradOut: Tensor): Tensor {
    let g = this.pool.backward(gradOut);
    g = this.relu.backward(g);
    g = this.norm.backward(g);
    return this.conv.backward(g);
  }

  params(): Param[] {
    return [...this.conv.params(), ...this.norm.params()];
  }
}

export class Model {
  readonly config: ModelConfig;
  readonly stagesA: BackboneStage[];
  readonly stagesB: BackboneStage[];
  readonly fuseConvs: Conv2d[];
  readonly blocks: DilatedBlock[];
  readonly pools: MaxPool2[];
  readonly sop: SecondOrderPooling;
  readonly head: Dense;
  private lastLogits: Float64Array | null = null;
  private concatSplits: number[][] = [];

  constructor(config: ModelConfig, rng: Rng) {
    validateConfig(config);
    this.config = config;
    const levels = config.backboneA.length;
    this.stagesA = [];
    this.stagesB = [];
    let cinA = 1;
    let cinB = 1;
    for (let level = 0; level < levels; level++) {
      this.stagesA.push(new BackboneStage(cinA, config.backboneA[level], config.normGroups, rng));
      this.stagesB.push(new BackboneStage(cinB, config.backboneB[level], config.normGroups, rng));
      cinA = config.backboneA[level];
      cinB = config.backboneB[level];
    }
    this.fuseConvs = [];
    this.blocks = [];
    this.pools = [];
    for (let level = 0; level < levels; level++) {
      const lateral = config.backboneA[level] + config.backboneB[level];
      const cin = level === 0 ? lateral : config.fusedChannels[level - 1] + lateral;
      this.fuseConvs.push(new Conv2d(cin, config.fusedChannels[level], 1, 1, rng));
      this.blocks.push(
        new DilatedBlock(
          config.fusedChannels[level],
          config.dilationRates,
          config.dropout,
          config.normGroups,
          rng,
        ),
      );
      if (level < levels - 1) this.pools.push(new MaxPool2());
    }
    const lastC = config.fusedChannels[levels - 1];
    this.sop = new SecondOrderPooling();
    this.head = new Dense((lastC * (lastC + 1)) / 2, config.labelCount, rng);
  }

  /** Per-label probabilities for one input map. */
  forward(x: Tensor, training: boolean): Float64Array {
    const levels = this.stagesA.length;
    const featsA: Tensor[] = [];
    const featsB: Tensor[] = [];
    let a = x;
    let b = x;
    for (let level = 0; level < levels; level++) {
      a = this.stagesA[level].forward(a, training);
      featsA.push(a);
      b = this.stagesB[level].forward(b, training);
      featsB.push(b);
    }
    this.concatSplits = [];
    let fused: Tensor | null = null;
    for (let level = 0; level < levels; level++) {
      const parts = fused === null ? [featsA[level], featsB[level]] : [fused, featsA[level], featsB[level]];
      this.concatSplits.push(parts.map((p) => p.c));
      const merged = concatChannels(parts);
      let out = this.fuseConvs[level].forward(merged, training);
      out = this.blocks[level].forward(out, training);
      fused = level < levels - 1 ? this.pools[level].forward(out, training) : out;
    }
    const pooled = this.sop.forward(fused as Tensor);
    const logits = this.head.forward(pooled);
    this.lastLogits = logits;
    return sigmoid(logits);
  }

  /** Backpropagate from per-logit gradients; returns the input gradient. */
  backward(gradLogits: Float64Array): Tensor {
    const levels = this.stagesA.length;
    const gradPooled = this.head.backward(gradLogits);
    let gradFused = this.sop.backward(gradPooled);
    const lateralA: Tensor[] = new Array(levels);
    const lateralB: Tensor[] = new Array(levels);
    for (let level = levels - 1; level >= 0; level--) {
      if (level < levels - 1) gradFused = this.pools[level].backward(gradFused);
      let g = this.blocks[level].backward(gradFused);
      g = this.fuseConvs[level].backward(g);
      const parts = splitChannels(g, this.concatSplits[level]);
      if (level === 0) {
        lateralA[0] = parts[0];
        lateralB[0] = parts[1];
      } else {
        gradFused = parts[0];
        lateralA[level] = parts[1];
        lateralB[level] = parts[2];
      }
    }
    const gradInput = this.backboneBackward(this.stagesA, lateralA);
    addInPlace(gradInput, this.backboneBackward(this.stagesB, lateralB));
    return gradInput;
  }

  private backboneBackward(stages: BackboneStage[], lateral: Tensor[]): Tensor {
    let grad: Tensor | null = null;
    for (let level = stages.length - 1; level >= 0; level--) {
      const total = lateral[level];
      if (grad !== null) addInPlace(total, grad);
      grad = stages[level].backward(total);
    }
    return grad as Tensor;
  }

  /** Mean binary cross-entropy over labels and its logit gradient. */
  lossAndGrad(probs: Float64Array, targets: Float64Array): { loss: number; grad: Float64Array } {
    const n = probs.length;
    const grad = new Float64Array(n);
    let loss = 0;
    const eps = 1e-12;
    for (let i = 0; i < n; i++) {
      loss -= targets[i] * Math.log(probs[i] + eps) + (1 - targets[i]) * Math.log(1 - probs[i] + eps);
      grad[i] = (probs[i] - targets[i]) / n;
    }
    return { loss: loss / n, grad };
  }

  params(): Param[] {
    return [
      ...this.stagesA.flatMap((s) => s.params()),
      ...this.stagesB.flatMap((s) => s.params()),
      ...this.fuseConvs.flatMap((c) => c.params()),
      ...this.blocks.flatMap((blk) => blk.params()),
      ...this.head.params(),
    ];
  }

  parameterCount(): number {
    return this.params().reduce((acc, p) => acc + p.value.length, 0);
  }

  zeroGrads(): void {
    for (const p of this.params()) p.grad.fill(0);
  }
}

export function buildModel(config: Partial<ModelConfig> = {}, seed = 0): Model {
  return new Model({ ...DEFAULT_MODEL_CONFIG, ...config }, new Rng(seed ^ 0x5f3759df));
}
