/** Adam training loop over the synthetic dataset, fully seeded. */

import { evalAuc } from "./auc.js";
import { Sample } from "./data.js";
import { Param } from "./layers.js";
import { Model } from "./model.js";
import { Rng } from "./rng.js";

export interface TrainConfig {
  optimizer: "adam";
  learningRate: number;
  batchSize: number;
  epochs: number;
}

export const DEFAULT_TRAIN_CONFIG: TrainConfig = {
  optimizer: "adam",
  learningRate: 0.01,
  batchSize: 10,
  epochs: 100,
};

export function validateTrainConfig(config: TrainConfig): void {
  if (config.optimizer !== "adam") throw new Error(`unsupported optimizer ${config.optimizer}`);
  if (config.learningRate <= 0) throw new Error("learning rate must be positive");
  if (config.batchSize <= 0) throw new Error("batch size must be positive");
  if (config.epochs < 0) throw new Error("epochs must be >= 0");
}

class Adam {
  private readonly m: Float64Array[];
  private readonly v: Float64Array[];
  private t = 0;
  private readonly beta1 = 0.9;
  private readonly beta2 = 0.999;
  private readonly eps = 1e-8;

  constructor(private readonly params: Param[], private readonly lr: number) {
    this.m = params.map((p) => new Float64Array(p.value.length));
    this.v = params.map((p) => new Float64Array(p.value.length));
  }

  step(): void {
    this.t++;
    const correction1 = 1 - this.beta1 ** this.t;
    const correction2 = 1 - this.beta2 ** this.t;
    for (let k = 0; k < this.params.length; k++) {
      const { value, grad } = this.params[k];
      const m = this.m[k];
      const v = this.v[k];
      for (let i = 0; i < value.length; i++) {
        m[i] = this.beta1 * m[i] + (1 - this.beta1) * grad[i];
        v[i] = this.beta2 * v[i] + (1 - this.beta2) * grad[i] * grad[i];
        const mHat = m[i] / correction1;
        const vHat = v[i] / correction2;
        value[i] -= (this.lr * mHat) / (Math.sqrt(vHat) + this.eps);
      }
    }
  }
}

export interface EpochMetrics {
  epoch: number;
  loss: number;
  auc: number | null;
}

export interface TrainHistory {
  initial: { loss: number; auc: number | null };
  epochs: EpochMetrics[];
  steps: number;
  finalAuc: number | null;
}

export function evaluate(model: Model, samples: Sample[]): { loss: number; auc: number | null } {
  const scores: number[][] = [];
  const truths: number[][] = [];
  let lossSum = 0;
  for (const sample of samples) {
    const probs = model.forward(sample.image, false);
    lossSum += model.lossAndGrad(probs, sample.targets).loss;
    scores.push(Array.from(probs));
    truths.push(Array.from(sample.targets));
  }
  return { loss: lossSum / samples.length, auc: evalAuc(scores, truths).mean };
}

export function trainToy(
  model: Model,
  samples: Sample[],
  config: TrainConfig,
  seed = 0,
): TrainHistory {
  validateTrainConfig(config);
  const optimizer = new Adam(model.params(), config.learningRate);
  const rng = new Rng(seed ^ 0x2545f491);
  const initial = evaluate(model, samples);
  const history: EpochMetrics[] = [];
  let steps = 0;

  const order = samples.map((_, i) => i);
  for (let epoch = 0; epoch < config.epochs; epoch++) {
    rng.shuffle(order);
    let lossSum = 0;
    let batches = 0;
    for (let start = 0; start < order.length; start += config.batchSize) {
      const batch = order.slice(start, start + config.batchSize);
      model.zeroGrads();
      let batchLoss = 0;
      for (const idx of batch) {
        const sample = samples[idx];
        const probs = model.forward(sample.image, true);
        const { loss, grad } = model.lossAndGrad(probs, sample.targets);
        batchLoss += loss;
        // average gradients over the batch
        const scaled = new Float64Array(grad.length);
        for (let i = 0; i < grad.length; i++) scaled[i] = grad[i] / batch.length;
        model.backward(scaled);
      }
      batchLoss /= batch.length;
      if (!Number.isFinite(batchLoss)) {
        throw new Error(`training diverged: non-finite loss at step ${steps}`);
      }
      optimizer.step();
      steps++;
      lossSum += batchLoss;
      batches++;
    }
    const { auc } = evaluate(model, samples);
    history.push({ epoch, loss: lossSum / Math.max(1, batches), auc });
  }

  const finalAuc = history.length > 0 ? history[history.length - 1].auc : initial.auc;
  return { initial, epochs: history, steps, finalAuc };
}
