#!/usr/bin/env node
/** `toyclassifier train --config cfg.json --seed N --out metrics.json`
 * with an optional --labels pointing at the extractor's labels JSONL to
 * size and name the classifier head. */

import { readFileSync, writeFileSync } from "node:fs";
import process from "node:process";

import { attributeName, makeDataset } from "./data.js";
import { readLabelVocabulary } from "./labels.js";
import { buildModel, DEFAULT_MODEL_CONFIG, ModelConfig } from "./model.js";
import { DEFAULT_TRAIN_CONFIG, TrainConfig, trainToy } from "./train.js";

interface CliArgs {
  config?: string;
  seed: number;
  out?: string;
  labels?: string;
  samples: number;
}

function parseArgs(argv: string[]): CliArgs {
  const args: CliArgs = { seed: 0, samples: 20 };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const next = () => {
      i++;
      if (i >= argv.length) throw new Error(`missing value for ${flag}`);
      return argv[i];
    };
    switch (flag) {
      case "--config":
        args.config = next();
        break;
      case "--seed":
        args.seed = Number.parseInt(next(), 10);
        break;
      case "--out":
        args.out = next();
        break;
      case "--labels":
        args.labels = next();
        break;
      case "--samples":
        args.samples = Number.parseInt(next(), 10);
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!Number.isFinite(args.seed)) throw new Error("--seed must be an integer");
  return args;
}

export interface TrainRunResult {
  modelConfig: ModelConfig;
  trainConfig: TrainConfig;
  seed: number;
  labelNames: string[];
  parameterCount: number;
  initial: { loss: number; auc: number | null };
  epochs: { epoch: number; loss: number; auc: number | null }[];
  steps: number;
  finalAuc: number | null;
}

export function runTrain(args: CliArgs): TrainRunResult {
  let modelConfig: ModelConfig = { ...DEFAULT_MODEL_CONFIG };
  let trainConfig: TrainConfig = { ...DEFAULT_TRAIN_CONFIG };
  if (args.config) {
    const raw = JSON.parse(readFileSync(args.config, "utf-8"));
    modelConfig = { ...modelConfig, ...(raw.model ?? {}) };
    trainConfig = { ...trainConfig, ...(raw.train ?? {}) };
  }
  let labelNames: string[];
  if (args.labels) {
    labelNames = readLabelVocabulary(args.labels);
    if (labelNames.length === 0) throw new Error(`no labels found in ${args.labels}`);
    modelConfig = { ...modelConfig, labelCount: labelNames.length };
  } else {
    labelNames = Array.from({ length: modelConfig.labelCount }, (_, i) => attributeName(i));
  }

  const model = buildModel(modelConfig, args.seed);
  const samples = makeDataset(
    args.samples,
    modelConfig.labelCount,
    modelConfig.inputSize[0],
    args.seed + 1,
  );
  const history = trainToy(model, samples, trainConfig, args.seed + 2);
  return {
    modelConfig,
    trainConfig,
    seed: args.seed,
    labelNames,
    parameterCount: model.parameterCount(),
    ...history,
  };
}

export function main(argv: string[]): number {
  if (argv.length === 0 || argv[0] !== "train") {
    process.stderr.write("usage: toyclassifier train --config cfg.json --seed N --out metrics.json [--labels labels.jsonl]\n");
    return 1;
  }
  let args: CliArgs;
  try {
    args = parseArgs(argv.slice(1));
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
  try {
    const result = runTrain(args);
    const text = JSON.stringify(result, null, 2) + "\n";
    if (args.out) {
      writeFileSync(args.out, text, "utf-8");
    } else {
      process.stdout.write(text);
    }
    const auc = result.finalAuc === null ? "n/a" : result.finalAuc.toFixed(4);
    process.stderr.write(`trained ${result.steps} steps, mean AUC ${auc}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
