import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, test } from "vitest";

import { main, runTrain } from "../src/cli.js";
import { readLabelVocabulary } from "../src/labels.js";

function tempDir(): string {
  return mkdtempSync(join(tmpdir(), "toyclassifier-"));
}

const TINY_CONFIG = {
  model: {
    inputSize: [16, 16],
    backboneA: [2, 4],
    backboneB: [4, 8],
    fusedChannels: [4, 6],
    dilationRates: [1, 2],
    dropout: 0.0,
    normGroups: 2,
    labelCount: 4,
  },
  train: { optimizer: "adam", learningRate: 0.02, batchSize: 4, epochs: 2 },
};

describe("label vocabulary input", () => {
  test("reads distinct labels from the extractor's JSONL stream", () => {
    const dir = tempDir();
    const path = join(dir, "labels.jsonl");
    writeFileSync(
      path,
      [
        '{"report_id": "r1", "sentence_index": 0, "label": "anatomicalfinding|no|pneumothorax"}',
        '{"report_id": "r2", "sentence_index": 0, "label": "disease|no|cancer"}',
        '{"report_id": "r3", "sentence_index": 0, "label": "anatomicalfinding|no|pneumothorax"}',
      ].join("\n") + "\n",
      "utf-8",
    );
    expect(readLabelVocabulary(path)).toEqual([
      "anatomicalfinding|no|pneumothorax",
      "disease|no|cancer",
    ]);
  });

  test("rejects records without a label field", () => {
    const dir = tempDir();
    const path = join(dir, "bad.jsonl");
    writeFileSync(path, '{"report_id": "r1"}\n', "utf-8");
    expect(() => readLabelVocabulary(path)).toThrow(/label/);
  });
});

describe("train command", () => {
  test(
    "end-to-end run writes metrics json",
    () => {
      const dir = tempDir();
      const configPath = join(dir, "cfg.json");
      writeFileSync(configPath, JSON.stringify(TINY_CONFIG), "utf-8");
      const outPath = join(dir, "metrics.json");
      const code = main([
        "train",
        "--config", configPath,
        "--seed", "5",
        "--samples", "8",
        "--out", outPath,
      ]);
      expect(code).toBe(0);
      const metrics = JSON.parse(readFileSync(outPath, "utf-8"));
      expect(metrics.seed).toBe(5);
      expect(metrics.epochs.length).toBe(2);
      expect(metrics.parameterCount).toBeGreaterThan(0);
      expect(metrics.labelNames.length).toBe(4);
    },
    120_000,
  );

  test(
    "label vocabulary sizes the head",
    () => {
      const dir = tempDir();
      const labelsPath = join(dir, "labels.jsonl");
      writeFileSync(
        labelsPath,
        [
          '{"label": "anatomicalfinding|no|pneumothorax"}',
          '{"label": "anatomicalfinding|yes|scarring"}',
          '{"label": "disease|no|cancer"}',
        ].join("\n") + "\n",
        "utf-8",
      );
      const configPath = join(dir, "cfg.json");
      writeFileSync(configPath, JSON.stringify(TINY_CONFIG), "utf-8");
      const result = runTrain({
        config: configPath,
        seed: 1,
        labels: labelsPath,
        samples: 6,
      });
      expect(result.modelConfig.labelCount).toBe(3);
      expect(result.labelNames).toEqual([
        "anatomicalfinding|no|pneumothorax",
        "anatomicalfinding|yes|scarring",
        "disease|no|cancer",
      ]);
    },
    120_000,
  );

  test("usage errors exit 1", () => {
    expect(main([])).toBe(1);
    expect(main(["train", "--bogus"])).toBe(1);
  });

  test("bad config is a runtime error exit 2", () => {
    const dir = tempDir();
    const configPath = join(dir, "cfg.json");
    writeFileSync(
      configPath,
      JSON.stringify({ model: { ...TINY_CONFIG.model, backboneB: [1] } }),
      "utf-8",
    );
    expect(main(["train", "--config", configPath, "--out", join(dir, "m.json")])).toBe(2);
  });
});
