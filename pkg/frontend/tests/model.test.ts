import { describe, expect, test } from "vitest";

import { Conv2d } from "../src/layers.js";
import { buildModel, DEFAULT_MODEL_CONFIG, DilatedBlock } from "../src/model.js";
import { Rng } from "../src/rng.js";
import { Tensor, zeros } from "../src/tensor.js";

function randomTensor(h: number, w: number, c: number, rng: Rng): Tensor {
  const t = zeros(h, w, c);
  for (let i = 0; i < t.data.length; i++) t.data[i] = rng.gauss();
  return t;
}

describe("model construction", () => {
  test("64x64 input with 4 labels yields 4 probabilities in (0, 1)", () => {
    const model = buildModel({ inputSize: [64, 64], labelCount: 4 }, 1);
    const x = randomTensor(64, 64, 1, new Rng(5));
    const probs = model.forward(x, false);
    expect(probs.length).toBe(4);
    for (const p of probs) {
      expect(p).toBeGreaterThan(0);
      expect(p).toBeLessThan(1);
    }
  });

  test("mismatched backbone stage counts are a construction error", () => {
    expect(() =>
      buildModel({ backboneA: [4, 8], backboneB: [8, 16, 32] }, 1),
    ).toThrow(/same number of stages/);
  });

  test("input size must survive the pooling cascade", () => {
    expect(() => buildModel({ inputSize: [20, 20] }, 1)).toThrow(/divisible/);
  });

  test("parameter count is finite and matches config arithmetic", () => {
    const model = buildModel({}, 1);
    const conv = (k: number, cin: number, cout: number) => k * k * cin * cout + cout;
    const gn = (c: number) => 2 * c;
    const block = (c: number, rates: number) =>
      rates * conv(3, c, c) + gn(c) + conv(1, c, c);
    const cfg = DEFAULT_MODEL_CONFIG;
    let expected = 0;
    let cin = 1;
    for (const c of cfg.backboneA) {
      expected += conv(3, cin, c) + gn(c);
      cin = c;
    }
    cin = 1;
    for (const c of cfg.backboneB) {
      expected += conv(3, cin, c) + gn(c);
      cin = c;
    }
    for (let level = 0; level < cfg.fusedChannels.length; level++) {
      const lateral = cfg.backboneA[level] + cfg.backboneB[level];
      const fuseIn = level === 0 ? lateral : cfg.fusedChannels[level - 1] + lateral;
      expected += conv(1, fuseIn, cfg.fusedChannels[level]);
      expected += block(cfg.fusedChannels[level], cfg.dilationRates.length);
    }
    const last = cfg.fusedChannels[cfg.fusedChannels.length - 1];
    expected += ((last * (last + 1)) / 2) * cfg.labelCount + cfg.labelCount;
    expect(Number.isFinite(model.parameterCount())).toBe(true);
    expect(model.parameterCount()).toBe(expected);
  });

  test("eval-mode forward is deterministic", () => {
    const model = buildModel({}, 3);
    const x = randomTensor(24, 24, 1, new Rng(4));
    const first = model.forward(x, false);
    const second = model.forward(x, false);
    expect(Array.from(first)).toEqual(Array.from(second));
  });
});

describe("dilated block", () => {
  test("zeroed transform parameters leave the identity path only", () => {
    const block = new DilatedBlock(4, [1, 2], 0.2, 2, new Rng(9));
    for (const p of block.params()) p.value.fill(0);
    const x = randomTensor(5, 5, 4, new Rng(10));
    const out = block.forward(x, false);
    expect(Array.from(out.data)).toEqual(Array.from(x.data));
  });

  test("spatial size is preserved and channel mismatch raises", () => {
    const block = new DilatedBlock(4, [1, 2, 3], 0.0, 2, new Rng(11));
    const x = randomTensor(8, 8, 4, new Rng(12));
    const out = block.forward(x, false);
    expect([out.h, out.w, out.c]).toEqual([8, 8, 4]);
    const bad = randomTensor(8, 8, 3, new Rng(13));
    expect(() => block.forward(bad, false)).toThrow(/channels/);
  });

  test("dropout is active only in training mode", () => {
    const block = new DilatedBlock(8, [1], 0.6, 2, new Rng(21));
    const x = randomTensor(6, 6, 8, new Rng(22));
    const evalOut1 = block.forward(x, false);
    const evalOut2 = block.forward(x, false);
    expect(Array.from(evalOut1.data)).toEqual(Array.from(evalOut2.data));
    const trainOut1 = block.forward(x, true);
    const trainOut2 = block.forward(x, true);
    const differs = Array.from(trainOut1.data).some(
      (v, i) => v !== trainOut2.data[i],
    );
    expect(differs).toBe(true);
  });

  test("receptive field of the dilated convolution grows with the rate", () => {
    for (const rate of [1, 2, 3]) {
      const conv = new Conv2d(1, 1, 3, rate, new Rng(30 + rate));
      const size = 15;
      const x = randomTensor(size, size, 1, new Rng(40 + rate));
      conv.forward(x, false);
      const gradOut = zeros(size, size, 1);
      const center = Math.floor(size / 2);
      gradOut.data[center * size + center] = 1.0;
      const gradIn = conv.backward(gradOut);
      const touched: [number, number][] = [];
      for (let y = 0; y < size; y++) {
        for (let xx = 0; xx < size; xx++) {
          if (gradIn.data[y * size + xx] !== 0) touched.push([y, xx]);
        }
      }
      const offsets = [-rate, 0, rate];
      const expected = offsets.flatMap((dy) =>
        offsets.map((dx) => [center + dy, center + dx] as [number, number]),
      );
      expect(touched.sort()).toEqual(expected.sort());
    }
  });
});
