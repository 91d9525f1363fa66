import { describe, expect, test } from "vitest";

import {
  Param,
  SecondOrderPooling,
} from "../src/layers.js";
import { DilatedBlock } from "../src/model.js";
import { Rng } from "../src/rng.js";
import { Tensor, zeros } from "../src/tensor.js";

const H = 1e-5;
const REL_TOL = 1e-3;

function randomTensor(h: number, w: number, c: number, rng: Rng): Tensor {
  const t = zeros(h, w, c);
  for (let i = 0; i < t.data.length; i++) t.data[i] = rng.gauss();
  return t;
}

function relError(analytic: number, numeric: number): number {
  const denom = Math.max(1e-6, Math.abs(analytic) + Math.abs(numeric));
  return Math.abs(analytic - numeric) / denom;
}

function checkArray(
  analytic: Float64Array,
  values: Float64Array,
  objective: () => number,
): number {
  let worst = 0;
  for (let i = 0; i < values.length; i++) {
    const orig = values[i];
    values[i] = orig + H;
    const plus = objective();
    values[i] = orig - H;
    const minus = objective();
    values[i] = orig;
    const numeric = (plus - minus) / (2 * H);
    worst = Math.max(worst, relError(analytic[i], numeric));
  }
  return worst;
}

describe("central-difference gradient checks (double precision)", () => {
  test("second-order pooling input gradient", () => {
    const rng = new Rng(101);
    for (let trial = 0; trial < 5; trial++) {
      const x = randomTensor(3, 3, 4, rng);
      const projection = new Float64Array(10);
      for (let i = 0; i < projection.length; i++) projection[i] = rng.gauss();

      const sop = new SecondOrderPooling();
      const objective = () => {
        const v = sop.forward(x);
        let acc = 0;
        for (let i = 0; i < v.length; i++) acc += v[i] * projection[i];
        return acc;
      };
      objective();
      const analytic = sop.backward(projection);
      const worst = checkArray(analytic.data, x.data, objective);
      expect(worst).toBeLessThan(REL_TOL);
    }
  });

  test("dilated block input and parameter gradients", () => {
    const rng = new Rng(202);
    const block = new DilatedBlock(4, [1, 2], 0.0, 2, rng);
    const x = randomTensor(6, 6, 4, rng);
    const projection = zeros(6, 6, 4);
    for (let i = 0; i < projection.data.length; i++) projection.data[i] = rng.gauss();

    const objective = () => {
      const out = block.forward(x, false);
      let acc = 0;
      for (let i = 0; i < out.data.length; i++) acc += out.data[i] * projection.data[i];
      return acc;
    };

    objective();
    for (const p of block.params()) p.grad.fill(0);
    const analyticInput = block.backward(projection);

    const worstInput = checkArray(analyticInput.data, x.data, objective);
    expect(worstInput).toBeLessThan(REL_TOL);

    const paramsToCheck: Param[] = [
      block.convs[0].weight,
      block.convs[1].weight,
      block.norm.gamma,
      block.norm.beta,
      block.fuse.weight,
      block.fuse.bias,
    ];
    for (const param of paramsToCheck) {
      const worst = checkArray(param.grad, param.value, objective);
      expect(worst, param.name).toBeLessThan(REL_TOL);
    }
  });
});
