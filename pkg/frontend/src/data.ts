/** Procedurally drawn shapes with attribute bits as multi-label targets.
 *
 * Each image holds one bright shape on a noisy dark background. The label
 * bits are deterministic image attributes (shape kind, side, size), so a
 * small model can genuinely learn them; with more labels than attributes
 * the bits cycle.
 */

import { Rng } from "./rng.js";
import { Tensor, zeros } from "./tensor.js";

export interface Sample {
  image: Tensor;
  targets: Float64Array;
}

const ATTRIBUTE_NAMES = ["disc", "square", "left", "right", "large", "small"] as const;

export function attributeName(bit: number): string {
  return `${ATTRIBUTE_NAMES[bit % ATTRIBUTE_NAMES.length]}#${Math.floor(bit / ATTRIBUTE_NAMES.length)}`;
}

export function makeDataset(
  count: number,
  labelCount: number,
  size: number,
  seed: number,
): Sample[] {
  const rng = new Rng(seed);
  const samples: Sample[] = [];
  for (let n = 0; n < count; n++) {
    const isDisc = rng.next() < 0.5;
    const isLeft = rng.next() < 0.5;
    const isLarge = rng.next() < 0.5;
    const radius = isLarge ? Math.floor(size / 4) : Math.floor(size / 8);
    const cy = radius + 1 + rng.int(size - 2 * radius - 2);
    const half = Math.floor(size / 2);
    const cx = isLeft
      ? radius + 1 + rng.int(Math.max(1, half - 2 * radius - 1))
      : half + radius + rng.int(Math.max(1, half - 2 * radius - 1));

    const image = zeros(size, size, 1);
    for (let y = 0; y < size; y++) {
      for (let x = 0; x < size; x++) {
        let v = 0.02 * rng.gauss();
        const dy = y - cy;
        const dx = x - cx;
        const inside = isDisc
          ? dy * dy + dx * dx <= radius * radius
          : Math.abs(dy) <= radius && Math.abs(dx) <= radius;
        if (inside) v += 1.0;
        image.data[y * size + x] = v;
      }
    }

    const attributes = [isDisc, !isDisc, isLeft, !isLeft, isLarge, !isLarge];
    const targets = new Float64Array(labelCount);
    for (let bit = 0; bit < labelCount; bit++) {
      targets[bit] = attributes[bit % attributes.length] ? 1 : 0;
    }
    samples.push({ image, targets });
  }
  return samples;
}
