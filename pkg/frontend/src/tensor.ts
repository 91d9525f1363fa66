/** Minimal HWC float64 feature maps. Double precision keeps finite-difference
 * gradient checks meaningful. */

export interface Tensor {
  h: number;
  w: number;
  c: number;
  data: Float64Array;
}

export function zeros(h: number, w: number, c: number): Tensor {
  return { h, w, c, data: new Float64Array(h * w * c) };
}

export function clone(t: Tensor): Tensor {
  return { h: t.h, w: t.w, c: t.c, data: t.data.slice() };
}

export function at(t: Tensor, y: number, x: number, ch: number): number {
  return t.data[(y * t.w + x) * t.c + ch];
}

export function set(t: Tensor, y: number, x: number, ch: number, v: number): void {
  t.data[(y * t.w + x) * t.c + ch] = v;
}

export function concatChannels(parts: Tensor[]): Tensor {
  const { h, w } = parts[0];
  for (const p of parts) {
    if (p.h !== h || p.w !== w) {
      throw new Error(`concat needs equal spatial sizes, got ${p.h}x${p.w} vs ${h}x${w}`);
    }
  }
  const c = parts.reduce((acc, p) => acc + p.c, 0);
  const out = zeros(h, w, c);
  let offset = 0;
  for (const p of parts) {
    for (let y = 0; y < h; y++) {
      for (let x = 0; x < w; x++) {
        for (let ch = 0; ch < p.c; ch++) {
          out.data[(y * w + x) * c + offset + ch] = p.data[(y * p.w + x) * p.c + ch];
        }
      }
    }
    offset += p.c;
  }
  return out;
}

export function splitChannels(grad: Tensor, channelCounts: number[]): Tensor[] {
  const parts: Tensor[] = [];
  let offset = 0;
  for (const c of channelCounts) {
    const part = zeros(grad.h, grad.w, c);
    for (let y = 0; y < grad.h; y++) {
      for (let x = 0; x < grad.w; x++) {
        for (let ch = 0; ch < c; ch++) {
          part.data[(y * grad.w + x) * c + ch] =
            grad.data[(y * grad.w + x) * grad.c + offset + ch];
        }
      }
    }
    parts.push(part);
    offset += c;
  }
  return parts;
}

export function addInPlace(target: Tensor, other: Tensor): void {
  for (let i = 0; i < target.data.length; i++) target.data[i] += other.data[i];
}
