/** Rank-based AUC with tie handling, per label and aggregated. */

export function rankAuc(scores: ArrayLike<number>, truths: ArrayLike<number>): number | null {
  const n = scores.length;
  let positives = 0;
  for (let i = 0; i < n; i++) if (truths[i] === 1) positives++;
  const negatives = n - positives;
  if (positives === 0 || negatives === 0) return null;

  const order = Array.from({ length: n }, (_, i) => i).sort((a, b) => scores[a] - scores[b]);
  const ranks = new Float64Array(n);
  let i = 0;
  while (i < n) {
    let j = i;
    while (j + 1 < n && scores[order[j + 1]] === scores[order[i]]) j++;
    const avgRank = (i + j) / 2 + 1; // 1-based average rank over the tie run
    for (let k = i; k <= j; k++) ranks[order[k]] = avgRank;
    i = j + 1;
  }
  let positiveRankSum = 0;
  for (let k = 0; k < n; k++) if (truths[k] === 1) positiveRankSum += ranks[k];
  return (positiveRankSum - (positives * (positives + 1)) / 2) / (positives * negatives);
}

export interface AucSummary {
  perLabel: (number | null)[];
  mean: number | null;
  weightedMean: number | null;
  defined: number;
}

/** scores[sample][label], truths[sample][label] in {0, 1}. Labels with a
 * single class are undefined and excluded from both means; the weighted
 * mean weights by positive support. */
export function evalAuc(scores: number[][], truths: number[][]): AucSummary {
  if (scores.length !== truths.length) throw new Error("scores/truths length mismatch");
  const labelCount = scores.length > 0 ? scores[0].length : 0;
  const perLabel: (number | null)[] = [];
  const supports: number[] = [];
  for (let label = 0; label < labelCount; label++) {
    const s = scores.map((row) => row[label]);
    const t = truths.map((row) => row[label]);
    perLabel.push(rankAuc(s, t));
    supports.push(t.reduce((acc, v) => acc + v, 0));
  }
  let sum = 0;
  let weightedSum = 0;
  let weightTotal = 0;
  let defined = 0;
  for (let label = 0; label < labelCount; label++) {
    const auc = perLabel[label];
    if (auc === null) continue;
    defined++;
    sum += auc;
    weightedSum += auc * supports[label];
    weightTotal += supports[label];
  }
  return {
    perLabel,
    mean: defined > 0 ? sum / defined : null,
    weightedMean: weightTotal > 0 ? weightedSum / weightTotal : null,
    defined,
  };
}
