/** Label vocabulary from the extraction engine's labels JSONL stream.
 * File-level contract only: each line is a JSON object with a "label"
 * string; distinct values become the classifier head vocabulary. */

import { readFileSync } from "node:fs";

export function readLabelVocabulary(path: string): string[] {
  const text = readFileSync(path, "utf-8");
  const seen = new Set<string>();
  const vocabulary: string[] = [];
  for (const [lineNo, line] of text.split("\n").entries()) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    let record: unknown;
    try {
      record = JSON.parse(trimmed);
    } catch (err) {
      throw new Error(`${path}:${lineNo + 1}: malformed label record: ${(err as Error).message}`);
    }
    const label = (record as { label?: unknown }).label;
    if (typeof label !== "string") {
      throw new Error(`${path}:${lineNo + 1}: record has no string "label" field`);
    }
    if (!seen.has(label)) {
      seen.add(label);
      vocabulary.push(label);
    }
  }
  return vocabulary;
}
