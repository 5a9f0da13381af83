/**
 * Pure presentation helpers. No DOM here: main.ts turns these values
 * into nodes, and the tests hold them to the contract that rendering
 * never alters the service's text.
 */

import type { TaskBody } from "./types.js";

/**
 * The sentence split around its matched span, as three strings whose
 * plain concatenation reproduces the input text byte for byte. The
 * separating spaces live at the end of `before` and the start of
 * `after`, so the renderer just emits the parts in order and wraps
 * `marked` in a highlight. A span that does not line up with a plain
 * space split yields the whole sentence in `after`, unhighlighted,
 * rather than a wrong highlight.
 */
export interface SentenceSegments {
  before: string;
  marked: string;
  after: string;
}

export function sentenceSegments(task: Pick<TaskBody, "text" | "span_start" | "span_end">):
    SentenceSegments {
  const tokens = task.text.split(" ");
  const aligned = task.span_start >= 0 && task.span_start < task.span_end
    && task.span_end <= tokens.length;
  if (!aligned) {
    return { before: "", marked: "", after: task.text };
  }
  const before = task.span_start > 0
    ? tokens.slice(0, task.span_start).join(" ") + " " : "";
  const after = task.span_end < tokens.length
    ? " " + tokens.slice(task.span_end).join(" ") : "";
  return {
    before,
    marked: tokens.slice(task.span_start, task.span_end).join(" "),
    after,
  };
}

/** The exact text a segment rendering produces, for the byte-equality check. */
export function joinSegments(segments: SentenceSegments): string {
  return segments.before + segments.marked + segments.after;
}

/** Dashboard number formatting; null means the service has no value yet. */
export function formatStat(value: number | null, digits = 3): string {
  return value === null ? "-" : value.toFixed(digits);
}
