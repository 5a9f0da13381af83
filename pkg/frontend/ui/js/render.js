/**
 * Pure presentation helpers. No DOM here: main.ts turns these values
 * into nodes, and the tests hold them to the contract that rendering
 * never alters the service's text.
 */
export function sentenceSegments(task) {
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
export function joinSegments(segments) {
    return segments.before + segments.marked + segments.after;
}
/** Dashboard number formatting; null means the service has no value yet. */
export function formatStat(value, digits = 3) {
    return value === null ? "-" : value.toFixed(digits);
}
//# sourceMappingURL=render.js.map