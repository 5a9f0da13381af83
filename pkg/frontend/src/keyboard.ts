/**
 * Keyboard layer: one pure mapping from keys to intents, one small
 * helper that wires it to an event target. Keeping the mapping pure
 * means the whole shortcut table is testable without a browser.
 *
 * Closed picker:  1 / 0 label, S skips, C opens the case-tag picker.
 * Open picker:    1..4 pick a tag, X clears it, Escape or C closes.
 */

import { CASE_TAGS, type Intent } from "./types.js";

export function mapKey(key: string, casePickerOpen: boolean): Intent | null {
  if (casePickerOpen) {
    switch (key) {
      case "1":
      case "2":
      case "3":
      case "4":
        return { kind: "choose-case", tag: CASE_TAGS[Number(key) - 1] };
      case "x":
      case "X":
        return { kind: "clear-case" };
      case "Escape":
      case "c":
      case "C":
        return { kind: "close-picker" };
      default:
        return null;
    }
  }
  switch (key) {
    case "1":
      return { kind: "label", value: 1 };
    case "0":
      return { kind: "label", value: 0 };
    case "s":
    case "S":
      return { kind: "skip" };
    case "c":
    case "C":
      return { kind: "toggle-case-picker" };
    default:
      return null;
  }
}

interface KeydownLike {
  key: string;
  ctrlKey?: boolean;
  metaKey?: boolean;
  altKey?: boolean;
  target?: unknown;
  preventDefault?: () => void;
}

interface ListenerTarget {
  addEventListener(type: string, listener: (ev: Event) => void): void;
  removeEventListener(type: string, listener: (ev: Event) => void): void;
}

/** True when the keystroke belongs to a form field, not to us. */
function isTypingTarget(target: unknown): boolean {
  const tag = (target as { tagName?: string } | null)?.tagName;
  return tag === "INPUT" || tag === "TEXTAREA" || tag === "SELECT";
}

/**
 * Listen for keydown on the target and hand mapped intents to dispatch.
 * Returns the detach function. Modified keys (ctrl, meta, alt) pass
 * through untouched so browser shortcuts keep working.
 */
export function attachKeyboard(target: ListenerTarget,
                               casePickerOpen: () => boolean,
                               dispatch: (intent: Intent) => void): () => void {
  const onKeydown = (ev: Event) => {
    const e = ev as unknown as KeydownLike;
    if (e.ctrlKey || e.metaKey || e.altKey || isTypingTarget(e.target)) {
      return;
    }
    const intent = mapKey(e.key, casePickerOpen());
    if (intent) {
      e.preventDefault?.();
      dispatch(intent);
    }
  };
  target.addEventListener("keydown", onKeydown);
  return () => target.removeEventListener("keydown", onKeydown);
}
