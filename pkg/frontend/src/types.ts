/**
 * Shared types for the annotation client.
 *
 * The service owns every rule and every number; these shapes mirror its
 * JSON responses field for field. Nothing here is computed client-side.
 */

export type TaskState = "open" | "leased" | "labeled" | "adjudicating" | "final";

export type Role = "annotator" | "adjudicator";

export type LabelValue = 0 | 1;

export const CASE_TAGS = ["prep-dative", "animacy", "no-transfer", "idiom"] as const;

export type CaseTag = (typeof CASE_TAGS)[number];

export interface SubmittedLabel {
  annotator: string;
  value: number;
  case_tag: string | null;
}

export interface TaskBody {
  task_id: string;
  text: string;
  /** Token index of the first matched token. */
  span_start: number;
  /** Token index one past the last matched token. */
  span_end: number;
  pilot: boolean;
  state: TaskState;
  labels: SubmittedLabel[];
  gold_label: number | null;
}

export interface TaskListResponse {
  tasks: TaskBody[];
  total: number;
  offset: number;
  limit: number;
}

export interface AgreementStats {
  n: number;
  p_o: number | null;
  kappa: number | null;
}

export interface ExportSummary {
  written: number;
  skipped: number;
  warning: string | null;
}

/** Dashboard badge color, derived from service kappa and a threshold only. */
export type Badge = "green" | "red" | "none";

/** What a keypress or button asks the controller to do. */
export type Intent =
  | { kind: "label"; value: LabelValue }
  | { kind: "skip" }
  | { kind: "toggle-case-picker" }
  | { kind: "choose-case"; tag: CaseTag }
  | { kind: "clear-case" }
  | { kind: "close-picker" };

/** Everything a render pass needs; the controller owns it, views read it. */
export interface UiState {
  connected: boolean;
  annotatorId: string | null;
  annotatorName: string | null;
  role: Role;
  guidelines: string;
  current: TaskBody | null;
  queueEmpty: boolean;
  busy: boolean;
  casePickerOpen: boolean;
  pendingCaseTag: CaseTag | null;
  labeledCount: number;
  notice: string | null;
  agreement: AgreementStats | null;
  badge: Badge;
  adjudicationQueue: TaskBody[];
}
