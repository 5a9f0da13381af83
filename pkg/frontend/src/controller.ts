/**
 * Screen logic without any DOM. The controller owns a UiState snapshot,
 * mutates it in response to intents and API results, and hands every
 * new snapshot to a render callback. The browser layer is one render
 * function plus event wiring; tests drive the controller directly.
 *
 * The server stays the arbiter of leases and statistics. A 409 means
 * some decision here went stale, so the recovery is always the same:
 * tell the annotator and fetch fresh truth.
 */

import { ApiError, type AnnotationApi } from "./api.js";
import type {
  AgreementStats,
  Badge,
  CaseTag,
  Intent,
  LabelValue,
  Role,
  UiState,
} from "./types.js";

export const DEFAULT_KAPPA_THRESHOLD = 0.8;

/** Badge color from the service's kappa; the number itself is never recomputed. */
export function badgeFor(kappa: number | null,
                         threshold = DEFAULT_KAPPA_THRESHOLD): Badge {
  if (kappa === null) {
    return "none";
  }
  return kappa >= threshold ? "green" : "red";
}

function initialState(): UiState {
  return {
    connected: true,
    annotatorId: null,
    annotatorName: null,
    role: "annotator",
    guidelines: "",
    current: null,
    queueEmpty: false,
    busy: false,
    casePickerOpen: false,
    pendingCaseTag: null,
    labeledCount: 0,
    notice: null,
    agreement: null,
    badge: "none",
    adjudicationQueue: [],
  };
}

export interface ControllerOptions {
  kappaThreshold?: number;
}

export class SessionController {
  private readonly client: AnnotationApi;
  private readonly onChange: (state: UiState) => void;
  private readonly kappaThreshold: number;
  private state: UiState;

  constructor(client: AnnotationApi, onChange: (state: UiState) => void = () => {},
              options: ControllerOptions = {}) {
    this.client = client;
    this.onChange = onChange;
    this.kappaThreshold = options.kappaThreshold ?? DEFAULT_KAPPA_THRESHOLD;
    this.state = initialState();
  }

  getState(): UiState {
    return this.state;
  }

  /** Register, pull guidelines and stats, lease the first task. */
  async start(name: string, role: Role = "annotator"): Promise<void> {
    await this.guarded(async () => {
      this.state.annotatorId = await this.client.register(name, role);
      this.state.annotatorName = name;
      this.state.role = role;
      this.state.guidelines = await this.client.guidelines();
    });
    await this.refreshAgreement();
    if (this.state.connected && this.state.annotatorId) {
      await this.fetchNext();
    }
  }

  /** Single entry point for keyboard and buttons alike. */
  async dispatch(intent: Intent): Promise<void> {
    switch (intent.kind) {
      case "label":
        await this.label(intent.value);
        return;
      case "skip":
        await this.skip();
        return;
      case "toggle-case-picker":
        this.state.casePickerOpen = !this.state.casePickerOpen;
        this.emit();
        return;
      case "choose-case":
        this.chooseCase(intent.tag);
        return;
      case "clear-case":
        this.state.pendingCaseTag = null;
        this.state.casePickerOpen = false;
        this.emit();
        return;
      case "close-picker":
        this.state.casePickerOpen = false;
        this.emit();
        return;
    }
  }

  chooseCase(tag: CaseTag): void {
    this.state.pendingCaseTag = tag;
    this.state.casePickerOpen = false;
    this.emit();
  }

  /**
   * Submit a label for the current task. Optimistic in the sense that
   * the next fetch starts immediately on success; a stale lease (409)
   * rolls the screen onto a freshly leased task instead of erroring out.
   */
  async label(value: LabelValue): Promise<void> {
    const task = this.state.current;
    if (!task || this.state.busy || !this.state.annotatorId) {
      return;
    }
    this.state.busy = true;
    this.emit();
    try {
      await this.client.submitLabel(this.state.annotatorId, task.task_id,
                                    value, this.state.pendingCaseTag);
      this.state.labeledCount += 1;
      this.state.pendingCaseTag = null;
      this.state.casePickerOpen = false;
      this.state.notice = null;
      this.state.busy = false;
      await this.fetchNext();
    } catch (err) {
      this.state.busy = false;
      if (err instanceof ApiError && err.status === 409) {
        this.state.notice = `lease conflict (${err.message}); fetching a fresh task`;
        await this.fetchNext();
      } else if (err instanceof ApiError) {
        this.state.notice = err.message;
        this.emit();
      } else {
        this.disconnect();
      }
    }
  }

  /** Give the current task back without labeling it. */
  async skip(): Promise<void> {
    const task = this.state.current;
    if (!task || this.state.busy || !this.state.annotatorId) {
      return;
    }
    this.state.busy = true;
    this.emit();
    try {
      await this.client.release(this.state.annotatorId, task.task_id);
      this.state.pendingCaseTag = null;
      this.state.busy = false;
      await this.fetchNext();
    } catch (err) {
      this.state.busy = false;
      if (err instanceof ApiError) {
        this.state.notice = `${err.message}; fetching a fresh task`;
        await this.fetchNext();
      } else {
        this.disconnect();
      }
    }
  }

  async fetchNext(): Promise<void> {
    if (!this.state.annotatorId) {
      return;
    }
    await this.guarded(async () => {
      const task = await this.client.nextTask(this.state.annotatorId as string);
      this.state.current = task;
      this.state.queueEmpty = task === null;
    });
  }

  /** Re-read agreement stats; all three numbers come from the service. */
  async refreshAgreement(): Promise<void> {
    await this.guarded(async () => {
      const stats: AgreementStats = await this.client.agreement();
      this.state.agreement = stats;
      this.state.badge = badgeFor(stats.kappa, this.kappaThreshold);
    });
  }

  async refreshAdjudicationQueue(): Promise<void> {
    await this.guarded(async () => {
      const listing = await this.client.listTasks("adjudicating");
      this.state.adjudicationQueue = listing.tasks;
    });
  }

  /** Resolve a disagreement; 403 and 409 surface as notices. */
  async adjudicate(taskId: string, label: LabelValue): Promise<void> {
    if (!this.state.annotatorId) {
      return;
    }
    try {
      await this.client.adjudicate(this.state.annotatorId, taskId, label);
      this.state.notice = null;
    } catch (err) {
      if (err instanceof ApiError) {
        this.state.notice = err.message;
      } else {
        this.disconnect();
        return;
      }
    }
    await this.refreshAdjudicationQueue();
  }

  /** One button behind the offline banner: try to come back. */
  async retry(): Promise<void> {
    this.state.connected = true;
    this.state.notice = null;
    this.emit();
    await this.refreshAgreement();
    if (this.state.connected && this.state.annotatorId && !this.state.current) {
      await this.fetchNext();
    }
  }

  private async guarded(work: () => Promise<void>): Promise<void> {
    try {
      await work();
      this.state.connected = true;
      this.emit();
    } catch (err) {
      if (err instanceof ApiError) {
        this.state.notice = err.message;
        this.emit();
      } else {
        this.disconnect();
      }
    }
  }

  private disconnect(): void {
    this.state.connected = false;
    this.state.notice = "cannot reach the annotation service";
    this.emit();
  }

  private emit(): void {
    this.onChange(this.state);
  }
}

/**
 * Drives periodic agreement refreshes for the dashboard. Manual tick()
 * keeps tests clock-free.
 */
export class AgreementPoller {
  private readonly controller: SessionController;
  private readonly intervalMs: number;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(controller: SessionController, intervalMs = 5000) {
    this.controller = controller;
    this.intervalMs = intervalMs;
  }

  async tick(): Promise<void> {
    await this.controller.refreshAgreement();
  }

  start(): void {
    if (this.timer === null) {
      this.timer = setInterval(() => { void this.tick(); }, this.intervalMs);
    }
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
