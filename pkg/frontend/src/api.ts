/**
 * Typed client for the annotation service HTTP API.
 *
 * Each method maps onto one endpoint. Non-2xx responses become ApiError
 * with the status code and the service's detail message, so callers can
 * tell a stale lease (409) from a permission problem (403) without
 * string matching.
 */

import type {
  AgreementStats,
  CaseTag,
  ExportSummary,
  LabelValue,
  Role,
  TaskBody,
  TaskListResponse,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
    this.status = status;
  }
}

/** The service surface the screens depend on; tests fake this. */
export interface AnnotationApi {
  register(name: string, role?: Role): Promise<string>;
  nextTask(annotator: string): Promise<TaskBody | null>;
  submitLabel(annotator: string, taskId: string, label: LabelValue,
              caseTag?: CaseTag | null): Promise<TaskBody>;
  release(annotator: string, taskId: string): Promise<void>;
  adjudicate(annotator: string, taskId: string, label: LabelValue): Promise<TaskBody>;
  listTasks(state?: string, offset?: number, limit?: number): Promise<TaskListResponse>;
  agreement(): Promise<AgreementStats>;
  guidelines(): Promise<string>;
  exportGold(path: string, force?: boolean): Promise<ExportSummary>;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient implements AnnotationApi {
  private readonly base: string;
  private readonly doFetch: FetchLike;

  /**
   * @param baseUrl service origin, "" when the page is served by the
   *   service itself (paths are absolute either way)
   * @param fetchImpl injectable for tests; defaults to the global fetch
   */
  constructor(baseUrl = "", fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    const f = fetchImpl ?? globalThis.fetch;
    if (!f) {
      throw new Error("no fetch implementation available");
    }
    this.doFetch = (input, init) => f(input, init);
  }

  async register(name: string, role: Role = "annotator"): Promise<string> {
    const body = await this.request<{ annotator_id: string }>(
      "POST", "/annotators", { name, role });
    return body.annotator_id;
  }

  /** Lease the next available task; null when the queue is empty. */
  async nextTask(annotator: string): Promise<TaskBody | null> {
    const res = await this.raw("GET",
      `/tasks/next?annotator=${encodeURIComponent(annotator)}`);
    if (res.status === 204) {
      return null;
    }
    return this.decode<TaskBody>(res);
  }

  async submitLabel(annotator: string, taskId: string, label: LabelValue,
                    caseTag: CaseTag | null = null): Promise<TaskBody> {
    return this.request<TaskBody>(
      "POST", `/tasks/${encodeURIComponent(taskId)}/label`,
      { annotator, label, case_tag: caseTag });
  }

  async release(annotator: string, taskId: string): Promise<void> {
    await this.request<{ released: string }>(
      "POST", `/tasks/${encodeURIComponent(taskId)}/release`, { annotator });
  }

  async adjudicate(annotator: string, taskId: string,
                   label: LabelValue): Promise<TaskBody> {
    return this.request<TaskBody>(
      "POST", `/tasks/${encodeURIComponent(taskId)}/adjudicate`,
      { annotator, label });
  }

  async listTasks(state?: string, offset = 0, limit = 50): Promise<TaskListResponse> {
    const params = new URLSearchParams({ offset: String(offset), limit: String(limit) });
    if (state) {
      params.set("state", state);
    }
    return this.request<TaskListResponse>("GET", `/tasks?${params}`);
  }

  async agreement(): Promise<AgreementStats> {
    return this.request<AgreementStats>("GET", "/stats/agreement");
  }

  async guidelines(): Promise<string> {
    const body = await this.request<{ text: string }>("GET", "/guidelines");
    return body.text;
  }

  /** Ask the service to write finished labels to a file it can reach. */
  async exportGold(path: string, force = false): Promise<ExportSummary> {
    return this.request<ExportSummary>("POST", "/export", { path, force });
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    return this.decode<T>(await this.raw(method, path, body));
  }

  private async raw(method: string, path: string, body?: unknown): Promise<Response> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    return this.doFetch(this.base + path, init);
  }

  private async decode<T>(res: Response): Promise<T> {
    if (res.ok) {
      return (await res.json()) as T;
    }
    let detail = `${res.status} ${res.statusText}`;
    try {
      const payload = (await res.json()) as { detail?: unknown };
      if (typeof payload.detail === "string") {
        detail = payload.detail;
      }
    } catch {
      // body was not JSON; keep the status line
    }
    throw new ApiError(res.status, detail);
  }
}
