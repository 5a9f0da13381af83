/**
 * Typed client for the annotation service HTTP API.
 *
 * Each method maps onto one endpoint. Non-2xx responses become ApiError
 * with the status code and the service's detail message, so callers can
 * tell a stale lease (409) from a permission problem (403) without
 * string matching.
 */
export class ApiError extends Error {
    constructor(status, detail) {
        super(detail);
        this.name = "ApiError";
        this.status = status;
    }
}
export class ApiClient {
    /**
     * @param baseUrl service origin, "" when the page is served by the
     *   service itself (paths are absolute either way)
     * @param fetchImpl injectable for tests; defaults to the global fetch
     */
    constructor(baseUrl = "", fetchImpl) {
        this.base = baseUrl.replace(/\/$/, "");
        const f = fetchImpl ?? globalThis.fetch;
        if (!f) {
            throw new Error("no fetch implementation available");
        }
        this.doFetch = (input, init) => f(input, init);
    }
    async register(name, role = "annotator") {
        const body = await this.request("POST", "/annotators", { name, role });
        return body.annotator_id;
    }
    /** Lease the next available task; null when the queue is empty. */
    async nextTask(annotator) {
        const res = await this.raw("GET", `/tasks/next?annotator=${encodeURIComponent(annotator)}`);
        if (res.status === 204) {
            return null;
        }
        return this.decode(res);
    }
    async submitLabel(annotator, taskId, label, caseTag = null) {
        return this.request("POST", `/tasks/${encodeURIComponent(taskId)}/label`, { annotator, label, case_tag: caseTag });
    }
    async release(annotator, taskId) {
        await this.request("POST", `/tasks/${encodeURIComponent(taskId)}/release`, { annotator });
    }
    async adjudicate(annotator, taskId, label) {
        return this.request("POST", `/tasks/${encodeURIComponent(taskId)}/adjudicate`, { annotator, label });
    }
    async listTasks(state, offset = 0, limit = 50) {
        const params = new URLSearchParams({ offset: String(offset), limit: String(limit) });
        if (state) {
            params.set("state", state);
        }
        return this.request("GET", `/tasks?${params}`);
    }
    async agreement() {
        return this.request("GET", "/stats/agreement");
    }
    async guidelines() {
        const body = await this.request("GET", "/guidelines");
        return body.text;
    }
    /** Ask the service to write finished labels to a file it can reach. */
    async exportGold(path, force = false) {
        return this.request("POST", "/export", { path, force });
    }
    async request(method, path, body) {
        return this.decode(await this.raw(method, path, body));
    }
    async raw(method, path, body) {
        const init = { method };
        if (body !== undefined) {
            init.headers = { "Content-Type": "application/json" };
            init.body = JSON.stringify(body);
        }
        return this.doFetch(this.base + path, init);
    }
    async decode(res) {
        if (res.ok) {
            return (await res.json());
        }
        let detail = `${res.status} ${res.statusText}`;
        try {
            const payload = (await res.json());
            if (typeof payload.detail === "string") {
                detail = payload.detail;
            }
        }
        catch {
            // body was not JSON; keep the status line
        }
        throw new ApiError(res.status, detail);
    }
}
//# sourceMappingURL=api.js.map