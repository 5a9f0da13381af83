/**
 * Browser wiring: render the controller's state snapshots into the
 * static page and translate clicks and keys into intents. All text
 * lands via textContent, never markup, so sentences render exactly as
 * the service sent them.
 */
import { ApiClient } from "./api.js";
import { AgreementPoller, SessionController } from "./controller.js";
import { attachKeyboard } from "./keyboard.js";
import { formatStat, sentenceSegments } from "./render.js";
import { CASE_TAGS } from "./types.js";
function el(id) {
    const node = document.getElementById(id);
    if (!node) {
        throw new Error(`missing element #${id}`);
    }
    return node;
}
/**
 * Sentence with the matched span wrapped in <mark>, built from text
 * nodes so the concatenated content stays byte-equal to the service's
 * text (see sentenceSegments).
 */
function renderSentence(target, task) {
    target.textContent = "";
    const segments = sentenceSegments(task);
    if (segments.before) {
        target.appendChild(document.createTextNode(segments.before));
    }
    if (segments.marked) {
        const mark = document.createElement("mark");
        mark.textContent = segments.marked;
        target.appendChild(mark);
    }
    if (segments.after) {
        target.appendChild(document.createTextNode(segments.after));
    }
}
function renderAdjudicationRow(task, onPick) {
    const row = document.createElement("li");
    row.className = "adj-row";
    const sentence = document.createElement("div");
    sentence.className = "adj-sentence";
    sentence.textContent = task.text;
    row.appendChild(sentence);
    const labels = document.createElement("div");
    labels.className = "adj-labels";
    for (const lab of task.labels) {
        const chip = document.createElement("span");
        chip.className = "label-chip";
        const tag = lab.case_tag ? ` (${lab.case_tag})` : "";
        chip.textContent = `${lab.annotator}: ${lab.value}${tag}`;
        labels.appendChild(chip);
    }
    row.appendChild(labels);
    const actions = document.createElement("div");
    for (const value of [1, 0]) {
        const btn = document.createElement("button");
        btn.textContent = `final ${value}`;
        btn.addEventListener("click", () => onPick(task.task_id, value));
        actions.appendChild(btn);
    }
    row.appendChild(actions);
    return row;
}
export function bootstrap() {
    const client = new ApiClient("");
    const controller = new SessionController(client, render);
    const poller = new AgreementPoller(controller, 5000);
    const loginPanel = el("login-panel");
    const workPanel = el("work-panel");
    const nameInput = el("login-name");
    const roleSelect = el("login-role");
    const offlineBanner = el("offline-banner");
    const notice = el("notice");
    const sentence = el("sentence");
    const taskMeta = el("task-meta");
    const emptyQueue = el("empty-queue");
    const pendingTag = el("pending-tag");
    const picker = el("case-picker");
    const guidelines = el("guidelines");
    const statN = el("stat-n");
    const statPo = el("stat-po");
    const statKappa = el("stat-kappa");
    const badge = el("kappa-badge");
    const labeledCount = el("labeled-count");
    const adjSection = el("adjudication");
    const adjList = el("adj-list");
    const labelButtons = Array.from(document.querySelectorAll("button[data-intent]"));
    function render(state) {
        loginPanel.hidden = state.annotatorId !== null;
        workPanel.hidden = state.annotatorId === null;
        offlineBanner.hidden = state.connected;
        notice.textContent = state.notice ?? "";
        notice.hidden = !state.notice;
        const task = state.current;
        if (task) {
            renderSentence(sentence, task);
            taskMeta.textContent = task.pilot
                ? `${task.task_id} (pilot)` : task.task_id;
        }
        else {
            sentence.textContent = "";
            taskMeta.textContent = "";
        }
        emptyQueue.hidden = !state.queueEmpty;
        pendingTag.textContent = state.pendingCaseTag
            ? `case tag: ${state.pendingCaseTag}` : "";
        picker.hidden = !state.casePickerOpen;
        for (const button of labelButtons) {
            button.disabled = !state.connected || state.busy || !task;
        }
        guidelines.textContent = state.guidelines;
        labeledCount.textContent = String(state.labeledCount);
        statN.textContent = state.agreement ? String(state.agreement.n) : "-";
        statPo.textContent = state.agreement ? formatStat(state.agreement.p_o) : "-";
        statKappa.textContent = state.agreement ? formatStat(state.agreement.kappa) : "-";
        badge.className = `badge badge-${state.badge}`;
        badge.textContent = state.badge === "none" ? "no pilot data" : state.badge;
        adjSection.hidden = state.role !== "adjudicator";
        adjList.textContent = "";
        for (const adjTask of state.adjudicationQueue) {
            adjList.appendChild(renderAdjudicationRow(adjTask, (taskId, value) => {
                void controller.adjudicate(taskId, value);
            }));
        }
    }
    el("login-form").addEventListener("submit", (ev) => {
        ev.preventDefault();
        const name = nameInput.value.trim();
        if (!name) {
            return;
        }
        const role = roleSelect.value;
        void controller.start(name, role).then(() => {
            poller.start();
            if (role === "adjudicator") {
                void controller.refreshAdjudicationQueue();
            }
        });
    });
    for (const button of labelButtons) {
        button.addEventListener("click", () => {
            const spec = button.dataset.intent;
            if (spec === "label-1") {
                void controller.dispatch({ kind: "label", value: 1 });
            }
            else if (spec === "label-0") {
                void controller.dispatch({ kind: "label", value: 0 });
            }
            else if (spec === "skip") {
                void controller.dispatch({ kind: "skip" });
            }
            else if (spec === "case") {
                void controller.dispatch({ kind: "toggle-case-picker" });
            }
        });
    }
    CASE_TAGS.forEach((tag, index) => {
        const btn = el(`case-${index + 1}`);
        btn.textContent = `${index + 1} ${tag}`;
        btn.addEventListener("click", () => {
            void controller.dispatch({ kind: "choose-case", tag });
        });
    });
    el("case-clear").addEventListener("click", () => {
        void controller.dispatch({ kind: "clear-case" });
    });
    el("retry").addEventListener("click", () => {
        void controller.retry();
    });
    el("refresh-adj").addEventListener("click", () => {
        void controller.refreshAdjudicationQueue();
    });
    attachKeyboard(window, () => controller.getState().casePickerOpen, (intent) => { void controller.dispatch(intent); });
    render(controller.getState());
}
bootstrap();
//# sourceMappingURL=main.js.map