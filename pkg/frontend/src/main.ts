import { ApiError, ReviewApi } from "./api.js";
import { buildAlignment } from "./align.js";
import { nextPending, orderQueue, progress, readyToApply } from "./queue.js";
import { canSubmit, failed, initialControls, lock, settled, type ControlState } from "./state.js";
import { rationalToPercent, type ComparisonDoc, type RunFilesResponse, type Verdict } from "./types.js";

const api = new ReviewApi("");

interface View {
  runs: Awaited<ReturnType<ReviewApi["listRuns"]>>;
  runId: string | null;
  run: RunFilesResponse | null;
  filePath: string | null;
  comparison: ComparisonDoc | null;
  controls: ControlState;
  editing: boolean;
  banner: string | null;
}

const view: View = {
  runs: [],
  runId: null,
  run: null,
  filePath: null,
  comparison: null,
  controls: initialControls,
  editing: false,
  banner: null,
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

async function refresh(retainFile = true): Promise<void> {
  try {
    view.runs = await api.listRuns();
    view.banner = null;
    if (!view.runId && view.runs.length > 0) {
      view.runId = view.runs[0]?.run_id ?? null;
    }
    if (view.runId) {
      view.run = await api.listFiles(view.runId);
      const paths = new Set(view.run.files.map((f) => f.path));
      if (!retainFile || !view.filePath || !paths.has(view.filePath)) {
        const first = orderQueue(view.run.files)[0];
        view.filePath = first ? first.path : null;
      }
      view.comparison =
        view.runId && view.filePath ? await api.getComparison(view.runId, view.filePath) : null;
      if (view.run.applied) {
        view.controls = { phase: "disabled", error: null };
      }
    }
  } catch (error) {
    view.banner = error instanceof Error ? error.message : String(error);
  }
  render();
}

async function selectRun(runId: string): Promise<void> {
  view.runId = runId;
  view.filePath = null;
  view.editing = false;
  view.controls = initialControls;
  await refresh(false);
}

async function selectFile(path: string): Promise<void> {
  view.filePath = path;
  view.editing = false;
  await refresh(true);
}

async function submitDecision(verdict: Verdict, editedContent?: string): Promise<void> {
  if (!view.runId || !view.filePath || !canSubmit(view.controls)) return;
  const runId = view.runId;
  const path = view.filePath;
  view.controls = lock(view.controls);
  render();
  try {
    await api.submitDecision(runId, path, {
      verdict,
      ...(editedContent !== undefined ? { edited_content: editedContent } : {}),
    });
    view.controls = settled(view.controls);
    view.editing = false;
    view.run = await api.listFiles(runId);
    const upNext = nextPending(view.run.files, path);
    view.filePath = upNext ? upNext.path : path;
    view.comparison = await api.getComparison(runId, view.filePath);
  } catch (error) {
    view.controls = failed(view.controls, error);
  }
  render();
}

async function applyRun(): Promise<void> {
  if (!view.runId || !canSubmit(view.controls)) return;
  const runId = view.runId;
  view.controls = lock(view.controls);
  render();
  try {
    const result = await api.applyRun(runId);
    view.controls = { phase: "disabled", error: null };
    view.banner = `run applied; final tree at ${result.final_tree}`;
  } catch (error) {
    view.controls = failed(view.controls, error);
    if (error instanceof ApiError && error.undecided.length > 0) {
      view.controls = {
        phase: "ready",
        error: `still undecided: ${error.undecided.join(", ")}`,
      };
    }
  }
  await refresh(true);
}

// ---------------------------------------------------------------------
// rendering

function renderHeader(root: HTMLElement): void {
  const header = el("header");
  header.appendChild(el("h1", undefined, "codemend review"));

  const picker = el("select");
  for (const run of view.runs) {
    const option = el("option", undefined, `${run.run_id} (${run.label})`);
    option.value = run.run_id;
    option.selected = run.run_id === view.runId;
    picker.appendChild(option);
  }
  picker.addEventListener("change", () => void selectRun(picker.value));
  header.appendChild(picker);

  if (view.run) {
    const done = progress(view.run.files);
    header.appendChild(
      el("span", "progress", `${done.decided}/${done.total} decided`),
    );
    const apply = el("button", "apply", view.run.applied ? "applied" : "apply run");
    apply.disabled = view.run.applied || !readyToApply(view.run) || !canSubmit(view.controls);
    apply.addEventListener("click", () => void applyRun());
    header.appendChild(apply);
  }
  root.appendChild(header);
}

function renderQueue(root: HTMLElement): void {
  const list = el("ul", "queue");
  if (!view.run) {
    root.appendChild(el("p", "empty", "no runs yet"));
    return;
  }
  if (view.run.files.length === 0) {
    root.appendChild(el("p", "empty", "this run revised no files"));
    return;
  }
  for (const file of orderQueue(view.run.files)) {
    const item = el("li", file.path === view.filePath ? "selected" : "");
    const flag = file.flag_count > 0 ? ` ⚑${file.flag_count}` : "";
    item.textContent = `${file.path}${flag} [${file.status}]`;
    item.addEventListener("click", () => void selectFile(file.path));
    list.appendChild(item);
  }
  root.appendChild(list);
}

function renderMetrics(root: HTMLElement, doc: ComparisonDoc): void {
  const badges = el("div", "metrics");
  badges.appendChild(el("span", "badge", `P ${rationalToPercent(doc.metrics.precision)}`));
  badges.appendChild(el("span", "badge", `R ${rationalToPercent(doc.metrics.recall)}`));
  badges.appendChild(el("span", "badge", `F1 ${rationalToPercent(doc.metrics.f1)}`));
  badges.appendChild(el("span", "badge", `hunks ${doc.hunks.length}`));
  badges.appendChild(
    el("span", doc.flags.length > 0 ? "badge flagged" : "badge", `flags ${doc.flags.length}`),
  );
  badges.appendChild(el("span", "badge", `decision ${doc.decision}`));
  root.appendChild(badges);
}

function renderDiff(root: HTMLElement, doc: ComparisonDoc): void {
  const table = el("table", "diff");
  for (const row of buildAlignment(doc)) {
    const tr = el("tr", row.flagged ? `${row.kind} flagged` : row.kind);
    tr.appendChild(el("td", "num", row.left ? String(row.left.num) : ""));
    tr.appendChild(el("td", "text", row.left ? row.left.text : ""));
    tr.appendChild(el("td", "num", row.right ? String(row.right.num) : ""));
    tr.appendChild(el("td", "text", row.right ? row.right.text : ""));
    table.appendChild(tr);
  }
  root.appendChild(table);
}

function renderControls(root: HTMLElement, doc: ComparisonDoc): void {
  const controls = el("div", "controls");
  const busy = !canSubmit(view.controls);

  const accept = el("button", undefined, "accept");
  accept.disabled = busy;
  accept.addEventListener("click", () => void submitDecision("ACCEPT"));
  controls.appendChild(accept);

  const reject = el("button", undefined, "reject");
  reject.disabled = busy;
  reject.addEventListener("click", () => void submitDecision("REJECT"));
  controls.appendChild(reject);

  const edit = el("button", undefined, "edit");
  edit.disabled = busy;
  edit.addEventListener("click", () => {
    view.editing = !view.editing;
    render();
  });
  controls.appendChild(edit);

  if (view.controls.error) {
    controls.appendChild(el("span", "error", view.controls.error));
  }
  root.appendChild(controls);

  if (view.editing) {
    const editor = el("textarea", "editor");
    editor.value = doc.edited_content ?? doc.revised_text;
    const save = el("button", undefined, "save edit");
    save.disabled = busy;
    save.addEventListener("click", () => void submitDecision("EDIT", editor.value));
    const wrap = el("div", "editor-wrap");
    wrap.appendChild(editor);
    wrap.appendChild(save);
    root.appendChild(wrap);
  }
}

function render(): void {
  const root = document.getElementById("app");
  if (!root) return;
  root.textContent = "";
  if (view.banner) {
    const banner = el("div", "banner");
    banner.appendChild(el("span", undefined, view.banner));
    const retry = el("button", undefined, "retry");
    retry.addEventListener("click", () => void refresh(true));
    banner.appendChild(retry);
    root.appendChild(banner);
  }
  renderHeader(root);
  const layout = el("main");
  const side = el("aside");
  renderQueue(side);
  layout.appendChild(side);
  const detail = el("section", "detail");
  if (view.comparison) {
    detail.appendChild(el("h2", undefined, view.comparison.file_location));
    renderMetrics(detail, view.comparison);
    renderControls(detail, view.comparison);
    renderDiff(detail, view.comparison);
  } else if (view.run && view.run.files.length > 0) {
    detail.appendChild(el("p", "empty", "select a file"));
  }
  layout.appendChild(detail);
  root.appendChild(layout);
}

void refresh();
