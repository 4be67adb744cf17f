/**
 * Single-page application wiring. Talks exclusively to /api/v1; the grid
 * state lives in the URL query string so any view is deep-linkable.
 */

import { ServiceClient, TaskKind, TaskRecord } from "./api.js";
import { DedupFlow } from "./dedup.js";
import {
  DEFAULT_GRID_STATE,
  GridState,
  InvalidRegexError,
  buildResultsQuery,
  gridStateFromUrl,
  gridStateToUrl,
} from "./query.js";
import { TASK_PARAM_SCHEMA, parseFieldValue } from "./schema.js";
import { TypoReportDoc, clusterExplanationView, composeEditList } from "./typo.js";
import { PartitionStepDoc, anomalyTimeline } from "./anomaly.js";

const REFRESH_MS = 1500;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

export class App {
  private api: ServiceClient;
  private root: HTMLElement;
  private activeDataset: string | null = null;
  private activeTask: string | null = null;
  private grid: GridState = { ...DEFAULT_GRID_STATE };
  private timer: number | null = null;

  constructor(root: HTMLElement, baseUrl: string) {
    this.root = root;
    this.api = new ServiceClient(baseUrl);
    const params = new URLSearchParams(window.location.search);
    this.activeDataset = params.get("dataset");
    this.activeTask = params.get("task");
    this.grid = gridStateFromUrl(window.location.search);
  }

  start(): void {
    this.render();
    this.timer = window.setInterval(() => this.refreshTasks(), REFRESH_MS);
  }

  private pushUrl(): void {
    const params = new URLSearchParams(gridStateToUrl(this.grid).slice(1));
    if (this.activeDataset) params.set("dataset", this.activeDataset);
    if (this.activeTask) params.set("task", this.activeTask);
    window.history.replaceState(null, "", `?${params.toString()}`);
  }

  private async refreshTasks(): Promise<void> {
    const list = document.getElementById("task-list");
    if (!list) return;
    try {
      const tasks = await this.api.listTasks();
      list.replaceChildren(...tasks.map((task) => this.taskRow(task)));
    } catch {
      // the service may be briefly unreachable; keep the last list
    }
  }

  private taskRow(task: TaskRecord): HTMLElement {
    const row = el(
      "li",
      { class: `task ${task.status}` },
      `${task.kind} · ${task.status}`,
    );
    if (task.status === "completed") {
      const open = el("button", {}, "results");
      open.addEventListener("click", () => {
        this.activeTask = task.id;
        this.grid = { ...DEFAULT_GRID_STATE };
        this.pushUrl();
        void this.renderResults();
      });
      row.append(" ", open);
    }
    if (task.status === "failed" && task.error) {
      row.append(el("span", { class: "error" }, ` ${task.error}`));
    }
    return row;
  }

  private render(): void {
    this.root.replaceChildren(
      el("h1", {}, "deprof"),
      this.uploadPanel(),
      this.submitPanel(),
      el("h2", {}, "tasks"),
      el("ul", { id: "task-list" }),
      el("h2", {}, "results"),
      this.gridControls(),
      el("div", { id: "results" }),
      el("div", { id: "scenario-panel" }),
    );
    void this.refreshTasks();
    if (this.activeTask) {
      void this.renderResults();
    }
  }

  private uploadPanel(): HTMLElement {
    const input = el("input", { type: "file", id: "csv-file" });
    const button = el("button", {}, "upload dataset");
    const status = el("span", { id: "upload-status" });
    button.addEventListener("click", async () => {
      const file = (input as HTMLInputElement).files?.[0];
      if (!file) return;
      const text = await file.text();
      this.activeDataset = await this.api.uploadDataset(text);
      status.textContent = `dataset ${this.activeDataset.slice(0, 12)}…`;
      this.pushUrl();
    });
    return el("section", { class: "panel" }, el("h2", {}, "dataset"), input, button, status);
  }

  private submitPanel(): HTMLElement {
    const kindSelect = el("select", { id: "task-kind" });
    for (const kind of Object.keys(TASK_PARAM_SCHEMA)) {
      kindSelect.append(el("option", { value: kind }, kind));
    }
    const form = el("div", { id: "knob-form" });
    const renderForm = () => {
      const kind = (kindSelect as HTMLSelectElement).value as TaskKind;
      form.replaceChildren(
        ...TASK_PARAM_SCHEMA[kind].map((field) => {
          const id = `knob-${field.name}`;
          if (field.kind === "flag") {
            const box = el("input", { type: "checkbox", id });
            return el("label", { for: id }, box, ` ${field.label}`);
          }
          const input = el("input", {
            type: "text",
            id,
            value: field.default !== undefined ? String(field.default) : "",
            placeholder: field.help ?? "",
          });
          return el("label", { for: id }, `${field.label}: `, input);
        }),
      );
    };
    kindSelect.addEventListener("change", renderForm);
    renderForm();

    const submit = el("button", {}, "run task");
    const status = el("span", { id: "submit-status" });
    submit.addEventListener("click", async () => {
      if (!this.activeDataset) {
        status.textContent = "upload a dataset first";
        return;
      }
      const kind = (kindSelect as HTMLSelectElement).value as TaskKind;
      const params: Record<string, unknown> = {};
      try {
        for (const field of TASK_PARAM_SCHEMA[kind]) {
          const node = document.getElementById(`knob-${field.name}`) as HTMLInputElement;
          const raw = field.kind === "flag" ? node.checked : node.value;
          const value = parseFieldValue(field, raw);
          if (value !== undefined) {
            params[field.name] = value;
          } else if (field.required) {
            throw new Error(`${field.label} is required`);
          }
        }
      } catch (error) {
        status.textContent = String(error);
        return;
      }
      const record = await this.api.submitTask(kind, this.activeDataset, params);
      status.textContent = `submitted ${record.id.slice(0, 8)}…`;
      void this.refreshTasks();
    });
    return el("section", { class: "panel" }, el("h2", {}, "new task"), kindSelect, form, submit, status);
  }

  private gridControls(): HTMLElement {
    const filter = el("input", {
      type: "text",
      id: "grid-filter",
      placeholder: "regex over instance text",
      value: this.grid.filter,
    });
    const filterError = el("span", { class: "error", id: "filter-error" });
    const sort = el("input", {
      type: "text",
      id: "grid-sort",
      placeholder: "sort field",
      value: this.grid.sortBy ?? "",
    });
    const dir = el("select", { id: "grid-dir" });
    dir.append(el("option", { value: "asc" }, "asc"), el("option", { value: "desc" }, "desc"));
    (dir as HTMLSelectElement).value = this.grid.sortDir;
    const prev = el("button", {}, "prev");
    const next = el("button", {}, "next");
    const apply = el("button", {}, "apply");

    const commit = () => {
      filterError.textContent = "";
      const candidate: GridState = {
        ...this.grid,
        filter: (filter as HTMLInputElement).value,
        sortBy: (sort as HTMLInputElement).value || null,
        sortDir: (dir as HTMLSelectElement).value as "asc" | "desc",
      };
      try {
        buildResultsQuery(candidate); // validates the regex before any request
      } catch (error) {
        if (error instanceof InvalidRegexError) {
          filterError.textContent = error.message;
          return;
        }
        throw error;
      }
      this.grid = candidate;
      this.pushUrl();
      void this.renderResults();
    };
    apply.addEventListener("click", commit);
    prev.addEventListener("click", () => {
      if (this.grid.page > 1) {
        this.grid = { ...this.grid, page: this.grid.page - 1 };
        this.pushUrl();
        void this.renderResults();
      }
    });
    next.addEventListener("click", () => {
      this.grid = { ...this.grid, page: this.grid.page + 1 };
      this.pushUrl();
      void this.renderResults();
    });
    return el("div", { class: "grid-controls" }, filter, filterError, sort, dir, apply, prev, next);
  }

  private async renderResults(): Promise<void> {
    const container = document.getElementById("results");
    if (!container || !this.activeTask) return;
    const page = await this.api.getResults(this.activeTask, buildResultsQuery(this.grid));
    const header = el(
      "p",
      {},
      `${page.total_matched} of ${page.total} instances, page ${this.grid.page}`,
    );
    const table = el("table", {});
    for (const item of page.items) {
      table.append(el("tr", {}, el("td", {}, String(item.text ?? JSON.stringify(item)))));
    }
    container.replaceChildren(header, table);
    void this.renderScenarioPanel(page.kind, page);
  }

  private async renderScenarioPanel(kind: TaskKind, page: { summary: Record<string, unknown> }): Promise<void> {
    const panel = document.getElementById("scenario-panel");
    if (!panel) return;
    panel.replaceChildren();
    if (kind === "scenario_typo") {
      await this.renderTypoPanel(panel);
    } else if (kind === "scenario_dedup") {
      await this.renderDedupPanel(panel);
    } else if (kind === "scenario_anomaly") {
      this.renderAnomalyPanel(panel, page);
    }
  }

  private async renderTypoPanel(panel: HTMLElement): Promise<void> {
    if (!this.activeTask) return;
    const record = await this.api.getTask(this.activeTask);
    const doc = await this.api.getReport(this.activeTask);
    const reports = (doc.reports ?? []) as TypoReportDoc[];
    panel.append(el("h2", {}, "typo explanation"));
    const showFiltered = el("input", { type: "checkbox", id: "show-filtered" });
    panel.append(el("label", { for: "show-filtered" }, showFiltered, " show filtered clusters"));
    const area = el("div", {});
    panel.append(area);

    const renderScreens = () => {
      area.replaceChildren();
      for (const reportDoc of reports) {
        const screen = clusterExplanationView(reportDoc, {
          showFiltered: (showFiltered as HTMLInputElement).checked,
        });
        if (screen.empty) {
          area.append(el("p", {}, `${screen.afdText}: nothing to explain`));
          continue;
        }
        const section = el("section", {}, el("h3", {}, screen.afdText));
        for (const cluster of screen.clusters) {
          const list = el("ul", {});
          for (const member of cluster.members) {
            list.append(
              el(
                "li",
                { class: member.isCentral ? "central" : "" },
                `row ${member.row}: ${member.value} (distance ${member.distance ?? "?"})`,
              ),
            );
          }
          const fixBoxes: HTMLInputElement[] = [];
          const fixList = el("div", {});
          cluster.edits.forEach((edit, i) => {
            const box = el("input", { type: "checkbox" }) as HTMLInputElement;
            box.checked = edit.checked;
            box.addEventListener("change", () => {
              cluster.edits[i].checked = box.checked;
            });
            fixBoxes.push(box);
            fixList.append(
              el("label", {}, box, ` fix row ${edit.row}: ${edit.current} -> ${edit.suggested}`),
            );
          });
          section.append(
            el(
              "div",
              { class: cluster.hiddenByFilter ? "cluster hidden" : "cluster" },
              el("p", {}, `central ${cluster.central.value} (x${cluster.central.count})`),
              list,
              fixList,
            ),
          );
        }
        const applyButton = el("button", {}, "apply ticked fixes");
        applyButton.addEventListener("click", async () => {
          const edits = composeEditList(screen);
          if (edits.length === 0) return;
          const newId = await this.api.applyEdits(record.dataset_id, edits);
          section.append(el("p", {}, `edits applied; new dataset ${newId.slice(0, 12)}…`));
        });
        section.append(applyButton);
        area.append(section);
      }
      if (reports.length === 0) {
        area.append(el("p", {}, "no almost-holding dependencies at this threshold"));
      }
    };
    showFiltered.addEventListener("change", renderScreens);
    renderScreens();
  }

  private async renderDedupPanel(panel: HTMLElement): Promise<void> {
    if (!this.activeTask) return;
    panel.append(el("h2", {}, "dedup decisions"));
    const start = el("button", {}, "open merge session");
    const area = el("div", {});
    start.addEventListener("click", async () => {
      const sessionId = await this.api.openDedupSession(this.activeTask!);
      const flow = new DedupFlow(this.api, sessionId);
      const showNext = async () => {
        const event = await flow.next();
        area.replaceChildren();
        if (event.kind === "done") {
          const finish = el("button", {}, "finish");
          finish.addEventListener("click", async () => {
            const datasetId = await flow.finish();
            area.replaceChildren(el("p", {}, `cleaned dataset ${datasetId.slice(0, 12)}…`));
          });
          area.append(el("p", {}, "no more pairs"), finish);
          return;
        }
        if (event.kind === "pair_changed") {
          area.append(el("p", { class: "error" }, `pair changed, refreshed (${event.detail})`));
          await showNext();
          return;
        }
        const pair = event.pair;
        const table = el("table", { class: "pair" });
        const rowA = el("tr", {});
        const rowB = el("tr", {});
        pair.valuesA.forEach((value, i) => {
          const highlight = pair.diffAttrs.includes(i) ? "diff" : "";
          rowA.append(el("td", { class: highlight }, value));
          rowB.append(el("td", { class: highlight }, String(pair.valuesB[i])));
        });
        table.append(rowA, rowB);
        const keepA = el("button", {}, "keep top");
        const keepB = el("button", {}, "keep bottom");
        const skip = el("button", {}, "skip");
        const undo = el("button", {}, "undo");
        const decideAnd = (action: "keep_a" | "keep_b" | "skip") => async () => {
          const outcome = await flow.decide(action);
          if (outcome.kind === "pair_changed") {
            area.prepend(el("p", { class: "error" }, `pair changed, refreshed (${outcome.detail})`));
          }
          await showNext();
        };
        keepA.addEventListener("click", decideAnd("keep_a"));
        keepB.addEventListener("click", decideAnd("keep_b"));
        skip.addEventListener("click", decideAnd("skip"));
        undo.addEventListener("click", async () => {
          await flow.undo();
          await showNext();
        });
        area.append(table, keepA, keepB, skip, undo);
      };
      await showNext();
    });
    panel.append(start, area);
  }

  private renderAnomalyPanel(panel: HTMLElement, page: { summary: Record<string, unknown> }): void {
    panel.append(el("h2", {}, "anomaly timeline"));
    const steps = (page as unknown as { items?: PartitionStepDoc[] }).items ?? [];
    for (const entry of anomalyTimeline(steps)) {
      const line = entry.quiet
        ? `${entry.partitionId}: no drift (${entry.fdCount} FDs)`
        : `${entry.partitionId}: lost ${entry.lost.join("; ") || "none"}, gained ${entry.gained.join("; ") || "none"}`;
      panel.append(el("p", {}, line));
    }
  }
}

export function mount(baseUrl: string): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  new App(root, baseUrl).start();
}

// expose the typo model for the explanation screen wiring
export { clusterExplanationView, composeEditList };
export type { TypoReportDoc };
