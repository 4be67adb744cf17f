/**
 * Typed client for the profiler task service (/api/v1).
 *
 * Every number shown anywhere in the UI comes back through this module;
 * nothing is computed client-side beyond presentation.
 */

export type TaskKind =
  | "fd_discovery"
  | "afd_discovery"
  | "mfd_validation"
  | "scenario_typo"
  | "scenario_dedup"
  | "scenario_anomaly";

export interface AttributeMeta {
  index: number;
  name: string;
  inferred_type: "string" | "integer" | "float";
}

export interface DatasetMeta {
  id: string;
  row_count: number;
  attributes: AttributeMeta[];
}

export interface TaskRecord {
  id: string;
  kind: TaskKind;
  params: Record<string, unknown>;
  dataset_id: string;
  status: "queued" | "running" | "completed" | "failed";
  created_at: number;
  started_at: number | null;
  finished_at: number | null;
  error: string | null;
}

export interface ResultsQuery {
  offset: number;
  limit: number;
  filter?: string;
  sort_by?: string;
  sort_dir?: "asc" | "desc";
}

export interface ResultsPage {
  kind: TaskKind;
  summary: Record<string, unknown>;
  total: number;
  total_matched: number;
  offset: number;
  limit: number;
  items: Record<string, unknown>[];
}

export interface PairDoc {
  row_a: number;
  row_b: number;
  matched_attrs: string[];
  match_count: number;
  values_a: string[];
  values_b: string[];
  text: string;
}

export interface SessionJournal {
  config: Record<string, unknown>;
  chosen_key: number;
  decisions: { pair: [number, number]; action: string; copy_attrs: number[] }[];
  result_fingerprint: string;
}

export interface SessionState {
  id: string;
  task_id: string;
  finished: string | null;
  journal: SessionJournal;
  rows_after: number;
  pending: boolean;
}

export class ServiceError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function unwrap<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let code = "http_error";
  let message = response.statusText;
  try {
    const body = await response.json();
    if (body && body.detail) {
      code = body.detail.code ?? code;
      message = body.detail.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ServiceError(response.status, code, message);
}

export class ServiceClient {
  constructor(private baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async uploadDataset(csv: string): Promise<string> {
    const response = await fetch(this.url("/api/v1/datasets"), {
      method: "POST",
      body: csv,
    });
    const doc = await unwrap<{ dataset_id: string }>(response);
    return doc.dataset_id;
  }

  async datasetMeta(datasetId: string): Promise<DatasetMeta> {
    return unwrap(await fetch(this.url(`/api/v1/datasets/${datasetId}`)));
  }

  async applyEdits(
    datasetId: string,
    edits: { row: number; attr: string | number; value: unknown }[],
  ): Promise<string> {
    const response = await fetch(this.url(`/api/v1/datasets/${datasetId}/edits`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ edits }),
    });
    const doc = await unwrap<{ dataset_id: string }>(response);
    return doc.dataset_id;
  }

  async submitTask(
    kind: TaskKind,
    datasetId: string,
    params: Record<string, unknown>,
  ): Promise<TaskRecord> {
    const response = await fetch(this.url("/api/v1/tasks"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ kind, dataset_id: datasetId, params }),
    });
    return unwrap(response);
  }

  async listTasks(): Promise<TaskRecord[]> {
    const doc = await unwrap<{ tasks: TaskRecord[] }>(
      await fetch(this.url("/api/v1/tasks")),
    );
    return doc.tasks;
  }

  async getTask(taskId: string): Promise<TaskRecord> {
    return unwrap(await fetch(this.url(`/api/v1/tasks/${taskId}`)));
  }

  async cancelTask(taskId: string): Promise<void> {
    await unwrap(await fetch(this.url(`/api/v1/tasks/${taskId}/cancel`), { method: "POST" }));
  }

  async getReport(taskId: string): Promise<Record<string, unknown>> {
    return unwrap(await fetch(this.url(`/api/v1/tasks/${taskId}/report`)));
  }

  async getResults(taskId: string, query: ResultsQuery): Promise<ResultsPage> {
    const params = new URLSearchParams();
    params.set("offset", String(query.offset));
    params.set("limit", String(query.limit));
    if (query.filter !== undefined) params.set("filter", query.filter);
    if (query.sort_by !== undefined) params.set("sort_by", query.sort_by);
    if (query.sort_dir !== undefined) params.set("sort_dir", query.sort_dir);
    return unwrap(
      await fetch(this.url(`/api/v1/tasks/${taskId}/results?${params.toString()}`)),
    );
  }

  async waitForTask(taskId: string, timeoutMs = 60_000, pollMs = 150): Promise<TaskRecord> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const record = await this.getTask(taskId);
      if (record.status === "completed" || record.status === "failed") {
        return record;
      }
      if (Date.now() > deadline) {
        throw new ServiceError(408, "timeout", `task ${taskId} still ${record.status}`);
      }
      await new Promise((resolve) => setTimeout(resolve, pollMs));
    }
  }

  // -- dedup session protocol ------------------------------------------------

  async openDedupSession(taskId: string): Promise<string> {
    const response = await fetch(this.url("/api/v1/dedup"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ task_id: taskId }),
    });
    const doc = await unwrap<{ session_id: string }>(response);
    return doc.session_id;
  }

  async sessionState(sessionId: string): Promise<SessionState> {
    return unwrap(await fetch(this.url(`/api/v1/dedup/${sessionId}`)));
  }

  async propose(sessionId: string): Promise<PairDoc | null> {
    const doc = await unwrap<{ done: boolean; pair: PairDoc | null }>(
      await fetch(this.url(`/api/v1/dedup/${sessionId}/propose`), { method: "POST" }),
    );
    return doc.done ? null : doc.pair;
  }

  async decide(
    sessionId: string,
    pair: [number, number],
    action: "keep_a" | "keep_b" | "skip",
    copyAttrs: number[] = [],
  ): Promise<void> {
    const response = await fetch(this.url(`/api/v1/dedup/${sessionId}/decide`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ pair, action, copy_attrs: copyAttrs }),
    });
    await unwrap(response);
  }

  async undo(sessionId: string): Promise<void> {
    await unwrap(await fetch(this.url(`/api/v1/dedup/${sessionId}/undo`), { method: "POST" }));
  }

  async finishSession(sessionId: string): Promise<string> {
    const doc = await unwrap<{ dataset_id: string }>(
      await fetch(this.url(`/api/v1/dedup/${sessionId}/finish`), { method: "POST" }),
    );
    return doc.dataset_id;
  }
}
