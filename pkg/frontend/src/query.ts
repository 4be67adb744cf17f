/**
 * Results-grid state and its two pure mappings: onto the service's
 * ResultsQuery, and onto URL query parameters (deep links). Both are
 * total and invertible on valid states, so a pasted link reproduces the
 * exact server query.
 */

import type { ResultsQuery } from "./api.js";

export interface GridState {
  /** 1-based page number. */
  page: number;
  pageSize: number;
  /** regex over each instance's text form; empty string = no filter */
  filter: string;
  sortBy: string | null;
  sortDir: "asc" | "desc";
}

export const DEFAULT_GRID_STATE: GridState = {
  page: 1,
  pageSize: 25,
  filter: "",
  sortBy: null,
  sortDir: "asc",
};

export class InvalidRegexError extends Error {
  constructor(public pattern: string, detail: string) {
    super(`invalid filter regex ${JSON.stringify(pattern)}: ${detail}`);
  }
}

/** Client-side validation: no request leaves with a broken pattern. */
export function validateFilter(pattern: string): void {
  if (pattern === "") return;
  try {
    new RegExp(pattern);
  } catch (error) {
    throw new InvalidRegexError(pattern, String(error));
  }
}

export function buildResultsQuery(state: GridState): ResultsQuery {
  if (!Number.isInteger(state.page) || state.page < 1) {
    throw new RangeError(`page must be a positive integer, got ${state.page}`);
  }
  if (!Number.isInteger(state.pageSize) || state.pageSize < 1) {
    throw new RangeError(`pageSize must be a positive integer, got ${state.pageSize}`);
  }
  validateFilter(state.filter);
  const query: ResultsQuery = {
    offset: (state.page - 1) * state.pageSize,
    limit: state.pageSize,
  };
  if (state.filter !== "") {
    query.filter = state.filter;
  }
  if (state.sortBy !== null) {
    query.sort_by = state.sortBy;
    query.sort_dir = state.sortDir;
  }
  return query;
}

/**
 * Deep-link serialization. Every field is written explicitly so distinct
 * states never collide on a URL and the reverse mapping needs no implicit
 * defaults.
 */
export function gridStateToParams(state: GridState): URLSearchParams {
  const params = new URLSearchParams();
  params.set("page", String(state.page));
  params.set("size", String(state.pageSize));
  params.set("filter", state.filter);
  params.set("sort", state.sortBy ?? "");
  params.set("dir", state.sortDir);
  return params;
}

export function gridStateFromParams(params: URLSearchParams): GridState {
  const page = Number(params.get("page") ?? "1");
  const size = Number(params.get("size") ?? String(DEFAULT_GRID_STATE.pageSize));
  const sort = params.get("sort") ?? "";
  const dir = params.get("dir") === "desc" ? "desc" : "asc";
  return {
    page: Number.isInteger(page) && page >= 1 ? page : 1,
    pageSize: Number.isInteger(size) && size >= 1 ? size : DEFAULT_GRID_STATE.pageSize,
    filter: params.get("filter") ?? "",
    sortBy: sort === "" ? null : sort,
    sortDir: dir,
  };
}

export function gridStateToUrl(state: GridState): string {
  return `?${gridStateToParams(state).toString()}`;
}

export function gridStateFromUrl(search: string): GridState {
  return gridStateFromParams(new URLSearchParams(search));
}

/**
 * Reference client-side filter: applying the grid's regex to a fully
 * downloaded result list. Server-side filtering must agree with this
 * (checked in the integration suite).
 */
export function clientFilter<T extends { text?: unknown }>(items: T[], pattern: string): T[] {
  if (pattern === "") return items;
  validateFilter(pattern);
  const regex = new RegExp(pattern);
  return items.filter((item) => regex.test(String(item.text ?? "")));
}
