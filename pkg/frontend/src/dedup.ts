/**
 * Interactive dedup flow: fetch one proposal at a time, post the user's
 * decision, support undo, finish into a new dataset. At most one decision
 * post is in flight; a 409/410 from the service is surfaced as a
 * pair-changed signal and answered by refreshing the proposal.
 */

import { PairDoc, ServiceClient, ServiceError } from "./api.js";

export interface PairView {
  rowA: number;
  rowB: number;
  matchCount: number;
  valuesA: string[];
  valuesB: string[];
  /** attribute positions where the two rows differ (diff highlighting) */
  diffAttrs: number[];
}

export function pairView(pair: PairDoc): PairView {
  const diffAttrs: number[] = [];
  for (let i = 0; i < pair.values_a.length; i++) {
    if (pair.values_a[i] !== pair.values_b[i]) {
      diffAttrs.push(i);
    }
  }
  return {
    rowA: pair.row_a,
    rowB: pair.row_b,
    matchCount: pair.match_count,
    valuesA: pair.values_a,
    valuesB: pair.values_b,
    diffAttrs,
  };
}

export type FlowEvent =
  | { kind: "pair"; pair: PairView }
  | { kind: "done" }
  | { kind: "pair_changed"; detail: string };

export class DedupFlow {
  private current: PairDoc | null = null;
  private posting = false;

  constructor(
    private api: ServiceClient,
    private sessionId: string,
  ) {}

  async next(): Promise<FlowEvent> {
    this.current = await this.api.propose(this.sessionId);
    if (this.current === null) {
      return { kind: "done" };
    }
    return { kind: "pair", pair: pairView(this.current) };
  }

  /** Decide the currently shown pair; refreshes on a stale/conflict reply. */
  async decide(
    action: "keep_a" | "keep_b" | "skip",
    copyAttrs: number[] = [],
  ): Promise<FlowEvent> {
    if (this.current === null) {
      return { kind: "done" };
    }
    if (this.posting) {
      throw new Error("a decision is already in flight");
    }
    this.posting = true;
    try {
      await this.api.decide(
        this.sessionId,
        [this.current.row_a, this.current.row_b],
        action,
        copyAttrs,
      );
    } catch (error) {
      if (error instanceof ServiceError && (error.status === 409 || error.status === 410)) {
        return { kind: "pair_changed", detail: error.message };
      }
      throw error;
    } finally {
      this.posting = false;
    }
    return this.next();
  }

  async undo(): Promise<void> {
    await this.api.undo(this.sessionId);
    this.current = null;
  }

  async finish(): Promise<string> {
    return this.api.finishSession(this.sessionId);
  }
}
