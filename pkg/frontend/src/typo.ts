/**
 * Screen model for the typo-explanation panel: violation clusters with the
 * central value highlighted, members ordered by distance, and toggleable
 * fix rows that compose into an edit list for the service.
 */

export interface TypoMemberDoc {
  row: number;
  value: string;
  distance: number | null;
}

export interface TypoClusterDoc {
  lhs_value: string[];
  rows: number[];
  central: { value: string; count: number };
  members: TypoMemberDoc[];
  displayed: boolean;
  fixes: { row: number; current: string; suggested: string }[];
  text: string;
}

export interface TypoReportDoc {
  afd: { text: string; rhs: string; lhs: string[] };
  clusters: TypoClusterDoc[];
}

export interface MemberRow {
  row: number;
  value: string;
  distance: number | null;
  isCentral: boolean;
}

export interface EditRow {
  row: number;
  current: string;
  suggested: string;
  /** pre-checked; the user can untick before submitting */
  checked: boolean;
}

export interface ClusterView {
  lhsValue: string[];
  rows: number[];
  central: { value: string; count: number };
  members: MemberRow[];
  edits: EditRow[];
  hiddenByFilter: boolean;
}

export interface ClusterScreen {
  afdText: string;
  rhsAttribute: string;
  clusters: ClusterView[];
  hiddenCount: number;
  empty: boolean;
}

/**
 * Build the explanation screen. Hidden clusters (radius/ratio filter) are
 * excluded unless ``showFiltered`` is set; they are never recomputed, just
 * revealed.
 */
export function clusterExplanationView(
  report: TypoReportDoc,
  options: { showFiltered?: boolean } = {},
): ClusterScreen {
  const showFiltered = options.showFiltered ?? false;
  const views: ClusterView[] = [];
  let hidden = 0;
  for (const cluster of report.clusters) {
    if (!cluster.displayed) {
      hidden += 1;
      if (!showFiltered) continue;
    }
    const members: MemberRow[] = cluster.members
      .map((m) => ({
        row: m.row,
        value: m.value,
        distance: m.distance,
        isCentral: m.value === cluster.central.value,
      }))
      .sort((a, b) => {
        const da = a.distance === null ? Number.POSITIVE_INFINITY : a.distance;
        const db = b.distance === null ? Number.POSITIVE_INFINITY : b.distance;
        return da === db ? a.row - b.row : da - db;
      });
    views.push({
      lhsValue: cluster.lhs_value,
      rows: cluster.rows,
      central: cluster.central,
      members,
      edits: cluster.fixes.map((fix) => ({ ...fix, checked: true })),
      hiddenByFilter: !cluster.displayed,
    });
  }
  return {
    afdText: report.afd.text,
    rhsAttribute: report.afd.rhs,
    clusters: views,
    hiddenCount: hidden,
    empty: report.clusters.length === 0,
  };
}

/** Accepted suggestions, in service edit-list form. */
export function composeEditList(
  screen: ClusterScreen,
): { row: number; attr: string; value: string }[] {
  const edits: { row: number; attr: string; value: string }[] = [];
  for (const cluster of screen.clusters) {
    for (const edit of cluster.edits) {
      if (edit.checked) {
        edits.push({ row: edit.row, attr: screen.rhsAttribute, value: edit.suggested });
      }
    }
  }
  return edits;
}
