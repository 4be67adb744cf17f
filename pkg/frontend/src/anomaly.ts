/**
 * Timeline model for the anomaly panel: one entry per partition with its
 * diff against the canonical set and the probes run for lost dependencies.
 */

export interface ProbeDoc {
  fd: { text: string };
  g1: { decimal: number };
  first_holding: string | null;
  sweep?: { found: boolean; p: number | null; diagnostic: string | null };
}

export interface PartitionStepDoc {
  partition_id: string;
  fd_count: number;
  diff: { lost: { text: string }[]; gained: { text: string }[] };
  probes: ProbeDoc[];
  accepted: boolean;
  text?: string;
}

export interface TimelineEntry {
  partitionId: string;
  fdCount: number;
  lost: string[];
  gained: string[];
  probes: {
    fd: string;
    g1: number;
    admittedAt: string | null;
    sweep: string | null;
  }[];
  accepted: boolean;
  quiet: boolean;
}

export function anomalyTimeline(steps: PartitionStepDoc[]): TimelineEntry[] {
  return steps.map((step) => ({
    partitionId: step.partition_id,
    fdCount: step.fd_count,
    lost: step.diff.lost.map((fd) => fd.text),
    gained: step.diff.gained.map((fd) => fd.text),
    probes: step.probes.map((probe) => ({
      fd: probe.fd.text,
      g1: probe.g1.decimal,
      admittedAt: probe.first_holding,
      sweep: probe.sweep
        ? probe.sweep.found
          ? `holds at p=${probe.sweep.p}`
          : (probe.sweep.diagnostic ?? "no relaxation found")
        : null,
    })),
    accepted: step.accepted,
    quiet: step.diff.lost.length === 0 && step.diff.gained.length === 0,
  }));
}
