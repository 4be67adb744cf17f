/**
 * Static parameter schema mirroring the service's task params. Knob forms
 * are generated from this table, so adding a knob means adding a row, not
 * a screen.
 */

import type { TaskKind } from "./api.js";

export interface ParamField {
  name: string;
  label: string;
  kind: "int" | "number" | "rational" | "choice" | "attr_list" | "flag";
  default?: unknown;
  min?: number;
  choices?: string[];
  required?: boolean;
  help?: string;
}

export const TASK_PARAM_SCHEMA: Record<TaskKind, ParamField[]> = {
  fd_discovery: [
    {
      name: "max_lhs",
      label: "Max LHS size",
      kind: "int",
      default: 3,
      min: 1,
      required: true,
      help: "largest left-hand side to search",
    },
  ],
  afd_discovery: [
    { name: "max_lhs", label: "Max LHS size", kind: "int", default: 3, min: 1, required: true },
    {
      name: "threshold",
      label: "g1 threshold",
      kind: "rational",
      default: "0.05",
      required: true,
      help: "decimal or fraction, e.g. 0.05 or 1/20",
    },
  ],
  mfd_validation: [
    { name: "lhs", label: "LHS attributes", kind: "attr_list", required: true },
    { name: "rhs", label: "RHS attributes", kind: "attr_list", required: true },
    {
      name: "metric",
      label: "Metric",
      kind: "choice",
      choices: ["euclidean", "levenshtein"],
      default: "euclidean",
      required: true,
    },
    { name: "p", label: "Distance threshold p", kind: "number", default: 1, min: 0, required: true },
  ],
  scenario_typo: [
    { name: "threshold", label: "AFD threshold", kind: "rational", default: "0.05", required: true },
    { name: "radius", label: "Radius", kind: "number", default: 2, min: 0, required: true },
    { name: "ratio", label: "Ratio", kind: "number", default: 0.5, min: 0, required: true },
    { name: "max_lhs", label: "Max LHS size", kind: "int", default: 2, min: 1 },
    { name: "invert_display", label: "Invert display rule", kind: "flag", default: false },
  ],
  scenario_dedup: [
    { name: "window", label: "Window", kind: "int", default: 5, min: 2, required: true },
    { name: "k", label: "Min matching attributes", kind: "int", default: 2, min: 1, required: true },
    { name: "threshold", label: "AFD threshold", kind: "rational", default: "0.05" },
    { name: "excluded_keys", label: "Excluded key attributes", kind: "attr_list" },
  ],
  scenario_anomaly: [
    { name: "partition_ids", label: "Partition dataset ids", kind: "attr_list", required: true },
    { name: "max_lhs", label: "Max LHS size", kind: "int", default: 3, min: 1 },
    { name: "step", label: "Sweep step", kind: "number", default: 1, min: 0 },
    { name: "d", label: "Sweep bound d", kind: "number" },
  ],
};

/** Parse one form value per its field kind; returns undefined to omit. */
export function parseFieldValue(field: ParamField, raw: string | boolean): unknown {
  if (field.kind === "flag") {
    return Boolean(raw);
  }
  const text = String(raw).trim();
  if (text === "") {
    return undefined;
  }
  switch (field.kind) {
    case "int": {
      const value = Number(text);
      if (!Number.isInteger(value)) throw new Error(`${field.label} must be an integer`);
      return value;
    }
    case "number": {
      const value = Number(text);
      if (!Number.isFinite(value)) throw new Error(`${field.label} must be a number`);
      return value;
    }
    case "rational":
      return text; // the service parses decimals/fractions exactly
    case "choice":
      if (field.choices && !field.choices.includes(text)) {
        throw new Error(`${field.label} must be one of ${field.choices.join(", ")}`);
      }
      return text;
    case "attr_list":
      return text
        .split(",")
        .map((part) => part.trim())
        .filter((part) => part !== "");
  }
}
