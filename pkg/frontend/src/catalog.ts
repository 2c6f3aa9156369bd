/** Static catalog of item variables mirrored from the estimation service. */

export type VariableKind = "count" | "ordinal";

export interface VariableSpec {
  readonly name: string;
  readonly kind: VariableKind;
  readonly description: string;
  /** Allowed codes for ordinals; empty for open-ended counts. */
  readonly domain: readonly number[];
  /** Human-readable label per ordinal code; empty for counts. */
  readonly labels: Readonly<Record<number, string>>;
}

function count(name: string, description: string): VariableSpec {
  return { name, kind: "count", description, domain: [], labels: {} };
}

function ordinal(
  name: string,
  description: string,
  labels: Readonly<Record<number, string>>,
): VariableSpec {
  const domain = Object.keys(labels)
    .map(Number)
    .sort((a, b) => a - b);
  return { name, kind: "ordinal", description, domain, labels };
}

export const VARIABLES: readonly VariableSpec[] = [
  count("T1", "number of unknown quantities"),
  count("T2", "number of operations stated in the task"),
  ordinal("T3", "language complexity of the statement", {
    1: "Simple",
    2: "Moderate",
    3: "Complex",
  }),
  count("C1", "number of distinct concepts involved"),
  count("C2", "number of solution steps"),
  count("C3", "number of computations required"),
  ordinal("C4", "knowledge forms exercised (facts F, procedures P, concepts C)", {
    1: "F",
    2: "P",
    3: "C",
    4: "F-P",
    5: "F-C",
    6: "C-P",
    7: "F-C-P",
  }),
  count("C5", "number of prerequisite concepts"),
  ordinal("S1", "structural complexity of the expected solution", {
    1: "Simple",
    2: "Complex",
  }),
  count("S2", "number of diagrams or figures"),
  ordinal("S3", "dependency on earlier solution parts", {
    1: "Not dependent",
    2: "Dependent",
  }),
  ordinal("S4", "technical notations in the statement", {
    1: "Present",
    2: "Absent",
  }),
  count("S5", "number of given quantities reused across parts"),
  count("S6", "number of hints or cues provided"),
  count("S7", "number of distinct answer units expected"),
];

export const VARIABLE_NAMES: readonly string[] = VARIABLES.map((spec) => spec.name);

const BY_NAME = new Map(VARIABLES.map((spec) => [spec.name, spec]));

export function variableSpec(name: string): VariableSpec {
  const spec = BY_NAME.get(name);
  if (spec === undefined) {
    throw new Error(`unknown variable name ${name}`);
  }
  return spec;
}

/** Smallest admissible code: 0 for counts, the first domain value for ordinals. */
export function minCode(spec: VariableSpec): number {
  return spec.kind === "count" ? 0 : (spec.domain[0] ?? 0);
}

export const LEVEL_NAMES = ["Low", "Moderate", "High"] as const;

export type LevelName = (typeof LEVEL_NAMES)[number];
