/**
 * Frozen service responses for three reference item codings, plus a fake
 * fetch implementation that replays them. Values were captured verbatim from
 * the estimation service so no test reimplements any probability math.
 */

import type { Codes, ModelDocument, Prediction, SweepEntry } from "../src/api.js";

export const MODEL_DOCUMENT: ModelDocument = {
  schema: "itemgauge-model/1",
  variables: ["T2", "C2", "C3", "S1", "S4", "S6"],
  coefficients: { T2: 0.28, C2: 0.54, C3: 0.47, S1: 0.51, S4: 0.23, S6: -0.48 },
  intercepts: { a1: -3.2, a2: -5.8 },
  levels: ["Low", "Moderate", "High"],
  n_train: 300,
  loglik: -426.835,
  deviance: 853.67,
  aic: 865.67,
  bic: 887.8926948479372,
  mcfadden: 0.32,
  k_convention: "slopes_only",
  converged: true,
};

export const MINIMUM_CODES: Codes = { T2: 0, C2: 0, C3: 0, S1: 1, S4: 1, S6: 0 };
export const ITEM2_CODES: Codes = { T2: 1, C2: 3, C3: 4, S1: 1, S4: 2, S6: 2 };
export const ITEM3_CODES: Codes = { T2: 3, C2: 6, C3: 3, S1: 2, S4: 2, S6: 0 };

export const MINIMUMS_PREDICTION: Prediction = {
  p_low: 0.9212896628294648,
  p_moderate: 0.07240478988319939,
  p_high: 0.006305547287335863,
  level: "Low",
};

export const ITEM2_PREDICTION: Prediction = {
  p_low: 0.35663485430559827,
  p_moderate: 0.5252081678851321,
  p_high: 0.11815697780926955,
  level: "Moderate",
};

export const ITEM3_PREDICTION: Prediction = {
  p_low: 0.022532639456447234,
  p_moderate: 0.21432234481669732,
  p_high: 0.7631450157268554,
  level: "High",
};

function entry(
  value: number,
  p_low: number,
  p_moderate: number,
  p_high: number,
  level: Prediction["level"],
): SweepEntry {
  return { value, p_low, p_moderate, p_high, level };
}

export const ITEM3_SWEEP_S6: readonly SweepEntry[] = [
  entry(0, 0.022532639456447234, 0.21432234481669732, 0.7631450157268554, "High"),
  entry(1, 0.03591584588276164, 0.298117227365418, 0.6659669267518203, "High"),
  entry(2, 0.0567861808087885, 0.3909059096168862, 0.5523079095743253, "High"),
  entry(3, 0.08866866325473333, 0.4784242417107211, 0.43290709503454555, "Moderate"),
  entry(4, 0.13587289700909422, 0.5433058021662989, 0.32082130082460697, "Moderate"),
  entry(5, 0.2026198464311304, 0.5711987278383234, 0.22618142573054625, "Moderate"),
];

export const ITEM2_SWEEP_S6: readonly SweepEntry[] = [
  entry(0, 0.17508626816403983, 0.5656886310181142, 0.25922510081784605, "Moderate"),
  entry(1, 0.2554030841725241, 0.5666032300412294, 0.17799368578624647, "Moderate"),
  entry(2, 0.35663485430559827, 0.5252081678851321, 0.11815697780926955, "Moderate"),
  entry(3, 0.4725276956554063, 0.4509101069927815, 0.07656219735181218, "Low"),
  entry(4, 0.5914589784327802, 0.35974129856841985, 0.048799722998800005, "Low"),
  entry(5, 0.700567142473973, 0.26866399816887904, 0.03076885935714802, "Low"),
];

export const ITEM3_SWEEP_S1: readonly SweepEntry[] = [
  entry(1, 0.03696920929667713, 0.3037704022519374, 0.6592603884513855, "High"),
  entry(2, 0.022532639456447234, 0.21432234481669732, 0.7631450157268554, "High"),
];

export function codesEqual(a: Codes, b: Codes): boolean {
  const keysA = Object.keys(a).sort();
  const keysB = Object.keys(b).sort();
  return (
    keysA.length === keysB.length &&
    keysA.every((key, index) => key === keysB[index] && a[key] === b[key])
  );
}

export interface RecordedRequest {
  readonly path: string;
  readonly body: unknown;
}

interface WhatIfBody {
  readonly base: Codes;
  readonly variable: string;
  readonly values: readonly number[];
}

function respond(status: number, payload: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => payload,
  } as unknown as Response;
}

/** In-memory service double that replays the frozen responses. */
export class FakeService {
  readonly requests: RecordedRequest[] = [];
  /** Number of upcoming calls that should fail like a dropped connection. */
  networkFailures = 0;
  /** One-shot error payload returned instead of the normal response. */
  errorResponse: { status: number; detail: string } | null = null;
  /** Awaited before responding; lets a test hold responses and reorder them. */
  respondHook: ((request: RecordedRequest) => Promise<void>) | null = null;
  /** Returned for codings without a frozen fixture. */
  fallbackPrediction: Prediction = MINIMUMS_PREDICTION;

  private readonly predictions: ReadonlyArray<{ codes: Codes; prediction: Prediction }> = [
    { codes: MINIMUM_CODES, prediction: MINIMUMS_PREDICTION },
    { codes: ITEM2_CODES, prediction: ITEM2_PREDICTION },
    { codes: ITEM3_CODES, prediction: ITEM3_PREDICTION },
  ];

  private readonly sweeps: ReadonlyArray<{
    base: Codes;
    variable: string;
    entries: readonly SweepEntry[];
  }> = [
    { base: ITEM3_CODES, variable: "S6", entries: ITEM3_SWEEP_S6 },
    { base: ITEM2_CODES, variable: "S6", entries: ITEM2_SWEEP_S6 },
    { base: ITEM3_CODES, variable: "S1", entries: ITEM3_SWEEP_S1 },
  ];

  requestsTo(path: string): RecordedRequest[] {
    return this.requests.filter((request) => request.path.endsWith(path));
  }

  fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const path = String(input);
    const body: unknown = init?.body === undefined ? null : JSON.parse(String(init.body));
    const request: RecordedRequest = { path, body };
    this.requests.push(request);
    if (this.respondHook !== null) {
      await this.respondHook(request);
    }
    if (this.networkFailures > 0) {
      this.networkFailures -= 1;
      throw new TypeError("fetch failed");
    }
    if (this.errorResponse !== null) {
      const { status, detail } = this.errorResponse;
      this.errorResponse = null;
      return respond(status, { detail });
    }
    if (path.endsWith("/api/model")) {
      return respond(200, MODEL_DOCUMENT);
    }
    if (path.endsWith("/api/predict")) {
      const codes = body as Codes;
      const match = this.predictions.find((row) => codesEqual(row.codes, codes));
      return respond(200, match === undefined ? this.fallbackPrediction : match.prediction);
    }
    if (path.endsWith("/api/whatif")) {
      const { base, variable, values } = body as WhatIfBody;
      const match = this.sweeps.find(
        (row) => row.variable === variable && codesEqual(row.base, base),
      );
      const entries =
        match === undefined
          ? values.map((value) => ({ value, ...this.fallbackPrediction }))
          : match.entries.filter((row) => values.includes(row.value));
      return respond(200, entries);
    }
    return respond(404, { detail: `no route for ${path}` });
  };
}
