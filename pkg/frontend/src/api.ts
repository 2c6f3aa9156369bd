/** Thin typed client for the difficulty service HTTP endpoints. */

import type { LevelName } from "./catalog.js";

export type Codes = Record<string, number>;

export interface Prediction {
  readonly p_low: number;
  readonly p_moderate: number;
  readonly p_high: number;
  readonly level: LevelName;
}

export interface SweepEntry extends Prediction {
  readonly value: number;
}

export interface ModelDocument {
  readonly schema: string;
  readonly variables: readonly string[];
  readonly coefficients: Readonly<Record<string, number>>;
  readonly intercepts: { readonly a1: number; readonly a2: number };
  readonly levels: readonly string[];
  readonly n_train: number;
  readonly loglik: number;
  readonly deviance: number;
  readonly aic: number;
  readonly bic: number;
  readonly mcfadden: number;
  readonly k_convention: string;
  readonly converged: boolean;
}

/** Error response from the service, carrying its detail message and status. */
export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  async model(): Promise<ModelDocument> {
    return this.request<ModelDocument>("/api/model");
  }

  async predict(codes: Codes): Promise<Prediction> {
    return this.request<Prediction>("/api/predict", codes);
  }

  async whatif(base: Codes, variable: string, values: readonly number[]): Promise<SweepEntry[]> {
    return this.request<SweepEntry[]>("/api/whatif", { base, variable, values });
  }

  private async request<T>(path: string, body?: unknown): Promise<T> {
    const init: RequestInit =
      body === undefined
        ? { method: "GET" }
        : {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(body),
          };
    const response = await fetch(this.baseUrl + path, init);
    const payload: unknown = await response.json().catch(() => null);
    if (!response.ok) {
      const detail =
        payload !== null && typeof payload === "object" && "detail" in payload
          ? String((payload as { detail: unknown }).detail)
          : `request failed with status ${response.status}`;
      throw new ApiError(detail, response.status);
    }
    return payload as T;
  }
}
