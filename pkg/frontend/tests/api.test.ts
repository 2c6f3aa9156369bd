import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { FakeService, ITEM3_CODES, ITEM3_PREDICTION, MODEL_DOCUMENT } from "./fixtures.js";

afterEach(() => {
  vi.unstubAllGlobals();
});

function install(service: FakeService): void {
  vi.stubGlobal("fetch", service.fetch);
}

describe("ApiClient.model", () => {
  it("fetches the model document with GET", async () => {
    const service = new FakeService();
    install(service);
    const client = new ApiClient();
    const document = await client.model();
    expect(document).toEqual(MODEL_DOCUMENT);
    expect(service.requests).toHaveLength(1);
    expect(service.requests[0]?.path).toBe("/api/model");
    expect(service.requests[0]?.body).toBeNull();
  });

  it("prefixes a base URL when given", async () => {
    const service = new FakeService();
    install(service);
    const client = new ApiClient("http://localhost:8000");
    await client.model();
    expect(service.requests[0]?.path).toBe("http://localhost:8000/api/model");
  });
});

describe("ApiClient.predict", () => {
  it("posts the coding as JSON and returns the prediction", async () => {
    const service = new FakeService();
    install(service);
    const client = new ApiClient();
    const prediction = await client.predict(ITEM3_CODES);
    expect(prediction).toEqual(ITEM3_PREDICTION);
    expect(service.requests[0]?.path).toBe("/api/predict");
    expect(service.requests[0]?.body).toEqual(ITEM3_CODES);
  });

  it("raises ApiError with the service detail on 4xx", async () => {
    const service = new FakeService();
    service.errorResponse = { status: 422, detail: "S6 out of domain {0,1,2,...}" };
    install(service);
    const client = new ApiClient();
    const failure = await client.predict(ITEM3_CODES).catch((error: unknown) => error);
    expect(failure).toBeInstanceOf(ApiError);
    expect((failure as ApiError).message).toBe("S6 out of domain {0,1,2,...}");
    expect((failure as ApiError).status).toBe(422);
  });

  it("falls back to a status message when the error body is not JSON", async () => {
    const broken = {
      ok: false,
      status: 500,
      json: async () => {
        throw new SyntaxError("not json");
      },
    } as unknown as Response;
    vi.stubGlobal("fetch", async () => broken);
    const client = new ApiClient();
    const failure = await client.predict(ITEM3_CODES).catch((error: unknown) => error);
    expect(failure).toBeInstanceOf(ApiError);
    expect((failure as ApiError).message).toBe("request failed with status 500");
  });

  it("propagates network failures unchanged", async () => {
    const service = new FakeService();
    service.networkFailures = 1;
    install(service);
    const client = new ApiClient();
    await expect(client.predict(ITEM3_CODES)).rejects.toThrowError(TypeError);
  });
});

describe("ApiClient.whatif", () => {
  it("posts base, variable, and values in one body", async () => {
    const service = new FakeService();
    install(service);
    const client = new ApiClient();
    const entries = await client.whatif(ITEM3_CODES, "S6", [0, 1, 2, 3, 4, 5]);
    expect(entries).toHaveLength(6);
    expect(entries[0]?.value).toBe(0);
    expect(entries[0]?.p_high).toBe(ITEM3_PREDICTION.p_high);
    expect(service.requests[0]?.body).toEqual({
      base: ITEM3_CODES,
      variable: "S6",
      values: [0, 1, 2, 3, 4, 5],
    });
  });
});
