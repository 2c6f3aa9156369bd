import { describe, expect, it } from "vitest";

import { displayPercent, formatPercent } from "../src/rounding.js";
import {
  ITEM2_PREDICTION,
  ITEM2_SWEEP_S6,
  ITEM3_PREDICTION,
  ITEM3_SWEEP_S1,
  ITEM3_SWEEP_S6,
  MINIMUMS_PREDICTION,
} from "./fixtures.js";
import type { Prediction } from "../src/api.js";

function tripleSum(prediction: Prediction): number {
  return (
    displayPercent(prediction.p_low) +
    displayPercent(prediction.p_moderate) +
    displayPercent(prediction.p_high)
  );
}

describe("displayPercent", () => {
  it("rounds service probabilities to one decimal percent", () => {
    expect(displayPercent(ITEM3_PREDICTION.p_high)).toBe(76.3);
    expect(displayPercent(ITEM3_PREDICTION.p_moderate)).toBe(21.4);
    expect(displayPercent(ITEM3_PREDICTION.p_low)).toBe(2.3);
    expect(displayPercent(ITEM2_PREDICTION.p_moderate)).toBe(52.5);
    expect(displayPercent(MINIMUMS_PREDICTION.p_low)).toBe(92.1);
  });

  it("rounds halves up, not to even", () => {
    // 1/16 and 9/16 are exact binary fractions, so *1000 lands on .5 exactly
    expect(displayPercent(0.0625)).toBe(6.3);
    expect(displayPercent(0.5625)).toBe(56.3);
    expect(displayPercent(0.1875)).toBe(18.8);
  });

  it("keeps the endpoints exact", () => {
    expect(displayPercent(0)).toBe(0);
    expect(displayPercent(1)).toBe(100);
    expect(displayPercent(0.5)).toBe(50);
  });
});

describe("formatPercent", () => {
  it("always shows one decimal and a percent sign", () => {
    expect(formatPercent(ITEM3_PREDICTION.p_high)).toBe("76.3%");
    expect(formatPercent(0)).toBe("0.0%");
    expect(formatPercent(1)).toBe("100.0%");
    expect(formatPercent(0.5)).toBe("50.0%");
  });
});

describe("rounded triples", () => {
  it("sums to 100 within one display unit on every fixture", () => {
    const predictions: Prediction[] = [
      MINIMUMS_PREDICTION,
      ITEM2_PREDICTION,
      ITEM3_PREDICTION,
      ...ITEM3_SWEEP_S6,
      ...ITEM2_SWEEP_S6,
      ...ITEM3_SWEEP_S1,
    ];
    for (const prediction of predictions) {
      expect(Math.abs(tripleSum(prediction) - 100)).toBeLessThanOrEqual(0.1 + 1e-9);
    }
  });

  it("sums to 100 within one display unit on random triples", () => {
    // small LCG keeps the sample reproducible without a dependency
    let seed = 12345;
    const uniform = (): number => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    for (let rep = 0; rep < 1000; rep += 1) {
      const cutA = uniform();
      const cutB = uniform();
      const lower = Math.min(cutA, cutB);
      const upper = Math.max(cutA, cutB);
      const triple: Prediction = {
        p_low: lower,
        p_moderate: upper - lower,
        p_high: 1 - upper,
        level: "Low",
      };
      expect(Math.abs(tripleSum(triple) - 100)).toBeLessThanOrEqual(0.1 + 1e-9);
    }
  });
});
