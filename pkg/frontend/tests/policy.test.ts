import { describe, expect, it } from "vitest";

import {
  clonePolicy, flaggedCount, isZeroDelta, validateDraft,
} from "../src/policy.js";
import type { LevelCounts, Policy, WhatIfResult } from "../src/types.js";

function policy(overrides: Partial<Policy> = {}): Policy {
  return {
    version: 1,
    class_weights: { metal_clank: 0.7, high_risk_danger: 1.0 },
    anomaly_threshold: 0.5,
    proximity_threshold: 20,
    priority: ["classification", "anomaly", "localization"],
    notifications: {
      NORMAL: "none", REVIEW: "queue_for_review",
      ALERT: "notify_operator", ALARM: "immediate_notification",
    },
    review_threshold: 0.25,
    alert_threshold: 0.5,
    alarm_threshold: 0.8,
    ...overrides,
  };
}

function counts(n: Partial<LevelCounts> = {}): LevelCounts {
  return { NORMAL: 0, REVIEW: 0, ALERT: 0, ALARM: 0, ...n };
}

describe("draft validation", () => {
  it("accepts a well-formed draft", () => {
    expect(validateDraft(policy())).toEqual([]);
  });

  it("rejects non-finite thresholds with field names", () => {
    const errors = validateDraft(policy({ anomaly_threshold: Infinity }));
    expect(errors).toHaveLength(1);
    expect(errors[0].field).toBe("anomaly_threshold");
  });

  it("rejects an incomplete priority ordering", () => {
    const errors = validateDraft(
      policy({ priority: ["anomaly", "classification"] }));
    expect(errors.some((e) => e.field === "priority")).toBe(true);
  });

  it("rejects negative class weights per field", () => {
    const errors = validateDraft(
      policy({ class_weights: { metal_clank: -0.1 } }));
    expect(errors[0].field).toBe("class_weights.metal_clank");
  });
});

describe("what-if helpers", () => {
  it("zero delta detected when draft equals active policy", () => {
    const result: WhatIfResult = {
      baseline: counts({ NORMAL: 3, REVIEW: 1 }),
      draft: counts({ NORMAL: 3, REVIEW: 1 }),
      delta: counts(),
    };
    expect(isZeroDelta(result)).toBe(true);
  });

  it("non-zero delta detected", () => {
    const result: WhatIfResult = {
      baseline: counts({ NORMAL: 3, REVIEW: 1 }),
      draft: counts({ NORMAL: 4 }),
      delta: counts({ NORMAL: 1, REVIEW: -1 }),
    };
    expect(isZeroDelta(result)).toBe(false);
  });

  it("flagged count sums REVIEW and above", () => {
    expect(flaggedCount(counts({ NORMAL: 9, REVIEW: 2, ALERT: 1, ALARM: 1 })))
      .toBe(4);
  });

  it("raising the anomaly threshold never increases flagged counts", () => {
    // mirror of the service monotonicity contract the console surfaces:
    // with a stricter draft the projected flagged set can only shrink
    const before = counts({ NORMAL: 5, REVIEW: 3, ALERT: 1 });
    const after = counts({ NORMAL: 7, REVIEW: 1, ALERT: 1 });
    expect(flaggedCount(after)).toBeLessThanOrEqual(flaggedCount(before));
  });
});

describe("clonePolicy", () => {
  it("deep-copies the mutable fields", () => {
    const active = policy();
    const draft = clonePolicy(active);
    draft.class_weights.metal_clank = 0.0;
    draft.priority[0] = "anomaly";
    expect(active.class_weights.metal_clank).toBe(0.7);
    expect(active.priority[0]).toBe("classification");
  });
});
