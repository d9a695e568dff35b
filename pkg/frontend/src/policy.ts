import type { LevelCounts, Policy, WhatIfResult } from "./types.js";
import { RISK_LEVELS } from "./types.js";

const REQUIRED_SIGNALS = ["classification", "anomaly", "localization"];

export interface FieldError {
  field: string;
  message: string;
}

/** Client-side validation mirroring the service's policy rules, so drafts
 * fail fast with field-level messages before submission. */
export function validateDraft(draft: Policy): FieldError[] {
  const errors: FieldError[] = [];
  const thresholds: Array<[string, number]> = [
    ["anomaly_threshold", draft.anomaly_threshold],
    ["proximity_threshold", draft.proximity_threshold],
    ["review_threshold", draft.review_threshold],
    ["alert_threshold", draft.alert_threshold],
    ["alarm_threshold", draft.alarm_threshold],
  ];
  for (const [field, value] of thresholds) {
    if (typeof value !== "number" || !Number.isFinite(value)) {
      errors.push({ field, message: "must be a finite number" });
    }
  }
  const priority = [...draft.priority].sort();
  const expected = [...REQUIRED_SIGNALS].sort();
  if (priority.length !== expected.length ||
      priority.some((s, i) => s !== expected[i])) {
    errors.push({
      field: "priority",
      message: `must totally order ${REQUIRED_SIGNALS.join(", ")}`,
    });
  }
  for (const [cls, weight] of Object.entries(draft.class_weights)) {
    if (!Number.isFinite(weight) || weight < 0) {
      errors.push({
        field: `class_weights.${cls}`,
        message: "weight must be a non-negative number",
      });
    }
  }
  return errors;
}

export function clonePolicy(policy: Policy): Policy {
  return {
    ...policy,
    class_weights: { ...policy.class_weights },
    priority: [...policy.priority],
    notifications: { ...policy.notifications },
  };
}

/** Count of observations at or above REVIEW — the "flagged" set. */
export function flaggedCount(counts: LevelCounts): number {
  return counts.REVIEW + counts.ALERT + counts.ALARM;
}

export function isZeroDelta(result: WhatIfResult): boolean {
  return RISK_LEVELS.every((level) => result.delta[level] === 0);
}
