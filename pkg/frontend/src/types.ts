/** Wire types mirroring the service's JSON responses. */

export type RiskLevelName = "NORMAL" | "REVIEW" | "ALERT" | "ALARM";

export const RISK_LEVELS: readonly RiskLevelName[] = [
  "NORMAL", "REVIEW", "ALERT", "ALARM",
];

export interface RuleTrace {
  rule: string;
  signal: string;
  value: number;
  threshold: number;
  level: RiskLevelName;
}

export interface Assessment {
  level: RiskLevelName;
  signals: Record<string, number | null>;
  trace: RuleTrace[];
  observation_id: string | null;
  notification: string;
}

export interface LocationInfo {
  position: [number, number];
  residual: number;
  grid_step: number;
  region: string;
}

export interface Observation {
  observation_id: string;
  channels: string[];
  class_probs: Record<string, number>;
  anomaly_score: number;
  location: LocationInfo | null;
  assessment: Assessment;
  timings: Record<string, number>;
  stage_errors: Record<string, string>;
  policy_version: number;
}

export interface ObservationPage {
  observations: Observation[];
  next_cursor: number | null;
}

export interface MelMatrix {
  observation_id: string;
  bands: number;
  frames: number;
  values: number[][];
}

export interface Policy {
  version: number;
  class_weights: Record<string, number>;
  anomaly_threshold: number;
  proximity_threshold: number;
  priority: string[];
  notifications: Record<RiskLevelName, string>;
  review_threshold: number;
  alert_threshold: number;
  alarm_threshold: number;
}

export type LevelCounts = Record<RiskLevelName, number>;

export interface WhatIfResult {
  baseline: LevelCounts;
  draft: LevelCounts;
  delta: LevelCounts;
}

export interface TrainingManifestRow {
  sample_id: string;
  path: string;
  label: string | null;
  anomaly_flag: boolean;
  provenance: string;
  created_at: string;
}
