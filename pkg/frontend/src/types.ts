/** Wire types for the what-if service. Shapes mirror the server exactly;
 * nothing here is computed client-side. */

export interface SchoolSummary {
  school_id: string;
  env_score: number;
  jam_score: number;
  frequency: number;
}

export interface SchoolDetail extends SchoolSummary {
  features: Record<string, number>;
}

export interface ScoringInfo {
  alpha: number;
  feature_names: string[];
  weights: number[];
  normalizer: number;
  means: number[];
  stds: number[];
}

export interface RegressionInfo {
  r_squared: number;
  adj_r_squared: number;
  n_obs: number;
  feature_names: string[];
  coef: number[];
  intercept: number;
  dropped_columns: string[];
}

export interface ModelInfo {
  scoring: ScoringInfo;
  validation: { r: number; r_squared: number; n: number };
  regression: RegressionInfo;
  importance: { n_schools: number; ranking: [string, number][] };
}

export type Units = "raw" | "z";

export interface WhatifRequest {
  school_id: string;
  overrides: Record<string, number>;
  units: Units;
}

export interface ScoreTriple {
  env_score: number;
  jam_score: number;
  predicted_frequency: number;
}

export interface WhatifResponse {
  school_id: string;
  units: Units;
  overrides: Record<string, number>;
  baseline: ScoreTriple;
  result: ScoreTriple;
  delta: ScoreTriple;
  phi: Record<string, number>;
}

export interface InteractionsResponse {
  school_id: string;
  features: string[];
  matrix: number[][];
  row_sums: number[];
}
