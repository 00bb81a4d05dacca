import type { ScenarioSlot } from "./state.js";
import type { SchoolSummary, WhatifResponse } from "./types.js";

/** Display rounding is the only arithmetic this module is allowed. Every
 * `value` field carries the server's number untouched so tests can check
 * identity; the `text` fields are those numbers rounded for screen. */

export function fmt(value: number, digits = 3): string {
  return value.toFixed(digits);
}

export function fmtSigned(value: number, digits = 3): string {
  const text = fmt(value, digits);
  return value > 0 ? "+" + text : text;
}

export interface BoardRow {
  schoolId: string;
  envScore: number;
  jamScore: number;
  frequency: number;
  envScoreText: string;
  jamScoreText: string;
  frequencyText: string;
}

/** Ranked list, best environment first. Ties keep the server's order. */
export function schoolBoard(schools: SchoolSummary[]): BoardRow[] {
  return schools
    .map((s, i) => ({ s, i }))
    .sort((a, b) => b.s.env_score - a.s.env_score || a.i - b.i)
    .map(({ s }) => ({
      schoolId: s.school_id,
      envScore: s.env_score,
      jamScore: s.jam_score,
      frequency: s.frequency,
      envScoreText: fmt(s.env_score, 2),
      jamScoreText: fmt(s.jam_score, 2),
      frequencyText: fmt(s.frequency, 3),
    }));
}

export const EMPTY_BOARD_MESSAGE = "no schools in this run";

export interface PhiBar {
  feature: string;
  phi: number;
  phiText: string;
  /** bar length as a fraction of the largest magnitude, for layout only */
  width: number;
}

export function phiBars(
  phi: Record<string, number>,
  limit?: number,
): PhiBar[] {
  const entries = Object.entries(phi).sort(
    (a, b) => Math.abs(b[1]) - Math.abs(a[1]),
  );
  const top = limit === undefined ? entries : entries.slice(0, limit);
  const scale = Math.max(...top.map(([, v]) => Math.abs(v)), 0);
  return top.map(([feature, value]) => ({
    feature,
    phi: value,
    phiText: fmtSigned(value, 4),
    width: scale > 0 ? Math.abs(value) / scale : 0,
  }));
}

export interface DeltaBadge {
  envScore: number;
  jamScore: number;
  predictedFrequency: number;
  envScoreText: string;
  jamScoreText: string;
  predictedFrequencyText: string;
}

/** The change vs baseline, exactly as the server reported it. */
export function deltaBadge(resp: WhatifResponse): DeltaBadge {
  return {
    envScore: resp.delta.env_score,
    jamScore: resp.delta.jam_score,
    predictedFrequency: resp.delta.predicted_frequency,
    envScoreText: fmtSigned(resp.delta.env_score),
    jamScoreText: fmtSigned(resp.delta.jam_score),
    predictedFrequencyText: fmtSigned(resp.delta.predicted_frequency),
  };
}

export interface CompareColumn {
  label: string;
  envScore: number | null;
  jamScore: number | null;
  predictedFrequency: number | null;
  topFeatures: PhiBar[];
  pending: boolean;
  error: string | null;
}

/** Side-by-side table over every slot that has an answer (or is on its
 * way to one). Top-5 attribution magnitudes identify each column. */
export function compareTable(slots: ScenarioSlot[]): CompareColumn[] {
  return slots.map((slot) => ({
    label: slot.label,
    envScore: slot.response ? slot.response.result.env_score : null,
    jamScore: slot.response ? slot.response.result.jam_score : null,
    predictedFrequency: slot.response
      ? slot.response.result.predicted_frequency
      : null,
    topFeatures: slot.response ? phiBars(slot.response.phi, 5) : [],
    pending: slot.pending,
    error: slot.error,
  }));
}
