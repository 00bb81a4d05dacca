import { ApiClient, ApiError } from "./api.js";
import type {
  ModelInfo,
  SchoolSummary,
  Units,
  WhatifResponse,
} from "./types.js";

export const MAX_SCENARIOS = 3;
export const DEBOUNCE_MS = 250;

export interface ScenarioSlot {
  label: string;
  units: Units;
  overrides: Record<string, number>;
  /** last accepted server answer; every displayed number comes from here */
  response: WhatifResponse | null;
  /** inline message for a rejected override, plus which control it blames */
  error: string | null;
  errorFeature: string | null;
  pending: boolean;
}

function emptySlot(label: string): ScenarioSlot {
  return {
    label,
    units: "z",
    overrides: {},
    response: null,
    error: null,
    errorFeature: null,
    pending: false,
  };
}

/** Exact cache identity: school, units, and the override map with keys in
 * sorted order so insertion order cannot split the cache. */
export function cacheKey(
  schoolId: string,
  units: Units,
  overrides: Record<string, number>,
): string {
  const entries = Object.keys(overrides)
    .sort()
    .map((k) => [k, overrides[k]]);
  return JSON.stringify([schoolId, units, entries]);
}

interface SerializedState {
  school: string | null;
  slots: { label: string; units: Units; overrides: Record<string, number> }[];
}

/** URL-safe round trip of everything a bookmark needs. */
export function serializeState(store: ScenarioStore): string {
  const doc: SerializedState = {
    school: store.schoolId,
    slots: store.slots.slice(1).map((s) => ({
      label: s.label,
      units: s.units,
      overrides: s.overrides,
    })),
  };
  return "s=" + encodeURIComponent(JSON.stringify(doc));
}

export function parseState(fragment: string): SerializedState | null {
  const raw = fragment.startsWith("#") ? fragment.slice(1) : fragment;
  if (!raw.startsWith("s=")) return null;
  let doc: unknown;
  try {
    doc = JSON.parse(decodeURIComponent(raw.slice(2)));
  } catch {
    return null;
  }
  if (!doc || typeof doc !== "object") return null;
  const d = doc as SerializedState;
  if (d.school !== null && typeof d.school !== "string") return null;
  if (!Array.isArray(d.slots)) return null;
  for (const s of d.slots) {
    if (typeof s.label !== "string") return null;
    if (s.units !== "raw" && s.units !== "z") return null;
    if (!s.overrides || typeof s.overrides !== "object") return null;
    for (const v of Object.values(s.overrides)) {
      if (typeof v !== "number" || !Number.isFinite(v)) return null;
    }
  }
  return d;
}

/** Cancellable timer hook; tests drive it with fake clocks. */
export type Scheduler = (fn: () => void, ms: number) => () => void;

const defaultScheduler: Scheduler = (fn, ms) => {
  const id = setTimeout(fn, ms);
  return () => clearTimeout(id);
};

/**
 * All client state and the rules for talking to the service.
 *
 * Slot 0 is the untouchable baseline. Override edits debounce before
 * firing; each slot has at most one request in flight and a stale answer
 * is dropped (latest wins). Responses are cached by exact
 * (school, units, overrides) identity. No number is ever derived
 * client-side: a slot shows precisely what the server last said.
 */
export class ScenarioStore {
  schoolId: string | null = null;
  slots: ScenarioSlot[] = [emptySlot("baseline")];
  schools: SchoolSummary[] | null = null;
  model: ModelInfo | null = null;
  /** connection-level failure shown as a banner with a retry action */
  connectionError: string | null = null;

  private cache = new Map<string, WhatifResponse>();
  private seq = new Map<ScenarioSlot, number>();
  private timers = new Map<ScenarioSlot, () => void>();
  private listeners = new Set<() => void>();

  constructor(
    private readonly api: ApiClient,
    private readonly schedule: Scheduler = defaultScheduler,
    private readonly debounceMs: number = DEBOUNCE_MS,
  ) {}

  subscribe(fn: () => void): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  /** Feature names the fitted model accepts as overrides. */
  knownFeatures(): string[] {
    return this.model ? this.model.regression.feature_names : [];
  }

  async loadModel(): Promise<void> {
    try {
      this.model = await this.api.model();
      this.connectionError = null;
    } catch (err) {
      this.connectionError = err instanceof Error ? err.message : String(err);
    }
    this.emit();
  }

  async loadBoard(): Promise<void> {
    try {
      this.schools = await this.api.schools();
      this.connectionError = null;
    } catch (err) {
      this.connectionError = err instanceof Error ? err.message : String(err);
    }
    this.emit();
  }

  /** Re-run whatever failed: the board, the model, and every slot. */
  async retry(): Promise<void> {
    this.connectionError = null;
    if (this.model === null) await this.loadModel();
    if (this.schools === null) await this.loadBoard();
    if (this.schoolId !== null) {
      for (const slot of this.slots) this.fire(slot);
    }
    this.emit();
  }

  async selectSchool(id: string): Promise<void> {
    this.schoolId = id;
    // overrides carry over; every slot re-queries against the new school
    for (const slot of this.slots) {
      slot.response = null;
      slot.error = null;
      slot.errorFeature = null;
      this.fire(slot);
    }
    this.emit();
  }

  addScenario(label?: string): ScenarioSlot {
    if (this.slots.length > MAX_SCENARIOS) {
      throw new Error(`at most ${MAX_SCENARIOS} scenarios plus the baseline`);
    }
    const slot = emptySlot(label ?? `scenario ${this.slots.length}`);
    this.slots.push(slot);
    if (this.schoolId !== null) this.fire(slot);
    this.emit();
    return slot;
  }

  removeScenario(index: number): void {
    if (index === 0) throw new Error("the baseline slot cannot be removed");
    const [slot] = this.slots.splice(index, 1);
    if (slot) {
      this.timers.get(slot)?.();
      this.timers.delete(slot);
      this.seq.delete(slot);
    }
    this.emit();
  }

  setOverride(index: number, feature: string, value: number): void {
    const slot = this.requireScenario(index);
    if (!this.knownFeatures().includes(feature)) {
      throw new Error(`unknown feature ${feature}`);
    }
    if (!Number.isFinite(value)) {
      throw new Error(`${feature}: override must be a finite number`);
    }
    slot.overrides = { ...slot.overrides, [feature]: value };
    this.scheduleFire(slot);
  }

  clearOverride(index: number, feature: string): void {
    const slot = this.requireScenario(index);
    if (!(feature in slot.overrides)) return;
    const next = { ...slot.overrides };
    delete next[feature];
    slot.overrides = next;
    this.scheduleFire(slot);
  }

  setUnits(index: number, units: Units): void {
    const slot = this.requireScenario(index);
    if (slot.units === units) return;
    slot.units = units;
    this.scheduleFire(slot);
  }

  private requireScenario(index: number): ScenarioSlot {
    if (index === 0) {
      throw new Error("the baseline slot is read-only");
    }
    const slot = this.slots[index];
    if (!slot) throw new Error(`no scenario slot ${index}`);
    return slot;
  }

  private scheduleFire(slot: ScenarioSlot): void {
    this.timers.get(slot)?.();
    slot.pending = true;
    const cancel = this.schedule(() => {
      this.timers.delete(slot);
      this.fire(slot);
    }, this.debounceMs);
    this.timers.set(slot, cancel);
    this.emit();
  }

  /** Issue the request for a slot right now. Stale answers lose: a newer
   * fire for the same slot bumps the sequence number and any response
   * carrying an old number is discarded on arrival. */
  private fire(slot: ScenarioSlot): void {
    if (this.schoolId === null) return;
    const schoolId = this.schoolId;
    const token = (this.seq.get(slot) ?? 0) + 1;
    this.seq.set(slot, token);
    slot.pending = true;

    const key = cacheKey(schoolId, slot.units, slot.overrides);
    const cached = this.cache.get(key);
    if (cached) {
      slot.response = cached;
      slot.error = null;
      slot.errorFeature = null;
      slot.pending = false;
      this.emit();
      return;
    }

    const accept = () =>
      this.seq.get(slot) === token && this.slots.includes(slot);

    this.api
      .whatif({
        school_id: schoolId,
        overrides: { ...slot.overrides },
        units: slot.units,
      })
      .then((resp) => {
        if (!accept()) return;
        this.cache.set(key, resp);
        slot.response = resp;
        slot.error = null;
        slot.errorFeature = null;
        slot.pending = false;
        this.emit();
      })
      .catch((err: unknown) => {
        if (!accept()) return;
        slot.pending = false;
        if (err instanceof ApiError && err.status === 422) {
          slot.error = err.message;
          slot.errorFeature = this.blameFeature(err.message, slot.overrides);
        } else if (err instanceof ApiError && err.status === 404) {
          slot.error = err.message;
          slot.errorFeature = null;
        } else {
          this.connectionError =
            err instanceof Error ? err.message : String(err);
        }
        this.emit();
      });
  }

  /** The server prefixes override rejections with the feature name. */
  private blameFeature(
    detail: string,
    overrides: Record<string, number>,
  ): string | null {
    for (const name of Object.keys(overrides)) {
      if (detail.includes(name)) return name;
    }
    return null;
  }

  toUrlFragment(): string {
    return "#" + serializeState(this);
  }

  /** Rebuild slots from a bookmark fragment. Returns false when the
   * fragment does not parse; the store is left untouched in that case. */
  loadUrlFragment(fragment: string): boolean {
    const doc = parseState(fragment);
    if (doc === null) return false;
    for (const slot of this.slots) this.timers.get(slot)?.();
    this.timers.clear();
    this.seq.clear();
    this.slots = [emptySlot("baseline")];
    for (const s of doc.slots.slice(0, MAX_SCENARIOS)) {
      const slot = emptySlot(s.label);
      slot.units = s.units;
      slot.overrides = { ...s.overrides };
      this.slots.push(slot);
    }
    if (doc.school !== null) {
      void this.selectSchool(doc.school);
    } else {
      this.schoolId = null;
      this.emit();
    }
    return true;
  }
}
