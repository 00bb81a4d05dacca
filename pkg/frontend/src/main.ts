import { ApiClient } from "./api.js";
import { ScenarioStore } from "./state.js";
import {
  EMPTY_BOARD_MESSAGE,
  compareTable,
  deltaBadge,
  fmt,
  phiBars,
  schoolBoard,
} from "./viewmodel.js";

/* DOM glue only: everything rendered here comes out of the store, and the
 * store only holds what the server said. */

const baseUrl =
  new URLSearchParams(location.search).get("api") ?? "http://127.0.0.1:8000";
const api = new ApiClient(baseUrl, (url, init) => fetch(url, init));
const store = new ScenarioStore(api);

let activeSlot = 1;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function must(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function renderBanner(): void {
  const banner = must("banner");
  banner.replaceChildren();
  if (store.connectionError === null) {
    banner.hidden = true;
    return;
  }
  banner.hidden = false;
  banner.append(el("span", "", store.connectionError));
  const retry = el("button", "", "retry");
  retry.onclick = () => void store.retry();
  banner.append(retry);
}

function renderBoard(): void {
  const list = must("board");
  list.replaceChildren();
  if (store.schools === null) return;
  const rows = schoolBoard(store.schools);
  if (rows.length === 0) {
    list.append(el("li", "empty", EMPTY_BOARD_MESSAGE));
    return;
  }
  for (const row of rows) {
    const item = el("li", row.schoolId === store.schoolId ? "selected" : "");
    item.append(
      el("strong", "", row.schoolId),
      el("span", "env", `env ${row.envScoreText}`),
      el("span", "jam", `jam ${row.jamScoreText}`),
    );
    item.onclick = () => void store.selectSchool(row.schoolId);
    list.append(item);
  }
}

function renderTabs(): void {
  const tabs = must("tabs");
  tabs.replaceChildren();
  store.slots.forEach((slot, i) => {
    const tab = el("button", i === activeSlot ? "active" : "", slot.label);
    tab.onclick = () => {
      activeSlot = i;
      render();
    };
    tabs.append(tab);
    if (i > 0) {
      const close = el("button", "close", "x");
      close.onclick = () => {
        store.removeScenario(i);
        activeSlot = Math.min(activeSlot, store.slots.length - 1);
      };
      tabs.append(close);
    }
  });
  if (store.slots.length <= 3) {
    const add = el("button", "add", "+ scenario");
    add.onclick = () => {
      store.addScenario();
      activeSlot = store.slots.length - 1;
    };
    tabs.append(add);
  }
}

function renderControls(): void {
  const panel = must("controls");
  panel.replaceChildren();
  const slot = store.slots[activeSlot];
  if (!slot || store.schoolId === null || store.model === null) return;
  if (activeSlot === 0) {
    panel.append(el("p", "note", "baseline is read-only; add a scenario"));
    return;
  }
  for (const feature of store.knownFeatures()) {
    const row = el("div", "control");
    row.append(el("label", "", feature));
    const input = el("input");
    input.type = "range";
    input.min = "-3";
    input.max = "3";
    input.step = "0.1";
    input.value = String(slot.overrides[feature] ?? 0);
    input.oninput = () => {
      store.setOverride(activeSlot, feature, Number(input.value));
    };
    row.append(input);
    const value = el("span", "value", fmt(slot.overrides[feature] ?? 0, 1));
    row.append(value);
    if (feature in slot.overrides) {
      const clear = el("button", "clear", "reset");
      clear.onclick = () => store.clearOverride(activeSlot, feature);
      row.append(clear);
    }
    if (slot.errorFeature === feature && slot.error) {
      row.append(el("span", "inline-error", slot.error));
    }
    panel.append(row);
  }
}

function renderResult(): void {
  const panel = must("result");
  panel.replaceChildren();
  const slot = store.slots[activeSlot];
  if (!slot) return;
  if (slot.pending) panel.append(el("p", "note", "updating"));
  if (slot.error && !slot.errorFeature) {
    panel.append(el("p", "inline-error", slot.error));
  }
  const resp = slot.response;
  if (!resp) return;
  const scores = el("div", "scores");
  scores.append(
    el("span", "", `env ${fmt(resp.result.env_score, 2)}`),
    el("span", "", `jam ${fmt(resp.result.jam_score, 2)}`),
    el("span", "", `freq ${fmt(resp.result.predicted_frequency, 3)}`),
  );
  panel.append(scores);
  const badge = deltaBadge(resp);
  panel.append(
    el(
      "p",
      "badge",
      `vs baseline: env ${badge.envScoreText}, jam ${badge.jamScoreText}, ` +
        `freq ${badge.predictedFrequencyText}`,
    ),
  );
  const bars = el("div", "bars");
  for (const bar of phiBars(resp.phi)) {
    const row = el("div", "bar-row");
    row.append(el("span", "bar-label", bar.feature));
    const track = el("div", "bar-track");
    const fill = el("div", bar.phi >= 0 ? "bar-fill pos" : "bar-fill neg");
    fill.style.width = `${Math.round(bar.width * 100)}%`;
    track.append(fill);
    row.append(track, el("span", "bar-value", bar.phiText));
    bars.append(row);
  }
  panel.append(bars);
}

function renderCompare(): void {
  const panel = must("compare");
  panel.replaceChildren();
  const columns = compareTable(store.slots);
  if (columns.length < 2) return;
  for (const col of columns) {
    const card = el("div", "compare-col");
    card.append(el("h3", "", col.label));
    if (col.envScore !== null) {
      card.append(el("p", "", `env ${fmt(col.envScore, 2)}`));
      card.append(el("p", "", `jam ${fmt(col.jamScore ?? 0, 2)}`));
    } else if (col.pending) {
      card.append(el("p", "note", "updating"));
    }
    for (const bar of col.topFeatures) {
      card.append(el("p", "mini", `${bar.feature} ${bar.phiText}`));
    }
    panel.append(card);
  }
}

function render(): void {
  renderBanner();
  renderBoard();
  renderTabs();
  renderControls();
  renderResult();
  renderCompare();
  history.replaceState(null, "", store.toUrlFragment());
}

store.subscribe(render);

async function boot(): Promise<void> {
  if (location.hash.length > 1) store.loadUrlFragment(location.hash);
  await store.loadModel();
  await store.loadBoard();
  render();
}

void boot();
