/**
 * What-if explorer for a fitted difficulty model.
 *
 * The app keeps one piece of state (the current item coding plus the last
 * service responses) and re-renders from it. All probabilities shown come
 * straight from the service; the UI only rounds them for display.
 */

import { ApiClient, ApiError } from "./api.js";
import type { Codes, ModelDocument, Prediction, SweepEntry } from "./api.js";
import { LEVEL_NAMES, VARIABLES, minCode, variableSpec } from "./catalog.js";
import type { LevelName, VariableSpec } from "./catalog.js";
import { displayPercent, formatPercent } from "./rounding.js";
import { Debouncer, SequenceGate } from "./scheduler.js";

export interface WhatIfState {
  readonly codes: Readonly<Codes>;
  readonly prediction: Prediction | null;
  readonly sweepVariable: string | null;
  readonly sweepEntries: readonly SweepEntry[] | null;
  readonly targetLevel: LevelName | null;
  readonly error: string | null;
}

export interface AppOptions {
  readonly debounceMs?: number;
}

/** Default coding: every model variable at its smallest admissible code. */
export function initialCodes(variables: readonly string[]): Codes {
  const codes: Codes = {};
  for (const name of variables) {
    codes[name] = minCode(variableSpec(name));
  }
  return codes;
}

/** Snap a raw control value to an admissible integer code. */
export function clampCode(spec: VariableSpec, raw: number): number {
  if (!Number.isFinite(raw)) {
    return minCode(spec);
  }
  const rounded = Math.round(raw);
  if (spec.kind === "count") {
    return Math.max(0, rounded);
  }
  const lo = spec.domain[0] ?? 0;
  const hi = spec.domain[spec.domain.length - 1] ?? lo;
  return Math.min(hi, Math.max(lo, rounded));
}

/** Codes to sweep: the full domain for ordinals, 0..max(base+3, 5) for counts. */
export function sweepValues(spec: VariableSpec, baseCode: number): number[] {
  if (spec.kind === "ordinal") {
    return [...spec.domain];
  }
  const top = Math.max(baseCode + 3, 5);
  const values: number[] = [];
  for (let code = 0; code <= top; code += 1) {
    values.push(code);
  }
  return values;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className !== undefined) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function ordinalOptionText(spec: VariableSpec, code: number): string {
  return `${code}=${spec.labels[code] ?? code}`;
}

export class WhatIfApp {
  readonly debounceMs: number;

  private readonly codes: Codes;
  private prediction: Prediction | null = null;
  private sweepVariable: string | null = null;
  private sweepEntries: readonly SweepEntry[] | null = null;
  private targetLevel: LevelName | null = null;
  private error: string | null = null;

  private readonly debouncer: Debouncer;
  private readonly predictGate = new SequenceGate();
  private readonly sweepGate = new SequenceGate();
  private inFlight = 0;

  private readonly banner: HTMLElement;
  private readonly predictionPanel: HTMLElement;
  private readonly sweepPanel: HTMLElement;
  private readonly sweepStrip: HTMLElement;
  private readonly badge: HTMLElement;
  private readonly barFills = new Map<LevelName, HTMLElement>();
  private readonly barValues = new Map<LevelName, HTMLElement>();

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    readonly model: ModelDocument,
    options: AppOptions = {},
  ) {
    this.debounceMs = options.debounceMs ?? new Debouncer().delayMs;
    this.debouncer = new Debouncer(this.debounceMs);
    this.codes = initialCodes(model.variables);

    this.banner = el("div", "banner error");
    this.banner.hidden = true;
    this.predictionPanel = el("section", "panel prediction");
    this.sweepPanel = el("section", "panel sweep");
    this.sweepStrip = el("div", "sweep-strip");
    this.badge = el("div", "badge");

    root.replaceChildren(
      this.banner,
      this.buildControls(),
      this.buildPrediction(),
      this.buildSweep(),
      this.buildAdvanced(),
    );
  }

  get state(): WhatIfState {
    return {
      codes: { ...this.codes },
      prediction: this.prediction,
      sweepVariable: this.sweepVariable,
      sweepEntries: this.sweepEntries,
      targetLevel: this.targetLevel,
      error: this.error,
    };
  }

  /** Fetch the first prediction for the default coding. */
  start(): void {
    this.refresh();
  }

  /** Resolves once no debounce is armed and no request is in flight. */
  async settle(): Promise<void> {
    for (;;) {
      if (!this.debouncer.armed && this.inFlight === 0) {
        return;
      }
      const wait = this.debouncer.armed ? this.debounceMs : 0;
      await new Promise((resolve) => setTimeout(resolve, wait));
    }
  }

  private buildControls(): HTMLElement {
    const panel = el("section", "panel controls");
    panel.append(el("h2", undefined, "Item coding"));
    for (const name of this.model.variables) {
      const spec = variableSpec(name);
      const control = el("div", "control");
      control.dataset.variable = name;
      const label = el("label", "control-label");
      label.append(el("strong", undefined, name), el("span", "hint", spec.description));
      control.append(label);
      control.append(spec.kind === "count" ? this.buildStepper(spec) : this.buildSelector(spec));
      panel.append(control);
    }
    return panel;
  }

  private buildStepper(spec: VariableSpec): HTMLElement {
    const wrapper = el("div", "stepper");
    const input = document.createElement("input");
    input.type = "number";
    input.min = "0";
    input.step = "1";
    input.value = String(this.codes[spec.name] ?? 0);
    const apply = () => {
      const code = clampCode(spec, Number(input.value));
      input.value = String(code);
      this.editCode(spec.name, code);
    };
    input.addEventListener("change", apply);
    const down = el("button", "step-down", "-");
    down.type = "button";
    down.addEventListener("click", () => {
      input.value = String(clampCode(spec, Number(input.value) - 1));
      apply();
    });
    const up = el("button", "step-up", "+");
    up.type = "button";
    up.addEventListener("click", () => {
      input.value = String(clampCode(spec, Number(input.value) + 1));
      apply();
    });
    wrapper.append(down, input, up);
    return wrapper;
  }

  private buildSelector(spec: VariableSpec): HTMLElement {
    const select = document.createElement("select");
    select.className = "code-select";
    for (const code of spec.domain) {
      const option = document.createElement("option");
      option.value = String(code);
      option.textContent = ordinalOptionText(spec, code);
      select.append(option);
    }
    select.value = String(this.codes[spec.name] ?? minCode(spec));
    select.addEventListener("change", () => {
      this.editCode(spec.name, clampCode(spec, Number(select.value)));
    });
    return select;
  }

  private buildPrediction(): HTMLElement {
    this.predictionPanel.append(el("h2", undefined, "Predicted difficulty"));
    const bars = el("div", "bars");
    for (const level of LEVEL_NAMES) {
      const row = el("div", "bar-row");
      row.dataset.level = level;
      const track = el("div", "bar-track");
      const fill = el("div", `bar-fill level-${level.toLowerCase()}`);
      track.append(fill);
      const value = el("span", "bar-value");
      row.append(el("span", "bar-name", level), track, value);
      bars.append(row);
      this.barFills.set(level, fill);
      this.barValues.set(level, value);
    }
    this.predictionPanel.append(bars, this.badge);
    return this.predictionPanel;
  }

  private buildSweep(): HTMLElement {
    this.sweepPanel.append(el("h2", undefined, "Sweep one variable"));
    const controls = el("div", "sweep-controls");

    const variableLabel = el("label", undefined, "Variable ");
    const variableSelect = document.createElement("select");
    variableSelect.className = "sweep-variable";
    variableSelect.append(new Option("(none)", ""));
    for (const name of this.model.variables) {
      variableSelect.append(new Option(name, name));
    }
    variableSelect.addEventListener("change", () => {
      this.setSweepVariable(variableSelect.value === "" ? null : variableSelect.value);
    });
    variableLabel.append(variableSelect);

    const targetLabel = el("label", undefined, "Target level ");
    const targetSelect = document.createElement("select");
    targetSelect.className = "target-level";
    targetSelect.append(new Option("(none)", ""));
    for (const level of LEVEL_NAMES) {
      targetSelect.append(new Option(level, level));
    }
    targetSelect.addEventListener("change", () => {
      this.targetLevel = targetSelect.value === "" ? null : (targetSelect.value as LevelName);
      this.renderSweep();
    });
    targetLabel.append(targetSelect);

    controls.append(variableLabel, targetLabel);
    this.sweepPanel.append(controls, this.sweepStrip);
    return this.sweepPanel;
  }

  private buildAdvanced(): HTMLElement {
    const panel = el("section", "panel advanced");
    const toggle = el("button", "advanced-toggle", "Show all variables");
    toggle.type = "button";
    const table = document.createElement("table");
    table.className = "advanced-table";
    table.hidden = true;
    const head = document.createElement("tr");
    for (const title of ["variable", "kind", "description", "coefficient"]) {
      head.append(el("th", undefined, title));
    }
    table.append(head);
    for (const spec of VARIABLES) {
      const row = document.createElement("tr");
      row.dataset.variable = spec.name;
      const coefficient = this.model.coefficients[spec.name];
      row.append(
        el("td", undefined, spec.name),
        el("td", undefined, spec.kind),
        el("td", undefined, spec.description),
        el("td", undefined, coefficient === undefined ? "not in model" : coefficient.toFixed(4)),
      );
      table.append(row);
    }
    toggle.addEventListener("click", () => {
      table.hidden = !table.hidden;
      toggle.textContent = table.hidden ? "Show all variables" : "Hide all variables";
    });
    panel.append(toggle, table);
    return panel;
  }

  private editCode(name: string, code: number): void {
    // refresh even when the code is unchanged; a re-entry repairs a failed request
    this.codes[name] = code;
    this.debouncer.schedule(() => this.refresh());
  }

  private setSweepVariable(name: string | null): void {
    this.sweepVariable = name;
    if (name === null) {
      this.sweepEntries = null;
      this.renderSweep();
      return;
    }
    this.refreshSweep({ ...this.codes });
  }

  private refresh(): void {
    const codes = { ...this.codes };
    const sequence = this.predictGate.next();
    this.track(
      this.client.predict(codes).then(
        (prediction) => {
          if (this.predictGate.accept(sequence)) {
            this.prediction = prediction;
            this.clearError();
            this.renderPrediction();
          }
        },
        (error: unknown) => {
          if (this.predictGate.accept(sequence)) {
            this.showError(error);
          }
        },
      ),
    );
    if (this.sweepVariable !== null) {
      this.refreshSweep(codes);
    }
  }

  private refreshSweep(codes: Codes): void {
    const variable = this.sweepVariable;
    if (variable === null) {
      return;
    }
    const spec = variableSpec(variable);
    const values = sweepValues(spec, codes[variable] ?? minCode(spec));
    const sequence = this.sweepGate.next();
    this.track(
      this.client.whatif(codes, variable, values).then(
        (entries) => {
          if (this.sweepGate.accept(sequence)) {
            this.sweepEntries = entries;
            this.clearError();
            this.renderSweep();
          }
        },
        (error: unknown) => {
          if (this.sweepGate.accept(sequence)) {
            this.showError(error);
          }
        },
      ),
    );
  }

  private track(task: Promise<void>): void {
    this.inFlight += 1;
    void task.finally(() => {
      this.inFlight -= 1;
    });
  }

  private showError(error: unknown): void {
    this.error = error instanceof ApiError ? error.message : "service unreachable";
    this.banner.textContent = this.error;
    this.banner.hidden = false;
    this.predictionPanel.classList.add("stale");
    this.sweepPanel.classList.add("stale");
  }

  private clearError(): void {
    if (this.error === null) {
      return;
    }
    this.error = null;
    this.banner.textContent = "";
    this.banner.hidden = true;
    this.predictionPanel.classList.remove("stale");
    this.sweepPanel.classList.remove("stale");
  }

  private renderPrediction(): void {
    const prediction = this.prediction;
    if (prediction === null) {
      return;
    }
    const shares: Record<LevelName, number> = {
      Low: prediction.p_low,
      Moderate: prediction.p_moderate,
      High: prediction.p_high,
    };
    for (const level of LEVEL_NAMES) {
      const fill = this.barFills.get(level);
      const value = this.barValues.get(level);
      if (fill === undefined || value === undefined) {
        continue;
      }
      fill.style.width = `${displayPercent(shares[level])}%`;
      value.textContent = formatPercent(shares[level]);
    }
    this.badge.textContent = prediction.level;
    this.badge.className = `badge level-${prediction.level.toLowerCase()}`;
  }

  private renderSweep(): void {
    this.sweepStrip.replaceChildren();
    const variable = this.sweepVariable;
    const entries = this.sweepEntries;
    if (variable === null || entries === null) {
      return;
    }
    const spec = variableSpec(variable);
    const baseCode = this.codes[variable];
    for (const entry of entries) {
      const cell = el("div", "sweep-cell");
      cell.dataset.value = String(entry.value);
      if (entry.value === baseCode) {
        cell.classList.add("base");
      }
      const flagged = this.targetLevel !== null && entry.level === this.targetLevel;
      if (flagged) {
        cell.classList.add("flagged");
      }
      const header =
        spec.kind === "ordinal" ? ordinalOptionText(spec, entry.value) : String(entry.value);
      cell.append(el("div", "sweep-value", header));
      const shares: Record<LevelName, number> = {
        Low: entry.p_low,
        Moderate: entry.p_moderate,
        High: entry.p_high,
      };
      for (const level of LEVEL_NAMES) {
        const prob = el("div", "sweep-prob", formatPercent(shares[level]));
        prob.dataset.level = level;
        cell.append(prob);
      }
      cell.append(el("div", "sweep-level", entry.level));
      if (flagged) {
        cell.append(el("div", "sweep-flag", "target"));
      }
      this.sweepStrip.append(cell);
    }
  }
}

export async function initApp(
  root: HTMLElement,
  client: ApiClient,
  options: AppOptions = {},
): Promise<WhatIfApp> {
  const model = await client.model();
  const app = new WhatIfApp(root, client, model, options);
  app.start();
  return app;
}
