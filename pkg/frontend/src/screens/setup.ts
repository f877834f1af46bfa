// Session setup: pick a preset, scope, rework rule and seed, then create.

import { ApiClient, ApiError } from "../api";
import { el } from "../format";
import type { Catalogue, ScenarioRef, SessionView } from "../types";

export interface SetupHandlers {
  onCreated(view: SessionView): void;
}

function labeled(label: string, control: HTMLElement): HTMLElement {
  const row = el("label", "field");
  row.append(el("span", "field-label", label), control);
  return row;
}

export function renderSetup(
  container: HTMLElement,
  api: ApiClient,
  catalogue: Catalogue,
  handlers: SetupHandlers,
): void {
  container.replaceChildren();
  const form = el("form", "setup");
  form.append(el("h2", undefined, "New verification campaign"));

  const preset = el("select", "preset-select");
  for (const scenario of catalogue.scenarios) {
    const option = el("option", undefined, scenario.name);
    option.value = scenario.name;
    preset.append(option);
  }

  const scope = el("select", "scope-select");
  const syncScopes = () => {
    scope.replaceChildren();
    const chosen = catalogue.scenarios.find((s) => s.name === preset.value);
    const names = chosen && chosen.scopes.length ? chosen.scopes : ["(whole network)"];
    for (const name of names) {
      const option = el("option", undefined, name);
      option.value = name;
      scope.append(option);
    }
    scope.disabled = !chosen || chosen.scopes.length === 0;
  };
  preset.addEventListener("change", syncScopes);
  syncScopes();

  const rule = el("select", "rule-select");
  for (const name of Object.keys(catalogue.rules)) {
    const option = el("option", undefined, name);
    option.value = name;
    if (name === catalogue.defaults.rule) option.selected = true;
    rule.append(option);
  }

  const seed = el("input", "seed-input");
  seed.type = "number";
  seed.placeholder = `server default (${catalogue.defaults.seed})`;

  const submit = el("button", "create-button", "Create session");
  submit.type = "submit";
  const error = el("p", "error-banner");
  error.hidden = true;

  form.append(
    labeled("Scenario", preset),
    labeled("Scope", scope),
    labeled("Rework rule", rule),
    labeled("Seed (optional)", seed),
    submit,
    error,
  );

  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    submit.disabled = true;
    error.hidden = true;
    const ref: ScenarioRef = { name: preset.value, rule: rule.value };
    if (!scope.disabled) ref.scope = scope.value;
    const payload: { scenario: ScenarioRef; seed?: number } = { scenario: ref };
    if (seed.value.trim() !== "") payload.seed = Number(seed.value);
    try {
      handlers.onCreated(await api.createSession(payload));
    } catch (err) {
      // surface the server's message verbatim
      error.textContent = err instanceof ApiError ? err.message : String(err);
      error.hidden = false;
      submit.disabled = false;
    }
  });

  container.append(form);
}
