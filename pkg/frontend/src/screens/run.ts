// Live campaign screen: posterior gauge against the rework floor and the
// deployment ceiling, the current recommendation, pass/fail entry, and the
// event timeline. Everything shown is a server-provided number.

import { el, money, percent } from "../format";
import type { HistoryEvent, Recommendation, SessionView } from "../types";

export interface RunHandlers {
  onSubmit(activity: string | null, result?: boolean, override?: boolean): void;
  onShowTree(): void;
  onNewSession(): void;
}

const TERMINAL_LABELS: Record<string, string> = {
  deployed: "Deployed",
  stopped: "Stopped",
  horizon_end: "Horizon reached",
};

function gauge(view: SessionView): HTMLElement {
  const wrap = el("div", "gauge");
  const floorIndex = Math.min(view.time, view.scenario.lowerThresholds.length - 1);
  const floor = view.scenario.lowerThresholds[floorIndex];
  const ceiling = view.scenario.deploymentThreshold;
  const bar = el("div", "gauge-bar");
  const fill = el("div", "gauge-fill");
  fill.style.width = `${view.posterior * 100}%`;
  const floorMark = el("div", "gauge-floor");
  floorMark.style.left = `${floor * 100}%`;
  floorMark.title = `rework floor ${percent(floor)}`;
  const ceilMark = el("div", "gauge-ceiling");
  ceilMark.style.left = `${ceiling * 100}%`;
  ceilMark.title = `deployment ${percent(ceiling)}`;
  bar.append(fill, floorMark, ceilMark);
  wrap.append(
    el("div", "gauge-reading", `confidence ${percent(view.posterior)}`),
    bar,
    el(
      "div",
      "gauge-bands",
      `floor ${percent(floor)} at t=${view.time} • deploy at ${percent(ceiling)}`,
    ),
  );
  return wrap;
}

function recommendationPanel(
  view: SessionView,
  rec: Recommendation,
  handlers: RunHandlers,
): HTMLElement {
  const panel = el("section", "recommendation");
  if (view.status !== "active") {
    panel.append(el("h3", `terminal terminal-${view.status}`,
      TERMINAL_LABELS[view.status] ?? view.status));
    panel.append(el("p", "terminal-detail",
      `confidence ${percent(view.posterior)} • spent ${money(view.spent)}`));
    const again = el("button", "new-session-button", "New session");
    again.addEventListener("click", () => handlers.onNewSession());
    panel.append(again);
    return panel;
  }
  if (rec.status !== "ready") {
    const spinner = el("div", "computing", "computing recommendation");
    spinner.append(el("span", "spinner"));
    panel.append(spinner);
    return panel;
  }
  if (rec.action == null) {
    panel.append(el("h3", "recommended-stop", "Recommendation: stop here"));
  } else {
    panel.append(el("h3", "recommended-action", `Recommended next: ${rec.action}`));
  }
  if (rec.fvtExpectedValue !== undefined) {
    panel.append(el("p", "recommended-value",
      `strategy expected value ${money(rec.fvtExpectedValue)}`));
  }

  const entry = el("div", "result-entry");
  const pick = el("select", "activity-select");
  for (const [activity, result] of Object.entries(view.results)) {
    if (result !== 0) continue;
    const option = el("option", undefined, activity);
    option.value = activity;
    if (activity === rec.action) option.selected = true;
    pick.append(option);
  }
  const pass = el("button", "pass-button", "Pass");
  const fail = el("button", "fail-button", "Fail");
  const stop = el("button", "stop-button", "Stop campaign");
  for (const button of [pass, fail, stop]) button.type = "button";
  const deviates = () => pick.value !== rec.action;
  pass.addEventListener("click", () =>
    handlers.onSubmit(pick.value, true, deviates() || undefined));
  fail.addEventListener("click", () =>
    handlers.onSubmit(pick.value, false, deviates() || undefined));
  stop.addEventListener("click", () =>
    handlers.onSubmit(null, undefined, rec.action != null || undefined));
  entry.append(pick, pass, fail, stop);
  panel.append(entry);
  return panel;
}

function reworkBanner(view: SessionView): HTMLElement | null {
  const last = view.history[view.history.length - 1];
  if (!last || last.event !== "result" || !last.rework) return null;
  const banner = el("div", "rework-banner");
  banner.append(
    el("strong", undefined, `Rework triggered on ${last.activity}`),
    el("span", "rework-cost", ` cost ${money(last.reworkCost ?? 0)}`),
    el("span", "rework-posterior",
      ` • confidence restored to ${percent(last.posteriorAfterRework ?? 0)}`),
  );
  return banner;
}

function timeline(history: HistoryEvent[]): HTMLElement {
  const list = el("ol", "timeline");
  for (const event of history) {
    const item = el("li", `event event-${event.event}`);
    if (event.event === "stopped") {
      item.textContent = `t=${event.time} stopped`;
    } else {
      const verdict = event.result ? "pass" : "fail";
      let text = `t=${event.time} ${event.activity} ${verdict}` +
        ` • cost ${money(event.cost ?? 0)}` +
        ` • confidence ${percent(event.posterior ?? 0)}`;
      if (event.rework) {
        text += ` • rework ${money(event.reworkCost ?? 0)}` +
          ` → ${percent(event.posteriorAfterRework ?? 0)}`;
        item.classList.add("event-rework");
      }
      if (event.override) item.classList.add("event-override");
      item.textContent = text;
    }
    list.append(item);
  }
  return list;
}

export function renderRun(
  container: HTMLElement,
  view: SessionView,
  handlers: RunHandlers,
): void {
  container.replaceChildren();
  const screen = el("div", "run");
  const head = el("header", "run-head");
  head.append(
    el("h2", undefined,
      `${view.scenario.name}${view.scenario.scope ? " / " + view.scenario.scope : ""}` +
      ` • rule ${view.scenario.rule}`),
    el("p", "run-meta",
      `session ${view.id} • t=${view.time}/${view.horizon} • spent ${money(view.spent)}`),
  );
  const treeButton = el("button", "tree-button", "Strategy tree");
  treeButton.type = "button";
  treeButton.addEventListener("click", () => handlers.onShowTree());
  head.append(treeButton);
  screen.append(head, gauge(view));
  const banner = reworkBanner(view);
  if (banner) screen.append(banner);
  screen.append(recommendationPanel(view, view.recommendation, handlers));
  screen.append(el("h3", undefined, "Timeline"), timeline(view.history));
  container.append(screen);
}
