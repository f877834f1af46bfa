import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { App, POLL_INTERVAL_MS } from "../src/app";
import { money } from "../src/format";
import type { HistoryEvent, SessionView } from "../src/types";
import { baseView, MockService } from "./mockService";

const BASE = "http://service.test";

function q<T extends HTMLElement>(selector: string): T {
  const node = document.querySelector<T>(selector);
  if (!node) throw new Error(`missing ${selector}`);
  return node;
}

function submitSetup(): void {
  q<HTMLFormElement>("form.setup").dispatchEvent(
    new Event("submit", { bubbles: true, cancelable: true }),
  );
}

async function flush(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
}

const FAIL_EVENT: HistoryEvent = {
  event: "result",
  activity: "A1",
  result: false,
  override: false,
  time: 0,
  cost: 350.0,
  posterior: 0.0808,
  rework: true,
  reworkCost: 1490.0,
  posteriorAfterRework: 0.9409,
};

const PASS_EVENT: HistoryEvent = {
  event: "result",
  activity: "A2",
  result: true,
  override: false,
  time: 1,
  cost: 200.0,
  posterior: 0.9716,
  rework: false,
};

function afterFail(): SessionView {
  return {
    ...baseView(),
    time: 1,
    posterior: 0.9409,
    spent: 1840.0,
    results: { A1: 1, A2: 0, A3: 0, A4: 0 },
    history: [FAIL_EVENT],
    recommendation: {
      status: "ready",
      action: "A2",
      fvtExpectedValue: 14980.5,
      posterior: 0.9409,
    },
  };
}

function deployed(): SessionView {
  return {
    ...afterFail(),
    time: 2,
    posterior: 0.9716,
    spent: 2040.0,
    status: "deployed",
    results: { A1: 1, A2: 1, A3: 0, A4: 0 },
    history: [FAIL_EVENT, PASS_EVENT],
    recommendation: { status: "ready", action: null, terminal: "deployed" },
  };
}

function stopped(): SessionView {
  return {
    ...baseView(),
    status: "stopped",
    history: [{ event: "stopped", time: 0 }],
    recommendation: { status: "ready", action: null, terminal: "stopped" },
  };
}

function resultBodies(mock: MockService): Record<string, unknown>[] {
  return mock.requests
    .filter((r) => r.method === "POST" && r.path.endsWith("/results"))
    .map((r) => r.body as Record<string, unknown>);
}

describe("session flow", () => {
  let root: HTMLElement;
  let app: App | null = null;

  beforeEach(() => {
    document.body.innerHTML = "";
    root = document.createElement("main");
    document.body.append(root);
  });

  afterEach(() => {
    app?.stopPolling();
    app = null;
    vi.useRealTimers();
  });

  async function enterSession(mock: MockService): Promise<void> {
    mock.install();
    app = new App(new ApiClient(BASE), root);
    await app.start();
    submitSetup();
    await flush();
  }

  it("echoes a rework event as a banner and reaches the deployed screen", async () => {
    const mock = new MockService({ submits: [afterFail(), deployed()] });
    await enterSession(mock);

    expect(q("header.run-head h2").textContent).toBe("exemplar • rule Low");
    expect(parseFloat(q(".gauge-fill").style.width)).toBeCloseTo(46.7776, 6);
    expect(q(".recommended-action").textContent).toBe("Recommended next: A1");
    expect(q(".recommended-value").textContent).toContain("16,466.879 k$");
    expect(q<HTMLSelectElement>(".activity-select").value).toBe("A1");
    expect(document.querySelector(".rework-banner")).toBeNull();

    q(".fail-button").click();
    await flush();

    const banner = q(".rework-banner");
    expect(banner.querySelector("strong")?.textContent).toBe("Rework triggered on A1");
    expect(q(".rework-cost").textContent).toContain(money(FAIL_EVENT.reworkCost ?? 0));
    expect(q(".rework-posterior").textContent).toContain("94.1%");
    expect(q(".recommended-action").textContent).toBe("Recommended next: A2");
    const reworkItem = q(".timeline li");
    expect(reworkItem.classList.contains("event-rework")).toBe(true);
    expect(reworkItem.textContent).toContain("rework 1,490.0 k$");

    q(".pass-button").click();
    await flush();

    const terminal = q("h3.terminal");
    expect(terminal.textContent).toBe("Deployed");
    expect(terminal.classList.contains("terminal-deployed")).toBe(true);
    expect(q(".terminal-detail").textContent).toContain("97.2%");
    expect(q(".terminal-detail").textContent).toContain("2,040.0 k$");
    expect(document.querySelector(".result-entry")).toBeNull();

    expect(resultBodies(mock)).toEqual([
      { activity: "A1", result: false },
      { activity: "A2", result: true },
    ]);

    q(".new-session-button").click();
    await flush();
    expect(document.querySelector("form.setup")).not.toBeNull();
  });

  it("stops the campaign with an override when the server recommends acting", async () => {
    const mock = new MockService({ submits: [stopped()] });
    await enterSession(mock);

    q(".stop-button").click();
    await flush();

    expect(resultBodies(mock)).toEqual([{ activity: null, override: true }]);
    const terminal = q("h3.terminal");
    expect(terminal.textContent).toBe("Stopped");
    expect(terminal.classList.contains("terminal-stopped")).toBe(true);
    expect(q(".timeline li").textContent).toBe("t=0 stopped");
  });

  it("flags a deviation from the recommended activity as an override", async () => {
    const mock = new MockService({ submits: [afterFail()] });
    await enterSession(mock);

    const pick = q<HTMLSelectElement>(".activity-select");
    pick.value = "A3";
    q(".pass-button").click();
    await flush();

    expect(resultBodies(mock)).toEqual([{ activity: "A3", result: true, override: true }]);
  });

  it("spins while the recommendation computes and fills in on the next poll", async () => {
    vi.useFakeTimers();
    const computing: SessionView = {
      ...baseView(),
      recommendation: { status: "computing" },
    };
    const mock = new MockService({ view: computing, polls: [baseView()] });
    mock.install();
    app = new App(new ApiClient(BASE), root);
    await app.start();
    submitSetup();
    await vi.advanceTimersByTimeAsync(0);

    expect(q(".computing").textContent).toContain("computing recommendation");
    expect(document.querySelector(".spinner")).not.toBeNull();
    expect(document.querySelector(".recommended-action")).toBeNull();

    expect(POLL_INTERVAL_MS).toBe(1000);
    await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS);

    expect(document.querySelector(".computing")).toBeNull();
    expect(q(".recommended-action").textContent).toBe("Recommended next: A1");
  });

  it("shows a transient banner when a submission is rejected", async () => {
    const mock = new MockService({ submits: [] });
    await enterSession(mock);

    q(".fail-button").click();
    await flush();

    expect(q(".api-error-banner").textContent).toBe("script exhausted");
    expect(document.querySelector(".recommended-action")).not.toBeNull();
  });
});
