// Screen router and polling loop. One session at a time, one in-flight
// mutation at a time; the 1 s poll keeps the run screen fresh while the
// server computes recommendations in the background.

import { ApiClient, ApiError } from "./api";
import { el } from "./format";
import { renderRun } from "./screens/run";
import { renderSetup } from "./screens/setup";
import { renderTree } from "./screens/tree";
import type { SessionView } from "./types";

export const POLL_INTERVAL_MS = 1000;

type Screen = "setup" | "run" | "tree";

export class App {
  private view: SessionView | null = null;
  private screen: Screen = "setup";
  private timer: ReturnType<typeof setInterval> | null = null;
  private mutating = false;

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
  ) {}

  async start(): Promise<void> {
    await this.showSetup();
  }

  stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private startPolling(): void {
    this.stopPolling();
    this.timer = setInterval(() => void this.poll(), POLL_INTERVAL_MS);
  }

  private async poll(): Promise<void> {
    if (!this.view || this.mutating || this.screen !== "run") return;
    try {
      const fresh = await this.api.getSession(this.view.id);
      const before = JSON.stringify(this.view);
      this.view = fresh;
      if (fresh.status !== "active" && fresh.recommendation.status === "ready") {
        this.stopPolling();
      }
      if (JSON.stringify(fresh) !== before) this.renderCurrent();
    } catch (err) {
      this.fatal(err);
    }
  }

  private async showSetup(): Promise<void> {
    this.stopPolling();
    this.screen = "setup";
    this.view = null;
    try {
      const catalogue = await this.api.listScenarios();
      renderSetup(this.root, this.api, catalogue, {
        onCreated: (view) => this.enterSession(view),
      });
    } catch (err) {
      this.fatal(err);
    }
  }

  private enterSession(view: SessionView): void {
    this.view = view;
    this.screen = "run";
    this.renderCurrent();
    this.startPolling();
  }

  private renderCurrent(): void {
    if (!this.view) return;
    if (this.screen === "run") {
      renderRun(this.root, this.view, {
        onSubmit: (activity, result, override) =>
          void this.submit(activity, result, override),
        onShowTree: () => void this.showTree(),
        onNewSession: () => void this.showSetup(),
      });
    }
  }

  private async submit(
    activity: string | null,
    result?: boolean,
    override?: boolean,
  ): Promise<void> {
    if (!this.view || this.mutating) return;
    this.mutating = true;
    try {
      this.view = await this.api.submitResult(this.view.id, activity, result, override);
      this.renderCurrent();
    } catch (err) {
      if (err instanceof ApiError) {
        this.banner(err.message);
      } else {
        this.fatal(err);
      }
    } finally {
      this.mutating = false;
    }
  }

  private async showTree(): Promise<void> {
    if (!this.view) return;
    this.screen = "tree";
    try {
      const payload = await this.api.getTree(this.view.id);
      renderTree(this.root, payload, {
        onBack: () => {
          this.screen = "run";
          this.renderCurrent();
        },
      });
    } catch (err) {
      this.fatal(err);
    }
  }

  private banner(message: string): void {
    const note = el("div", "api-error-banner", message);
    this.root.prepend(note);
    setTimeout(() => note.remove(), 4000);
  }

  private fatal(err: unknown): void {
    this.stopPolling();
    const message = err instanceof Error ? err.message : String(err);
    this.root.replaceChildren(el("div", "fatal-error", `service unreachable: ${message}`));
  }
}
