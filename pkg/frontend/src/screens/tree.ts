// Strategy-tree screen: nested rendering of the recommended tree with
// branch probabilities, dashed rework arcs, distinct stop endpoints, and a
// click-to-expand detail line per node.

import { el, money, percent } from "../format";
import type { TreeBranch, TreeNode, TreePayload } from "../types";
import { isStopNode } from "../types";

export interface TreeHandlers {
  onBack(): void;
}

const STOP_LABELS: Record<string, string> = {
  deployed: "deploy",
  horizon_end: "horizon",
  stopped: "stop",
  unrecoverable: "stop",
};

function detailLine(parts: string[]): HTMLElement {
  const detail = el("div", "node-detail", parts.join(" • "));
  detail.hidden = true;
  return detail;
}

function renderNode(node: TreeNode, detailParts: string[]): HTMLElement {
  const wrap = el("div", "node");
  let box: HTMLElement;
  if (isStopNode(node)) {
    const label = STOP_LABELS[node.stop] ?? node.stop;
    box = el("span", `node-box stop-node stop-${node.stop}`, label);
  } else {
    box = el("span", "node-box action-node", node.action);
  }
  const detail = detailLine([`confidence ${percent(node.posterior)}`, ...detailParts]);
  box.addEventListener("click", () => {
    detail.hidden = !detail.hidden;
  });
  wrap.append(box, detail);
  if (!isStopNode(node)) {
    const branches = el("ul", "branches");
    for (const branch of node.branch) {
      branches.append(renderBranch(branch));
    }
    wrap.append(branches);
  }
  return wrap;
}

function renderBranch(branch: TreeBranch): HTMLElement {
  const item = el("li", branch.rework ? "arc arc-rework" : "arc");
  const label = el(
    "span",
    "arc-label",
    `${branch.result ? "pass" : "fail"} ${percent(branch.probability)}` +
      (branch.rework ? " (rework)" : ""),
  );
  label.dataset.probability = String(branch.probability);
  const parts: string[] = [];
  if (branch.rework && branch.reworkCost != null) {
    parts.push(`rework cost ${money(branch.reworkCost)}`);
  }
  item.append(label, renderNode(branch.child, parts));
  return item;
}

export function renderTree(
  container: HTMLElement,
  payload: TreePayload,
  handlers: TreeHandlers,
): void {
  container.replaceChildren();
  const screen = el("div", "tree-screen");
  const back = el("button", "back-button", "Back to session");
  back.type = "button";
  back.addEventListener("click", () => handlers.onBack());
  screen.append(back);

  if (payload.status !== "ready") {
    screen.append(el("p", "computing", "tree is still computing"));
  } else if (payload.tree === null) {
    screen.append(el("p", "terminal-detail",
      `session is ${payload.terminal}; no further strategy tree`));
  } else {
    screen.append(el("h2", undefined,
      `Strategy tree • expected value ${money(payload.tree.expectedValue)}`));
    screen.append(renderNode(payload.tree.root, []));
  }
  container.append(screen);
}
