// Presentation-only helpers. Numbers arrive fully computed from the server.

export function money(value: number): string {
  return value.toLocaleString("en-US", {
    minimumFractionDigits: 1,
    maximumFractionDigits: 3,
  }) + " k$";
}

export function percent(p: number): string {
  return (p * 100).toFixed(1) + "%";
}

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}
