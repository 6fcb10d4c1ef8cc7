// Minimal DOM helpers; the UI manipulates elements directly rather than
// pulling in a framework.

export interface Attrs {
  class?: string;
  text?: string;
  title?: string;
  type?: string;
  value?: string;
  disabled?: boolean;
}

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Attrs = {},
  ...children: (HTMLElement | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (attrs.class) node.className = attrs.class;
  if (attrs.text !== undefined) node.textContent = attrs.text;
  if (attrs.title) node.title = attrs.title;
  if (attrs.type && node instanceof HTMLInputElement) node.type = attrs.type;
  if (attrs.value !== undefined && "value" in node) {
    (node as HTMLInputElement | HTMLSelectElement | HTMLOptionElement).value = attrs.value;
  }
  if (attrs.disabled && "disabled" in node) {
    (node as HTMLButtonElement).disabled = true;
  }
  node.append(...children);
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

/** Render text with <mark> around each occurrence of any keyword. */
export function highlightKeywords(text: string, keywords: string[]): HTMLElement {
  const container = el("span");
  if (!text || keywords.length === 0) {
    container.textContent = text;
    return container;
  }
  const escaped = keywords
    .filter((k) => k.length > 0)
    .map((k) => k.replace(/[.*+?^${}()|[\]\\]/g, "\\$&"));
  if (escaped.length === 0) {
    container.textContent = text;
    return container;
  }
  const pattern = new RegExp(`(${escaped.join("|")})`, "giu");
  let last = 0;
  for (const match of text.matchAll(pattern)) {
    const start = match.index ?? 0;
    if (start > last) container.append(text.slice(last, start));
    container.append(el("mark", { text: match[0] }));
    last = start + match[0].length;
  }
  if (last < text.length) container.append(text.slice(last));
  return container;
}
