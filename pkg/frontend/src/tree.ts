// Sidebar category tree. Renders every node the API returns, with
// member counts; depth is unbounded in the renderer (the store caps it
// at three levels).

import { CategoryNode } from "./api.js";
import { clear, el } from "./dom.js";

export class TreeView {
  root = el("nav", { class: "tree" });
  private selected: string | null = null;

  constructor(private onSelect: (categoryId: string) => void) {}

  render(nodes: CategoryNode[], selected: string | null): void {
    this.selected = selected;
    clear(this.root);
    this.root.append(this.renderLevel(nodes));
  }

  private renderLevel(nodes: CategoryNode[]): HTMLUListElement {
    const list = el("ul");
    for (const node of nodes) {
      const button = el(
        "button",
        { class: "tree-node" + (node.category_id === this.selected ? " selected" : "") },
        el("span", { class: "tree-name", text: node.name }),
        el("span", { class: "tree-count", text: `[${node.member_count}]` }),
      );
      if (node.pinned) button.append(el("span", { class: "tree-flag", text: "pinned" }));
      button.dataset.categoryId = node.category_id;
      button.addEventListener("click", () => this.onSelect(node.category_id));
      const item = el("li", {}, button);
      if (node.children.length > 0) {
        item.append(this.renderLevel(node.children));
      }
      list.append(item);
    }
    return list;
  }
}

export function flattenCategories(nodes: CategoryNode[]): CategoryNode[] {
  const out: CategoryNode[] = [];
  const walk = (level: CategoryNode[]) => {
    for (const node of level) {
      out.push(node);
      walk(node.children);
    }
  };
  walk(nodes);
  return out;
}
