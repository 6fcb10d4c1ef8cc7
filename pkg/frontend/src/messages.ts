// Message list for the selected category: subject, sender, keywords,
// exactly as the API reports them (already sorted by date descending).

import { MessageRow } from "./api.js";
import { clear, el } from "./dom.js";

export class MessageListView {
  root = el("section", { class: "messages" });
  private selected: string | null = null;
  private rows: MessageRow[] = [];

  constructor(private onSelect: (messageId: string) => void) {}

  render(rows: MessageRow[], selected: string | null): void {
    this.rows = rows;
    this.selected = selected;
    clear(this.root);
    if (rows.length === 0) {
      this.root.append(el("p", { class: "empty", text: "No messages in this category." }));
      return;
    }
    const list = el("ul", { class: "message-rows" });
    for (const row of rows) {
      const button = el(
        "button",
        { class: "message-row" + (row.message_id === this.selected ? " selected" : "") },
        el("span", { class: "msg-subject", text: row.subject || "(no subject)" }),
        el("span", { class: "msg-from", text: row.from }),
        el("span", { class: "msg-date", text: row.date ? row.date.slice(0, 10) : "" }),
        el("span", { class: "msg-keywords", text: row.keywords.slice(0, 5).join(", ") }),
      );
      button.dataset.messageId = row.message_id;
      button.addEventListener("click", () => this.onSelect(row.message_id));
      list.append(el("li", {}, button));
    }
    this.root.append(list);
  }

  current(): MessageRow[] {
    return this.rows;
  }
}
