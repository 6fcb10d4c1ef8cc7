// Message detail pane: headers, summary with keyword highlighting,
// membership chips, the correction picker, and the spam toggle. All
// mutations are delegated to the app, which owns the API calls.

import { CategoryNode, MessageDetail, Membership } from "./api.js";
import { clear, el, highlightKeywords } from "./dom.js";

export interface DetailActions {
  onCorrect: (fromCategory: string | null, toCategory: string) => void;
  onSpam: (isSpam: boolean) => void;
}

export class DetailView {
  root = el("section", { class: "detail" });
  private detail: MessageDetail | null = null;
  private categories: CategoryNode[] = [];
  private busy = false;

  constructor(private actions: DetailActions) {}

  render(detail: MessageDetail | null, categories: CategoryNode[], busy: boolean): void {
    this.detail = detail;
    this.categories = categories;
    this.busy = busy;
    clear(this.root);
    if (!detail) {
      this.root.append(el("p", { class: "empty", text: "Select a message." }));
      return;
    }
    this.root.append(
      el("h2", { text: detail.subject || "(no subject)" }),
      this.headerLine("From", detail.from),
      this.headerLine("Date", detail.date ?? ""),
      this.headerLine("Spam score", detail.spam_score.toFixed(4)),
      this.headerLine(
        "Location",
        `${detail.location.account_id}/${detail.location.mailbox} uid=${detail.location.uid}`,
      ),
      el("p", { class: "keywords", text: "Keywords: " + detail.keywords.join(", ") }),
      this.chips(detail.memberships),
      this.summaryBlock(detail),
      this.correctionControls(detail),
    );
  }

  /** Replace only the membership chips (after a correction response). */
  updateMemberships(memberships: Membership[]): void {
    if (!this.detail) return;
    this.detail.memberships = memberships;
    const old = this.root.querySelector(".chips");
    if (old) old.replaceWith(this.chips(memberships));
  }

  private headerLine(label: string, value: string): HTMLElement {
    return el("p", { class: "hdr" }, el("strong", { text: label + ": " }), value);
  }

  private nameOf(categoryId: string): string {
    const hit = this.categories.find((c) => c.category_id === categoryId);
    return hit ? hit.name : categoryId;
  }

  private chips(memberships: Membership[]): HTMLElement {
    const box = el("div", { class: "chips" });
    for (const m of memberships) {
      box.append(
        el(
          "span",
          { class: `chip chip-${m.provenance}`, title: `score ${m.score.toFixed(3)}` },
          `${this.nameOf(m.category_id)} (${m.provenance})`,
        ),
      );
    }
    if (memberships.length === 0) box.append(el("span", { class: "chip", text: "(none)" }));
    return box;
  }

  private summaryBlock(detail: MessageDetail): HTMLElement {
    const block = el("div", { class: "summary" }, el("h3", { text: "Summary" }));
    block.append(highlightKeywords(detail.summary, detail.keywords));
    return block;
  }

  private correctionControls(detail: MessageDetail): HTMLElement {
    const fromSelect = el("select", { class: "from-category" });
    fromSelect.append(el("option", { value: "", text: "(just add)" }));
    for (const m of detail.memberships) {
      fromSelect.append(el("option", { value: m.category_id, text: this.nameOf(m.category_id) }));
    }
    if (detail.memberships.length > 0) {
      fromSelect.value = detail.memberships[0]!.category_id;
    }

    const toSelect = el("select", { class: "to-category" });
    for (const c of this.categories) {
      toSelect.append(el("option", { value: c.category_id, text: c.name }));
    }

    const move = el("button", { class: "move-btn", text: "Move", disabled: this.busy });
    move.addEventListener("click", () => {
      const from = fromSelect.value || null;
      const to = toSelect.value;
      if (to) this.actions.onCorrect(from, to);
    });

    const inSpam = detail.memberships.some((m) => m.category_id === "spam");
    const spam = el("button", {
      class: "spam-btn",
      text: inSpam ? "Not spam" : "Spam",
      disabled: this.busy,
    });
    spam.addEventListener("click", () => this.actions.onSpam(!inSpam));

    return el(
      "div",
      { class: "controls" },
      el("label", { text: "Move from " }, fromSelect),
      el("label", { text: " to " }, toSelect),
      move,
      spam,
    );
  }
}
