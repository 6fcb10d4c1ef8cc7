// Application shell: owns the view state, coordinates the views, and is
// the single place API calls are made from. The UI never classifies
// anything itself; every score, keyword, and summary shown is verbatim
// API data.

import { api, ApiError, CategoryNode, MessageDetail, MessageRow, SyncJob } from "./api.js";
import { DetailView } from "./detail.js";
import { clear, el } from "./dom.js";
import { MessageListView } from "./messages.js";
import { SyncView } from "./sync.js";
import { flattenCategories, TreeView } from "./tree.js";

export interface ViewState {
  tree: CategoryNode[];
  selectedCategory: string | null;
  messages: MessageRow[];
  selectedMessage: MessageDetail | null;
  activeJob: SyncJob | null;
}

export class App {
  root = el("div", { class: "app" });
  state: ViewState = {
    tree: [],
    selectedCategory: null,
    messages: [],
    selectedMessage: null,
    activeJob: null,
  };

  private banner = el("div", { class: "banner hidden" });
  private toast = el("div", { class: "toast hidden" });
  private tree = new TreeView((id) => void this.selectCategory(id));
  private messageList = new MessageListView((id) => void this.selectMessage(id));
  private detail = new DetailView({
    onCorrect: (from, to) => void this.correct(from, to),
    onSpam: (isSpam) => void this.markSpam(isSpam),
  });
  private sync = new SyncView(
    (job) => void this.syncFinished(job),
    (message) => this.showToast(message),
  );
  private busy = false;

  constructor() {
    const header = el(
      "header",
      {},
      el("h1", { text: "mailgraph" }),
      this.sync.root,
    );
    const main = el("div", { class: "columns" }, this.tree.root, this.messageList.root, this.detail.root);
    this.root.append(this.banner, this.toast, header, main);
    this.renderAll();
  }

  async start(): Promise<void> {
    await this.refreshTree();
  }

  // -- data refresh ----------------------------------------------------

  async refreshTree(): Promise<void> {
    try {
      this.state.tree = await api.categories();
      this.hideBanner();
    } catch (err) {
      this.showBanner(err); // stale tree stays on screen
      return;
    }
    this.tree.render(this.state.tree, this.state.selectedCategory);
    this.detail.render(this.state.selectedMessage, flattenCategories(this.state.tree), this.busy);
  }

  async selectCategory(categoryId: string): Promise<void> {
    let rows: MessageRow[];
    try {
      rows = await api.categoryMessages(categoryId);
      this.hideBanner();
    } catch (err) {
      this.showBanner(err); // keep the stale list
      return;
    }
    this.state.selectedCategory = categoryId;
    this.state.messages = rows;
    this.tree.render(this.state.tree, categoryId);
    this.messageList.render(rows, this.state.selectedMessage?.message_id ?? null);
  }

  async selectMessage(messageId: string): Promise<void> {
    try {
      this.state.selectedMessage = await api.message(messageId);
      this.hideBanner();
    } catch (err) {
      this.showBanner(err);
      return;
    }
    this.messageList.render(this.state.messages, messageId);
    this.detail.render(this.state.selectedMessage, flattenCategories(this.state.tree), this.busy);
  }

  // -- mutations (one in flight at a time) ------------------------------

  async correct(fromCategory: string | null, toCategory: string): Promise<void> {
    const message = this.state.selectedMessage;
    if (!message || this.busy) return;
    this.setBusy(true);
    try {
      const result = await api.correct(message.message_id, fromCategory, toCategory);
      // chips update straight from the response; counts via tree refresh
      this.detail.updateMemberships(result.memberships);
      await this.refreshTree();
      if (this.state.selectedCategory) await this.selectCategory(this.state.selectedCategory);
    } catch (err) {
      this.showBanner(err);
    } finally {
      this.setBusy(false);
    }
  }

  async markSpam(isSpam: boolean): Promise<void> {
    const message = this.state.selectedMessage;
    if (!message || this.busy) return;
    this.setBusy(true);
    try {
      const result = await api.markSpam(message.message_id, isSpam);
      this.detail.updateMemberships(result.memberships);
      await this.refreshTree();
      if (this.state.selectedCategory) await this.selectCategory(this.state.selectedCategory);
    } catch (err) {
      this.showBanner(err);
    } finally {
      this.setBusy(false);
    }
  }

  private async syncFinished(job: SyncJob): Promise<void> {
    this.state.activeJob = job;
    await this.refreshTree(); // new auto categories appear
    if (this.state.selectedCategory) await this.selectCategory(this.state.selectedCategory);
  }

  // -- feedback ----------------------------------------------------------

  private setBusy(busy: boolean): void {
    this.busy = busy;
    this.detail.render(this.state.selectedMessage, flattenCategories(this.state.tree), busy);
  }

  private showBanner(err: unknown): void {
    const text = err instanceof ApiError ? `API error: ${err.message}` : String(err);
    this.banner.textContent = text;
    this.banner.className = "banner";
  }

  private hideBanner(): void {
    this.banner.className = "banner hidden";
  }

  showToast(message: string): void {
    this.toast.textContent = message;
    this.toast.className = "toast";
    setTimeout(() => {
      this.toast.className = "toast hidden";
    }, 4000);
  }

  private renderAll(): void {
    this.tree.render(this.state.tree, this.state.selectedCategory);
    this.messageList.render(this.state.messages, null);
    this.detail.render(null, [], false);
  }
}

export { clear };
