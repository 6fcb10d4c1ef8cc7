// Sync trigger and progress display. Progress is polled once per
// second (there is no push channel); the counters show the sum across
// accounts plus a per-account breakdown.

import { api, ApiError, SyncJob } from "./api.js";
import { clear, el } from "./dom.js";

export const POLL_INTERVAL_MS = 1000;

export class SyncView {
  root = el("div", { class: "sync" });
  private status = el("span", { class: "sync-status", text: "" });
  private accountLines = el("div", { class: "sync-accounts" });
  private button: HTMLButtonElement;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private active: SyncJob | null = null;

  constructor(
    private onComplete: (job: SyncJob) => void,
    private onToast: (message: string) => void,
  ) {
    this.button = el("button", { class: "sync-btn", text: "Sync" });
    this.button.addEventListener("click", () => void this.trigger());
    this.root.append(this.button, this.status, this.accountLines);
  }

  job(): SyncJob | null {
    return this.active;
  }

  async trigger(): Promise<void> {
    try {
      const { job_id } = await api.startSync();
      this.button.disabled = true;
      this.status.textContent = "sync started";
      await this.poll(job_id);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.onToast("sync already running");
      } else {
        this.onToast(err instanceof Error ? err.message : "sync failed");
      }
    }
  }

  private async poll(jobId: string): Promise<void> {
    let job: SyncJob;
    try {
      job = await api.job(jobId);
    } catch (err) {
      this.button.disabled = false;
      this.onToast(err instanceof Error ? err.message : "sync polling failed");
      return;
    }
    this.active = job;
    this.renderProgress(job);
    if (job.state === "done" || job.state === "failed") {
      this.button.disabled = false;
      this.onComplete(job);
      return;
    }
    this.timer = setTimeout(() => void this.poll(jobId), POLL_INTERVAL_MS);
  }

  private renderProgress(job: SyncJob): void {
    let fetched = 0;
    let classified = 0;
    for (const progress of Object.values(job.progress)) {
      fetched += progress.fetched;
      classified += progress.classified;
    }
    this.status.textContent = `${job.state}: fetched ${fetched}, classified ${classified}`;
    clear(this.accountLines);
    for (const [account, progress] of Object.entries(job.progress)) {
      this.accountLines.append(
        el("div", {
          class: "sync-account",
          text: `${account}: ${progress.fetched} fetched, ${progress.classified} classified`,
        }),
      );
    }
    for (const error of job.errors) {
      this.accountLines.append(el("div", { class: "sync-error", text: error }));
    }
  }

  dispose(): void {
    if (this.timer !== null) clearTimeout(this.timer);
  }
}
