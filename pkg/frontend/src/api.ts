// Typed client for the mailgraph HTTP API. Every mutation the UI can
// perform goes through exactly one of these calls; the UI never
// computes scores, keywords, or summaries itself.

export interface CategoryNode {
  category_id: string;
  name: string;
  parent: string | null;
  pinned: boolean;
  provenance: string;
  member_count: number;
  children: CategoryNode[];
}

export interface MessageRow {
  message_id: string;
  subject: string;
  from: string;
  date: string | null;
  score: number;
  keywords: string[];
}

export interface Membership {
  category_id: string;
  score: number;
  provenance: string;
}

export interface MessageDetail {
  message_id: string;
  subject: string;
  from: string;
  to: string[];
  cc: string[];
  date: string | null;
  keywords: string[];
  summary: string;
  memberships: Membership[];
  spam_score: number;
  location: {
    account_id: string;
    mailbox: string;
    uid: number;
    uidvalidity: number;
    source_kind: string;
  };
}

export interface AccountProgress {
  fetched: number;
  classified: number;
}

export interface SyncJob {
  job_id: string;
  state: "queued" | "running" | "done" | "failed";
  accounts: string[];
  progress: Record<string, AccountProgress>;
  started_at: number | null;
  finished_at: number | null;
  errors: string[];
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(method: string, path: string, body?: unknown): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  } catch (err) {
    throw new ApiError(0, err instanceof Error ? err.message : "network error");
  }
  if (!resp.ok) {
    let message = `${resp.status}`;
    try {
      const data = (await resp.json()) as { error?: string };
      if (data && data.error) message = data.error;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, message);
  }
  return (await resp.json()) as T;
}

export const api = {
  categories: () => request<CategoryNode[]>("GET", "/api/categories"),
  categoryMessages: (id: string) =>
    request<MessageRow[]>("GET", `/api/categories/${encodeURIComponent(id)}/messages`),
  message: (id: string) =>
    request<MessageDetail>("GET", `/api/messages/${encodeURIComponent(id)}`),
  createCategory: (name: string, parent: string | null) =>
    request<CategoryNode>("POST", "/api/categories", parent ? { name, parent } : { name }),
  subcluster: (id: string) =>
    request<{ children: CategoryNode[] }>(
      "POST",
      `/api/categories/${encodeURIComponent(id)}/subcluster`,
    ),
  correct: (messageId: string, fromCategory: string | null, toCategory: string) =>
    request<{ message_id: string; memberships: Membership[] }>("POST", "/api/corrections", {
      message_id: messageId,
      from_category: fromCategory,
      to_category: toCategory,
    }),
  markSpam: (messageId: string, isSpam: boolean) =>
    request<{ message_id: string; memberships: Membership[] }>(
      "POST",
      `/api/messages/${encodeURIComponent(messageId)}/spam`,
      { is_spam: isSpam },
    ),
  startSync: () => request<{ job_id: string }>("POST", "/api/sync"),
  job: (jobId: string) => request<SyncJob>("GET", `/api/sync/${encodeURIComponent(jobId)}`),
};

export type Api = typeof api;
