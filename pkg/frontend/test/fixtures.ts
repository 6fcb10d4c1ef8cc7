// Recorded API responses (shape-identical to the live server's JSON)
// used as the fixture behind the mocked fetch.

import type { CategoryNode, MessageDetail, MessageRow, SyncJob } from "../src/api.js";

export const TREE: CategoryNode[] = [
  {
    category_id: "c1",
    name: "grid-scheduling",
    parent: null,
    pinned: false,
    provenance: "auto",
    member_count: 3,
    children: [
      {
        category_id: "c3",
        name: "grid-scheduling/batch",
        parent: "c1",
        pinned: false,
        provenance: "auto",
        member_count: 2,
        children: [
          {
            category_id: "c4",
            name: "grid-scheduling/batch/queue",
            parent: "c3",
            pinned: false,
            provenance: "auto",
            member_count: 1,
            children: [],
          },
        ],
      },
    ],
  },
  {
    category_id: "c2",
    name: "invoices",
    parent: null,
    pinned: true,
    provenance: "user",
    member_count: 1,
    children: [],
  },
  {
    category_id: "spam",
    name: "spam",
    parent: null,
    pinned: true,
    provenance: "user",
    member_count: 0,
    children: [],
  },
  {
    category_id: "unsorted",
    name: "unsorted",
    parent: null,
    pinned: true,
    provenance: "user",
    member_count: 0,
    children: [],
  },
];

// tree after the m1 c1 -> c2 correction: counts shift by one
export const TREE_AFTER_CORRECTION: CategoryNode[] = JSON.parse(JSON.stringify(TREE));
TREE_AFTER_CORRECTION[0]!.member_count = 2;
TREE_AFTER_CORRECTION[1]!.member_count = 2;

export const MESSAGES_C1: MessageRow[] = [
  {
    message_id: "m1",
    subject: "grid scheduling meeting",
    from: "alice@example.com",
    date: "2026-02-02T10:02:00+00:00",
    score: 0.92,
    keywords: ["grid", "scheduling", "meeting"],
  },
  {
    message_id: "m2",
    subject: "cluster batch window",
    from: "bob@example.com",
    date: "2026-02-02T10:01:00+00:00",
    score: 0.88,
    keywords: ["cluster", "batch"],
  },
  {
    message_id: "m3",
    subject: "queue status",
    from: "carol@example.com",
    date: "2026-02-02T10:00:00+00:00",
    score: 0.81,
    keywords: ["queue", "status"],
  },
];

export const DETAIL_M1: MessageDetail = {
  message_id: "m1",
  subject: "grid scheduling meeting",
  from: "alice@example.com",
  to: ["me@example.com"],
  cc: [],
  date: "2026-02-02T10:02:00+00:00",
  keywords: ["grid", "scheduling", "meeting"],
  summary: "grid scheduling cluster discussion tomorrow. agenda includes the batch queue.",
  memberships: [{ category_id: "c1", score: 0.92, provenance: "auto" }],
  spam_score: 0.0114,
  location: {
    account_id: "work",
    mailbox: "INBOX",
    uid: 7,
    uidvalidity: 3,
    source_kind: "imap",
  },
};

export const CORRECTION_RESPONSE = {
  message_id: "m1",
  memberships: [{ category_id: "c2", score: 1.0, provenance: "user" }],
};

// three polls: progress climbs until every fetched message is counted
export const JOB_POLLS: SyncJob[] = [
  {
    job_id: "job-1",
    state: "running",
    accounts: ["work", "home"],
    progress: { work: { fetched: 2, classified: 0 }, home: { fetched: 0, classified: 0 } },
    started_at: 1,
    finished_at: null,
    errors: [],
  },
  {
    job_id: "job-1",
    state: "running",
    accounts: ["work", "home"],
    progress: { work: { fetched: 3, classified: 0 }, home: { fetched: 1, classified: 0 } },
    started_at: 1,
    finished_at: null,
    errors: [],
  },
  {
    job_id: "job-1",
    state: "done",
    accounts: ["work", "home"],
    progress: { work: { fetched: 3, classified: 3 }, home: { fetched: 2, classified: 2 } },
    started_at: 1,
    finished_at: 9,
    errors: [],
  },
];

export const SYNC_FETCHED_TOTAL = 5;
