"""Central client component: orchestrates sync, digesting, classification,
and the store, and backs both the CLI and the HTTP API.

All store/model mutation is funneled through one re-entrant writer lock;
fetch workers run concurrently per account and hand their results to a
single combined ingestion batch, ordered by (account, mailbox, uid) so
repeated runs from the same inputs build identical stores.
"""
from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .classify import (
    CategoryModel,
    ClassifierConfig,
    SpamModel,
    apply_correction,
    classifier_from_state,
    classifier_to_state,
    classify,
    decide_memberships,
    graham_score,
    is_spam,
    maybe_create_category,
    subcluster,
    train,
    train_spam,
    untrain,
    update_centroid,
)
from .errors import JobOverlapError, MailgraphError, UnknownIdError
from .message import RawMessage, parse_message, synthesize_message_id
from .store import SPAM_ID, UNSORTED_ID, GraphStore, StoredMessage
from .textproc import build_digest, cosine_similarity, l2_normalize, load_stopwords
from .transport import AccountConfig, SyncState, fetch_account, import_mbox


def default_data_dir() -> Path:
    return Path(os.environ.get("MAILGRAPH_HOME", "~/.mailgraph")).expanduser()


@dataclass
class AppConfig:
    data_dir: Path
    accounts: list[AccountConfig] = field(default_factory=list)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    stopword_paths: list[Path] | None = None  # None -> bundled lists
    http_port: int = 8025
    max_depth: int = 3
    summary_sentences: int = 3
    web_dir: Path | None = None

    def __post_init__(self):
        ids = [a.account_id for a in self.accounts]
        if len(ids) != len(set(ids)):
            raise ValueError("account_ids must be unique")

    @classmethod
    def default(cls, data_dir: Path | None = None) -> "AppConfig":
        return cls(data_dir=data_dir or default_data_dir())

    @classmethod
    def from_dict(cls, doc: dict) -> "AppConfig":
        accounts = [
            AccountConfig(
                account_id=a["account_id"],
                source_kind=a["source_kind"],
                host=a.get("host", ""),
                port=int(a.get("port", 0)),
                use_tls=bool(a.get("use_tls", True)),
                username=a.get("username", ""),
                credential_env=a.get("credential_env", ""),
                mailboxes=list(a.get("mailboxes") or ["INBOX"]),
                mbox_path=a.get("mbox_path"),
                tls_verify=bool(a.get("tls_verify", True)),
            )
            for a in doc.get("accounts") or []
        ]
        classifier = ClassifierConfig.from_dict(doc.get("classifier") or {})
        stopword_paths = doc.get("stopword_paths")
        return cls(
            data_dir=Path(doc.get("data_dir") or default_data_dir()).expanduser(),
            accounts=accounts,
            classifier=classifier,
            stopword_paths=[Path(p) for p in stopword_paths] if stopword_paths else None,
            http_port=int(doc.get("http_port", 8025)),
            max_depth=int(doc.get("max_depth", 3)),
            summary_sentences=int(doc.get("summary_sentences", 3)),
            web_dir=Path(doc["web_dir"]).expanduser() if doc.get("web_dir") else None,
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "AppConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class PipelineReport:
    processed: int = 0
    duplicates: int = 0
    spam: int = 0
    assignments: int = 0
    created_categories: int = 0
    repairs: int = 0
    errors: list[str] = field(default_factory=list)
    classified_by_account: dict[str, int] = field(default_factory=dict)


@dataclass
class SyncJob:
    job_id: str
    accounts: list[str]
    state: str = "queued"  # queued -> running -> done | failed
    progress: dict[str, dict[str, int]] = field(default_factory=dict)
    started_at: float | None = None
    finished_at: float | None = None
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "state": self.state,
            "accounts": list(self.accounts),
            "progress": {a: dict(p) for a, p in self.progress.items()},
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "errors": list(self.errors),
        }


def _iso(epoch: float | None) -> str | None:
    if epoch is None:
        return None
    return datetime.fromtimestamp(epoch, tz=timezone.utc).isoformat()


class Engine:
    """Owns the store, classifier models, and sync state for one user."""

    def __init__(self, config: AppConfig, clock=None):
        self.config = config
        self.clock = clock or time.time
        self.lock = threading.RLock()
        self.store_path = Path(config.data_dir) / "store.json"
        if self.store_path.exists():
            self.store = GraphStore.load(self.store_path, config.max_depth)
            self.model, self.spam, _ = classifier_from_state(self.store.classifier_state)
        else:
            self.store = GraphStore.with_defaults(config.max_depth)
            self.model = CategoryModel()
            self.spam = SpamModel()
        # the live config wins over the copy embedded in the store file
        self.cls_config = config.classifier
        self.stopwords = load_stopwords(config.stopword_paths)
        self.sync_state = SyncState.from_json(self.store.sync_state)
        self._jobs: dict[str, SyncJob] = {}
        self._job_threads: dict[str, threading.Thread] = {}
        self._jobs_lock = threading.Lock()
        self._job_seq = 0

    # -- persistence ---------------------------------------------------

    def persist(self) -> None:
        with self.lock:
            self.store.classifier_state = classifier_to_state(self.model, self.spam, self.cls_config)
            self.store.sync_state = self.sync_state.to_json()
            self.store_path.parent.mkdir(parents=True, exist_ok=True)
            self.store.persist(self.store_path)

    def init_store(self) -> Path:
        """Create the data directory and write the initial store."""
        self.persist()
        return self.store_path

    # -- ingestion pipeline --------------------------------------------

    def ingest(self, raw_messages: list[RawMessage]) -> PipelineReport:
        """Run the full pipeline over a batch and commit atomically.

        Per-message failures are recorded in the report, never aborting
        the batch.
        """
        report = PipelineReport()
        with self.lock:
            batch = sorted(raw_messages, key=lambda r: r.location.sort_key())
            for raw in batch:
                loc = raw.location
                try:
                    self._ingest_one(raw, report)
                except Exception as exc:
                    report.errors.append(f"{loc.account_id}/{loc.mailbox}/{loc.uid}: {exc}")
            report.repairs = len(self.store.commit_batch())
            self.persist()
        return report

    def _ingest_one(self, raw: RawMessage, report: PipelineReport) -> None:
        parsed = parse_message(raw)
        mid = parsed.message_id
        existing = self.store.messages.get(mid)
        if existing is not None:
            same_mailbox = (existing.location.account_id, existing.location.mailbox) == (
                raw.location.account_id,
                raw.location.mailbox,
            )
            if same_mailbox:
                # refetched copy (UIDVALIDITY reset): keep one entry, renew the address
                self.store.messages[mid] = StoredMessage(
                    existing.digest, raw.location, existing.headers
                )
                report.duplicates += 1
                return
            # same Message-ID arriving from another account: distinct copy,
            # re-keyed by content hash so both locations stay reachable
            synth = synthesize_message_id(raw.data)
            if synth in self.store.messages:
                report.duplicates += 1
                return
            parsed.message_id = synth
            mid = synth

        digest = build_digest(
            parsed,
            self.store.corpus_stats,
            self.stopwords,
            self.cls_config.keyword_count,
            self.config.summary_sentences,
        )
        headers = {
            "subject": parsed.subject,
            "from": parsed.from_addr,
            "to": parsed.to,
            "cc": parsed.cc,
            "date": parsed.date.timestamp() if parsed.date else None,
        }
        self.store.add_message(digest, raw.location, headers)
        report.processed += 1
        acct = raw.location.account_id
        report.classified_by_account[acct] = report.classified_by_account.get(acct, 0) + 1

        if not digest.vector:
            return  # nothing to analyze; commit_batch parks it in "unsorted"

        spam_score = graham_score(digest.vector.keys(), self.spam, self.cls_config)
        if is_spam(spam_score, self.cls_config):
            # spam gates categorization: no NB edges, no self-training
            self.store.assign(mid, SPAM_ID, spam_score, "auto")
            report.spam += 1
            return

        self._auto_categorize(mid, report)

    def _auto_categorize(self, mid: str, report: PipelineReport) -> None:
        """Novelty check, then naive Bayes assignment with self-training."""
        digest = self.store.messages[mid].digest
        trained = self.model.trained_categories()
        best_sim = 0.0
        for cat in self.store.categories.values():
            if cat.centroid:
                best_sim = max(best_sim, cosine_similarity(digest.weighted, cat.centroid))
        if not trained or best_sim < self.cls_config.new_category_similarity:
            created = maybe_create_category(self.store, digest, self.cls_config, self.clock())
            if created is not None:
                train(self.model, digest, created.category_id)
                report.created_categories += 1
                report.assignments += 1
            return
        posteriors = classify(self.model, digest.vector, self.cls_config.laplace)
        memberships = decide_memberships(posteriors, self.cls_config.assign_threshold)
        for cid, score in memberships:
            self.store.assign(mid, cid, score, "auto")
        report.assignments += len(memberships)
        # train only the argmax so a later correction can exactly undo it
        train(self.model, digest, memberships[0][0])
        for cid, _ in memberships:
            update_centroid(self.store, cid, self.store.member_digests(cid))

    # -- corrections and spam marking ------------------------------------

    def correction(self, message_id: str, from_category: str | None, to_category: str) -> list[dict]:
        with self.lock:
            apply_correction(self.store, self.model, message_id, from_category, to_category)
            self.store.commit_batch()
            self.persist()
            return self.memberships_of(message_id)

    def mark_spam(self, message_id: str, as_spam: bool) -> list[dict]:
        with self.lock:
            stored = self.store.messages.get(message_id)
            if stored is None:
                raise UnknownIdError(f"unknown message: {message_id}")
            digest = stored.digest
            if as_spam:
                train_spam(self.spam, digest.vector, as_spam=True)
                auto_edges = [
                    e
                    for e in self.store.edges.values()
                    if e.message_id == message_id
                    and e.provenance == "auto"
                    and e.category_id not in (SPAM_ID, UNSORTED_ID)
                ]
                if auto_edges:
                    # the top-scoring auto edge is where self-training landed
                    top = max(auto_edges, key=lambda e: (e.score, e.category_id))
                    untrain(self.model, digest, top.category_id)
                for edge in auto_edges:
                    self.store.unassign(message_id, edge.category_id)
                if (message_id, UNSORTED_ID) in self.store.edges:
                    self.store.unassign(message_id, UNSORTED_ID)
                self.store.assign(message_id, SPAM_ID, 1.0, "user")
                for edge in auto_edges:
                    if edge.category_id in self.store.categories:
                        update_centroid(
                            self.store, edge.category_id, self.store.member_digests(edge.category_id)
                        )
            else:
                train_spam(self.spam, digest.vector, as_spam=False)
                if (message_id, SPAM_ID) in self.store.edges:
                    self.store.unassign(message_id, SPAM_ID)
                if digest.vector:
                    self._auto_categorize(message_id, PipelineReport())
            self.store.commit_batch()
            self.persist()
            return self.memberships_of(message_id)

    # -- categories ------------------------------------------------------

    def create_user_category(self, name: str, parent: str | None) -> dict:
        if not name or not name.strip():
            raise ValueError("category name must be non-empty")
        with self.lock:
            cid = self.store.create_category(
                name.strip(), parent, provenance="user", pinned=True, created_at=self.clock()
            )
            self.persist()
            return self._category_node(cid)

    def subcluster_category(self, category_id: str) -> list[dict]:
        """Split a category into sub-categories; [] means no clean split."""
        with self.lock:
            cat = self.store.categories.get(category_id)
            if cat is None:
                raise UnknownIdError(f"unknown category: {category_id}")
            members = self.store.member_digests(category_id)
            result = subcluster(
                cat, members, self.cls_config, self.store.depth(category_id), self.store.max_depth
            )
            children = []
            for name, mids in result:
                child_id = self.store.create_category(
                    name, category_id, provenance="auto", pinned=False, created_at=self.clock()
                )
                digests = [self.store.messages[m].digest for m in mids]
                centroid = update_centroid(self.store, child_id, digests)
                for m in mids:
                    score = cosine_similarity(
                        l2_normalize(self.store.messages[m].digest.weighted), centroid
                    )
                    self.store.assign(m, child_id, score, "auto")
                children.append(self._category_node(child_id))
            if children:
                self.store.commit_batch()
                self.persist()
            return children

    # -- queries ---------------------------------------------------------

    def _category_node(self, cid: str) -> dict:
        cat = self.store.categories[cid]
        return {
            "category_id": cat.category_id,
            "name": cat.name,
            "parent": cat.parent,
            "pinned": cat.pinned,
            "provenance": cat.provenance,
            "member_count": self.store.degree(cid),
        }

    def category_tree(self) -> list[dict]:
        with self.lock:
            counts: dict[str, int] = {cid: 0 for cid in self.store.categories}
            for _, cid in self.store.edges:
                counts[cid] += 1

            def node(cid: str) -> dict:
                cat = self.store.categories[cid]
                children = sorted(
                    (c.category_id for c in self.store.children_of(cid)),
                    key=lambda i: (self.store.categories[i].name, i),
                )
                return {
                    "category_id": cat.category_id,
                    "name": cat.name,
                    "parent": cat.parent,
                    "pinned": cat.pinned,
                    "provenance": cat.provenance,
                    "member_count": counts[cid],
                    "children": [node(c) for c in children],
                }

            roots = sorted(
                (c.category_id for c in self.store.children_of(None)),
                key=lambda i: (self.store.categories[i].name, i),
            )
            return [node(cid) for cid in roots]

    def category_messages(self, category_id: str) -> list[dict]:
        with self.lock:
            if category_id not in self.store.categories:
                raise UnknownIdError(f"unknown category: {category_id}")
            rows = []
            for mid, score, _ in self.store.members_of(category_id):
                stored = self.store.messages[mid]
                epoch = stored.headers.get("date")
                rows.append(
                    {
                        "message_id": mid,
                        "subject": stored.headers.get("subject", ""),
                        "from": stored.headers.get("from", ""),
                        "date": _iso(epoch),
                        "score": score,
                        "keywords": list(stored.digest.keywords),
                        "_epoch": epoch,
                    }
                )
            rows.sort(key=lambda r: (r["_epoch"] is None, -(r["_epoch"] or 0), r["message_id"]))
            for row in rows:
                del row["_epoch"]
            return rows

    def memberships_of(self, message_id: str) -> list[dict]:
        return [
            {"category_id": cid, "score": score, "provenance": provenance}
            for cid, score, provenance in self.store.categories_of(message_id)
        ]

    def message_detail(self, message_id: str) -> dict:
        with self.lock:
            stored = self.store.messages.get(message_id)
            if stored is None:
                raise UnknownIdError(f"unknown message: {message_id}")
            digest = stored.digest
            loc = stored.location
            return {
                "message_id": message_id,
                "subject": stored.headers.get("subject", ""),
                "from": stored.headers.get("from", ""),
                "to": list(stored.headers.get("to") or []),
                "cc": list(stored.headers.get("cc") or []),
                "date": _iso(stored.headers.get("date")),
                "keywords": list(digest.keywords),
                "summary": digest.summary,
                "memberships": self.memberships_of(message_id),
                "spam_score": graham_score(digest.vector.keys(), self.spam, self.cls_config),
                "location": {
                    "account_id": loc.account_id,
                    "mailbox": loc.mailbox,
                    "uid": loc.uid,
                    "uidvalidity": loc.uidvalidity,
                    "source_kind": loc.source_kind,
                },
            }

    # -- sync jobs -------------------------------------------------------

    def start_sync(self, account_ids: list[str] | None = None) -> SyncJob:
        """Kick off a background sync; rejects overlap on busy accounts."""
        known = {a.account_id: a for a in self.config.accounts}
        if account_ids:
            missing = [a for a in account_ids if a not in known]
            if missing:
                raise UnknownIdError(f"unknown account: {', '.join(missing)}")
            accounts = [known[a] for a in account_ids]
        else:
            accounts = list(self.config.accounts)

        with self._jobs_lock:
            busy = {
                acct
                for job in self._jobs.values()
                if job.state in ("queued", "running")
                for acct in job.accounts
            }
            if busy & {a.account_id for a in accounts}:
                raise JobOverlapError("job overlap")
            self._job_seq += 1
            job = SyncJob(
                job_id=f"job-{self._job_seq}",
                accounts=[a.account_id for a in accounts],
                progress={a.account_id: {"fetched": 0, "classified": 0} for a in accounts},
            )
            self._jobs[job.job_id] = job

        thread = threading.Thread(target=self._run_sync, args=(job, accounts), daemon=True)
        self._job_threads[job.job_id] = thread
        thread.start()
        return job

    def wait_sync(self, job: SyncJob, timeout: float | None = None) -> SyncJob:
        thread = self._job_threads.get(job.job_id)
        if thread is not None:
            thread.join(timeout)
        return job

    def get_job(self, job_id: str) -> SyncJob:
        job = self._jobs.get(job_id)
        if job is None:
            raise UnknownIdError(f"unknown job: {job_id}")
        return job

    def _run_sync(self, job: SyncJob, accounts: list[AccountConfig]) -> None:
        job.state = "running"
        job.started_at = self.clock()
        results: list[tuple[AccountConfig, str, object]] = []
        results_lock = threading.Lock()

        def fetch_one(account: AccountConfig) -> None:
            try:
                for mailbox, result in fetch_account(account, self.sync_state):
                    with results_lock:
                        results.append((account, mailbox, result))
                        job.progress[account.account_id]["fetched"] += len(result.messages)
                    if result.partial:
                        job.errors.append(f"{account.account_id}/{mailbox}: connection lost mid-fetch")
            except MailgraphError as exc:
                job.errors.append(f"{account.account_id}: {exc}")
            except Exception as exc:  # keep other accounts running
                job.errors.append(f"{account.account_id}: unexpected error: {exc}")

        workers = [threading.Thread(target=fetch_one, args=(a,), daemon=True) for a in accounts]
        for w in workers:
            w.start()
        for w in workers:
            w.join()

        try:
            with self.lock:
                for account, mailbox, result in results:
                    self.sync_state.put(account.account_id, mailbox, result.new_state)
                batch = [m for _, _, result in results for m in result.messages]
                report = self.ingest(batch)
            for acct, count in report.classified_by_account.items():
                if acct in job.progress:
                    job.progress[acct]["classified"] = count
            job.errors.extend(report.errors)
            job.state = "done"
        except Exception as exc:
            job.errors.append(f"pipeline: {exc}")
            job.state = "failed"
        job.finished_at = self.clock()

    # -- mbox convenience ------------------------------------------------

    def import_mbox_file(self, path: str | Path, account_id: str) -> PipelineReport:
        with self.lock:
            state = self.sync_state.get(account_id, str(path))
            result = import_mbox(path, account_id, state)
            self.sync_state.put(account_id, str(path), result.new_state)
            return self.ingest(result.messages)
