"""Bipartite message/category graph with durable JSON persistence.

Messages and categories are the two node sets; scored membership edges
join them and nothing else (no message-message or category-category
edges). Categories form a forest through parent links, capped at a
configurable depth. commit_batch repairs the two structural guarantees:
every message belongs somewhere, and no unpinned category stays empty.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DepthExceededError,
    StoreFormatError,
    UnknownIdError,
)
from .message import MessageLocation
from .textproc import CorpusStats, MessageDigest

STORE_VERSION = 1
DEFAULT_MAX_DEPTH = 3
UNSORTED_ID = "unsorted"
SPAM_ID = "spam"

_KNOWN_KEYS = {
    "version",
    "revision",
    "corpus_stats",
    "categories",
    "messages",
    "edges",
    "classifier",
    "sync_state",
}


@dataclass
class Category:
    category_id: str
    name: str
    provenance: str  # "auto" | "user"
    parent: str | None = None
    pinned: bool = False
    centroid: dict[str, float] = field(default_factory=dict)
    created_at: float = 0.0


@dataclass
class Membership:
    message_id: str
    category_id: str
    score: float
    provenance: str


@dataclass
class StoredMessage:
    digest: MessageDigest
    location: MessageLocation
    headers: dict = field(default_factory=dict)


class GraphStore:
    """In-memory store; all mutation goes through a single writer."""

    def __init__(self, max_depth: int = DEFAULT_MAX_DEPTH):
        self.max_depth = max_depth
        self.messages: dict[str, StoredMessage] = {}
        self.categories: dict[str, Category] = {}
        self.edges: dict[tuple[str, str], Membership] = {}
        self.revision = 0
        self.corpus_stats = CorpusStats()
        self.classifier_state: dict = {}
        self.sync_state: dict = {}
        self.extra: dict = {}
        self._category_seq = 1

    @classmethod
    def with_defaults(cls, max_depth: int = DEFAULT_MAX_DEPTH) -> "GraphStore":
        """Fresh store with the two built-in pinned categories."""
        store = cls(max_depth)
        store.categories[UNSORTED_ID] = Category(UNSORTED_ID, "unsorted", "user", pinned=True)
        store.categories[SPAM_ID] = Category(SPAM_ID, "spam", "user", pinned=True)
        return store

    # -- queries -------------------------------------------------------

    def depth(self, category_id: str) -> int:
        depth = 0
        current: str | None = category_id
        while current is not None:
            depth += 1
            current = self.categories[current].parent
            if depth > len(self.categories):
                raise StoreFormatError("corrupt store: parent cycle")
        return depth

    def children_of(self, category_id: str | None) -> list[Category]:
        return [c for c in self.categories.values() if c.parent == category_id]

    def degree(self, node_id: str) -> int:
        if node_id in self.messages:
            return sum(1 for m, _ in self.edges if m == node_id)
        return sum(1 for _, c in self.edges if c == node_id)

    def categories_of(self, message_id: str) -> list[tuple[str, float, str]]:
        found = [e for e in self.edges.values() if e.message_id == message_id]
        return sorted(
            ((e.category_id, e.score, e.provenance) for e in found),
            key=lambda t: (-t[1], t[0]),
        )

    def members_of(self, category_id: str) -> list[tuple[str, float, str]]:
        found = [e for e in self.edges.values() if e.category_id == category_id]
        return sorted(
            ((e.message_id, e.score, e.provenance) for e in found),
            key=lambda t: (-t[1], t[0]),
        )

    def neighbors(self, node_id: str) -> list[tuple[str, float, str]]:
        """Counterparts of a node across the bipartite edges."""
        if node_id in self.messages:
            return self.categories_of(node_id)
        if node_id in self.categories:
            return self.members_of(node_id)
        raise UnknownIdError(f"unknown id: {node_id}")

    def member_digests(self, category_id: str) -> list[MessageDigest]:
        return [self.messages[m].digest for m, _, _ in self.members_of(category_id)]

    # -- mutation ------------------------------------------------------

    def add_message(
        self,
        digest: MessageDigest,
        location: MessageLocation,
        headers: dict | None = None,
    ) -> str:
        """Store a digested message; re-adding the same id is a no-op."""
        mid = digest.message_id
        if mid in self.messages:
            return mid
        self.messages[mid] = StoredMessage(digest, location, headers or {})
        return mid

    def _sibling_names(self, parent: str | None) -> set[str]:
        return {c.name for c in self.categories.values() if c.parent == parent}

    def _unique_sibling_name(self, name: str, parent: str | None) -> str:
        taken = self._sibling_names(parent)
        if name not in taken:
            return name
        n = 2
        while f"{name}-{n}" in taken:
            n += 1
        return f"{name}-{n}"

    def _new_category_id(self) -> str:
        while f"c{self._category_seq}" in self.categories:
            self._category_seq += 1
        cid = f"c{self._category_seq}"
        self._category_seq += 1
        return cid

    def create_category(
        self,
        name: str,
        parent: str | None = None,
        provenance: str = "user",
        pinned: bool = False,
        created_at: float = 0.0,
    ) -> str:
        if parent is not None:
            if parent not in self.categories:
                raise UnknownIdError(f"unknown category: {parent}")
            if self.depth(parent) + 1 > self.max_depth:
                raise DepthExceededError("depth exceeded")
        cid = self._new_category_id()
        self.categories[cid] = Category(
            category_id=cid,
            name=self._unique_sibling_name(name, parent),
            provenance=provenance,
            parent=parent,
            pinned=pinned,
            created_at=created_at,
        )
        return cid

    def assign(self, message_id: str, category_id: str, score: float, provenance: str) -> None:
        """Add or overwrite an edge; user edges are never downgraded to auto."""
        if message_id not in self.messages:
            raise UnknownIdError(f"unknown message: {message_id}")
        if category_id not in self.categories:
            raise UnknownIdError(f"unknown category: {category_id}")
        key = (message_id, category_id)
        existing = self.edges.get(key)
        if existing is not None and existing.provenance == "user" and provenance == "auto":
            return
        self.edges[key] = Membership(message_id, category_id, score, provenance)

    def unassign(self, message_id: str, category_id: str) -> None:
        key = (message_id, category_id)
        if key not in self.edges:
            raise UnknownIdError(f"no such edge: {message_id} -> {category_id}")
        del self.edges[key]

    def commit_batch(self) -> list[tuple[str, str]]:
        """Repair structural invariants and bump the revision.

        Edgeless messages land in the pinned "unsorted" category; empty
        unpinned categories are deleted with their children re-parented.
        """
        repairs: list[tuple[str, str]] = []
        message_degree: dict[str, int] = {m: 0 for m in self.messages}
        category_degree: dict[str, int] = {c: 0 for c in self.categories}
        for mid, cid in self.edges:
            message_degree[mid] += 1
            category_degree[cid] += 1

        for mid in sorted(self.messages):
            if message_degree[mid] == 0:
                self.assign(mid, UNSORTED_ID, 0.0, "auto")
                category_degree[UNSORTED_ID] = category_degree.get(UNSORTED_ID, 0) + 1
                repairs.append(("assign-unsorted", mid))

        changed = True
        while changed:
            changed = False
            for cid in sorted(self.categories):
                cat = self.categories[cid]
                if cat.pinned or category_degree.get(cid, 0) > 0:
                    continue
                for child in self.children_of(cid):
                    child.parent = cat.parent
                    child.name = self._unique_sibling_name(child.name, cat.parent)
                del self.categories[cid]
                del category_degree[cid]
                repairs.append(("delete-empty", cid))
                changed = True

        self.revision += 1
        return repairs

    # -- persistence ---------------------------------------------------

    def to_document(self) -> dict:
        doc = {
            "version": STORE_VERSION,
            "revision": self.revision,
            "corpus_stats": {
                "doc_count": self.corpus_stats.doc_count,
                "df": dict(sorted(self.corpus_stats.df.items())),
            },
            "categories": [
                {
                    "category_id": c.category_id,
                    "name": c.name,
                    "provenance": c.provenance,
                    "parent": c.parent,
                    "pinned": c.pinned,
                    "centroid": dict(sorted(c.centroid.items())),
                    "created_at": c.created_at,
                }
                for _, c in sorted(self.categories.items())
            ],
            "messages": [
                {
                    "digest": {
                        "message_id": m.digest.message_id,
                        "keywords": list(m.digest.keywords),
                        "summary": m.digest.summary,
                        "vector": dict(sorted(m.digest.vector.items())),
                        "weighted": dict(sorted(m.digest.weighted.items())),
                    },
                    "location": {
                        "account_id": m.location.account_id,
                        "mailbox": m.location.mailbox,
                        "uid": m.location.uid,
                        "uidvalidity": m.location.uidvalidity,
                        "source_kind": m.location.source_kind,
                    },
                    "headers": m.headers,
                }
                for _, m in sorted(self.messages.items())
            ],
            "edges": [
                {
                    "message_id": e.message_id,
                    "category_id": e.category_id,
                    "score": e.score,
                    "provenance": e.provenance,
                }
                for _, e in sorted(self.edges.items())
            ],
            "classifier": self.classifier_state,
            "sync_state": self.sync_state,
        }
        doc.update(self.extra)
        return doc

    def persist(self, path: str | Path) -> None:
        """Atomic write: temp file in the same directory, then rename."""
        path = Path(path)
        text = json.dumps(self.to_document(), ensure_ascii=False, sort_keys=True, indent=1)
        fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise

    @classmethod
    def from_document(cls, doc: dict, max_depth: int = DEFAULT_MAX_DEPTH) -> "GraphStore":
        if not isinstance(doc, dict):
            raise StoreFormatError("corrupt store: not an object")
        if doc.get("version") != STORE_VERSION:
            raise StoreFormatError("unsupported version")
        store = cls(max_depth)
        store.revision = int(doc.get("revision", 0))

        stats = doc.get("corpus_stats") or {}
        store.corpus_stats = CorpusStats(
            doc_count=int(stats.get("doc_count", 0)),
            df={str(t): int(n) for t, n in (stats.get("df") or {}).items()},
        )
        if any(n < 1 or n > store.corpus_stats.doc_count for n in store.corpus_stats.df.values()):
            raise StoreFormatError("corrupt store: document frequency out of range")

        for rec in doc.get("categories") or []:
            cid = rec["category_id"]
            if cid in store.categories:
                raise StoreFormatError("corrupt store: duplicate category id")
            store.categories[cid] = Category(
                category_id=cid,
                name=rec["name"],
                provenance=rec["provenance"],
                parent=rec.get("parent"),
                pinned=bool(rec.get("pinned", False)),
                centroid={str(t): float(w) for t, w in (rec.get("centroid") or {}).items()},
                created_at=float(rec.get("created_at", 0.0)),
            )
        for cat in store.categories.values():
            if cat.parent is not None and cat.parent not in store.categories:
                raise StoreFormatError("corrupt store: missing parent")
            if cat.provenance not in ("auto", "user"):
                raise StoreFormatError("corrupt store: bad provenance")
        for cid in store.categories:
            if store.depth(cid) > max_depth:
                raise StoreFormatError("corrupt store: depth exceeded")

        seen_locations = set()
        for rec in doc.get("messages") or []:
            d = rec["digest"]
            loc = rec["location"]
            mid = d["message_id"]
            if mid in store.messages:
                raise StoreFormatError("corrupt store: duplicate message id")
            location = MessageLocation(
                account_id=loc["account_id"],
                mailbox=loc["mailbox"],
                uid=int(loc["uid"]),
                uidvalidity=int(loc.get("uidvalidity", 0)),
                source_kind=loc.get("source_kind", "imap"),
            )
            if location.source_kind == "imap":
                key = (location.account_id, location.mailbox, location.uidvalidity, location.uid)
                if key in seen_locations:
                    raise StoreFormatError("corrupt store: duplicate location")
                seen_locations.add(key)
            store.messages[mid] = StoredMessage(
                digest=MessageDigest(
                    message_id=mid,
                    keywords=[str(k) for k in d.get("keywords") or []],
                    summary=d.get("summary", ""),
                    vector={str(t): int(c) for t, c in (d.get("vector") or {}).items()},
                    weighted={str(t): float(w) for t, w in (d.get("weighted") or {}).items()},
                ),
                location=location,
                headers=dict(rec.get("headers") or {}),
            )

        for rec in doc.get("edges") or []:
            mid, cid = rec["message_id"], rec["category_id"]
            if mid not in store.messages or cid not in store.categories:
                raise StoreFormatError("corrupt store: dangling edge")
            if (mid, cid) in store.edges:
                raise StoreFormatError("corrupt store: duplicate edge")
            score = float(rec["score"])
            if not 0.0 <= score <= 1.0:
                raise StoreFormatError("corrupt store: edge score out of range")
            store.edges[(mid, cid)] = Membership(mid, cid, score, rec["provenance"])

        store.classifier_state = dict(doc.get("classifier") or {})
        store.sync_state = dict(doc.get("sync_state") or {})
        store.extra = {k: v for k, v in doc.items() if k not in _KNOWN_KEYS}
        return store

    @classmethod
    def load(cls, path: str | Path, max_depth: int = DEFAULT_MAX_DEPTH) -> "GraphStore":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise StoreFormatError(f"corrupt store: invalid JSON ({exc})") from exc
        return cls.from_document(doc, max_depth)
