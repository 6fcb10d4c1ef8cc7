import json
import os
import random

import pytest

from mailgraph.errors import DepthExceededError, StoreFormatError, UnknownIdError
from mailgraph.message import MessageLocation
from mailgraph.store import SPAM_ID, UNSORTED_ID, GraphStore
from mailgraph.textproc import MessageDigest


def digest(mid: str, terms: dict[str, int] | None = None) -> MessageDigest:
    terms = terms or {"alpha": 1}
    weighted = {t: float(c) for t, c in terms.items()}
    return MessageDigest(mid, sorted(terms), f"summary of {mid}", terms, weighted)


def location(mid: str, account: str = "acct") -> MessageLocation:
    return MessageLocation(account, "INBOX", abs(hash(mid)) % 10_000, 7, "imap")


@pytest.fixture
def store() -> GraphStore:
    return GraphStore.with_defaults()


class TestAddMessage:
    def test_insert(self, store):
        mid = store.add_message(digest("m1"), location("m1"))
        assert mid == "m1"
        assert not store.edges

    def test_idempotent(self, store):
        store.add_message(digest("m1"), location("m1"))
        before = store.messages["m1"]
        assert store.add_message(digest("m1"), location("m1", account="other")) == "m1"
        assert store.messages["m1"] is before


class TestCreateCategory:
    def test_root(self, store):
        cid = store.create_category("Work", None, "user", True)
        assert store.categories[cid].name == "Work"
        assert store.depth(cid) == 1

    def test_child(self, store):
        parent = store.create_category("Work")
        child = store.create_category("Meetings", parent, "auto")
        assert store.depth(child) == 2

    def test_depth_boundary(self, store):
        a = store.create_category("a")
        b = store.create_category("b", a)
        c = store.create_category("c", b)
        assert store.depth(c) == 3
        with pytest.raises(DepthExceededError, match="depth exceeded"):
            store.create_category("d", c)

    def test_duplicate_sibling_name_suffixed(self, store):
        store.create_category("Work")
        c2 = store.create_category("Work")
        c3 = store.create_category("Work")
        assert store.categories[c2].name == "Work-2"
        assert store.categories[c3].name == "Work-3"

    def test_same_name_under_different_parents_ok(self, store):
        a = store.create_category("a")
        b = store.create_category("b")
        ca = store.create_category("x", a)
        cb = store.create_category("x", b)
        assert store.categories[ca].name == store.categories[cb].name == "x"

    def test_unknown_parent(self, store):
        with pytest.raises(UnknownIdError):
            store.create_category("x", "nope")


class TestAssign:
    def test_assign_and_neighbors(self, store):
        store.add_message(digest("m1"), location("m1"))
        c1 = store.create_category("c1")
        store.assign("m1", c1, 0.9, "auto")
        assert store.neighbors("m1") == [(c1, 0.9, "auto")]
        assert store.neighbors(c1) == [("m1", 0.9, "auto")]

    def test_user_overwrites_auto(self, store):
        store.add_message(digest("m1"), location("m1"))
        c1 = store.create_category("c1")
        store.assign("m1", c1, 0.9, "auto")
        store.assign("m1", c1, 1.0, "user")
        assert store.neighbors("m1") == [(c1, 1.0, "user")]

    def test_auto_never_downgrades_user(self, store):
        store.add_message(digest("m1"), location("m1"))
        c1 = store.create_category("c1")
        store.assign("m1", c1, 1.0, "user")
        store.assign("m1", c1, 0.5, "auto")
        assert store.neighbors("m1") == [(c1, 1.0, "user")]

    def test_unknown_endpoints(self, store):
        store.add_message(digest("m1"), location("m1"))
        with pytest.raises(UnknownIdError, match="unknown category"):
            store.assign("m1", "nope", 0.5, "auto")
        with pytest.raises(UnknownIdError, match="unknown message"):
            store.assign("nope", UNSORTED_ID, 0.5, "auto")

    def test_unassign(self, store):
        store.add_message(digest("m1"), location("m1"))
        c1 = store.create_category("c1")
        store.assign("m1", c1, 0.9, "auto")
        store.unassign("m1", c1)
        assert store.neighbors("m1") == []
        with pytest.raises(UnknownIdError, match="no such edge"):
            store.unassign("m1", c1)

    def test_neighbors_unknown_id(self, store):
        with pytest.raises(UnknownIdError, match="unknown id"):
            store.neighbors("ghost")


class TestCommitBatch:
    def test_edgeless_message_goes_to_unsorted(self, store):
        store.add_message(digest("m1"), location("m1"))
        repairs = store.commit_batch()
        assert repairs == [("assign-unsorted", "m1")]
        assert store.neighbors("m1") == [(UNSORTED_ID, 0.0, "auto")]

    def test_empty_auto_category_deleted(self, store):
        cid = store.create_category("stale", None, "auto", False)
        repairs = store.commit_batch()
        assert ("delete-empty", cid) in repairs
        assert cid not in store.categories

    def test_pinned_category_survives_empty(self, store):
        cid = store.create_category("keep", None, "user", True)
        store.commit_batch()
        assert cid in store.categories

    def test_children_reparented(self, store):
        root = store.create_category("root", None, "auto", False)
        child = store.create_category("leaf", root, "auto", False)
        store.add_message(digest("m1"), location("m1"))
        store.assign("m1", child, 1.0, "user")
        store.commit_batch()
        assert root not in store.categories
        assert store.categories[child].parent is None

    def test_noop_still_increments_revision(self, store):
        store.add_message(digest("m1"), location("m1"))
        c1 = store.create_category("c1")
        store.assign("m1", c1, 1.0, "user")
        before = store.revision
        assert store.commit_batch() == []
        assert store.revision == before + 1

    def test_unassign_only_edge_then_commit(self, store):
        store.add_message(digest("m1"), location("m1"))
        c1 = store.create_category("c1", None, "user", True)
        store.assign("m1", c1, 1.0, "user")
        store.unassign("m1", c1)
        store.commit_batch()
        assert store.neighbors("m1") == [(UNSORTED_ID, 0.0, "auto")]


class TestPersistence:
    def test_round_trip(self, store, tmp_path):
        store.add_message(digest("m1", {"alpha": 2, "beta": 1}), location("m1"))
        c1 = store.create_category("c1", None, "auto")
        store.assign("m1", c1, 0.75, "auto")
        store.corpus_stats.doc_count = 1
        store.corpus_stats.df = {"alpha": 1, "beta": 1}
        store.classifier_state = {"spam_model": {"good": {}, "bad": {}, "ngood": 0, "nbad": 0}}
        store.commit_batch()
        path = tmp_path / "store.json"
        store.persist(path)
        loaded = GraphStore.load(path)
        assert loaded.to_document() == store.to_document()

    def test_empty_store_round_trips(self, tmp_path):
        store = GraphStore()
        path = tmp_path / "store.json"
        store.persist(path)
        assert GraphStore.load(path).to_document() == store.to_document()

    def test_unknown_top_level_keys_preserved(self, store, tmp_path):
        path = tmp_path / "store.json"
        store.persist(path)
        doc = json.loads(path.read_text())
        doc["x-custom"] = {"kept": True}
        path.write_text(json.dumps(doc))
        loaded = GraphStore.load(path)
        loaded.persist(path)
        assert json.loads(path.read_text())["x-custom"] == {"kept": True}

    def test_interrupted_persist_keeps_old_file(self, store, tmp_path, monkeypatch):
        path = tmp_path / "store.json"
        store.persist(path)
        original = path.read_bytes()
        store.add_message(digest("m1"), location("m1"))

        def boom(src, dst):
            raise OSError("simulated crash before rename")

        monkeypatch.setattr("mailgraph.store.os.replace", boom)
        with pytest.raises(OSError):
            store.persist(path)
        monkeypatch.undo()
        assert path.read_bytes() == original
        GraphStore.load(path)  # still loadable
        assert not list(tmp_path.glob("*.tmp"))  # temp file cleaned up

    def test_dangling_edge_rejected(self, store, tmp_path):
        path = tmp_path / "store.json"
        store.persist(path)
        doc = json.loads(path.read_text())
        doc["edges"] = [
            {"message_id": "ghost", "category_id": "unsorted", "score": 0.5, "provenance": "auto"}
        ]
        path.write_text(json.dumps(doc))
        with pytest.raises(StoreFormatError, match="dangling edge"):
            GraphStore.load(path)

    def test_unsupported_version(self, store, tmp_path):
        path = tmp_path / "store.json"
        store.persist(path)
        doc = json.loads(path.read_text())
        doc["version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(StoreFormatError, match="unsupported version"):
            GraphStore.load(path)

    def test_missing_parent_rejected(self, store, tmp_path):
        path = tmp_path / "store.json"
        store.create_category("a")
        store.persist(path)
        doc = json.loads(path.read_text())
        for cat in doc["categories"]:
            if cat["name"] == "a":
                cat["parent"] = "ghost"
        path.write_text(json.dumps(doc))
        with pytest.raises(StoreFormatError, match="missing parent"):
            GraphStore.load(path)

    def test_parent_cycle_rejected(self, store, tmp_path):
        path = tmp_path / "store.json"
        a = store.create_category("a")
        b = store.create_category("b", a)
        store.persist(path)
        doc = json.loads(path.read_text())
        for cat in doc["categories"]:
            if cat["category_id"] == a:
                cat["parent"] = b
        path.write_text(json.dumps(doc))
        with pytest.raises(StoreFormatError, match="parent cycle"):
            GraphStore.load(path)

    def test_score_out_of_range_rejected(self, store, tmp_path):
        store.add_message(digest("m1"), location("m1"))
        store.assign("m1", UNSORTED_ID, 1.0, "user")
        path = tmp_path / "store.json"
        store.persist(path)
        doc = json.loads(path.read_text())
        doc["edges"][0]["score"] = 1.5
        path.write_text(json.dumps(doc))
        with pytest.raises(StoreFormatError, match="score out of range"):
            GraphStore.load(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "store.json"
        path.write_text("{nope")
        with pytest.raises(StoreFormatError, match="invalid JSON"):
            GraphStore.load(path)


def random_ops_store(rng: random.Random, ops: int = 25) -> GraphStore:
    """Apply a random op sequence; mirrors how the engine drives the store."""
    store = GraphStore.with_defaults()
    mids: list[str] = []
    for step in range(ops):
        roll = rng.random()
        if roll < 0.35 or not mids:
            mid = f"m{step}"
            store.add_message(digest(mid, {f"t{rng.randrange(5)}": rng.randrange(1, 4) for _ in range(2)}), location(mid))
            mids.append(mid)
        elif roll < 0.55:
            parents = [None] + [c for c in store.categories if store.depth(c) < store.max_depth]
            try:
                store.create_category(
                    f"cat{rng.randrange(8)}",
                    rng.choice(parents),
                    rng.choice(["auto", "user"]),
                    rng.random() < 0.2,
                )
            except DepthExceededError:
                pass
        elif roll < 0.85:
            mid = rng.choice(mids)
            cid = rng.choice(sorted(store.categories))
            store.assign(mid, cid, rng.random(), rng.choice(["auto", "user"]))
        else:
            if store.edges:
                mid, cid = rng.choice(sorted(store.edges))
                store.unassign(mid, cid)
    return store


class TestRandomizedInvariants:
    def test_random_sequences_commit_clean(self):
        rng = random.Random(42)
        for _ in range(150):
            store = random_ops_store(rng)
            before = store.revision
            store.commit_batch()
            assert store.revision == before + 1
            for mid in store.messages:
                assert store.degree(mid) >= 1
            for cid, cat in store.categories.items():
                if not cat.pinned:
                    assert store.degree(cid) >= 1
            for mid, cid in store.edges:
                assert mid in store.messages and cid in store.categories

    def test_random_stores_round_trip(self, tmp_path):
        rng = random.Random(7)
        for i in range(20):
            store = random_ops_store(rng)
            store.commit_batch()
            path = tmp_path / f"s{i}.json"
            store.persist(path)
            assert GraphStore.load(path).to_document() == store.to_document()
