"""Decision machinery: incremental naive Bayes over categories, novelty
detection for dynamic category creation, correction-driven retraining,
word-probability spam scoring, and sub-category clustering.

Training is exactly invertible (untrain is the inverse of train) so a
user correction can move a message's contribution from one category to
another without residue.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields

from .errors import MaxDepthError, TooFewMembersError, UnknownIdError, UntrainedModelError
from .store import Category, GraphStore
from .textproc import (
    MessageDigest,
    cosine_similarity,
    l2_normalize,
    sum_vectors,
    top_keywords,
)

log = logging.getLogger(__name__)


@dataclass
class ClassifierConfig:
    assign_threshold: float = 0.30
    new_category_similarity: float = 0.25
    laplace: float = 1.0
    keyword_count: int = 10
    subcluster_k: int = 2
    subcluster_min_size: int = 12
    subcluster_min_child: int = 3
    spam_threshold: float = 0.90
    unknown_token_prob: float = 0.40
    interesting_tokens: int = 15
    min_token_evidence: int = 5

    def __post_init__(self):
        if not 0.0 < self.assign_threshold <= 1.0:
            raise ValueError("assign_threshold must be in (0, 1]")
        if not 0.0 <= self.new_category_similarity < 1.0:
            raise ValueError("new_category_similarity must be in [0, 1)")
        if self.laplace <= 0.0:
            raise ValueError("laplace must be positive")
        for name in ("keyword_count", "subcluster_k", "subcluster_min_size",
                     "subcluster_min_child", "interesting_tokens", "min_token_evidence"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "ClassifierConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


@dataclass
class CategoryCounts:
    token_counts: dict[str, int] = field(default_factory=dict)
    total_tokens: int = 0
    doc_count: int = 0


class CategoryModel:
    """Per-category token counts plus the shared vocabulary.

    Zero counts are never stored, which keeps train/untrain exact
    structural inverses.
    """

    def __init__(self):
        self.categories: dict[str, CategoryCounts] = {}
        self.vocabulary: set[str] = set()

    def trained_categories(self) -> dict[str, CategoryCounts]:
        return {cid: c for cid, c in self.categories.items() if c.doc_count > 0}


@dataclass
class SpamModel:
    good: dict[str, int] = field(default_factory=dict)
    bad: dict[str, int] = field(default_factory=dict)
    ngood: int = 0
    nbad: int = 0


# -- naive Bayes -------------------------------------------------------


def train(model: CategoryModel, digest: MessageDigest, category_id: str) -> CategoryModel:
    """Accumulate one document's token counts into a category."""
    cat = model.categories.setdefault(category_id, CategoryCounts())
    for term, count in digest.vector.items():
        cat.token_counts[term] = cat.token_counts.get(term, 0) + count
        cat.total_tokens += count
        model.vocabulary.add(term)
    cat.doc_count += 1
    return model


def untrain(model: CategoryModel, digest: MessageDigest, category_id: str) -> CategoryModel:
    """Exact inverse of train; counts floor at zero with a warning."""
    cat = model.categories.get(category_id)
    if cat is None:
        log.warning("untrain: category %s was never trained", category_id)
        return model
    for term, count in digest.vector.items():
        have = cat.token_counts.get(term, 0)
        removed = min(have, count)
        if removed < count:
            log.warning("untrain: token %r count floored at 0 in %s", term, category_id)
        if have - removed:
            cat.token_counts[term] = have - removed
        else:
            cat.token_counts.pop(term, None)
        cat.total_tokens -= removed
        if not any(term in c.token_counts for c in model.categories.values()):
            model.vocabulary.discard(term)
    if cat.doc_count > 0:
        cat.doc_count -= 1
    else:
        log.warning("untrain: document count floored at 0 in %s", category_id)
    if cat.doc_count == 0 and cat.total_tokens == 0 and not cat.token_counts:
        del model.categories[category_id]
    return model


def classify(model: CategoryModel, vector: dict[str, int], alpha: float = 1.0) -> dict[str, float]:
    """Posterior per trained category for a term-count vector.

    Multinomial naive Bayes in log space with Laplace smoothing over the
    global vocabulary; posteriors are normalized to sum to 1.
    """
    trained = model.trained_categories()
    if not trained:
        raise UntrainedModelError("untrained model")
    total_docs = sum(c.doc_count for c in trained.values())
    vocab_size = len(model.vocabulary)
    scores: dict[str, float] = {}
    for cid, cat in trained.items():
        score = math.log(cat.doc_count / total_docs)
        denom = cat.total_tokens + alpha * vocab_size
        if denom > 0:
            for term, tf in vector.items():
                score += tf * math.log((cat.token_counts.get(term, 0) + alpha) / denom)
        scores[cid] = score
    peak = max(scores.values())
    exps = {cid: math.exp(s - peak) for cid, s in scores.items()}
    z = sum(exps.values())
    return {cid: e / z for cid, e in exps.items()}


def decide_memberships(posteriors: dict[str, float], threshold: float) -> list[tuple[str, float]]:
    """Categories a message joins: every argmax, plus all above threshold."""
    best = max(posteriors.values())
    chosen = {cid for cid, p in posteriors.items() if p == best or p >= threshold}
    return sorted(((cid, posteriors[cid]) for cid in chosen), key=lambda e: (-e[1], e[0]))


# -- dynamic categories ------------------------------------------------


def maybe_create_category(
    store: GraphStore,
    digest: MessageDigest,
    config: ClassifierConfig,
    created_at: float = 0.0,
) -> Category | None:
    """Open a new root category when the message resembles nothing known.

    Creation happens when no categories exist, or when the best cosine
    between the digest and any category centroid falls below the novelty
    threshold. The message becomes the first member and the centroid.
    """
    if store.categories:
        best = max(
            cosine_similarity(digest.weighted, cat.centroid)
            for cat in store.categories.values()
        )
        if best >= config.new_category_similarity:
            return None
    name = "-".join(digest.keywords[:2])
    if not name:
        return None
    cid = store.create_category(name, None, "auto", False, created_at)
    store.assign(digest.message_id, cid, 1.0, "auto")
    store.categories[cid].centroid = l2_normalize(digest.weighted)
    return store.categories[cid]


def update_centroid(store: GraphStore, category_id: str, digests: list[MessageDigest]) -> dict[str, float]:
    """Recompute a centroid as the normalized mean of member vectors."""
    if category_id not in store.categories:
        raise UnknownIdError(f"unknown category: {category_id}")
    centroid = l2_normalize(sum_vectors(l2_normalize(d.weighted) for d in digests))
    store.categories[category_id].centroid = centroid
    return centroid


def apply_correction(
    store: GraphStore,
    model: CategoryModel,
    message_id: str,
    from_category: str | None,
    to_category: str,
) -> None:
    """Move a message's assignment and its training contribution.

    After the move, classifying the same digest ranks ``to_category``
    strictly higher than before.
    """
    stored = store.messages.get(message_id)
    if stored is None:
        raise UnknownIdError(f"unknown message: {message_id}")
    if to_category not in store.categories:
        raise UnknownIdError(f"unknown category: {to_category}")
    if from_category == to_category:
        return
    if from_category is None and (message_id, to_category) in store.edges:
        edge = store.edges[(message_id, to_category)]
        if edge.provenance == "user":
            return

    if from_category is not None:
        if from_category not in store.categories:
            raise UnknownIdError(f"unknown category: {from_category}")
        if (message_id, from_category) not in store.edges:
            raise UnknownIdError(f"no such edge: {message_id} -> {from_category}")
        untrain(model, stored.digest, from_category)
        store.unassign(message_id, from_category)
        update_centroid(store, from_category, store.member_digests(from_category))

    train(model, stored.digest, to_category)
    store.assign(message_id, to_category, 1.0, "user")
    update_centroid(store, to_category, store.member_digests(to_category))


# -- spam filter -------------------------------------------------------


def graham_token_prob(token: str, spam: SpamModel, config: ClassifierConfig) -> float:
    """Per-token spam probability from the good/bad count tables."""
    g = spam.good.get(token, 0)
    b = spam.bad.get(token, 0)
    if 2 * g + b < config.min_token_evidence:
        return config.unknown_token_prob
    bad_ratio = min(1.0, b / spam.nbad) if spam.nbad > 0 else 0.0
    good_ratio = min(1.0, 2 * g / spam.ngood) if spam.ngood > 0 else 0.0
    denom = good_ratio + bad_ratio
    p = bad_ratio / denom if denom > 0 else 0.0
    return min(0.99, max(0.01, p))


def graham_score(tokens, spam: SpamModel, config: ClassifierConfig) -> float:
    """Combined spam probability over the most interesting tokens.

    Interest is distance from 0.5; ties prefer the larger probability,
    then the lexicographically smaller token. No tokens scores 0.5.
    """
    probs = {t: graham_token_prob(t, spam, config) for t in set(tokens)}
    interesting = sorted(probs, key=lambda t: (-abs(probs[t] - 0.5), -probs[t], t))
    interesting = interesting[: config.interesting_tokens]
    if not interesting:
        return 0.5
    p_spam = 1.0
    p_ham = 1.0
    for t in interesting:
        p_spam *= probs[t]
        p_ham *= 1.0 - probs[t]
    if p_spam + p_ham == 0.0:
        return 0.5
    return p_spam / (p_spam + p_ham)


def is_spam(score: float, config: ClassifierConfig) -> bool:
    return score > config.spam_threshold


def train_spam(spam: SpamModel, vector: dict[str, int], as_spam: bool) -> None:
    """Count one message's tokens into the good or bad table."""
    table = spam.bad if as_spam else spam.good
    for term, count in vector.items():
        table[term] = table.get(term, 0) + count
    if as_spam:
        spam.nbad += 1
    else:
        spam.ngood += 1


# -- sub-category clustering ------------------------------------------


def subcluster(
    parent: Category,
    members: list[MessageDigest],
    config: ClassifierConfig,
    parent_depth: int,
    max_depth: int,
) -> list[tuple[str, list[str]]]:
    """Split a category's members with deterministic spherical k-means.

    Seeding is randomness-free: the first seed is the member least
    similar to the category centroid, each further seed the member least
    similar to the seeds so far (ties pick the smallest message id).
    Returns [] when any resulting cluster would be too small to stand as
    a child category.
    """
    if parent_depth >= max_depth:
        raise MaxDepthError("max depth reached")
    if len(members) < config.subcluster_min_size:
        raise TooFewMembersError("too few members")

    vecs = {d.message_id: l2_normalize(d.weighted) for d in members}
    ids = sorted(vecs)
    centroid = parent.centroid or l2_normalize(sum_vectors(vecs.values()))

    seeds = [min(ids, key=lambda m: (cosine_similarity(vecs[m], centroid), m))]
    while len(seeds) < config.subcluster_k:
        seeds.append(
            min(
                ids,
                key=lambda m: (max(cosine_similarity(vecs[m], vecs[s]) for s in seeds), m),
            )
        )
    centroids = [dict(vecs[s]) for s in seeds]
    k = len(centroids)

    assignment: dict[str, int] = {}
    for _ in range(20):
        new_assignment = {
            m: max(range(k), key=lambda j: (cosine_similarity(vecs[m], centroids[j]), -j))
            for m in ids
        }
        if new_assignment == assignment:
            break
        assignment = new_assignment
        for j in range(k):
            cluster = [vecs[m] for m in ids if assignment[m] == j]
            if cluster:
                centroids[j] = l2_normalize(sum_vectors(cluster))

    clusters = [[m for m in ids if assignment[m] == j] for j in range(k)]
    if any(len(c) < config.subcluster_min_child for c in clusters):
        return []
    out = []
    for j, cluster in enumerate(clusters):
        keyword = (top_keywords(centroids[j], 1) or ["misc"])[0]
        out.append((f"{parent.name}/{keyword}", cluster))
    return out


# -- persistence -------------------------------------------------------


def classifier_to_state(model: CategoryModel, spam: SpamModel, config: ClassifierConfig) -> dict:
    return {
        "category_model": {
            "categories": {
                cid: {
                    "token_counts": dict(sorted(c.token_counts.items())),
                    "total_tokens": c.total_tokens,
                    "doc_count": c.doc_count,
                }
                for cid, c in sorted(model.categories.items())
            },
            "vocabulary": sorted(model.vocabulary),
        },
        "spam_model": {
            "good": dict(sorted(spam.good.items())),
            "bad": dict(sorted(spam.bad.items())),
            "ngood": spam.ngood,
            "nbad": spam.nbad,
        },
        "config": config.to_dict(),
    }


def classifier_from_state(state: dict) -> tuple[CategoryModel, SpamModel, ClassifierConfig | None]:
    model = CategoryModel()
    cm = state.get("category_model") or {}
    for cid, rec in (cm.get("categories") or {}).items():
        model.categories[cid] = CategoryCounts(
            token_counts={t: int(n) for t, n in (rec.get("token_counts") or {}).items() if int(n) != 0},
            total_tokens=int(rec.get("total_tokens", 0)),
            doc_count=int(rec.get("doc_count", 0)),
        )
    model.vocabulary = set(cm.get("vocabulary") or [])
    sm = state.get("spam_model") or {}
    spam = SpamModel(
        good={t: int(n) for t, n in (sm.get("good") or {}).items()},
        bad={t: int(n) for t, n in (sm.get("bad") or {}).items()},
        ngood=int(sm.get("ngood", 0)),
        nbad=int(sm.get("nbad", 0)),
    )
    config = ClassifierConfig.from_dict(state["config"]) if state.get("config") else None
    return model, spam, config
