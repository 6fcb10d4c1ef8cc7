"""mailgraph: multi-account email auto-classification.

Messages and categories form a bipartite graph; new mail is digested
into keywords, a summary, and a term vector, then routed by an
incremental naive Bayes classifier with novelty-driven category
creation, a correction-trained spam filter in front, and read-only
incremental sync from IMAP/POP3/mbox sources.
"""

from .classify import CategoryModel, ClassifierConfig, SpamModel
from .errors import MailgraphError
from .message import MessageLocation, ParsedMessage, RawMessage, parse_message
from .service import AppConfig, Engine, PipelineReport, SyncJob
from .store import GraphStore
from .textproc import CorpusStats, MessageDigest
from .transport import AccountConfig, FetchResult, SyncState

__version__ = "0.1.0"

__all__ = [
    "AccountConfig",
    "AppConfig",
    "CategoryModel",
    "ClassifierConfig",
    "CorpusStats",
    "Engine",
    "FetchResult",
    "GraphStore",
    "MailgraphError",
    "MessageDigest",
    "MessageLocation",
    "ParsedMessage",
    "PipelineReport",
    "RawMessage",
    "SpamModel",
    "SyncJob",
    "SyncState",
    "parse_message",
    "__version__",
]
