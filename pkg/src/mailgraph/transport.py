"""Read-only acquisition of raw messages from mail servers.

Multiple accounts on different servers feed one local pipeline; the
clients here never issue a command that could mutate server state (no
STORE, EXPUNGE, DELE, or flag changes; fetches use BODY.PEEK). Sync is
incremental: IMAP tracks UIDVALIDITY plus the last seen UID, POP3 the
set of seen UIDL identifiers, mbox import the count of consumed
ordinals.
"""
from __future__ import annotations

import hashlib
import imaplib
import os
import poplib
import re
import ssl
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import AuthError, TransportError
from .message import MessageLocation, RawMessage

NETWORK_TIMEOUT = 15.0

_UID_IN_FETCH_RE = re.compile(rb"UID (\d+)")


@dataclass
class AccountConfig:
    account_id: str
    source_kind: str  # "imap" | "pop3" | "mbox"
    host: str = ""
    port: int = 0
    use_tls: bool = True
    username: str = ""
    credential_env: str = ""
    mailboxes: list[str] = field(default_factory=lambda: ["INBOX"])
    mbox_path: str | None = None
    tls_verify: bool = True


@dataclass
class MailboxState:
    """Incremental-sync cursor for one (account, mailbox)."""

    uidvalidity: int = 0
    last_seen_uid: int = 0
    seen_uidl: set[str] = field(default_factory=set)

    def copy(self) -> "MailboxState":
        return replace(self, seen_uidl=set(self.seen_uidl))


class SyncState:
    """All mailbox cursors, serializable into the store document."""

    def __init__(self):
        self.entries: dict[tuple[str, str], MailboxState] = {}

    def get(self, account_id: str, mailbox: str) -> MailboxState:
        return self.entries.get((account_id, mailbox), MailboxState()).copy()

    def put(self, account_id: str, mailbox: str, state: MailboxState) -> None:
        self.entries[(account_id, mailbox)] = state.copy()

    def to_json(self) -> dict:
        out: dict[str, dict] = {}
        for (account_id, mailbox), st in sorted(self.entries.items()):
            out.setdefault(account_id, {})[mailbox] = {
                "uidvalidity": st.uidvalidity,
                "last_seen_uid": st.last_seen_uid,
                "seen_uidl": sorted(st.seen_uidl),
            }
        return out

    @classmethod
    def from_json(cls, data: dict) -> "SyncState":
        state = cls()
        for account_id, mailboxes in (data or {}).items():
            for mailbox, rec in mailboxes.items():
                state.entries[(account_id, mailbox)] = MailboxState(
                    uidvalidity=int(rec.get("uidvalidity", 0)),
                    last_seen_uid=int(rec.get("last_seen_uid", 0)),
                    seen_uidl=set(rec.get("seen_uidl") or []),
                )
        return state


@dataclass
class FetchResult:
    messages: list[RawMessage]
    new_state: MailboxState
    partial: bool = False


def _credential(account: AccountConfig) -> str:
    # secrets live only in the environment, never in config values
    if not account.credential_env:
        raise AuthError(f"auth failed: account {account.account_id} has no credential_env")
    value = os.environ.get(account.credential_env)
    if value is None:
        raise AuthError(f"auth failed: environment variable {account.credential_env} is not set")
    return value


def uidl_to_uid(uidl: str) -> int:
    """Stable 64-bit integer stand-in for a POP3 UIDL string."""
    return int.from_bytes(hashlib.sha256(uidl.encode("utf-8")).digest()[:8], "big")


# -- IMAP --------------------------------------------------------------


def _imap_connect(account: AccountConfig) -> imaplib.IMAP4:
    if account.use_tls:
        context = ssl.create_default_context()
        if not account.tls_verify:
            context.check_hostname = False
            context.verify_mode = ssl.CERT_NONE
        return imaplib.IMAP4_SSL(
            account.host, account.port or 993, ssl_context=context, timeout=NETWORK_TIMEOUT
        )
    return imaplib.IMAP4(account.host, account.port or 143, timeout=NETWORK_TIMEOUT)


def _server_uidvalidity(conn: imaplib.IMAP4) -> int:
    typ, data = conn.response("UIDVALIDITY")
    if data and data[0]:
        try:
            return int(data[0])
        except (TypeError, ValueError):
            return 0
    return 0


def _fetch_payload(data) -> bytes | None:
    for item in data or []:
        if isinstance(item, tuple) and len(item) >= 2 and isinstance(item[1], (bytes, bytearray)):
            return bytes(item[1])
    return None


_LIST_RE = re.compile(rb'\((?P<flags>[^)]*)\) "?(?P<delim>[^" ]+)"? "?(?P<name>[^"]+)"?$')


def imap_list_mailboxes(account: AccountConfig) -> list[str]:
    """Names of the account's mailboxes, via a read-only LIST."""
    password = _credential(account)
    try:
        conn = _imap_connect(account)
    except (OSError, imaplib.IMAP4.error) as exc:
        raise TransportError(f"connect failed: {account.host}:{account.port}: {exc}") from exc
    try:
        try:
            conn.login(account.username, password)
        except imaplib.IMAP4.error as exc:
            raise AuthError(f"auth failed: {account.account_id}") from exc
        typ, data = conn.list()
        names = []
        for line in data or []:
            if not isinstance(line, bytes):
                continue
            match = _LIST_RE.search(line)
            if match:
                names.append(match.group("name").decode("utf-8", "replace"))
        try:
            conn.logout()
        except Exception:
            pass
        return sorted(names)
    except (imaplib.IMAP4.error, OSError, EOFError) as exc:
        raise TransportError(f"list failed: {exc}") from exc
    finally:
        try:
            conn.shutdown()
        except Exception:
            pass


def imap_fetch_new(account: AccountConfig, mailbox: str, state: MailboxState) -> FetchResult:
    """Fetch raw bodies of UIDs beyond the stored cursor, read-only.

    A changed UIDVALIDITY resets the cursor and refetches the mailbox.
    Messages are fetched one UID at a time so a dropped connection only
    loses the in-flight message; the returned state covers exactly the
    fully received ones.
    """
    password = _credential(account)
    new_state = state.copy()
    messages: list[RawMessage] = []

    try:
        conn = _imap_connect(account)
    except (OSError, imaplib.IMAP4.error) as exc:
        raise TransportError(f"connect failed: {account.host}:{account.port}: {exc}") from exc

    try:
        try:
            conn.login(account.username, password)
        except imaplib.IMAP4.error as exc:
            raise AuthError(f"auth failed: {account.account_id}") from exc

        typ, _ = conn.select(mailbox)
        if typ != "OK":
            raise TransportError(f"select failed: {mailbox}")
        uidvalidity = _server_uidvalidity(conn)
        if uidvalidity != new_state.uidvalidity:
            # the server invalidated every stored UID: full refetch
            new_state.uidvalidity = uidvalidity
            new_state.last_seen_uid = 0

        typ, data = conn.uid("SEARCH", "UID", f"{new_state.last_seen_uid + 1}:*")
        found = (data[0] or b"").split() if data else []
        # n:* quirk: servers echo the highest UID even when it is < n
        uids = sorted(int(u) for u in found if int(u) > new_state.last_seen_uid)

        for uid in uids:
            typ, fetched = conn.uid("FETCH", str(uid), "(BODY.PEEK[])")
            raw = _fetch_payload(fetched)
            if raw is None:
                continue
            messages.append(
                RawMessage(
                    raw,
                    MessageLocation(account.account_id, mailbox, uid, uidvalidity, "imap"),
                )
            )
            new_state.last_seen_uid = uid

        try:
            conn.logout()
        except Exception:
            pass
        return FetchResult(messages, new_state, partial=False)
    except (imaplib.IMAP4.abort, OSError, EOFError):
        return FetchResult(messages, new_state, partial=True)
    except imaplib.IMAP4.error as exc:
        raise TransportError(f"imap protocol error: {exc}") from exc
    finally:
        try:
            conn.shutdown()
        except Exception:
            pass


# -- POP3 --------------------------------------------------------------


def pop3_fetch_new(account: AccountConfig, state: MailboxState) -> FetchResult:
    """Retrieve messages whose UIDL has not been seen; never deletes."""
    password = _credential(account)
    new_state = state.copy()
    messages: list[RawMessage] = []

    try:
        if account.use_tls:
            context = ssl.create_default_context()
            if not account.tls_verify:
                context.check_hostname = False
                context.verify_mode = ssl.CERT_NONE
            pop = poplib.POP3_SSL(
                account.host, account.port or 995, timeout=NETWORK_TIMEOUT, context=context
            )
        else:
            pop = poplib.POP3(account.host, account.port or 110, timeout=NETWORK_TIMEOUT)
    except (OSError, poplib.error_proto) as exc:
        raise TransportError(f"connect failed: {account.host}:{account.port}: {exc}") from exc

    try:
        try:
            pop.user(account.username)
            pop.pass_(password)
        except poplib.error_proto as exc:
            raise AuthError(f"auth failed: {account.account_id}") from exc

        try:
            _, listing, _ = pop.uidl()
        except poplib.error_proto as exc:
            # positional fallbacks break exactly-once delivery; refuse
            raise TransportError("UIDL unsupported") from exc

        entries = []
        for line in listing:
            num, _, uidl = line.decode("utf-8", "replace").partition(" ")
            if num.isdigit() and uidl.strip():
                entries.append((int(num), uidl.strip()))

        for num, uidl in sorted(entries):
            if uidl in new_state.seen_uidl:
                continue
            _, lines, _ = pop.retr(num)
            raw = b"\r\n".join(lines) + b"\r\n"
            messages.append(
                RawMessage(
                    raw,
                    MessageLocation(account.account_id, "INBOX", uidl_to_uid(uidl), 0, "pop3"),
                )
            )
            new_state.seen_uidl.add(uidl)

        try:
            pop.quit()
        except Exception:
            pass
        return FetchResult(messages, new_state, partial=False)
    except (poplib.error_proto, OSError, EOFError):
        return FetchResult(messages, new_state, partial=True)


# -- mbox --------------------------------------------------------------


def _split_mbox(data: bytes) -> list[bytes]:
    messages: list[bytes] = []
    current: list[bytes] | None = None

    def finish(lines: list[bytes]) -> None:
        # one trailing blank line is the container's separator, not content
        if lines and lines[-1].strip() == b"":
            lines.pop()
        body = b"".join(lines)
        if body.strip():
            messages.append(body)

    for line in data.splitlines(keepends=True):
        if line.startswith(b"From "):
            if current is not None:
                finish(current)
            current = []
            continue
        if current is None:
            current = []
        if line.startswith(b">") and line.lstrip(b">").startswith(b"From "):
            line = line[1:]
        current.append(line)
    if current is not None:
        finish(current)
    return messages


def import_mbox(path: str | Path, account_id: str, state: MailboxState) -> FetchResult:
    """Ingest a local mbox file; ordinals already consumed are skipped."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise TransportError(f"unreadable file: {path}: {exc}") from exc

    new_state = state.copy()
    messages = []
    parts = _split_mbox(data)
    for ordinal, raw in enumerate(parts):
        if ordinal < state.last_seen_uid:
            continue
        messages.append(
            RawMessage(raw, MessageLocation(account_id, str(path), ordinal, 0, "mbox"))
        )
    new_state.last_seen_uid = max(state.last_seen_uid, len(parts))
    return FetchResult(messages, new_state, partial=False)


# -- dispatch ----------------------------------------------------------


def fetch_account(account: AccountConfig, sync_state: SyncState) -> list[tuple[str, FetchResult]]:
    """Run one account's fetches; returns (mailbox, result) pairs."""
    results = []
    if account.source_kind == "imap":
        for mailbox in account.mailboxes or ["INBOX"]:
            state = sync_state.get(account.account_id, mailbox)
            results.append((mailbox, imap_fetch_new(account, mailbox, state)))
    elif account.source_kind == "pop3":
        state = sync_state.get(account.account_id, "INBOX")
        results.append(("INBOX", pop3_fetch_new(account, state)))
    elif account.source_kind == "mbox":
        if not account.mbox_path:
            raise TransportError(f"account {account.account_id} has no mbox_path")
        state = sync_state.get(account.account_id, str(account.mbox_path))
        results.append((str(account.mbox_path), import_mbox(account.mbox_path, account.account_id, state)))
    else:
        raise TransportError(f"unknown source kind: {account.source_kind}")
    return results
