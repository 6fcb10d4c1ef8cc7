"""Command-line interface.

Exit codes: 0 success, 1 user error (bad ids, bad config, conflicts),
2 internal error.
"""
from __future__ import annotations

import argparse
import os
import sys
import traceback

from .errors import MailgraphError
from .service import AppConfig, Engine


def _load_config(args) -> AppConfig:
    path = getattr(args, "config", None) or os.environ.get("MAILGRAPH_CONFIG")
    if path:
        return AppConfig.from_file(path)
    return AppConfig.default()


def _engine(args) -> Engine:
    return Engine(_load_config(args))


def cmd_init(args) -> int:
    engine = _engine(args)
    path = engine.init_store()
    print(f"initialized store at {path}")
    return 0


def cmd_sync(args) -> int:
    engine = _engine(args)
    job = engine.start_sync(args.account or None)
    engine.wait_sync(job)
    fetched = sum(p["fetched"] for p in job.progress.values())
    classified = sum(p["classified"] for p in job.progress.values())
    print(f"sync {job.state}: fetched {fetched}, classified {classified}")
    for err in job.errors:
        print(f"warning: {err}", file=sys.stderr)
    return 0 if job.state == "done" else 2


def cmd_serve(args) -> int:
    from .httpapi import serve

    engine = _engine(args)
    serve(engine, port=args.port)
    return 0


def _print_tree(nodes, indent=0) -> None:
    for node in nodes:
        flags = []
        if node["pinned"]:
            flags.append("pinned")
        if node["provenance"] == "auto":
            flags.append("auto")
        suffix = f" ({', '.join(flags)})" if flags else ""
        print(f"{'  ' * indent}{node['category_id']}: {node['name']} [{node['member_count']}]{suffix}")
        _print_tree(node["children"], indent + 1)


def cmd_list(args) -> int:
    engine = _engine(args)
    if args.category_id:
        for row in engine.category_messages(args.category_id):
            date = row["date"] or "-"
            print(f"{row['message_id']}  {date}  {row['subject']}")
    else:
        _print_tree(engine.category_tree())
    return 0


def cmd_show(args) -> int:
    engine = _engine(args)
    detail = engine.message_detail(args.message_id)
    print(f"message-id: {detail['message_id']}")
    print(f"from:       {detail['from']}")
    print(f"subject:    {detail['subject']}")
    print(f"date:       {detail['date'] or '-'}")
    print(f"keywords:   {', '.join(detail['keywords'])}")
    print(f"spam score: {detail['spam_score']:.4f}")
    loc = detail["location"]
    print(f"location:   {loc['account_id']}/{loc['mailbox']} uid={loc['uid']} ({loc['source_kind']})")
    print("memberships:")
    for m in detail["memberships"]:
        print(f"  {m['category_id']}  score={m['score']:.4f}  {m['provenance']}")
    if detail["summary"]:
        print(f"summary:\n  {detail['summary']}")
    return 0


def cmd_assign(args) -> int:
    engine = _engine(args)
    memberships = engine.correction(args.message_id, None, args.category_id)
    for m in memberships:
        print(f"{m['category_id']}  score={m['score']:.4f}  {m['provenance']}")
    return 0


def cmd_correct(args) -> int:
    engine = _engine(args)
    memberships = engine.correction(args.message_id, args.from_category, args.to_category)
    for m in memberships:
        print(f"{m['category_id']}  score={m['score']:.4f}  {m['provenance']}")
    return 0


def cmd_subcluster(args) -> int:
    engine = _engine(args)
    children = engine.subcluster_category(args.category_id)
    if not children:
        print("no split")
    for child in children:
        print(f"{child['category_id']}: {child['name']} [{child['member_count']}]")
    return 0


def cmd_import_mbox(args) -> int:
    engine = _engine(args)
    report = engine.import_mbox_file(args.path, args.account)
    print(
        f"imported {report.processed} messages "
        f"({report.duplicates} duplicates, {report.spam} spam, "
        f"{report.created_categories} new categories)"
    )
    for err in report.errors:
        print(f"warning: {err}", file=sys.stderr)
    return 0


def cmd_spam(args) -> int:
    engine = _engine(args)
    memberships = engine.mark_spam(args.message_id, not args.not_spam)
    for m in memberships:
        print(f"{m['category_id']}  score={m['score']:.4f}  {m['provenance']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mailgraph",
        description="Multi-account email auto-classification over a bipartite message/category graph.",
    )
    parser.add_argument("--config", help="config file path (default: $MAILGRAPH_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create the data directory and an empty store")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("sync", help="fetch new mail from all (or selected) accounts and classify it")
    p.add_argument("--account", action="append", metavar="ID", help="limit to this account (repeatable)")
    p.set_defaults(func=cmd_sync)

    p = sub.add_parser("serve", help="run the HTTP API (and web UI when configured)")
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("list", help="list the category tree, or a category's messages")
    p.add_argument("category_id", nargs="?", default=None)
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("show", help="show one message's digest and memberships")
    p.add_argument("message_id")
    p.set_defaults(func=cmd_show)

    p = sub.add_parser("assign", help="file a message into a category (user edge, trains the model)")
    p.add_argument("message_id")
    p.add_argument("category_id")
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("correct", help="move a message between categories, retraining the model")
    p.add_argument("message_id")
    p.add_argument("--from", dest="from_category", default=None, metavar="CATEGORY")
    p.add_argument("--to", dest="to_category", required=True, metavar="CATEGORY")
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("subcluster", help="split a category into sub-categories")
    p.add_argument("category_id")
    p.set_defaults(func=cmd_subcluster)

    p = sub.add_parser("import-mbox", help="ingest a local mbox file")
    p.add_argument("path")
    p.add_argument("--account", required=True, metavar="ID")
    p.set_defaults(func=cmd_import_mbox)

    p = sub.add_parser("spam", help="mark a message as spam (or ham with --not)")
    p.add_argument("message_id")
    p.add_argument("--not", dest="not_spam", action="store_true", help="mark as not spam")
    p.set_defaults(func=cmd_spam)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MailgraphError, ValueError, OSError) as exc:
        # covers unknown ids, conflicts, bad configs, unreadable files
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
