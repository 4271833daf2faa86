"""Operator entry point: run the server, check flows, fire test requests.

Exit codes: 0 ok, 1 invalid flow, 2 bind failure, 3 transport error,
4 HTTP 4xx, 5 HTTP 5xx.
"""

from __future__ import annotations

import argparse
import logging
import sys

import requests

from . import flow_model, jsontree
from .nodes import standard_registry
from .server import FlowfillServer, ServerConfig

EXIT_OK = 0
EXIT_INVALID_FLOW = 1
EXIT_BIND_FAILURE = 2
EXIT_TRANSPORT = 3
EXIT_HTTP_4XX = 4
EXIT_HTTP_5XX = 5

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowfill",
        description="Flow-based fulfillment middleware for chatbot action servers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="serve a flow")
    run.add_argument("--flow", required=True, help="path to the flow document")
    run.add_argument("--bind", default="127.0.0.1:5055", help="host:port to listen on")
    run.add_argument("--strict-templates", action="store_true",
                     help="treat missing template values as branch errors")
    run.add_argument("--log-level", default="info", choices=sorted(LOG_LEVELS))

    check = sub.add_parser("check", help="validate a flow offline")
    check.add_argument("--flow", required=True, help="path to the flow document")
    check.add_argument("--json", action="store_true", help="emit the report as JSON")

    send = sub.add_parser("send", help="fire one action request at a server")
    send.add_argument("--url", default="http://127.0.0.1:5055/webhook",
                      help="webhook URL to POST to")
    send.add_argument("--action", required=True, help="action name (next_action)")
    send.add_argument("--slot", action="append", default=[], metavar="NAME=VALUE",
                      help="slot value; a literal null clears the slot (repeatable)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "check":
        return cmd_check(args)
    return cmd_send(args)


def _load_flow(path: str) -> flow_model.FlowDocument | None:
    try:
        with open(path, "rb") as fh:
            return flow_model.parse_flow(fh.read())
    except OSError as exc:
        print(f"cannot read flow: {exc}", file=sys.stderr)
    except (flow_model.MalformedBody, flow_model.SchemaViolation) as exc:
        print(f"cannot parse flow: {exc}", file=sys.stderr)
    return None


def cmd_run(args) -> int:
    logging.basicConfig(
        level=LOG_LEVELS[args.log_level],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    doc = _load_flow(args.flow)
    if doc is None:
        return EXIT_INVALID_FLOW
    report = flow_model.validate_flow(doc, standard_registry())
    if not report.ok:
        print(report.summary(), file=sys.stderr)
        return EXIT_INVALID_FLOW
    config = ServerConfig(
        bind_address=args.bind,
        flow_path=args.flow,
        strict_templates=args.strict_templates,
        log_level=args.log_level,
    )
    server = FlowfillServer(config)
    server.engine.deploy(doc)
    try:
        server.serve_forever()
    except OSError as exc:
        print(f"cannot bind {args.bind}: {exc}", file=sys.stderr)
        return EXIT_BIND_FAILURE
    return EXIT_OK


def cmd_check(args) -> int:
    doc = _load_flow(args.flow)
    if doc is None:
        return EXIT_INVALID_FLOW
    report = flow_model.validate_flow(doc, standard_registry())
    if args.json:
        print(jsontree.dumps(report.to_tree(), indent=2))
    else:
        print(report.summary())
    return EXIT_OK if report.ok else EXIT_INVALID_FLOW


def cmd_send(args) -> int:
    slots = {}
    for item in args.slot:
        name, sep, value = item.partition("=")
        if not sep or not name:
            print(f"bad --slot (want NAME=VALUE): {item!r}", file=sys.stderr)
            return EXIT_TRANSPORT
        slots[name] = None if value == "null" else value
    request = {
        "next_action": args.action,
        "sender_id": "cli",
        "tracker": {"slots": slots},
    }
    try:
        resp = requests.post(
            args.url,
            data=jsontree.dump_bytes(request),
            headers={"Content-Type": "application/json"},
            timeout=30,
        )
    except requests.RequestException as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    try:
        print(jsontree.dumps(jsontree.loads(resp.content), indent=2))
    except jsontree.MalformedJSON:
        print(resp.content.decode("utf-8", errors="replace"))
    if resp.status_code >= 500:
        return EXIT_HTTP_5XX
    if resp.status_code >= 400:
        return EXIT_HTTP_4XX
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
