"""A tiny external scorer speaking the line-JSON wire protocol, run as
`python -m abnirml.mock_scorer`. It exists so the external-scorer plumbing
can be exercised hermetically: its fault flags simulate the protocol
violations the harness must detect.

Scoring modes:
  token-count  score = number of whitespace-separated tokens in d (default)
  char-count   score = len(d)
  constant     score = --constant value
  hash         deterministic pseudo-score from sha256(q, d), in [0, 1)
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

PROTOCOL_VERSION = "abnirml-scorer/1"


def compute_score(mode: str, constant: float, q: str, d: str) -> float:
    if mode == "token-count":
        return float(len(d.split()))
    if mode == "char-count":
        return float(len(d))
    if mode == "constant":
        return constant
    if mode == "hash":
        digest = hashlib.sha256(f"{q}\x1f{d}".encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") / 2 ** 64
    raise ValueError(f"unknown mode {mode!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="abnirml-mock-scorer", description=__doc__)
    parser.add_argument("--name", default="mock")
    parser.add_argument("--mode", default="token-count",
                        choices=["token-count", "char-count", "constant", "hash"])
    parser.add_argument("--constant", type=float, default=0.0)
    parser.add_argument("--delay-ms", type=float, default=0.0,
                        help="sleep before each response")
    parser.add_argument("--reverse-within", type=int, default=1, metavar="N",
                        help="buffer N requests and answer them in reverse")
    parser.add_argument("--bad-handshake", action="store_true",
                        help="announce a wrong protocol version")
    parser.add_argument("--skip-id", default=None, metavar="ID",
                        help="never respond to this request id")
    parser.add_argument("--error-id", default=None, metavar="ID",
                        help="respond with an error object for this request id")
    parser.add_argument("--malformed-at", type=int, default=0, metavar="K",
                        help="emit a non-JSON line in place of the Kth response (1-based)")
    parser.add_argument("--wrong-id-at", type=int, default=0, metavar="K",
                        help="respond to the Kth request with a bogus id")
    parser.add_argument("--quit-after", type=int, default=0, metavar="K",
                        help="exit after reading K requests")
    args = parser.parse_args(argv)

    out = sys.stdout
    protocol = "bogus/0" if args.bad_handshake else PROTOCOL_VERSION
    out.write(json.dumps({"protocol": protocol, "name": args.name}) + "\n")
    out.flush()

    sent = 0
    buffered = []

    def respond(req):
        nonlocal sent
        rid = req.get("id")
        if args.skip_id is not None and rid == args.skip_id:
            return
        if args.delay_ms:
            time.sleep(args.delay_ms / 1000.0)
        sent += 1
        if args.malformed_at and sent == args.malformed_at:
            out.write("this is not json\n")
            out.flush()
            return
        if args.error_id is not None and rid == args.error_id:
            out.write(json.dumps({"id": rid, "error": "simulated failure"}) + "\n")
            out.flush()
            return
        if args.wrong_id_at and sent == args.wrong_id_at:
            rid = f"bogus-{rid}"
        score = compute_score(args.mode, args.constant, req.get("q", ""), req.get("d", ""))
        out.write(json.dumps({"id": rid, "score": score}) + "\n")
        out.flush()

    def flush_buffer():
        for req in reversed(buffered):
            respond(req)
        buffered.clear()

    received = 0
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        received += 1
        try:
            req = json.loads(line)
        except json.JSONDecodeError:
            out.write(json.dumps({"id": None, "error": "unparseable request"}) + "\n")
            out.flush()
            continue
        if args.reverse_within > 1:
            buffered.append(req)
            if len(buffered) >= args.reverse_within:
                flush_buffer()
        else:
            respond(req)
        if args.quit_after and received >= args.quit_after:
            break
    flush_buffer()
    return 0


if __name__ == "__main__":
    sys.exit(main())
