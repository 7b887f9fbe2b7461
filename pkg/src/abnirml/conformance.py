"""Conformance checks for external scorer processes.

The harness talks to scorers over a line-JSON protocol: the child announces
itself before reading anything, then answers each {"id", "q", "d"} request
with exactly one {"id", "score"} line, in whatever order it likes.
`run_checks` drives a scorer command through the behaviors the harness
relies on and reports one result per check:

  handshake_first             the child speaks first and announces the
                              expected protocol version
  id_bijection                every request id is answered exactly once,
                              scores are numeric, nothing extra is emitted
  malformed_request_recovery  a garbage input line yields {"id": null,
                              "error": ...} and the child keeps serving
  deterministic_rescoring     identical inputs give identical scores, both
                              within one process and across a restart

Also runnable as a command, exiting 0 only when every check passes:

    python -m abnirml.conformance "<scorer command>"
"""

from __future__ import annotations

import argparse
import json
import shlex
import subprocess
import sys
from dataclasses import dataclass

from .errors import ScorerProtocolError, ScorerTimeoutError, ValidationError
from .scorers import PROTOCOL_VERSION, _LineTransport

CHECK_NAMES = ("handshake_first", "id_bijection", "malformed_request_recovery",
               "deterministic_rescoring")

# how long to listen for stray lines after a fully answered round
_SILENCE_S = 0.08


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


class _Session:
    """One scorer child process plus its line transport."""

    def __init__(self, target: str, timeout: float):
        self.timeout = timeout
        self.proc = subprocess.Popen(
            shlex.split(target), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, encoding="utf-8", bufsize=1)
        self.transport = _LineTransport(self.proc.stdout, self.proc.stdin,
                                        f"scorer process {target!r}")

    def recv_obj(self) -> dict:
        line = self.transport.recv(self.timeout)
        if line is None:
            raise ScorerProtocolError("closed the stream mid-check")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            raise ScorerProtocolError(f"non-JSON line {line.strip()!r}") from None
        if not isinstance(obj, dict):
            raise ScorerProtocolError(f"non-object line {line.strip()!r}")
        return obj

    def assert_silent(self) -> None:
        try:
            line = self.transport.recv(_SILENCE_S)
        except ScorerTimeoutError:
            return
        if line is None:
            raise ScorerProtocolError("closed the stream early")
        raise ScorerProtocolError(f"unsolicited line {line.strip()!r}")

    def handshake(self) -> str:
        # called before anything is sent, so a child that waits for input
        # times out here
        obj = self.recv_obj()
        if obj.get("protocol") != PROTOCOL_VERSION:
            raise ScorerProtocolError(
                f"expected protocol {PROTOCOL_VERSION!r}, "
                f"got {obj.get('protocol')!r}")
        return str(obj.get("name", "unnamed"))

    def score_round(self, prefix: str, pairs) -> list[float]:
        """Sends every pair, then collects responses in arrival order.
        Raises on unknown ids, duplicates, error responses, non-numeric
        scores, and stray lines after the round is complete."""
        ids = {f"{prefix}{i}" for i in range(len(pairs))}
        for i, (q, d) in enumerate(pairs):
            self.transport.send(json.dumps(
                {"id": f"{prefix}{i}", "q": q, "d": d}, ensure_ascii=False))
        scores: dict[str, float] = {}
        while len(scores) < len(pairs):
            obj = self.recv_obj()
            rid = obj.get("id")
            if rid not in ids:
                raise ScorerProtocolError(f"response id {rid!r} was never requested")
            if rid in scores:
                raise ScorerProtocolError(f"response id {rid!r} answered twice")
            if "error" in obj:
                raise ScorerProtocolError(
                    f"error reported for {rid!r}: {obj['error']}")
            score = obj.get("score")
            if not isinstance(score, (int, float)) or isinstance(score, bool):
                raise ScorerProtocolError(
                    f"non-numeric score for {rid!r}: {score!r}")
            scores[rid] = float(score)
        self.assert_silent()
        return [scores[f"{prefix}{i}"] for i in range(len(pairs))]

    def close(self) -> None:
        self.transport.close_writer()
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()


def run_checks(target: str, requests: int = 200,
               timeout: float = 10.0) -> list[CheckResult]:
    """Runs every conformance check against `target` (a scorer command
    line) and returns one CheckResult per name in CHECK_NAMES. A failed
    prerequisite marks the remaining checks as not run."""
    if requests < 1:
        raise ValidationError(f"requests must be >= 1, got {requests}")
    pairs = [(f"query {i} alpha", f"document {i} body " + "pad " * (i % 5))
             for i in range(requests)]
    results: list[CheckResult] = []

    def abort(failure: CheckResult) -> list[CheckResult]:
        results.append(failure)
        done = {r.name for r in results}
        results.extend(CheckResult(n, False, f"not run: {failure.name} failed")
                       for n in CHECK_NAMES if n not in done)
        return results

    session = _Session(target, timeout)
    try:
        try:
            name = session.handshake()
        except (ScorerProtocolError, ScorerTimeoutError) as e:
            return abort(CheckResult("handshake_first", False, str(e)))
        results.append(CheckResult("handshake_first", True, f"announced {name!r}"))

        try:
            first = session.score_round("b", pairs)
        except (ScorerProtocolError, ScorerTimeoutError) as e:
            return abort(CheckResult("id_bijection", False, str(e)))
        results.append(CheckResult(
            "id_bijection", True, f"{requests} requests answered exactly once"))

        try:
            session.transport.send("this line is not json")
            err = session.recv_obj()
            session.score_round("m", pairs[:1])
            if err.get("id") is None and "error" in err:
                results.append(CheckResult(
                    "malformed_request_recovery", True,
                    "error reported, next request still served"))
            else:
                results.append(CheckResult(
                    "malformed_request_recovery", False,
                    f"expected an id-null error response, got {err!r}"))
        except (ScorerProtocolError, ScorerTimeoutError) as e:
            results.append(CheckResult("malformed_request_recovery", False, str(e)))

        try:
            second = session.score_round("d", pairs)
            fresh = _Session(target, timeout)
            try:
                fresh.handshake()
                third = fresh.score_round("e", pairs[:min(64, requests)])
            finally:
                fresh.close()
            if first == second and first[:len(third)] == third:
                results.append(CheckResult(
                    "deterministic_rescoring", True,
                    f"{requests} pairs rescored identically, "
                    f"{len(third)} across a restart"))
            else:
                bad = next(i for i in range(len(first))
                           if first[i] != second[i]
                           or (i < len(third) and first[i] != third[i]))
                results.append(CheckResult(
                    "deterministic_rescoring", False,
                    f"scores diverged at pair {bad}"))
        except (ScorerProtocolError, ScorerTimeoutError) as e:
            results.append(CheckResult("deterministic_rescoring", False, str(e)))
    finally:
        session.close()
    return results


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="abnirml-conformance",
        description="Check an external scorer command against the wire protocol.")
    parser.add_argument("target", help="scorer command line to spawn")
    parser.add_argument("--requests", type=int, default=200,
                        help="pairs per scoring round (default 200)")
    parser.add_argument("--timeout", type=float, default=10.0,
                        help="seconds to wait for any single line (default 10)")
    args = parser.parse_args(argv)
    results = run_checks(args.target, requests=args.requests, timeout=args.timeout)
    for r in results:
        status = "ok  " if r.passed else "FAIL"
        print(f"{status} {r.name}" + (f": {r.detail}" if r.detail else ""))
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
