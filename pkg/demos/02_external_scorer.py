"""Shows the external-scorer wire protocol from three angles:

  1. the conformance driver checking a scorer command line,
  2. ExternalScorer talking to that command, including out-of-order
     responses (the mock is told to buffer requests and answer in reverse),
  3. CachedScorer making repeat scoring free across runs.

The scorer here is the built-in mock (`python -m abnirml.mock_scorer`),
which any real adapter can be swapped in for. Run as:

    python demos/02_external_scorer.py
"""

import sys
import tempfile

from abnirml.conformance import run_checks
from abnirml.scorers import CachedScorer, ExternalScorer

MOCK = f"{sys.executable} -m abnirml.mock_scorer --mode hash"

print("conformance checks against", MOCK)
for result in run_checks(MOCK, requests=32):
    print(f"  {'ok  ' if result.passed else 'FAIL'} {result.name}: {result.detail}")

pairs = [("indoor plants", f"doc {i}: leaves and light") for i in range(8)]

print("\nscoring through the wire, responses arriving in reverse batches:")
with ExternalScorer(MOCK + " --reverse-within 4", window=8) as scorer:
    print("  handshake announced:", scorer.name)
    for (q, d), s in zip(pairs, scorer.score_batch(pairs)):
        print(f"  {d[:12]!r} -> {s:.6f}")

print("\ncaching: the child process is only asked once per distinct pair")
with tempfile.TemporaryDirectory() as tmp:
    for attempt in (1, 2):
        with CachedScorer(ExternalScorer(MOCK), tmp) as cached:
            cached.score_batch(pairs * 3)
        print(f"  run {attempt}: scored {len(pairs) * 3} requests "
              f"({len(pairs)} distinct) against cache at {cached.path}")
