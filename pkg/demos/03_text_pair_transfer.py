"""Builds a test set from pre-paired texts rather than from judged corpora:
each record carries two renderings of the same content (here: a disfluent
draft and its cleaned-up revision), a shared noun phrase becomes the query,
and the summary score says which side a scorer prefers.

The scorer is a deliberately crude length ratio so the demo stays
self-contained; swap in Bm25Scorer or an external process for real use.
Run as:

    python demos/03_text_pair_transfer.py
"""

from abnirml.dtt import TextPairRecord, build_fluency
from abnirml.pairtest import evaluate, summary_score
from abnirml.scorers import CallableScorer
from abnirml.stats_report import render_report, summarize_test

RECORDS = [
    TextPairRecord("r1",
                   "the water filter it is leaking again leaking",
                   "The water filter is leaking again.", spellchecked=True),
    TextPairRecord("r2",
                   "bird feeder squirrels keep keep raiding the bird feeder",
                   "Squirrels keep raiding the bird feeder.", spellchecked=True),
    TextPairRecord("r3",
                   "my garden soil too dry for the garden soil",
                   "My garden soil is too dry.", spellchecked=False),
    TextPairRecord("r4",
                   "the tomato plants they wilted the tomato plants wilted",
                   "The tomato plants wilted overnight.", spellchecked=True),
]

test = build_fluency(RECORDS, seed=3)
print(f"built {test.id}: {len(test.samples)} samples "
      f"(provenance {test.provenance})")
for s in test.samples:
    print(f"  query {s.query.text!r}: draft vs revision")

# shorter documents score higher: a stand-in for any real ranker
scorer = CallableScorer(lambda q, d: 1.0 / (1 + len(d)), "terseness")
records = evaluate(test, scorer, delta=0.0)
s = summary_score(r.effect for r in records)
print(f"\nsummary score {s:+.2f} "
      "(negative: the cleaned-up side wins, positive: the draft wins)")

print("\n" + render_report([summarize_test(test, records)], "markdown"))
