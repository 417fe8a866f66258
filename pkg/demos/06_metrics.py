"""
Metrics harness
===============

Run the bundled 50-instruction corpus through isolated sessions and
report ER@1 (executed/proposed) and SR@1 (correct/executed).
"""

from cityforge import Engine, bundled_data, er_at_1, run_corpus, sr_at_1
from cityforge.metrics import format_rates, load_corpus

engine = Engine(seed=0)
base, _ = engine.create_scene(osm=bundled_data("sample.osm"))

corpus = load_corpus(bundled_data("corpus.txt").decode())
print("corpus:", len(corpus), "instructions; first three:")
for text in corpus[:3]:
    print("  ", text)

log = run_corpus(corpus, base, seed=0)
print("\n" + format_rates(log))

imperfect = [r for r in log.records if r.correct < r.executed or r.executed < r.proposed]
for r in imperfect:
    print(f"  strict case: {r.instruction!r} proposed={r.proposed} "
          f"executed={r.executed} correct={r.correct}")

print("\ntotals:", log.totals(), " ER", round(er_at_1(log), 4), " SR", round(sr_at_1(log), 4))
