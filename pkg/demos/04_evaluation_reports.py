"""What the scorer counts: micro and macro F1, splits, and error kinds.

Predictions are triple sets: entities as (start, end, type id), relation
cells as (subject anchor, object anchor, type id). We score a tiny corpus
against hand-made predictions with deliberate mistakes and read the report.
"""

import json

from darter.corpus import (Entity, LabelSchema, MatchMode, Relation,
                           Sentence)
from darter.decoders import PredictionSet
from darter.evaluation import evaluate_corpus

schema = LabelSchema(entity_types=("per", "org"),
                     relation_types=("works", "rival"))
PER, ORG = 0, 1
WORKS, RIVAL = 0, 1


def sent(tokens, entities, relations=()):
    return Sentence(tuple(tokens), tuple(Entity(*e) for e in entities),
                    tuple(Relation(*r) for r in relations), MatchMode.EXACT)


corpus = [
    # everything right
    sent(["ann", "runs", "acme"], [(0, 0, "per"), (2, 2, "org")],
         [(0, 1, "works")]),
    # entity start wrong but final token right; relation endpoints right
    # but the type wrong
    sent(["bo", "joined", "rex", "corp"], [(0, 0, "per"), (2, 3, "org")],
         [(0, 1, "works")]),
    # entity span right, type wrong; no gold relations at all
    sent(["ada", "met", "acme"], [(0, 0, "per"), (2, 2, "org")]),
]

predictions = [
    PredictionSet(entities=frozenset({(0, 0, PER), (2, 2, ORG)}),
                  relations=frozenset({(0, 2, WORKS)})),
    PredictionSet(entities=frozenset({(0, 0, PER), (3, 3, ORG)}),
                  relations=frozenset({(0, 2, RIVAL)})),
    PredictionSet(entities=frozenset({(0, 0, PER), (2, 2, PER)}),
                  relations=frozenset()),
]

report = evaluate_corpus(corpus, predictions, schema, MatchMode.EXACT)
print(json.dumps(report, indent=2))

# Reading it back:
#   ner.micro        pools true/false positives over the whole corpus
#   ner.macro_f1     averages per-type F1, so rare types weigh equally
#   oot / it         split sentences without/with gold relations
#   error_taxonomy   classifies each prediction and miss:
#     ET      predicted entity fully correct
#     EN      predicted span exists in gold but the triple is wrong
#     ET_NP   gold entity whose span was never predicted
#     SOR     predicted relation cell fully correct
#     SON     endpoint pair of some gold relation, but the wrong type
#     SOR_NP  gold relation whose endpoint pair was never predicted
#     ETSOR   correct relation whose two entities were also both predicted
#     ETSON   near-miss relation whose two entities were both predicted
print("\nskim:")
print("  entity micro F1 ", report["ner"]["micro"]["f1"])
print("  entity macro F1 ", report["ner"]["macro_f1"])
print("  relation micro F1", report["re"]["micro"]["f1"])
print("  taxonomy        ", report["error_taxonomy"])

# Scoring the same predictions in tail mode projects every span onto its
# final token before comparing. That forgives the wrong start of the
# (3, 3) prediction against the (2, 3) gold span, but the wrong type on
# sentence three stays wrong.
tail = evaluate_corpus(corpus, predictions, schema, MatchMode.TAIL)
print("\nentity micro F1 rescored in tail mode:",
      round(tail["ner"]["micro"]["f1"], 3),
      "(exact was", str(round(report["ner"]["micro"]["f1"], 3)) + ")")
