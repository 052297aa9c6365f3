"""Hand-tallied scoring fixture shared by the metric and acceptance tests.

Five sentences exercising every report field: clean hits, a wrong entity
type on a correct span, a wrong relation type on a correct anchor pair (once
with and once without correctly predicted endpoint entities), a sentence
without gold relations that still draws a spurious relation prediction, and
outright misses on both tasks.  Every expected number below was tallied by
hand from the gold/prediction listings.
"""

from fractions import Fraction

from darter.corpus import Entity, LabelSchema, MatchMode, Relation, Sentence
from darter.decoders import PredictionSet

PER, ORG, LOC = 0, 1, 2
WORKS, NEAR = 0, 1


def _sent(tokens, entities, relations):
    return Sentence(tuple(tokens), tuple(Entity(*e) for e in entities),
                    tuple(Relation(*r) for r in relations), MatchMode.EXACT)


def adversarial_fixture():
    schema = LabelSchema(("per", "org", "loc"), ("works", "near"))
    sentences = [
        # everything correct: 3 entities, 2 relations
        _sent(["ann", "runs", "acme", "in", "oslo"],
              [(0, 0, "per"), (2, 2, "org"), (4, 4, "loc")],
              [(0, 1, "works"), (1, 2, "near")]),
        # span right / type wrong entity; pair right / type wrong relation
        # whose object entity is mistyped (no joint credit)
        _sent(["bo", "joined", "dex", "corp", "now"],
              [(0, 0, "per"), (2, 3, "org")],
              [(0, 1, "works")]),
        # pair right / type wrong relation with both endpoints correct
        _sent(["cat", "sat", "by", "fay"],
              [(0, 0, "per"), (3, 3, "per")],
              [(0, 1, "near")]),
        # no gold relations (OOT) but a spurious predicted one; one gold
        # span never predicted, one spurious span
        _sent(["old", "mill", "town"],
              [(0, 1, "loc"), (2, 2, "loc")],
              []),
        # mostly missed: two unpredicted gold spans, two unpredicted triples
        _sent(["zed", "met", "ula", "at", "rix", "inc"],
              [(0, 0, "per"), (2, 2, "per"), (4, 5, "org")],
              [(0, 1, "near"), (1, 2, "works")]),
    ]
    predictions = [
        PredictionSet(frozenset({(0, 0, PER), (2, 2, ORG), (4, 4, LOC)}),
                      frozenset({(0, 2, WORKS), (2, 4, NEAR)})),
        PredictionSet(frozenset({(0, 0, PER), (2, 3, LOC)}),
                      frozenset({(0, 2, NEAR)})),
        PredictionSet(frozenset({(0, 0, PER), (3, 3, PER)}),
                      frozenset({(0, 3, WORKS)})),
        PredictionSet(frozenset({(2, 2, LOC), (0, 2, ORG)}),
                      frozenset({(0, 2, WORKS)})),
        PredictionSet(frozenset({(0, 0, PER)}), frozenset()),
    ]
    expected = {
        "ner_micro": (8, 2, 4),
        "re_micro": (2, 3, 4),
        "ner_f1": Fraction(8, 11),
        "re_f1": Fraction(4, 11),
        "ner_per_type_f1": {"per": Fraction(10, 11), "org": Fraction(2, 5),
                            "loc": Fraction(2, 3)},
        "re_per_type_f1": {"works": Fraction(1, 3), "near": Fraction(2, 5)},
        "oot_sentences": 1,
        "it_sentences": 4,
        "oot_ner": (1, 1, 1),
        "oot_re": (0, 1, 0),
        "it_ner": (7, 1, 3),
        "it_re": (2, 2, 4),
        "taxonomy": {"ET": 8, "EN": 1, "ET_NP": 3, "SOR": 2, "SON": 2,
                     "SOR_NP": 2, "ETSOR": 2, "ETSON": 1},
    }
    return schema, sentences, predictions, expected
