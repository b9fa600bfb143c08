"""Synthetic retrieval benchmark with planted paraphrases and distractors.

Construction, all seeded and deterministic:
  * `n_entities` answer entities, each with a unique mention token and a
    unique answer string.
  * For each entity, one indexed question per indexed-phrasing template
    (template filler words are shared across entities).
  * Train/val/test questions mention an entity with query templates that
    never occur in the index; each query template contributes two filler
    words.
  * Distractor pairs carry exactly the filler-word pair of one query
    template plus a unique token, and a wrong answer. A query therefore
    matches its distractors on two medium-rarity terms but its true
    paraphrases on a single rarer term, so term-overlap retrieval ranks
    distractors first while the true paraphrases stay inside a moderate
    top-k. The re-ranker has to learn that entity mentions, not filler
    words, carry the signal.

Train questions use query templates 0-1, validation 2-3, test 4-5, so
validation and test phrasings are never seen during training.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Tuple

from .corpus import EvalQuestion, QAPair

_INDEX_TEMPLATES = [
    "which {w0} describes entity {ent} overall",
    "name {w0} {w1} connected with entity {ent}",
    "entity {ent} relates to {w0} in what way",
    "give {w0} details regarding entity {ent} now",
    "how does entity {ent} involve {w0} {w1}",
    "entity {ent} stands for {w0} according to records",
    "records {w1} mention entity {ent} under {w0}",
    "summarize {w1} facts about entity {ent} briefly",
]

# (filler-word pair) per query template; fillers are template-unique.
_QUERY_TEMPLATES = [
    ("lorem", "ipsum"),
    ("dolor", "amet"),
    ("consectetur", "adipiscing"),
    ("elit", "sed"),
    ("tempor", "incididunt"),
    ("labore", "dolore"),
]

_TEMPLATE_WORDS = [
    "aspect",
    "context",
    "history",
    "origin",
    "scope",
    "status",
    "theme",
    "usage",
]


@dataclass
class SynthBenchmark:
    corpus: List[QAPair]
    train: List[EvalQuestion]
    val: List[EvalQuestion]
    test: List[EvalQuestion]


def _entity_token(i: int) -> str:
    return f"ent{i:04d}x"


def _query_text(template_idx: int, entity_idx: int) -> str:
    # No shared filler with the indexed phrasings: the entity mention is the
    # only lexical link between a query and its planted paraphrases.
    w0, w1 = _QUERY_TEMPLATES[template_idx]
    return f"{w0} {w1} {_entity_token(entity_idx)}"


def generate_benchmark(
    n_entities: int = 600,
    paraphrases_per_entity: int = 8,
    distractors_per_template: int = 30,
    n_train: int = 500,
    n_val: int = 200,
    n_test: int = 200,
    seed: int = 0,
) -> SynthBenchmark:
    if paraphrases_per_entity > len(_INDEX_TEMPLATES):
        raise ValueError("not enough indexed-phrasing templates")
    if n_train > n_entities:
        raise ValueError("need at least one entity per train question")
    rng = random.Random(seed)

    corpus: List[QAPair] = []

    def add_pair(question: str, answer: str, source: str) -> None:
        corpus.append(QAPair(id=len(corpus), question=question, answer=answer, source=source))

    for i in range(n_entities):
        ent = _entity_token(i)
        answer = f"answer{i:04d}"
        for t in range(paraphrases_per_entity):
            w0 = _TEMPLATE_WORDS[(i + t) % len(_TEMPLATE_WORDS)]
            w1 = _TEMPLATE_WORDS[(i + 3 * t + 1) % len(_TEMPLATE_WORDS)]
            question = _INDEX_TEMPLATES[t].format(ent=ent, w0=w0, w1=w1)
            add_pair(question, answer, "paraphrase")

    for t, (w0, w1) in enumerate(_QUERY_TEMPLATES):
        for j in range(distractors_per_template):
            question = f"{w0} {w1} filler{t}{j:03d}"
            add_pair(question, f"offtopic{t}{j:03d}", "distractor")

    # Train covers a fixed entity subset; val/test reuse entities from it so
    # every evaluated entity mention was trainable.
    train_entities = list(range(n_train))

    def eval_questions(count: int, templates: Tuple[int, int], id_base: int) -> List[EvalQuestion]:
        questions = []
        for i in range(count):
            ent_idx = train_entities[rng.randrange(len(train_entities))]
            template_idx = templates[i % 2]
            questions.append(
                EvalQuestion(
                    id=len(questions),
                    question=_query_text(template_idx, ent_idx),
                    gold_answers=[f"answer{ent_idx:04d}"],
                )
            )
        return questions

    train = [
        EvalQuestion(
            id=i,
            question=_query_text(i % 2, train_entities[i]),
            gold_answers=[f"answer{train_entities[i]:04d}"],
        )
        for i in range(n_train)
    ]
    val = eval_questions(n_val, (2, 3), 0)
    test = eval_questions(n_test, (4, 5), 0)
    return SynthBenchmark(corpus=corpus, train=train, val=val, test=test)
