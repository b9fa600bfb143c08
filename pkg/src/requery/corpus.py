"""Loading and validation of the indexed QA-pair corpus and eval sets.

Both file formats are JSONL, one record per line:
  QA corpus: {"question": str, "answer": str, "source"?: str}
  Eval set:  {"question": str, "answers": [str, ...]}

Ids are assigned by load order starting at 0, so loaded collections are
dense and can be addressed by row index elsewhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Union

class CorpusError(ValueError):
    """Raised for malformed or invalid corpus / eval-set files."""


@dataclass(frozen=True)
class QAPair:
    id: int
    question: str
    answer: str
    source: str = ""


@dataclass(frozen=True)
class EvalQuestion:
    id: int
    question: str
    gold_answers: List[str] = field(default_factory=list)


def _iter_jsonl(path: Union[str, Path]):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise CorpusError(f"line {lineno}: expected a JSON object")
            yield lineno, record


def load_qa_corpus(path: Union[str, Path]) -> List[QAPair]:
    """Load a QA-pair corpus, assigning dense ids in line order."""
    pairs: List[QAPair] = []
    for lineno, record in _iter_jsonl(path):
        for key in ("question", "answer"):
            if key not in record:
                raise CorpusError(f"line {lineno}: missing field {key}")
        question = record["question"]
        if not isinstance(question, str) or not question.strip():
            raise CorpusError(f"line {lineno}: empty question")
        answer = record["answer"]
        if not isinstance(answer, str):
            raise CorpusError(f"line {lineno}: answer must be a string")
        source = record.get("source", "")
        pairs.append(QAPair(id=len(pairs), question=question, answer=answer, source=source))
    return pairs


def load_eval_set(path: Union[str, Path]) -> List[EvalQuestion]:
    """Load an eval set, assigning dense ids in line order."""
    questions: List[EvalQuestion] = []
    for lineno, record in _iter_jsonl(path):
        for key in ("question", "answers"):
            if key not in record:
                raise CorpusError(f"line {lineno}: missing field {key}")
        question = record["question"]
        if not isinstance(question, str) or not question.strip():
            raise CorpusError(f"line {lineno}: empty question")
        answers = record["answers"]
        if not isinstance(answers, list) or not answers:
            raise CorpusError(f"line {lineno}: answers must be a non-empty list")
        for ans in answers:
            if not isinstance(ans, str) or not ans.strip():
                raise CorpusError(f"line {lineno}: answers must be non-empty strings")
        questions.append(
            EvalQuestion(id=len(questions), question=question, gold_answers=list(answers))
        )
    return questions


def save_qa_corpus(pairs: List[QAPair], path: Union[str, Path]) -> None:
    """Write pairs back out as JSONL (ids are implicit in line order)."""
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            record = {"question": pair.question, "answer": pair.answer}
            if pair.source:
                record["source"] = pair.source
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def save_eval_set(questions: List[EvalQuestion], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for q in questions:
            fh.write(
                json.dumps(
                    {"question": q.question, "answers": q.gold_answers},
                    ensure_ascii=False,
                )
                + "\n"
            )
