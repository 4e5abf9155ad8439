"""Match generated senses against gold senses by cosine similarity.

Every join key yields one AlignmentRecord: the cosine of the generated
definition against each gold sense, the best-matching gold sense index
(ties break toward the lowest index, mirroring frequency-first gold
ordering) and the mean over all gold senses.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .embedding import cosine_similarity
from .exceptions import KeyMismatchError, ParseError
from .model import Dictionary, DictionaryEntry, PosCategory, Sense

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlignmentRecord:
    lemma: str
    category: PosCategory
    gen_sense_count: int
    gold_sense_count: int
    best_gold_index: int  # 1-based
    best_score: float
    mean_over_gold: float
    per_gold_scores: tuple[float, ...]

    def __post_init__(self):
        if len(self.per_gold_scores) != self.gold_sense_count or self.gold_sense_count < 1:
            raise ValueError(
                f"{self.lemma!r}: expected {self.gold_sense_count} scores, got {len(self.per_gold_scores)}"
            )
        if not 1 <= self.best_gold_index <= self.gold_sense_count:
            raise ValueError(f"{self.lemma!r}: best_gold_index {self.best_gold_index} out of range")
        if self.best_score != max(self.per_gold_scores):
            raise ValueError(f"{self.lemma!r}: best_score is not the maximum per-gold score")
        if self.mean_over_gold != sum(self.per_gold_scores) / len(self.per_gold_scores):
            raise ValueError(f"{self.lemma!r}: mean_over_gold does not match per-gold scores")


def sense_text(sense: Sense, include_examples: bool = False) -> str:
    if include_examples and sense.example:
        return f"{sense.definition} {sense.example}"
    return sense.definition


def _record_from_scores(gen: DictionaryEntry, gold: DictionaryEntry, scores: list[float]) -> AlignmentRecord:
    best_index = 0
    for i, score in enumerate(scores):
        if score > scores[best_index]:
            best_index = i
    return AlignmentRecord(
        lemma=gen.lemma,
        category=gen.pos.category,
        gen_sense_count=len(gen.senses),
        gold_sense_count=len(gold.senses),
        best_gold_index=best_index + 1,
        best_score=scores[best_index],
        mean_over_gold=sum(scores) / len(scores),
        per_gold_scores=tuple(scores),
    )


def align_entry(gen: DictionaryEntry, gold: DictionaryEntry, embedder, include_examples: bool = False) -> AlignmentRecord:
    """Score generated sense 1 against every gold sense, in gold order.

    Polysemous generated entries are aligned by their first sense; the
    full cross-product lives in :func:`all_pairs_scores`.
    """
    if gen.key != gold.key:
        raise KeyMismatchError(f"cannot align {gen.key!r} against {gold.key!r}")
    gen_vector = embedder.embed(sense_text(gen.senses[0], include_examples))
    scores = [
        cosine_similarity(gen_vector, embedder.embed(sense_text(s, include_examples))) for s in gold.senses
    ]
    return _record_from_scores(gen, gold, scores)


def align_dictionaries(
    generated: Dictionary,
    gold: Dictionary,
    embedder,
    keys: Sequence[tuple[str, PosCategory]],
    include_examples: bool = False,
) -> tuple[list[AlignmentRecord], int]:
    """One record per join key in sorted order, plus a skipped-key count.

    All distinct sense texts are embedded once through ``embed_batch`` so
    remote embedders see as few calls as possible; the per-record score
    loop then only does dot products.
    """
    ordered = sorted(keys, key=lambda k: (k[0], k[1].value))
    pairs: list[tuple[DictionaryEntry, DictionaryEntry]] = []
    skipped = 0
    for lemma, category in ordered:
        gen = generated.get(lemma, category)
        gold_entry = gold.get(lemma, category)
        if gen is None or gold_entry is None:
            logger.warning("join key (%s, %s) missing from %s side; skipped",
                           lemma, category.value, "generated" if gen is None else "gold")
            skipped += 1
            continue
        pairs.append((gen, gold_entry))

    texts: list[str] = []
    seen: set[str] = set()
    for gen, gold_entry in pairs:
        for text in [sense_text(gen.senses[0], include_examples)] + [
            sense_text(s, include_examples) for s in gold_entry.senses
        ]:
            if text not in seen:
                seen.add(text)
                texts.append(text)
    texts.sort()
    vectors = dict(zip(texts, embedder.embed_batch(texts)))

    records = []
    for gen, gold_entry in pairs:
        gen_vector = vectors[sense_text(gen.senses[0], include_examples)]
        scores = [
            cosine_similarity(gen_vector, vectors[sense_text(s, include_examples)]) for s in gold_entry.senses
        ]
        records.append(_record_from_scores(gen, gold_entry, scores))
    return records, skipped


def all_pairs_scores(
    gen: DictionaryEntry, gold: DictionaryEntry, embedder, include_examples: bool = False
) -> list[list[float]]:
    """Cosine matrix rows = generated senses, columns = gold senses.

    Inspection aid for polysemous generated entries; no table depends on it.
    """
    if gen.key != gold.key:
        raise KeyMismatchError(f"cannot align {gen.key!r} against {gold.key!r}")
    gen_vectors = [embedder.embed(sense_text(s, include_examples)) for s in gen.senses]
    gold_vectors = [embedder.embed(sense_text(s, include_examples)) for s in gold.senses]
    return [[cosine_similarity(gv, hv) for hv in gold_vectors] for gv in gen_vectors]


def rank_histogram(records: Iterable[AlignmentRecord]) -> dict[int, int]:
    """Count of best-matching gold sense indices over gold-polysemous records."""
    counts: dict[int, int] = {}
    for record in records:
        if record.gold_sense_count > 1:
            counts[record.best_gold_index] = counts.get(record.best_gold_index, 0) + 1
    return dict(sorted(counts.items()))


def write_alignments(records: Iterable[AlignmentRecord], stream: IO[str]) -> int:
    written = 0
    for r in records:
        obj = {
            "lemma": r.lemma,
            "category": r.category.value,
            "gen_sense_count": r.gen_sense_count,
            "gold_sense_count": r.gold_sense_count,
            "best_gold_index": r.best_gold_index,
            "best_score": r.best_score,
            "mean_over_gold": r.mean_over_gold,
            "per_gold_scores": list(r.per_gold_scores),
        }
        line = json.dumps(obj, ensure_ascii=False) + "\n"
        stream.write(line)
        written += len(line.encode("utf-8"))
    return written


def parse_alignments(stream: Iterable[str]) -> list[AlignmentRecord]:
    records = []
    for number, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            records.append(
                AlignmentRecord(
                    lemma=obj["lemma"],
                    category=PosCategory(obj["category"]),
                    gen_sense_count=int(obj["gen_sense_count"]),
                    gold_sense_count=int(obj["gold_sense_count"]),
                    best_gold_index=int(obj["best_gold_index"]),
                    best_score=float(obj["best_score"]),
                    mean_over_gold=float(obj["mean_over_gold"]),
                    per_gold_scores=tuple(float(x) for x in obj["per_gold_scores"]),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"invalid alignment record: {exc}", line_number=number) from exc
    return records
