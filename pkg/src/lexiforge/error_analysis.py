"""Automated error taxonomy for a generated dictionary.

Flags low-similarity alignment records as hallucination candidates and
classifies entries with implementable heuristics: circular definitions,
common nouns defined as proper nouns, fabricated polysemy (near-duplicate
senses) and over-corrections (defining a closely spelled different word).
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

from . import _kernels
from .alignment import AlignmentRecord
from .embedding import cosine_similarity, normalize_text
from .exceptions import ParseError
from .generation import DEFAULT_REFUSAL_PATTERNS, FailureReason, GenerationFailure
from .model import Dictionary, DictionaryEntry

DEFAULT_PROPER_NOUN_PATTERNS = ("nombre propio", "en la mitología")


class ErrorCategory(enum.Enum):
    HALLUCINATION_CANDIDATE = "hallucination_candidate"
    CIRCULARITY = "circularity"
    PROPER_NOUN_AS_COMMON = "proper_noun_as_common"
    FABRICATED_POLYSEMY = "fabricated_polysemy"
    OVERCORRECTION = "overcorrection"
    REFUSAL = "refusal"


@dataclass(frozen=True)
class ErrorAnalysisConfig:
    hallucination_threshold: float = 0.1  # strict less-than
    overcorrection_max_edit_distance: int = 2
    overcorrection_similarity_floor: float = 0.5
    fabricated_polysemy_similarity: float = 0.9
    refusal_patterns: tuple[str, ...] = DEFAULT_REFUSAL_PATTERNS
    proper_noun_patterns: tuple[str, ...] = DEFAULT_PROPER_NOUN_PATTERNS

    def __post_init__(self):
        for name in ("hallucination_threshold", "overcorrection_similarity_floor", "fabricated_polysemy_similarity"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.overcorrection_max_edit_distance < 0:
            raise ValueError("overcorrection_max_edit_distance must be >= 0")


@dataclass(frozen=True)
class ErrorFinding:
    lemma: str
    category: ErrorCategory
    evidence: str
    pos_label: str | None = None
    generated_definition: str | None = None
    gold_definition: str | None = None
    low_confidence: bool = False


def hallucination_candidates(
    records: Iterable[AlignmentRecord], config: ErrorAnalysisConfig | None = None
) -> list[ErrorFinding]:
    """Records whose best score falls strictly below the threshold."""
    config = config or ErrorAnalysisConfig()
    findings = []
    for record in records:
        if record.best_score < config.hallucination_threshold:
            findings.append(
                ErrorFinding(
                    lemma=record.lemma,
                    category=ErrorCategory.HALLUCINATION_CANDIDATE,
                    evidence=f"best cosine {record.best_score:.4f} < {config.hallucination_threshold}",
                    pos_label=record.category.value,
                )
            )
    return findings


def detect_circularity(entry: DictionaryEntry) -> bool:
    """True when the exact lemma occurs whole-word in any of its definitions.

    Case-insensitive but diacritic-sensitive; morphological variants do
    not count ("limitar" inside a definition of "limitable" is fine).
    """
    pattern = re.compile(rf"(?<!\w){re.escape(entry.lemma)}(?!\w)", re.IGNORECASE)
    return any(pattern.search(sense.definition) for sense in entry.senses)


def detect_proper_noun_definition(
    entry: DictionaryEntry, patterns: Sequence[str] = DEFAULT_PROPER_NOUN_PATTERNS
) -> bool:
    """True when any sense reads like a proper-noun description."""
    folded = [p.casefold() for p in patterns]
    return any(p in sense.definition.casefold() for sense in entry.senses for p in folded)


def detect_fabricated_polysemy(
    entry: DictionaryEntry, embedder, config: ErrorAnalysisConfig | None = None
) -> tuple[bool, str] | None:
    """Flag sense pairs that are the same meaning restated.

    Returns None for monosemous entries (not applicable, distinct from a
    negative result), else (flag, evidence). A pair trips the detector
    when the normalized definitions are identical or their cosine reaches
    the configured similarity.
    """
    if len(entry.senses) < 2:
        return None
    config = config or ErrorAnalysisConfig()
    vectors = [embedder.embed(s.definition) for s in entry.senses]
    for i in range(len(entry.senses)):
        for j in range(i + 1, len(entry.senses)):
            if normalize_text(entry.senses[i].definition) == normalize_text(entry.senses[j].definition):
                return True, f"senses {i + 1} and {j + 1} are exact duplicates"
            score = cosine_similarity(vectors[i], vectors[j])
            if score >= config.fabricated_polysemy_similarity:
                return True, f"senses {i + 1} and {j + 1} cosine {score:.4f} >= {config.fabricated_polysemy_similarity}"
    return False, ""


def edit_distance(a: str, b: str) -> int:
    """Unit-cost insert/delete/substitute distance over Unicode scalars."""
    return int(_kernels.levenshtein(_kernels.codepoints(a), _kernels.codepoints(b)))


class NeighborIndex:
    """Gold lemmas bucketed by length for bounded edit-distance search.

    Candidates within distance d cannot differ in length by more than d,
    so a query only scans the 2d+1 adjacent buckets instead of the whole
    vocabulary.
    """

    def __init__(self, gold: Dictionary):
        self._buckets: dict[int, list[str]] = {}
        self._entries_by_lemma: dict[str, list[DictionaryEntry]] = {}
        for entry in gold.entries():
            self._entries_by_lemma.setdefault(entry.lemma, []).append(entry)
        for lemma in sorted(self._entries_by_lemma):
            self._buckets.setdefault(len(lemma), []).append(lemma)

    def neighbors(self, lemma: str, max_distance: int) -> list[tuple[str, int]]:
        """Different lemmas within max_distance, sorted by (distance, lemma)."""
        found = []
        a = _kernels.codepoints(lemma)
        for length in range(max(1, len(lemma) - max_distance), len(lemma) + max_distance + 1):
            for other in self._buckets.get(length, ()):
                if other == lemma:
                    continue
                distance = int(_kernels.levenshtein(a, _kernels.codepoints(other)))
                if distance <= max_distance:
                    found.append((other, distance))
        return sorted(found, key=lambda pair: (pair[1], pair[0]))

    def entries_for(self, lemma: str) -> list[DictionaryEntry]:
        return self._entries_by_lemma.get(lemma, [])


def detect_overcorrection(
    entry: DictionaryEntry,
    gold: Dictionary,
    embedder,
    config: ErrorAnalysisConfig | None = None,
    index: NeighborIndex | None = None,
) -> ErrorFinding | None:
    """Look for a closely spelled gold lemma whose definition the entry matches.

    Run on hallucination candidates only: a high cosine against a nearby
    (but different) gold lemma suggests the generated definition belongs
    to that neighbor. Returns the best such neighbor or None.
    """
    config = config or ErrorAnalysisConfig()
    index = index or NeighborIndex(gold)
    gen_vector = embedder.embed(entry.senses[0].definition)
    # neighbors arrive sorted by (distance, lemma); strict > keeps the first
    # (alphabetically lowest) winner on exact ties
    best: tuple[float, int, str, str] | None = None
    for neighbor, distance in index.neighbors(entry.lemma, config.overcorrection_max_edit_distance):
        for gold_entry in index.entries_for(neighbor):
            for sense in gold_entry.senses:
                score = cosine_similarity(gen_vector, embedder.embed(sense.definition))
                if score < config.overcorrection_similarity_floor:
                    continue
                if best is None or (score, -distance) > (best[0], best[1]):
                    best = (score, -distance, neighbor, sense.definition)
    if best is None:
        return None
    score, neg_distance, neighbor, gold_definition = best
    return ErrorFinding(
        lemma=entry.lemma,
        category=ErrorCategory.OVERCORRECTION,
        evidence=f"gold neighbor '{neighbor}' at edit distance {-neg_distance}, cosine {score:.4f}",
        pos_label=entry.pos.raw_label,
        generated_definition=entry.senses[0].definition,
        gold_definition=gold_definition,
    )


@dataclass
class ErrorReport:
    findings: list[ErrorFinding] = field(default_factory=list)
    summary: dict[str, int] = field(default_factory=dict)


def classify_errors(
    generated: Dictionary,
    gold: Dictionary,
    records: Sequence[AlignmentRecord],
    embedder,
    config: ErrorAnalysisConfig | None = None,
    failures: Sequence[GenerationFailure] | None = None,
) -> ErrorReport:
    """Run every detector; one entry may carry several findings.

    Hallucination candidates whose best-matching gold definition has at
    most two words are marked low-confidence: terse synonym-style gold
    entries score low against full definitions that may well be correct.
    Over-derivation is not auto-detected; such entries surface here only
    as hallucination candidates.
    """
    config = config or ErrorAnalysisConfig()
    report = ErrorReport(summary={category.value: 0 for category in ErrorCategory})
    records_by_key = {(r.lemma, r.category.value): r for r in records}

    candidates = hallucination_candidates(records, config)
    index = NeighborIndex(gold) if candidates else None
    for finding in candidates:
        record = records_by_key[(finding.lemma, finding.pos_label)]
        gen_entry = generated.get(record.lemma, record.category)
        gold_entry = gold.get(record.lemma, record.category)
        gold_best = gold_entry.senses[record.best_gold_index - 1].definition
        low_confidence = len(gold_best.split()) <= 2
        evidence = finding.evidence + ("; short gold definition, low confidence" if low_confidence else "")
        report.findings.append(
            ErrorFinding(
                lemma=finding.lemma,
                category=ErrorCategory.HALLUCINATION_CANDIDATE,
                evidence=evidence,
                pos_label=gen_entry.pos.raw_label,
                generated_definition=gen_entry.senses[0].definition,
                gold_definition=gold_best,
                low_confidence=low_confidence,
            )
        )
        overcorrection = detect_overcorrection(gen_entry, gold, embedder, config, index)
        if overcorrection is not None:
            report.findings.append(overcorrection)

    for entry in generated.entries():
        if detect_circularity(entry):
            report.findings.append(
                ErrorFinding(
                    lemma=entry.lemma,
                    category=ErrorCategory.CIRCULARITY,
                    evidence="lemma occurs whole-word inside its own definition",
                    pos_label=entry.pos.raw_label,
                    generated_definition=entry.senses[0].definition,
                )
            )
        if detect_proper_noun_definition(entry, config.proper_noun_patterns):
            report.findings.append(
                ErrorFinding(
                    lemma=entry.lemma,
                    category=ErrorCategory.PROPER_NOUN_AS_COMMON,
                    evidence="definition matches a proper-noun pattern",
                    pos_label=entry.pos.raw_label,
                    generated_definition=entry.senses[0].definition,
                )
            )
        fabricated = detect_fabricated_polysemy(entry, embedder, config)
        if fabricated is not None and fabricated[0]:
            report.findings.append(
                ErrorFinding(
                    lemma=entry.lemma,
                    category=ErrorCategory.FABRICATED_POLYSEMY,
                    evidence=fabricated[1],
                    pos_label=entry.pos.raw_label,
                    generated_definition=entry.senses[0].definition,
                )
            )

    for failure in failures or ():
        if failure.reason is FailureReason.REFUSAL:
            report.findings.append(
                ErrorFinding(
                    lemma=failure.lemma,
                    category=ErrorCategory.REFUSAL,
                    evidence=failure.detail,
                    pos_label=failure.pos.raw_label if failure.pos else None,
                )
            )

    for finding in report.findings:
        report.summary[finding.category.value] += 1
    return report


def write_findings(findings: Iterable[ErrorFinding], stream: IO[str]) -> int:
    written = 0
    for f in findings:
        obj = {
            "lemma": f.lemma,
            "category": f.category.value,
            "evidence": f.evidence,
            "pos": f.pos_label,
            "generated_definition": f.generated_definition,
            "gold_definition": f.gold_definition,
            "low_confidence": f.low_confidence,
        }
        line = json.dumps(obj, ensure_ascii=False) + "\n"
        stream.write(line)
        written += len(line.encode("utf-8"))
    return written


def parse_findings(stream: Iterable[str]) -> list[ErrorFinding]:
    findings = []
    for number, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            findings.append(
                ErrorFinding(
                    lemma=obj["lemma"],
                    category=ErrorCategory(obj["category"]),
                    evidence=obj["evidence"],
                    pos_label=obj.get("pos"),
                    generated_definition=obj.get("generated_definition"),
                    gold_definition=obj.get("gold_definition"),
                    low_confidence=bool(obj.get("low_confidence", False)),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"invalid finding record: {exc}", line_number=number) from exc
    return findings
