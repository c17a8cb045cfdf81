"""From Java sources to per-issue skill vectors and a training dataset.

Class identifiers are labeled with a domain, method identifiers with a
subdomain under the domain of their receiver type. Labeling goes through a
chain: an optional provider-backed labeler first, then always the
deterministic lexicon labeler, which proposes the identifier itself and lets
taxonomy snapping decide. The first candidate that snaps wins. File-level
assignments union into a one-hot vector per issue, with parent closure
(a subdomain bit implies its domain bit).
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional, Protocol

from .javasrc import ApiUsage, JavaParseError, extract_api_usages  # noqa: F401  (re-export)
from .taxonomy import DEFAULT_TAU, LabelCandidate, Taxonomy, snap
from .textprep import clean_text

log = logging.getLogger(__name__)

UNCLASSIFIED = None

PROVENANCE_LLM = "llm"
PROVENANCE_LEXICON = "lexicon"


class ParseEngineError(Exception):
    pass


class DuplicateIssueError(ParseEngineError):
    pass


class TaxonomyVersionMismatch(ParseEngineError):
    pass


class LabelerUnavailable(Exception):
    """A labeler cannot answer (e.g. provider transport failure); the chain
    falls through to the next labeler."""


class Labeler(Protocol):
    provenance: str

    def propose_domain(self, identifier: str) -> Optional[str]: ...

    def propose_subdomain(self, identifier: str, domain_id: str) -> Optional[str]: ...


class LexiconLabeler:
    """Deterministic fallback labeler: proposes the identifier itself and
    relies on snapping against label names and lexicons. Always last in the
    chain; never unavailable."""

    provenance = PROVENANCE_LEXICON

    def propose_domain(self, identifier: str) -> Optional[str]:
        return identifier

    def propose_subdomain(self, identifier: str, domain_id: str) -> Optional[str]:
        return identifier


@dataclass
class LabelerChain:
    labelers: list

    def __post_init__(self):
        if not self.labelers:
            raise ParseEngineError("labeler chain must not be empty")
        if not isinstance(self.labelers[-1], LexiconLabeler):
            raise ParseEngineError("labeler chain must end with the lexicon labeler")


def lexicon_only_chain() -> LabelerChain:
    return LabelerChain([LexiconLabeler()])


@dataclass(frozen=True)
class Assignment:
    domain_id: str
    subdomain_id: Optional[str]
    provenance: str
    score: float


@dataclass
class FileSkillLabels:
    path: str
    assignments: frozenset[Assignment]


@dataclass
class IssueSkillVector:
    issue_number: int
    bits: dict[str, int]
    taxonomy_version: str

    def labels(self) -> list[str]:
        return [label for label, bit in self.bits.items() if bit]

    def is_zero(self) -> bool:
        return not any(self.bits.values())


def label_class(
    identifier: str, taxonomy: Taxonomy, chain: LabelerChain, tau: float = DEFAULT_TAU
) -> Optional[tuple[str, float, str]]:
    """(domain id, snap score, provenance) from the first labeler whose
    candidate snaps; None when every labeler misses (unclassified)."""
    for labeler in chain.labelers:
        try:
            raw = labeler.propose_domain(identifier)
        except LabelerUnavailable as exc:
            log.warning("labeler %s unavailable for %r: %s", labeler.provenance, identifier, exc)
            continue
        if not raw:
            continue
        snapped = snap(LabelCandidate(raw, "domain"), taxonomy, tau)
        if snapped is not None:
            return snapped[0], snapped[1], labeler.provenance
    return UNCLASSIFIED


def label_method(
    identifier: str,
    domain_id: str,
    taxonomy: Taxonomy,
    chain: LabelerChain,
    tau: float = DEFAULT_TAU,
) -> Optional[tuple[str, float, str]]:
    """(subdomain id, snap score, provenance) against only the subdomains of
    ``domain_id``; None when the domain has no subdomains or nothing snaps."""
    taxonomy.domain(domain_id)  # KeyError on invalid domain
    for labeler in chain.labelers:
        try:
            raw = labeler.propose_subdomain(identifier, domain_id)
        except LabelerUnavailable as exc:
            log.warning("labeler %s unavailable for %r: %s", labeler.provenance, identifier, exc)
            continue
        if not raw:
            continue
        snapped = snap(LabelCandidate(raw, "subdomain", domain_id), taxonomy, tau)
        if snapped is not None:
            return snapped[0], snapped[1], labeler.provenance
    return None


def label_file(
    path: str,
    usage: ApiUsage,
    taxonomy: Taxonomy,
    chain: LabelerChain,
    tau: float = DEFAULT_TAU,
) -> FileSkillLabels:
    """Label one file's API usage.

    Each distinct class spelling is labeled once (occurrence counts are kept
    for diagnostics only, and bound the number of provider calls). Methods
    are labeled under the domain of their receiver-type hint; hintless
    methods contribute nothing.
    """
    assignments: set[Assignment] = set()
    domain_cache: dict[str, Optional[tuple[str, float, str]]] = {}

    def domain_of(identifier: str):
        if identifier not in domain_cache:
            domain_cache[identifier] = label_class(identifier, taxonomy, chain, tau)
        return domain_cache[identifier]

    for class_ident in usage.distinct_classes():
        hit = domain_of(class_ident)
        if hit is not None:
            domain_id, score, provenance = hit
            assignments.add(Assignment(domain_id, None, provenance, score))
    for method_name, hint in usage.distinct_methods():
        if hint is None:
            continue
        hit = domain_of(hint)
        if hit is None:
            continue
        domain_id = hit[0]
        sub = label_method(method_name, domain_id, taxonomy, chain, tau)
        if sub is not None:
            assignments.add(Assignment(domain_id, sub[0], sub[2], sub[1]))
    return FileSkillLabels(path=path, assignments=frozenset(assignments))


def label_issue(
    issue_number: int,
    usages: list[ApiUsage],
    taxonomy: Taxonomy,
    chain: LabelerChain,
    tau: float = DEFAULT_TAU,
) -> IssueSkillVector:
    """Union of file-level assignments over every file linked to the issue,
    as a one-hot vector in taxonomy label order with parent closure."""
    bits = {label: 0 for label in taxonomy.label_order}
    for idx, usage in enumerate(usages):
        labels = label_file(f"file-{idx}", usage, taxonomy, chain, tau)
        for a in labels.assignments:
            bits[a.domain_id] = 1
            if a.subdomain_id is not None:
                bits[f"{a.domain_id}/{a.subdomain_id}"] = 1
    for label in taxonomy.label_order:
        if "/" in label and bits[label]:
            bits[label.split("/", 1)[0]] = 1
    return IssueSkillVector(issue_number=issue_number, bits=bits, taxonomy_version=taxonomy.version)


@dataclass
class DatasetRow:
    issue: int
    text: str
    labels: list[str]


@dataclass
class SkillDataset:
    rows: list[DatasetRow]
    taxonomy_version: str
    provenance: dict = field(default_factory=dict)


def build_dataset(
    labeled_issues: list[tuple[int, str, str, IssueSkillVector]],
    taxonomy: Taxonomy,
    provenance: Optional[dict] = None,
) -> SkillDataset:
    """Rows of (issue, cleaned title+body text, label ids). Issues whose
    vector is all-zero are excluded; duplicate issue numbers and mixed
    taxonomy versions are errors.

    ``labeled_issues`` entries are (issue number, title, body, vector).
    """
    seen: set[int] = set()
    rows: list[DatasetRow] = []
    for number, title, body, vector in labeled_issues:
        if vector.taxonomy_version != taxonomy.version:
            raise TaxonomyVersionMismatch(
                f"issue {number}: vector built with taxonomy {vector.taxonomy_version!r}, "
                f"dataset uses {taxonomy.version!r}"
            )
        if number in seen:
            raise DuplicateIssueError(f"duplicate issue {number}")
        seen.add(number)
        if vector.is_zero():
            continue
        parts = [clean_text(title), clean_text(body)]
        text = " ".join(p for p in parts if p)
        labels = [label for label in taxonomy.label_order if vector.bits.get(label)]
        rows.append(DatasetRow(issue=number, text=text, labels=labels))
    rows.sort(key=lambda r: r.issue)
    return SkillDataset(rows=rows, taxonomy_version=taxonomy.version, provenance=provenance or {})


def dataset_to_jsonl(ds: SkillDataset) -> str:
    lines = [
        json.dumps({"issue": r.issue, "text": r.text, "labels": r.labels}, sort_keys=True)
        for r in ds.rows
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def dataset_meta(ds: SkillDataset) -> dict:
    label_counts: dict[str, int] = {}
    for row in ds.rows:
        for label in row.labels:
            label_counts[label] = label_counts.get(label, 0) + 1
    return {
        "taxonomy_version": ds.taxonomy_version,
        "rows": len(ds.rows),
        "label_counts": dict(sorted(label_counts.items())),
        "provenance": ds.provenance,
    }


def dataset_from_jsonl(payload: str, meta: dict) -> SkillDataset:
    rows = []
    for line in payload.splitlines():
        if not line.strip():
            continue
        data = json.loads(line)
        rows.append(DatasetRow(issue=data["issue"], text=data["text"], labels=list(data["labels"])))
    return SkillDataset(
        rows=rows,
        taxonomy_version=meta["taxonomy_version"],
        provenance=meta.get("provenance", {}),
    )
