"""Two-level skill label space and similarity snapping onto canonical labels.

The taxonomy holds API-domain skills (e.g. Database, Networking) and finer
subdomains beneath them (e.g. Query Execution under Database). Labelers,
whether an LLM or a plain lexicon lookup, emit untrusted free text; ``snap``
maps that text onto the nearest canonical label using cosine similarity over
character trigrams and rejects anything below a threshold, so hallucinated
labels never enter the label space.

A loaded :class:`Taxonomy` is immutable and safe to share between threads.
"""
from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib.resources import files
from typing import Optional

DEFAULT_TAU = 0.35

_SLUG_RE = re.compile(r"^[a-z0-9][a-z0-9-]*$")
# Letter runs only: camelCase boundaries split tokens, an uppercase run that
# precedes a lowercase letter splits before its last capital ("DBBackup" ->
# "DB", "Backup"). Digits, underscores and punctuation act as separators.
_WORD_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+")


class TaxonomyError(Exception):
    """Base class for taxonomy loading and snapping failures."""


class MalformedTaxonomyError(TaxonomyError):
    """Document is not a well-formed taxonomy file."""


class EmptyTaxonomyError(TaxonomyError):
    """Document contains no domains."""


class DuplicateLabelError(TaxonomyError):
    """Two domains or two subdomains of one parent share an id."""


class DanglingParentError(TaxonomyError):
    """A subdomain references a domain id that does not exist."""


class EmptyIdentifierError(TaxonomyError):
    """split_identifier was given an empty string."""


class EmptyTokensError(TaxonomyError):
    """similarity or snap was given an empty token list."""


@dataclass(frozen=True)
class SkillDomain:
    id: str
    display_name: str
    description: str
    lexicon: frozenset[str]


@dataclass(frozen=True)
class SkillSubdomain:
    id: str
    parent_domain_id: str
    display_name: str
    lexicon: frozenset[str]

    @property
    def label_id(self) -> str:
        """Globally unique id used in label vectors: ``parent/sub``."""
        return f"{self.parent_domain_id}/{self.id}"


@dataclass(frozen=True)
class LabelCandidate:
    """Untrusted labeler output awaiting snapping.

    ``parent_context`` is required for subdomain candidates; it restricts the
    allowed set to that domain's subdomains so a candidate can never snap
    across parents.
    """

    raw_text: str
    kind: str  # "domain" | "subdomain"
    parent_context: Optional[str] = None


@dataclass(frozen=True)
class Taxonomy:
    version: str
    domains: tuple[SkillDomain, ...]
    subdomains: tuple[SkillSubdomain, ...]
    label_order: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        order = [d.id for d in self.domains]
        for d in self.domains:
            order.extend(s.label_id for s in self.subdomains if s.parent_domain_id == d.id)
        object.__setattr__(self, "label_order", tuple(order))

    @property
    def label_count(self) -> int:
        return len(self.label_order)

    def domain(self, domain_id: str) -> SkillDomain:
        for d in self.domains:
            if d.id == domain_id:
                return d
        raise KeyError(domain_id)

    def subdomains_of(self, domain_id: str) -> tuple[SkillSubdomain, ...]:
        return tuple(s for s in self.subdomains if s.parent_domain_id == domain_id)

    def label_index(self, label_id: str) -> int:
        return self.label_order.index(label_id)

    def parent_of(self, label_id: str) -> Optional[str]:
        """Parent domain id for a subdomain label id, None for domains."""
        if "/" in label_id:
            return label_id.split("/", 1)[0]
        return None


def split_identifier(identifier: str) -> list[str]:
    """Split a source-code identifier into lowercase word tokens.

    Splits at camelCase boundaries, underscores and digits. A run of two or
    more capitals followed by a lowercase letter splits before the last
    capital, so acronyms stay whole: ``DBBackupManager`` -> ``db, backup,
    manager``. Identifiers without letters yield an empty list.
    """
    if not identifier:
        raise EmptyIdentifierError("empty identifier")
    return [m.lower() for m in _WORD_RE.findall(identifier)]


def _trigram_counts(tokens: list[str]) -> Counter:
    joined = " " + " ".join(tokens) + " "
    return Counter(joined[i : i + 3] for i in range(len(joined) - 2))


def similarity(a: list[str], b: list[str]) -> float:
    """Cosine similarity between the character-trigram multisets of two
    token lists. 1.0 exactly when the multisets are identical, 0.0 when they
    share no trigram."""
    if not a or not b:
        raise EmptyTokensError("empty token list")
    ca = _trigram_counts(a)
    cb = _trigram_counts(b)
    if ca == cb:
        return 1.0
    dot = sum(n * cb[t] for t, n in ca.items())
    if dot == 0:
        return 0.0
    norm = math.sqrt(sum(n * n for n in ca.values())) * math.sqrt(
        sum(n * n for n in cb.values())
    )
    return dot / norm


def _label_score(cand_tokens: list[str], display_name: str, lexicon: frozenset[str]) -> float:
    """Best similarity between the candidate and any name variant of a label:
    the display name's token list, or any single lexicon token (lexicon
    entries act as aliases, so ``Connection`` scores 1.0 against a label
    whose lexicon holds ``connection``)."""
    best = similarity(cand_tokens, split_identifier(display_name))
    for token in lexicon:
        s = similarity(cand_tokens, [token])
        if s > best:
            best = s
    return best


def snap(
    candidate: LabelCandidate, taxonomy: Taxonomy, tau: float = DEFAULT_TAU
) -> Optional[tuple[str, float]]:
    """Map a free-text candidate onto the best-matching canonical label.

    Returns ``(label id, score)`` or ``None`` when nothing in the allowed set
    reaches ``tau``. Domain candidates compete over all domains; subdomain
    candidates only over the subdomains of ``parent_context``. Ties break to
    the lexicographically smallest label id.
    """
    if not candidate.raw_text or not candidate.raw_text.strip():
        raise EmptyTokensError("empty candidate text")
    if candidate.kind == "subdomain":
        if candidate.parent_context is None:
            raise TaxonomyError("subdomain candidate requires parent_context")
        allowed = [(s.id, s.display_name, s.lexicon) for s in taxonomy.subdomains_of(candidate.parent_context)]
    elif candidate.kind == "domain":
        allowed = [(d.id, d.display_name, d.lexicon) for d in taxonomy.domains]
    else:
        raise TaxonomyError(f"unknown candidate kind: {candidate.kind!r}")
    if not allowed:
        return None
    cand_tokens = split_identifier(candidate.raw_text)
    if not cand_tokens:
        return None
    best_id, best_score = None, -1.0
    for label_id, display_name, lexicon in sorted(allowed):
        score = _label_score(cand_tokens, display_name, lexicon)
        if score > best_score:
            best_id, best_score = label_id, score
    if best_score < tau:
        return None
    return best_id, best_score


def _require(cond: bool, exc: type[TaxonomyError], message: str) -> None:
    if not cond:
        raise exc(message)


_ALLOWED_TOP_LEVEL = {"version", "domains", "subdomains"}
_DOMAIN_FIELDS = {"id", "display_name", "description", "lexicon"}
_SUBDOMAIN_FIELDS = {"id", "parent", "display_name", "lexicon"}


def load_taxonomy(document: bytes) -> Taxonomy:
    """Parse and validate a taxonomy JSON document.

    Rejects unknown top-level fields, duplicate ids, subdomains with missing
    parents and empty domain lists, each with its own error class.
    """
    try:
        data = json.loads(document.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedTaxonomyError(f"not valid taxonomy JSON: {exc}") from exc
    _require(isinstance(data, dict), MalformedTaxonomyError, "top level must be an object")
    unknown = set(data) - _ALLOWED_TOP_LEVEL
    _require(not unknown, MalformedTaxonomyError, f"unknown top-level fields: {sorted(unknown)}")
    _require(
        isinstance(data.get("version"), str) and data["version"] != "",
        MalformedTaxonomyError,
        "version must be a non-empty string",
    )
    raw_domains = data.get("domains")
    _require(isinstance(raw_domains, list), MalformedTaxonomyError, "domains must be a list")
    _require(len(raw_domains) > 0, EmptyTaxonomyError, "empty taxonomy: no domains")

    domains: list[SkillDomain] = []
    seen_ids: set[str] = set()
    for entry in raw_domains:
        _require(isinstance(entry, dict), MalformedTaxonomyError, "domain entries must be objects")
        _require(
            set(entry) == _DOMAIN_FIELDS,
            MalformedTaxonomyError,
            f"domain fields must be exactly {sorted(_DOMAIN_FIELDS)}",
        )
        did = entry["id"]
        _require(
            isinstance(did, str) and bool(_SLUG_RE.match(did)),
            MalformedTaxonomyError,
            f"domain id must be a lowercase slug: {did!r}",
        )
        _require(did not in seen_ids, DuplicateLabelError, f"duplicate domain id: {did}")
        seen_ids.add(did)
        _require(
            isinstance(entry["display_name"], str) and entry["display_name"] != "",
            MalformedTaxonomyError,
            f"domain {did}: display_name must be non-empty",
        )
        lexicon = entry["lexicon"]
        _require(
            isinstance(lexicon, list) and len(lexicon) > 0,
            MalformedTaxonomyError,
            f"domain {did}: lexicon must be a non-empty list",
        )
        _require(
            all(isinstance(t, str) and t and t == t.lower() for t in lexicon),
            MalformedTaxonomyError,
            f"domain {did}: lexicon tokens must be lowercase strings",
        )
        domains.append(
            SkillDomain(
                id=did,
                display_name=entry["display_name"],
                description=str(entry.get("description", "")),
                lexicon=frozenset(lexicon),
            )
        )

    raw_subdomains = data.get("subdomains", [])
    _require(isinstance(raw_subdomains, list), MalformedTaxonomyError, "subdomains must be a list")
    subdomains: list[SkillSubdomain] = []
    seen_pairs: set[tuple[str, str]] = set()
    for entry in raw_subdomains:
        _require(isinstance(entry, dict), MalformedTaxonomyError, "subdomain entries must be objects")
        _require(
            set(entry) == _SUBDOMAIN_FIELDS,
            MalformedTaxonomyError,
            f"subdomain fields must be exactly {sorted(_SUBDOMAIN_FIELDS)}",
        )
        sid, parent = entry["id"], entry["parent"]
        _require(
            isinstance(sid, str) and bool(_SLUG_RE.match(sid)),
            MalformedTaxonomyError,
            f"subdomain id must be a lowercase slug: {sid!r}",
        )
        _require(
            parent in seen_ids,
            DanglingParentError,
            f"subdomain {sid}: dangling parent {parent!r}",
        )
        _require(
            (parent, sid) not in seen_pairs,
            DuplicateLabelError,
            f"duplicate subdomain id {sid} under {parent}",
        )
        seen_pairs.add((parent, sid))
        _require(
            isinstance(entry["display_name"], str) and entry["display_name"] != "",
            MalformedTaxonomyError,
            f"subdomain {sid}: display_name must be non-empty",
        )
        lexicon = entry["lexicon"]
        _require(
            isinstance(lexicon, list)
            and len(lexicon) > 0
            and all(isinstance(t, str) and t and t == t.lower() for t in lexicon),
            MalformedTaxonomyError,
            f"subdomain {sid}: lexicon must be a non-empty list of lowercase strings",
        )
        subdomains.append(
            SkillSubdomain(
                id=sid,
                parent_domain_id=parent,
                display_name=entry["display_name"],
                lexicon=frozenset(lexicon),
            )
        )

    return Taxonomy(version=data["version"], domains=tuple(domains), subdomains=tuple(subdomains))


def seed_taxonomy() -> Taxonomy:
    """Load the taxonomy seed file shipped with the package."""
    return load_taxonomy(files("skillscope.data").joinpath("seed_taxonomy.json").read_bytes())


def display_path(taxonomy: Taxonomy, label_id: str) -> str:
    """Human-readable path for a label id: ``Domain`` or ``Domain → Subdomain``."""
    parent = taxonomy.parent_of(label_id)
    if parent is None:
        return taxonomy.domain(label_id).display_name
    sub_id = label_id.split("/", 1)[1]
    for s in taxonomy.subdomains_of(parent):
        if s.id == sub_id:
            return f"{taxonomy.domain(parent).display_name} → {s.display_name}"
    raise KeyError(label_id)
