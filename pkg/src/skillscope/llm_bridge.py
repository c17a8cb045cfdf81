"""Every LLM touchpoint: tiered classification prompts, issue rephrasing for
synthetic data, fine-tune dataset export, and the provider abstraction.

Three provider implementations satisfy one contract (``complete(prompt,
params) -> text``): a remote HTTPS chat-completion client, a deterministic
rule-table stub, and a recorded-replay provider. Tests only ever touch the
stub and replay providers; the remote client is live-mode plumbing.

Whatever a provider answers is snapped onto the taxonomy before use, so
free-text output can never leak into the label space.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .parse_engine import LabelerUnavailable, SkillDataset
from .taxonomy import DEFAULT_TAU, LabelCandidate, SkillDomain, Taxonomy, snap
from .textprep import clean_text

log = logging.getLogger(__name__)

PROMPT_VERSION = "p1"

# fine-tune settings the export manifest must carry verbatim
FINETUNE_HYPERPARAMETERS = {"batch_size": 1, "temperature": 1.0, "epochs": 3}


class LlmBridgeError(Exception):
    pass


class ProviderError(LlmBridgeError):
    """Transport or replay failure; labeler chains degrade to the lexicon."""


@dataclass(frozen=True)
class CompletionParams:
    temperature: float = 0.0
    max_output_tokens: int = 64


DEFAULT_PARAMS = CompletionParams()


# --------------------------------------------------------------------------
# prompt templates (versioned; the full allowed label list is always embedded
# so snapping has honest context)


def domain_prompt(identifier: str, taxonomy: Taxonomy) -> str:
    names = ", ".join(d.display_name for d in taxonomy.domains)
    return (
        f"[skillscope:{PROMPT_VERSION}:domain]\n"
        f"Classify a source-code identifier into exactly one API domain.\n"
        f"Domains: {names}\n"
        f"Answer with the domain name only, or 'none'.\n"
        f"Identifier: {identifier}"
    )


def subdomain_prompt(identifier: str, domain: SkillDomain, taxonomy: Taxonomy) -> str:
    names = ", ".join(s.display_name for s in taxonomy.subdomains_of(domain.id))
    return (
        f"[skillscope:{PROMPT_VERSION}:subdomain]\n"
        f"Domain: {domain.display_name}\n"
        f"Subdomains: {names}\n"
        f"Answer with the subdomain name only, or 'none'.\n"
        f"Identifier: {identifier}"
    )


def issue_domain_prompt(domain: SkillDomain, title: str, body: str) -> str:
    return (
        f"[skillscope:{PROMPT_VERSION}:issue-domain]\n"
        f"Domain: {domain.display_name}\n"
        f"Description: {domain.description}\n"
        f"Answer 1 if this domain is relevant to the issue, otherwise 0.\n"
        f"Issue title: {title}\n"
        f"Issue body: {body}"
    )


def issue_subdomain_prompt(domain: SkillDomain, taxonomy: Taxonomy, title: str, body: str) -> str:
    names = ", ".join(s.display_name for s in taxonomy.subdomains_of(domain.id))
    return (
        f"[skillscope:{PROMPT_VERSION}:issue-subdomain]\n"
        f"Domain: {domain.display_name}\n"
        f"Subdomains: {names}\n"
        f"Answer with the most relevant subdomain name, or 'none'.\n"
        f"Issue title: {title}\n"
        f"Issue body: {body}"
    )


def issue_all_domains_prompt(taxonomy: Taxonomy, title: str, body: str) -> str:
    # the single-pass variant: one prompt listing every domain at once (the
    # weaker baseline configuration, kept behind a config flag)
    names = ", ".join(d.display_name for d in taxonomy.domains)
    return (
        f"[skillscope:{PROMPT_VERSION}:issue-all-domains]\n"
        f"Domains: {names}\n"
        f"Answer with a comma-separated list of every applicable domain name.\n"
        f"Issue title: {title}\n"
        f"Issue body: {body}"
    )


def rephrase_prompt(kind: str, text: str) -> str:
    label = "Title" if kind == "title" else "Body"
    return (
        f"[skillscope:{PROMPT_VERSION}:rephrase-{kind}]\n"
        f"Reword the following issue {kind}, preserving all technical terms.\n"
        f"{label}: {text}"
    )


# --------------------------------------------------------------------------
# providers


class RemoteChatProvider:
    """HTTPS chat-completion client. API key comes from the environment
    (``SKILLSCOPE_LLM_KEY``); never exercised by the test suite."""

    provider_id = "remote"

    def __init__(self, endpoint: str, model: str, key_env: str = "SKILLSCOPE_LLM_KEY", timeout: float = 60.0):
        self.endpoint = endpoint
        self.model = model
        self.key_env = key_env
        self.timeout = timeout

    def complete(self, prompt: str, params: CompletionParams = DEFAULT_PARAMS) -> str:
        import requests

        key = os.environ.get(self.key_env)
        if not key:
            raise ProviderError(f"missing API key env var {self.key_env}")
        try:
            response = requests.post(
                self.endpoint,
                json={
                    "model": self.model,
                    "messages": [{"role": "user", "content": prompt}],
                    "temperature": params.temperature,
                    "max_tokens": params.max_output_tokens,
                },
                headers={"Authorization": f"Bearer {key}"},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ProviderError(f"provider transport failure: {exc}") from exc
        if response.status_code != 200:
            raise ProviderError(f"provider returned HTTP {response.status_code}")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"malformed provider response: {exc}") from exc


class RuleStubProvider:
    """Deterministic rule table: the first rule whose pattern matches the
    prompt wins. A pattern is a substring, or a tuple of substrings that must
    all appear. A response may contain ``{input}``, replaced by the prompt's
    trailing payload (identifier, title or body line)."""

    provider_id = "stub"

    def __init__(self, rules: Optional[list[tuple]] = None, default: str = "0"):
        self.rules = list(rules or [])
        self.default = default

    @staticmethod
    def _payload(prompt: str) -> str:
        for marker in ("\nIdentifier: ", "\nTitle: ", "\nBody: "):
            if marker in prompt:
                return prompt.rsplit(marker, 1)[1]
        return prompt.rsplit("\n", 1)[-1]

    def complete(self, prompt: str, params: CompletionParams = DEFAULT_PARAMS) -> str:
        for pattern, response in self.rules:
            parts = (pattern,) if isinstance(pattern, str) else tuple(pattern)
            if all(part in prompt for part in parts):
                return response.replace("{input}", self._payload(prompt))
        return self.default.replace("{input}", self._payload(prompt))


def _completion_key(prompt: str, params: CompletionParams) -> str:
    payload = f"{prompt}\x00temp={params.temperature}\x00max={params.max_output_tokens}"
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ReplayProvider:
    """Replays completions recorded as a prompt-hash -> completion map."""

    provider_id = "replay"

    def __init__(self, cassette_path: str | Path):
        self.path = Path(cassette_path)
        self.entries: dict[str, str] = json.loads(self.path.read_text("utf-8"))

    def complete(self, prompt: str, params: CompletionParams = DEFAULT_PARAMS) -> str:
        key = _completion_key(prompt, params)
        if key not in self.entries:
            raise ProviderError(f"no recorded completion for prompt hash {key[:12]}")
        return self.entries[key]


class RecordingProvider:
    """Wraps a live provider and records every completion for later replay."""

    provider_id = "recording"

    def __init__(self, inner, cassette_path: str | Path):
        self.inner = inner
        self.path = Path(cassette_path)
        self.entries: dict[str, str] = {}
        if self.path.exists():
            self.entries = json.loads(self.path.read_text("utf-8"))

    def complete(self, prompt: str, params: CompletionParams = DEFAULT_PARAMS) -> str:
        completion = self.inner.complete(prompt, params)
        self.entries[_completion_key(prompt, params)] = completion
        self.path.write_text(json.dumps(self.entries, indent=1, sort_keys=True))
        return completion


# --------------------------------------------------------------------------
# classification


def classify_identifier_two_tier(
    identifier: str,
    taxonomy: Taxonomy,
    provider,
    tau: float = DEFAULT_TAU,
    params: CompletionParams = DEFAULT_PARAMS,
) -> tuple[Optional[str], Optional[str]]:
    """Tier 1 asks for the domain, tier 2 for the subdomain given the domain;
    both answers are snapped, and snapping failures degrade to (None, None)
    / (domain, None) rather than inventing labels."""
    completion = provider.complete(domain_prompt(identifier, taxonomy), params)
    snapped = snap(LabelCandidate(completion, "domain"), taxonomy, tau) if completion.strip() else None
    if snapped is None:
        return None, None
    domain_id = snapped[0]
    domain = taxonomy.domain(domain_id)
    if not taxonomy.subdomains_of(domain_id):
        return domain_id, None
    sub_completion = provider.complete(subdomain_prompt(identifier, domain, taxonomy), params)
    sub = (
        snap(LabelCandidate(sub_completion, "subdomain", domain_id), taxonomy, tau)
        if sub_completion.strip()
        else None
    )
    return domain_id, (sub[0] if sub else None)


class LlmLabeler:
    """Provider-backed labeler for the parse-engine chain. Raw completions
    are returned as candidates; the chain snaps them. Transport failures
    surface as LabelerUnavailable so the chain can fall through."""

    provenance = "llm"

    def __init__(self, provider, taxonomy: Taxonomy, params: CompletionParams = DEFAULT_PARAMS):
        self.provider = provider
        self.taxonomy = taxonomy
        self.params = params

    def propose_domain(self, identifier: str) -> Optional[str]:
        try:
            completion = self.provider.complete(domain_prompt(identifier, self.taxonomy), self.params)
        except ProviderError as exc:
            raise LabelerUnavailable(str(exc)) from exc
        completion = completion.strip()
        return completion or None

    def propose_subdomain(self, identifier: str, domain_id: str) -> Optional[str]:
        domain = self.taxonomy.domain(domain_id)
        try:
            completion = self.provider.complete(
                subdomain_prompt(identifier, domain, self.taxonomy), self.params
            )
        except ProviderError as exc:
            raise LabelerUnavailable(str(exc)) from exc
        completion = completion.strip()
        return completion or None


def classify_issue_llm(
    issue_number: int,
    title: str,
    body: str,
    taxonomy: Taxonomy,
    provider,
    tau: float = DEFAULT_TAU,
    params: CompletionParams = DEFAULT_PARAMS,
    single_pass: bool = False,
):
    """Per-domain binary prompting over an issue, then a subdomain prompt for
    each positive domain. Completions that start with neither '1' nor '0'
    count as 0 and are logged. Returns an IssueSkillVector with parent
    closure applied."""
    from .parse_engine import IssueSkillVector

    clean_title, clean_body = clean_text(title), clean_text(body)
    if not (clean_title or clean_body):
        raise LlmBridgeError(f"issue {issue_number}: cleaned text is empty")
    bits = {label: 0 for label in taxonomy.label_order}
    if single_pass:
        completion = provider.complete(
            issue_all_domains_prompt(taxonomy, clean_title, clean_body), params
        )
        for chunk in completion.replace("\n", ",").split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            snapped = snap(LabelCandidate(chunk, "domain"), taxonomy, tau)
            if snapped is not None:
                bits[snapped[0]] = 1
        positives = [d for d in taxonomy.domains if bits[d.id]]
    else:
        positives = []
        for domain in taxonomy.domains:
            completion = provider.complete(
                issue_domain_prompt(domain, clean_title, clean_body), params
            ).strip()
            if completion.startswith("1"):
                bits[domain.id] = 1
                positives.append(domain)
            elif not completion.startswith("0"):
                log.warning(
                    "issue %s domain %s: uninterpretable completion %r treated as 0",
                    issue_number,
                    domain.id,
                    completion[:40],
                )
    for domain in positives:
        if not taxonomy.subdomains_of(domain.id):
            continue
        completion = provider.complete(
            issue_subdomain_prompt(domain, taxonomy, clean_title, clean_body), params
        )
        snapped = (
            snap(LabelCandidate(completion, "subdomain", domain.id), taxonomy, tau)
            if completion.strip()
            else None
        )
        if snapped is not None:
            bits[f"{domain.id}/{snapped[0]}"] = 1
    for label in taxonomy.label_order:
        if "/" in label and bits[label]:
            bits[label.split("/", 1)[0]] = 1
    return IssueSkillVector(issue_number=issue_number, bits=bits, taxonomy_version=taxonomy.version)


# --------------------------------------------------------------------------
# synthetic data


@dataclass(frozen=True)
class SyntheticIssue:
    origin_issue: int
    title: str
    body: str
    labels: tuple[str, ...]  # copied unchanged from the origin row
    generation_params: CompletionParams
    provider_id: str


@dataclass
class GenerationResult:
    synthetics: list[SyntheticIssue]
    skipped_domains: tuple[str, ...]  # zero positives: nothing to rephrase
    target: int


def generate_synthetic(
    dataset: SkillDataset,
    taxonomy: Taxonomy,
    provider,
    seed: int = 0,
    params: CompletionParams = DEFAULT_PARAMS,
) -> GenerationResult:
    """Rephrase positive issues of under-represented domains until each
    reaches the mean positive count (rounded down), choosing source issues
    uniformly at random with replacement. Label vectors are copied unchanged.

    The mean is taken over domains that have at least one positive row;
    zero-positive domains are skipped and reported.
    """
    counts = {d.id: 0 for d in taxonomy.domains}
    rows_by_domain: dict[str, list] = {d.id: [] for d in taxonomy.domains}
    for row in dataset.rows:
        for label in row.labels:
            if "/" not in label and label in counts:
                counts[label] += 1
                rows_by_domain[label].append(row)
    populated = {d: c for d, c in counts.items() if c > 0}
    if not populated:
        raise LlmBridgeError("dataset has no domain-positive rows")
    target = math.floor(sum(populated.values()) / len(populated))
    skipped = tuple(d.id for d in taxonomy.domains if counts[d.id] == 0)
    for domain_id in skipped:
        log.info("domain %s has zero positives; skipped by synthetic generation", domain_id)
    rng = np.random.default_rng(seed)
    provider_id = getattr(provider, "provider_id", type(provider).__name__)
    synthetics: list[SyntheticIssue] = []
    for domain in taxonomy.domains:
        count = counts[domain.id]
        if count == 0 or count >= target:
            continue
        pool = sorted(rows_by_domain[domain.id], key=lambda r: r.issue)
        for _ in range(target - count):
            row = pool[int(rng.integers(0, len(pool)))]
            title = provider.complete(rephrase_prompt("title", row.text), params)
            body = provider.complete(rephrase_prompt("body", row.text), params)
            synthetics.append(
                SyntheticIssue(
                    origin_issue=row.issue,
                    title=title,
                    body=body,
                    labels=tuple(row.labels),
                    generation_params=params,
                    provider_id=provider_id,
                )
            )
    return GenerationResult(synthetics=synthetics, skipped_domains=skipped, target=target)


# --------------------------------------------------------------------------
# fine-tune export


@dataclass(frozen=True)
class FineTuneExample:
    messages: tuple  # ({role, content}, ...) system/user/assistant
    split: str  # train | test


def _binary_system(domain: SkillDomain) -> str:
    return (
        f"{domain.display_name}: {domain.description} "
        "Decide whether this API domain is relevant to the GitHub issue. "
        "Answer 1 for relevant, 0 for not relevant."
    )


def _subdomain_system(domain: SkillDomain, taxonomy: Taxonomy) -> str:
    names = ", ".join(s.id for s in taxonomy.subdomains_of(domain.id))
    return (
        f"{domain.display_name}: {domain.description} "
        f"Answer with the applicable subdomain, one of: {names}."
    )


def _write_examples(path: Path, examples: list[FineTuneExample]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps({"messages": list(ex.messages)}, sort_keys=True) + "\n")


def read_finetune_file(path: str | Path, split: str = "train") -> list[FineTuneExample]:
    out = []
    for line in Path(path).read_text("utf-8").splitlines():
        if line.strip():
            out.append(FineTuneExample(messages=tuple(json.loads(line)["messages"]), split=split))
    return out


def export_finetune_dataset(
    dataset: SkillDataset,
    taxonomy: Taxonomy,
    out_dir: str | Path,
    ratio: float = 0.7,
    seed: int = 0,
) -> dict:
    """Per-domain chat-format files for the binary relevance model and the
    subdomain model, split train/test per domain, plus a manifest carrying
    the fine-tune hyperparameters. Deterministic given the seed."""
    if not dataset.rows:
        raise LlmBridgeError("cannot export an empty dataset")
    if not 0.0 < ratio < 1.0:
        raise LlmBridgeError(f"split ratio must be in (0, 1), got {ratio}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    manifest: dict = {
        "format": "finetune-1",
        "prompt_version": PROMPT_VERSION,
        "hyperparameters": dict(FINETUNE_HYPERPARAMETERS),
        "ratio": ratio,
        "seed": seed,
        "taxonomy_version": dataset.taxonomy_version,
        "domains": {},
    }

    def split_examples(items: list[FineTuneExample]) -> tuple[list, list]:
        order = rng.permutation(len(items))
        n_train = math.ceil(ratio * len(items))
        train = [items[i] for i in order[:n_train]]
        test = [items[i] for i in order[n_train:]]
        return (
            [FineTuneExample(e.messages, "train") for e in train],
            [FineTuneExample(e.messages, "test") for e in test],
        )

    for domain in taxonomy.domains:
        positives = 0
        binary: list[FineTuneExample] = []
        sub_examples: list[FineTuneExample] = []
        for row in dataset.rows:
            relevant = domain.id in row.labels
            positives += int(relevant)
            user = clean_text(row.text)
            binary.append(
                FineTuneExample(
                    messages=(
                        {"role": "system", "content": _binary_system(domain)},
                        {"role": "user", "content": user},
                        {"role": "assistant", "content": "1" if relevant else "0"},
                    ),
                    split="train",
                )
            )
            if relevant:
                prefix = f"{domain.id}/"
                for label in row.labels:
                    if label.startswith(prefix):
                        sub_examples.append(
                            FineTuneExample(
                                messages=(
                                    {"role": "system", "content": _subdomain_system(domain, taxonomy)},
                                    {"role": "user", "content": user},
                                    {"role": "assistant", "content": label.split("/", 1)[1]},
                                ),
                                split="train",
                            )
                        )
        train, test = split_examples(binary)
        files = {
            "binary_train": f"{domain.id}.binary.train.jsonl",
            "binary_test": f"{domain.id}.binary.test.jsonl",
        }
        _write_examples(out / files["binary_train"], train)
        _write_examples(out / files["binary_test"], test)
        entry = {
            "positives": positives,
            "binary_examples": {"train": len(train), "test": len(test)},
            "files": files,
            "warning": "fewer than 2 positive examples; split degenerates" if positives < 2 else None,
        }
        if sub_examples:
            sub_train, sub_test = split_examples(sub_examples)
            files["subdomain_train"] = f"{domain.id}.subdomain.train.jsonl"
            files["subdomain_test"] = f"{domain.id}.subdomain.test.jsonl"
            _write_examples(out / files["subdomain_train"], sub_train)
            _write_examples(out / files["subdomain_test"], sub_test)
            entry["subdomain_examples"] = {"train": len(sub_train), "test": len(sub_test)}
        manifest["domains"][domain.id] = entry
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest
