"""Workflow orchestration shared by the HTTP service and the CLI.

The two paper workflows map to: mine -> parse (training-data production) and
train / predict (model production and serving). Every step reads and writes
the local store, so each is independently re-runnable and the whole chain
works offline from recorded cassettes.
"""
from __future__ import annotations

import hashlib
import json
import logging
from typing import Optional

import numpy as np

from . import forest as forest_mod
from . import textprep
from .balance import REAL, MultilabelDataset, mlsmote
from .config import AppConfig
from .javasrc import JavaParseError
from .llm_bridge import LlmLabeler, classify_issue_llm, export_finetune_dataset, generate_synthetic
from .miner import IssueRecord, RepoRef, fetch_open_issues, mine_repository
from .parse_engine import (
    LabelerChain,
    LexiconLabeler,
    SkillDataset,
    build_dataset,
    dataset_from_jsonl,
    dataset_meta,
    dataset_to_jsonl,
    extract_api_usages,
    label_issue,
)
from .store import Store
from .taxonomy import Taxonomy, display_path

log = logging.getLogger(__name__)

MODEL_META_FORMAT = "bundle-1"


class PipelineError(Exception):
    pass


class DatasetMissing(PipelineError):
    pass


class ModelMissing(PipelineError):
    pass


class TaxonomyVersionError(PipelineError):
    pass


def make_chain(config: AppConfig, taxonomy: Taxonomy) -> LabelerChain:
    provider = config.make_provider()
    labelers = []
    if provider is not None:
        labelers.append(LlmLabeler(provider, taxonomy))
    labelers.append(LexiconLabeler())
    return LabelerChain(labelers)


def run_mine(store: Store, repo: RepoRef, config: AppConfig, progress=None, clock=None):
    transport = config.make_transport()
    miner_config = config.miner_config(clock=clock) if clock else config.miner_config()
    return mine_repository(repo, store, transport, miner_config, progress=progress)


def run_parse(store: Store, repo: RepoRef, config: AppConfig, progress=None) -> dict:
    """Label every mined issue from the Java files its merged PRs touched and
    persist the training dataset. Unparseable files are recorded as skipped,
    never fatal; PRs with no linked issue contribute nothing."""
    taxonomy = config.load_taxonomy()
    chain = make_chain(config, taxonomy)
    issues = store.read_records(repo.owner, repo.name, "issues.jsonl")
    pulls = store.read_records(repo.owner, repo.name, "pulls.jsonl")
    artifacts = store.read_records(repo.owner, repo.name, "files.jsonl")
    if not pulls and not issues:
        raise DatasetMissing(f"nothing mined for {repo.owner}/{repo.name}; run mine first")

    files_by_pr: dict[int, list[dict]] = {}
    for artifact in artifacts:
        files_by_pr.setdefault(artifact["pr_number"], []).append(artifact)

    skipped_files: list[str] = []
    usage_cache: dict[str, object] = {}

    def usage_for(artifact: dict):
        blob_id = artifact["blob_id"]
        if blob_id not in usage_cache:
            content = store.get_blob(repo.owner, repo.name, blob_id)
            try:
                usage_cache[blob_id] = extract_api_usages(content)
            except JavaParseError as exc:
                log.warning("skipping unparseable %s: %s", artifact["path"], exc)
                usage_cache[blob_id] = None
                skipped_files.append(artifact["path"])
        return usage_cache[blob_id]

    labeled = []
    done = 0
    for issue in issues:
        if issue["state"] != "closed" or not issue["linked_pr_numbers"]:
            continue
        usages = []
        for pr_number in issue["linked_pr_numbers"]:
            for artifact in files_by_pr.get(pr_number, []):
                usage = usage_for(artifact)
                if usage is not None:
                    usages.append(usage)
        vector = label_issue(issue["number"], usages, taxonomy, chain, config.tau)
        labeled.append((issue["number"], issue["title"], issue["body"], vector))
        done += 1
        if progress is not None:
            progress("issues_labeled", done)

    provenance = {
        "repo": f"{repo.owner}/{repo.name}",
        "skipped_files": sorted(set(skipped_files)),
        "labeler_chain": [labeler.provenance for labeler in chain.labelers],
    }
    dataset = build_dataset(labeled, taxonomy, provenance=provenance)
    meta = dataset_meta(dataset)
    store.write_dataset(repo.owner, repo.name, dataset_to_jsonl(dataset), meta)
    return meta


def load_dataset(store: Store, repo: RepoRef) -> SkillDataset:
    stored = store.read_dataset(repo.owner, repo.name)
    if stored is None:
        raise DatasetMissing(f"no dataset for {repo.owner}/{repo.name}; run parse first")
    return dataset_from_jsonl(stored[0], stored[1])


def _features_for(dataset: SkillDataset, model: textprep.TfidfModel) -> np.ndarray:
    rows = [
        textprep.to_dense(textprep.transform(model, textprep.tokenize(r.text)), model.size)
        for r in dataset.rows
    ]
    return np.vstack(rows) if rows else np.zeros((0, model.size))


def _label_matrix(dataset: SkillDataset, taxonomy: Taxonomy) -> np.ndarray:
    index = {label: j for j, label in enumerate(taxonomy.label_order)}
    out = np.zeros((len(dataset.rows), taxonomy.label_count), dtype=np.int8)
    for i, row in enumerate(dataset.rows):
        for label in row.labels:
            out[i, index[label]] = 1
    return out


def _model_id(dataset_bytes: bytes, config: AppConfig) -> str:
    digest = hashlib.sha256()
    digest.update(dataset_bytes)
    digest.update(
        json.dumps(
            {
                "seed": config.seed,
                "theta": config.theta,
                "ratio": config.split_ratio,
                "mlsmote": [config.use_mlsmote, config.mlsmote_k],
                "hyper": [
                    config.n_trees,
                    config.max_depth,
                    config.min_samples_leaf,
                    str(config.features_per_split),
                    config.bootstrap,
                ],
            },
            sort_keys=True,
        ).encode()
    )
    return "m-" + digest.hexdigest()[:12]


def _forest_filename(label: str) -> str:
    return "forest__" + label.replace("/", "--") + ".json"


def run_train(store: Store, repo: RepoRef, config: AppConfig, progress=None) -> tuple[str, dict]:
    """textprep -> balance -> forest over the stored dataset: 80/20 split of
    real rows, MLSMOTE on the training side only, one forest per trainable
    label. Persists a versioned model bundle and returns its id plus the
    held-out evaluation report."""
    taxonomy = config.load_taxonomy()
    dataset = load_dataset(store, repo)
    if dataset.taxonomy_version != taxonomy.version:
        raise TaxonomyVersionError(
            f"dataset taxonomy {dataset.taxonomy_version!r} != loaded {taxonomy.version!r}"
        )
    if not dataset.rows:
        raise PipelineError("dataset has zero labeled rows")
    tfidf = textprep.fit_tfidf([textprep.tokenize(r.text) for r in dataset.rows])
    features = _features_for(dataset, tfidf)
    labels = _label_matrix(dataset, taxonomy)
    ds = MultilabelDataset(
        features=features,
        labels=labels,
        provenance=[REAL] * len(dataset.rows),
        issue_numbers=[r.issue for r in dataset.rows],
    )
    train, test = forest_mod.split_dataset(ds, ratio=config.split_ratio, seed=config.seed)
    if progress is not None:
        progress("rows_train", train.n_rows)
        progress("rows_test", test.n_rows)
    if config.use_mlsmote:
        train = mlsmote(train, k=config.mlsmote_k, seed=config.seed)
    br = forest_mod.train_binary_relevance(
        train,
        list(taxonomy.label_order),
        config.hyperparams(),
        config.seed,
        taxonomy.version,
        theta=config.theta,
    )
    if progress is not None:
        progress("labels_trained", len(br.forests))
    predicted = np.zeros_like(test.labels)
    label_index = {label: j for j, label in enumerate(taxonomy.label_order)}
    for i in range(test.n_rows):
        for label in forest_mod.predict_labels(br, test.features[i]):
            predicted[i, label_index[label]] = 1
    report = forest_mod.evaluate_micro(
        test.labels,
        predicted,
        split_description=f"held-out {1 - config.split_ratio:.0%} of real rows, seed {config.seed}",
        synthetic_rows_excluded=True,
        label_order=tuple(taxonomy.label_order),
    )

    dataset_bytes = dataset_to_jsonl(dataset).encode()
    model_id = _model_id(dataset_bytes, config)
    meta = {
        "format": MODEL_META_FORMAT,
        "model_id": model_id,
        "taxonomy_version": taxonomy.version,
        "theta": config.theta,
        "seed": config.seed,
        "split_ratio": config.split_ratio,
        "mlsmote": {"enabled": config.use_mlsmote, "k": config.mlsmote_k},
        "hyperparams": {
            "n_trees": config.n_trees,
            "max_depth": config.max_depth,
            "min_samples_leaf": config.min_samples_leaf,
            "features_per_split": config.features_per_split,
            "bootstrap": config.bootstrap,
        },
        "labels_trained": sorted(br.forests),
        "untrainable": list(br.untrainable),
        "dataset_rows": len(dataset.rows),
        "evaluation": report.as_dict(),
    }
    store.write_model_file(
        repo.owner, repo.name, model_id, "model.meta.json",
        json.dumps(meta, indent=1, sort_keys=True) + "\n",
    )
    store.write_model_file(
        repo.owner, repo.name, model_id, "tfidf.json", textprep.model_to_json(tfidf)
    )
    for label, model in br.forests.items():
        store.write_model_file(
            repo.owner, repo.name, model_id, _forest_filename(label),
            forest_mod.forest_to_json(model),
        )
    return model_id, report.as_dict()


def load_model_bundle(store: Store, repo: RepoRef, model_id: str, taxonomy: Taxonomy):
    try:
        meta = json.loads(store.read_model_file(repo.owner, repo.name, model_id, "model.meta.json"))
    except Exception as exc:
        raise ModelMissing(f"model {model_id} not found for {repo.owner}/{repo.name}") from exc
    if meta.get("format") != MODEL_META_FORMAT:
        raise PipelineError(f"unsupported model bundle format {meta.get('format')!r}")
    if meta["taxonomy_version"] != taxonomy.version:
        raise TaxonomyVersionError(
            f"model taxonomy {meta['taxonomy_version']!r} != loaded {taxonomy.version!r}"
        )
    tfidf = textprep.model_from_json(
        store.read_model_file(repo.owner, repo.name, model_id, "tfidf.json")
    )
    forests = {
        label: forest_mod.forest_from_json(
            store.read_model_file(repo.owner, repo.name, model_id, _forest_filename(label))
        )
        for label in meta["labels_trained"]
    }
    br = forest_mod.BinaryRelevanceModel(
        forests=forests,
        label_order=tuple(taxonomy.label_order),
        untrainable=tuple(meta["untrainable"]),
        taxonomy_version=meta["taxonomy_version"],
        theta=meta["theta"],
    )
    return br, tfidf, meta


def latest_model_id(store: Store, repo: RepoRef) -> Optional[str]:
    models = store.list_models(repo.owner, repo.name)
    return models[-1] if models else None


def _ranked_skills(scores: dict[str, float], taxonomy: Taxonomy, limit: int) -> list[dict]:
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:limit]
    return [
        {"label": label, "display_path": display_path(taxonomy, label), "score": round(score, 6)}
        for label, score in ranked
    ]


def run_predict(
    store: Store,
    repo: RepoRef,
    config: AppConfig,
    limit: int,
    skills_per_issue: int,
    algorithm: str = "rf",
    model_id: Optional[str] = None,
) -> list[dict]:
    """Fetch open issues and rank predicted skills per issue. ``rf`` uses a
    trained bundle; ``llm`` asks the configured provider per domain."""
    taxonomy = config.load_taxonomy()
    transport = config.make_transport()
    open_issues = fetch_open_issues(repo, limit, transport, config.miner_config())
    responses = []
    if algorithm == "rf":
        chosen = model_id or latest_model_id(store, repo)
        if chosen is None:
            raise ModelMissing(f"no trained model for {repo.owner}/{repo.name}; train first")
        br, tfidf, _ = load_model_bundle(store, repo, chosen, taxonomy)
        for issue in open_issues:
            tokens = textprep.tokenize(
                " ".join(
                    p for p in (textprep.clean_text(issue.title), textprep.clean_text(issue.body)) if p
                )
            )
            vec = textprep.to_dense(textprep.transform(tfidf, tokens), tfidf.size)
            scores = forest_mod.predict_labels(br, vec)
            responses.append(_response(issue, "rf", _ranked_skills(scores, taxonomy, skills_per_issue)))
    elif algorithm == "llm":
        provider = config.make_provider()
        if provider is None:
            raise PipelineError("provider unavailable: configure an llm provider")
        for issue in open_issues:
            vector = classify_issue_llm(
                issue.number,
                issue.title,
                issue.body,
                taxonomy,
                provider,
                tau=config.tau,
                single_pass=config.provider.single_pass,
            )
            scores = {label: 1.0 for label, bit in vector.bits.items() if bit}
            responses.append(_response(issue, "llm", _ranked_skills(scores, taxonomy, skills_per_issue)))
    else:
        raise PipelineError(f"unknown algorithm {algorithm!r}")
    return responses


def _response(issue: IssueRecord, algorithm: str, skills: list[dict]) -> dict:
    return {
        "issue": issue.number,
        "title": issue.title,
        "url": issue.url,
        "algorithm": algorithm,
        "skills": skills,
    }


def run_evaluate(store: Store, repo: RepoRef, config: AppConfig, model_id: Optional[str] = None) -> dict:
    """Recompute the held-out evaluation for a stored bundle using its
    recorded seed and split ratio."""
    taxonomy = config.load_taxonomy()
    chosen = model_id or latest_model_id(store, repo)
    if chosen is None:
        raise ModelMissing(f"no trained model for {repo.owner}/{repo.name}")
    br, tfidf, meta = load_model_bundle(store, repo, chosen, taxonomy)
    dataset = load_dataset(store, repo)
    features = _features_for(dataset, tfidf)
    labels = _label_matrix(dataset, taxonomy)
    ds = MultilabelDataset(
        features=features,
        labels=labels,
        provenance=[REAL] * len(dataset.rows),
        issue_numbers=[r.issue for r in dataset.rows],
    )
    _, test = forest_mod.split_dataset(ds, ratio=meta["split_ratio"], seed=meta["seed"])
    predicted = np.zeros_like(test.labels)
    label_index = {label: j for j, label in enumerate(taxonomy.label_order)}
    for i in range(test.n_rows):
        for label in forest_mod.predict_labels(br, test.features[i]):
            predicted[i, label_index[label]] = 1
    report = forest_mod.evaluate_micro(
        test.labels,
        predicted,
        split_description=f"recomputed from bundle {chosen}",
        synthetic_rows_excluded=True,
        label_order=tuple(taxonomy.label_order),
    )
    return report.as_dict()


def run_export_finetune(
    store: Store,
    repo: RepoRef,
    config: AppConfig,
    out_dir: str,
    synthetic: bool = False,
) -> dict:
    """Write per-domain fine-tune files from the stored dataset, optionally
    topping up under-represented domains with provider-rephrased issues."""
    taxonomy = config.load_taxonomy()
    dataset = load_dataset(store, repo)
    if synthetic:
        provider = config.make_provider()
        if provider is None:
            raise PipelineError("synthetic generation requires an llm provider")
        result = generate_synthetic(dataset, taxonomy, provider, seed=config.seed)
        from .parse_engine import DatasetRow

        extra = [
            DatasetRow(
                issue=-(i + 1),  # synthetic rows get negative pseudo-numbers
                text=f"{s.title} {s.body}",
                labels=list(s.labels),
            )
            for i, s in enumerate(result.synthetics)
        ]
        dataset = SkillDataset(
            rows=dataset.rows + extra,
            taxonomy_version=dataset.taxonomy_version,
            provenance=dict(dataset.provenance, synthetic_added=len(extra)),
        )
    return export_finetune_dataset(
        dataset, taxonomy, out_dir, ratio=config.finetune_ratio, seed=config.seed
    )
