"""Runtime configuration: every tunable number in the system lives here and
is overridable from a JSON config file.

``--offline`` (or ``"offline": true``) forbids all network use: the miner
must run from a replay cassette and the LLM provider must be a stub or
replay provider. Offline violations fail fast with a named error.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .forest import DEFAULT_THETA, Hyperparams
from .miner import MinerConfig
from .taxonomy import DEFAULT_TAU, Taxonomy, load_taxonomy, seed_taxonomy


class ConfigError(Exception):
    pass


class OfflineViolation(ConfigError):
    """A network-touching component was requested in offline mode."""


@dataclass
class ProviderSettings:
    kind: str = "none"  # none | stub | replay | remote
    model: str = ""
    endpoint: str = ""
    cassette: str = ""  # replay provider cassette
    rules: list = field(default_factory=list)  # stub rule table
    default_response: str = "0"
    single_pass: bool = False  # the weaker one-prompt-for-all-domains variant


@dataclass
class MinerSettings:
    concurrency: int = 4
    max_retries: int = 5
    backoff_base: float = 0.1
    per_page: int = 100
    cassette: str = ""  # replay transport cassette; empty means live


@dataclass
class AppConfig:
    tau: float = DEFAULT_TAU
    theta: float = DEFAULT_THETA
    n_trees: int = 100
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1
    features_per_split: str | int = "sqrt"
    bootstrap: bool = True
    mlsmote_k: int = 5
    use_mlsmote: bool = True
    split_ratio: float = 0.8
    finetune_ratio: float = 0.7
    seed: int = 0
    offline: bool = False
    taxonomy_path: str = ""  # empty means the packaged seed file
    miner: MinerSettings = field(default_factory=MinerSettings)
    provider: ProviderSettings = field(default_factory=ProviderSettings)

    @classmethod
    def from_file(cls, path: str | Path) -> "AppConfig":
        try:
            data = json.loads(Path(path).read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "AppConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(data)
        if "miner" in kwargs:
            kwargs["miner"] = MinerSettings(**kwargs["miner"])
        if "provider" in kwargs:
            kwargs["provider"] = ProviderSettings(**kwargs["provider"])
        return cls(**kwargs)

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(
            n_trees=self.n_trees,
            max_depth=self.max_depth,
            min_samples_leaf=self.min_samples_leaf,
            features_per_split=self.features_per_split,
            bootstrap=self.bootstrap,
        )

    def load_taxonomy(self) -> Taxonomy:
        if self.taxonomy_path:
            return load_taxonomy(Path(self.taxonomy_path).read_bytes())
        return seed_taxonomy()

    def miner_config(self, sleeper=None, clock=None) -> MinerConfig:
        kwargs = dict(
            concurrency=self.miner.concurrency,
            max_retries=self.miner.max_retries,
            backoff_base=self.miner.backoff_base,
            per_page=self.miner.per_page,
        )
        if sleeper is not None:
            kwargs["sleeper"] = sleeper
        if clock is not None:
            kwargs["clock"] = clock
        return MinerConfig(**kwargs)

    def make_transport(self):
        from .transport import LiveTransport, ReplayTransport

        if self.miner.cassette:
            return ReplayTransport(self.miner.cassette)
        if self.offline:
            raise OfflineViolation("offline mode requires a miner replay cassette")
        return LiveTransport()

    def make_provider(self):
        """Provider instance or None when unconfigured."""
        from .llm_bridge import RemoteChatProvider, ReplayProvider, RuleStubProvider

        kind = self.provider.kind
        if kind == "none":
            return None
        if kind == "stub":
            rules = [(tuple(p) if isinstance(p, list) else p, r) for p, r in self.provider.rules]
            return RuleStubProvider(rules=rules, default=self.provider.default_response)
        if kind == "replay":
            if not self.provider.cassette:
                raise ConfigError("replay provider requires a cassette path")
            return ReplayProvider(self.provider.cassette)
        if kind == "remote":
            if self.offline:
                raise OfflineViolation("offline mode forbids the remote provider")
            if not self.provider.endpoint or not self.provider.model:
                raise ConfigError("remote provider requires endpoint and model")
            return RemoteChatProvider(endpoint=self.provider.endpoint, model=self.provider.model)
        raise ConfigError(f"unknown provider kind: {kind!r}")
