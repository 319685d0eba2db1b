"""Pipeline configuration: JSON file schema plus flag overrides.

Precedence, lowest to highest: built-in defaults, config file, the global
--seed/--dim flags, then any field-specific flag.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .corpus import SplitSpec
from .embed import ProviderConfig
from .forest import ForestConfig


class ConfigError(ValueError):
    """Config file or flag combination is invalid."""


@dataclass(frozen=True)
class PipelineConfig:
    provider: ProviderConfig = ProviderConfig()
    forest: ForestConfig = ForestConfig()
    split: SplitSpec = SplitSpec()
    vocab_path: str | None = None
    lexicon_path: str | None = None
    max_len: int = 128

    def validate_paths(self) -> None:
        """Referenced paths must exist before any command runs."""
        for label, value in (
            ("provider.path", self.provider.path if self.provider.kind == "file" else None),
            ("vocab_path", self.vocab_path),
            ("lexicon_path", self.lexicon_path),
        ):
            if value is not None and not Path(value).exists():
                raise ConfigError(f"{label}: no such file: {value}")


def _build(section: dict, cls, where: str):
    try:
        return cls(**section)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def load_config(path: str | Path) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    known = {"provider", "forest", "split", "vocab_path", "lexicon_path", "max_len"}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    forest_section = dict(obj.get("forest", {}))
    if "max_features" in forest_section:
        forest_section["max_features"] = parse_max_features(forest_section["max_features"])
    return PipelineConfig(
        provider=_build(obj.get("provider", {}), ProviderConfig, f"{path}: provider"),
        forest=_build(forest_section, ForestConfig, f"{path}: forest"),
        split=_build(obj.get("split", {}), SplitSpec, f"{path}: split"),
        vocab_path=obj.get("vocab_path"),
        lexicon_path=obj.get("lexicon_path"),
        max_len=obj.get("max_len", 128),
    )


def parse_max_features(raw) -> str | int:
    if isinstance(raw, int) and not isinstance(raw, bool):
        return raw
    if isinstance(raw, str):
        if raw in ("sqrt", "all"):
            return raw
        if raw.isdigit():
            return int(raw)
    raise ConfigError(f"max_features must be 'sqrt', 'all' or a positive integer, got {raw!r}")


def parse_max_depth(raw: str) -> int | None:
    if raw.lower() in ("none", "unbounded"):
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"max_depth must be an integer or 'none', got {raw!r}") from None


def apply_overrides(cfg: PipelineConfig, args) -> PipelineConfig:
    """Overlay parsed CLI flags (None means 'not given') onto a config."""

    def pick(flag, fallback):
        return fallback if flag is None else flag

    seed = getattr(args, "seed", None)
    dim = getattr(args, "dim", None)

    provider = replace(
        cfg.provider,
        kind=pick(getattr(args, "provider", None), cfg.provider.kind),
        dim=pick(dim, cfg.provider.dim),
        path=pick(getattr(args, "store", None), cfg.provider.path),
        endpoint=pick(getattr(args, "endpoint", None), cfg.provider.endpoint),
        timeout_s=pick(getattr(args, "timeout", None), cfg.provider.timeout_s),
        seed=pick(getattr(args, "provider_seed", None), pick(seed, cfg.provider.seed)),
    )
    max_depth = getattr(args, "max_depth", None)
    forest = replace(
        cfg.forest,
        n_estimators=pick(getattr(args, "n_estimators", None), cfg.forest.n_estimators),
        max_depth=cfg.forest.max_depth if max_depth is None else parse_max_depth(max_depth),
        max_features=pick(getattr(args, "max_features", None), cfg.forest.max_features),
        bootstrap=pick(getattr(args, "bootstrap", None), cfg.forest.bootstrap),
        seed=pick(getattr(args, "forest_seed", None), pick(seed, cfg.forest.seed)),
        min_samples_split=pick(getattr(args, "min_samples_split", None), cfg.forest.min_samples_split),
    )
    split = replace(
        cfg.split,
        train_fraction=pick(getattr(args, "train_fraction", None), cfg.split.train_fraction),
        seed=pick(getattr(args, "split_seed", None), pick(seed, cfg.split.seed)),
        stratified=pick(getattr(args, "stratified", None), cfg.split.stratified),
    )
    return PipelineConfig(
        provider=provider,
        forest=forest,
        split=split,
        vocab_path=pick(getattr(args, "vocab", None), cfg.vocab_path),
        lexicon_path=pick(getattr(args, "lexicon", None), cfg.lexicon_path),
        max_len=pick(getattr(args, "max_len", None), cfg.max_len),
    )


def resolve_config(args) -> PipelineConfig:
    base = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    cfg = apply_overrides(base, args)
    cfg.validate_paths()
    return cfg
