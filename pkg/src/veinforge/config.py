"""Pipeline configuration: a flat key = value file with dotted keys.

Grammar, line by line: blank lines and lines starting with # are skipped;
anything else must be `key = value` where the key is dotted lowercase
identifiers. Values keep their verbatim text (paths may contain spaces);
type conversion happens at the accessor. Unknown keys are rejected rather
than ignored so typos surface immediately.

Every key has a default, and the defaults alone run the entire synthetic
pipeline end to end: synth writes the dataset where dataset.manifest points,
and each later command finds the previous one's artifacts under output.dir.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidParamError, ParseError

DEFAULTS: dict[str, str] = {
    "dataset.manifest": "out/synth/manifest.csv",
    "split.fraction": "0.67",
    "split.seed": "42",
    "enhance.alpha": "1.0",
    "enhance.beta": "0.0",
    "enhance.grid_cols": "8",
    "enhance.grid_rows": "8",
    "enhance.clip_limit": "2.0",
    "enhance.sigma": "1.0",
    "enhance.ksize": "0",  # 0 picks 2*ceil(3*sigma)+1
    "enhance.width": "256",
    "enhance.height": "256",
    "extract.method": "lbp",  # lbp | mc | pca-over-lbp | pca-over-mc | file:<path>
    "extract.grid_cols": "8",
    "extract.grid_rows": "8",
    "extract.mc_sigma": "2.0",
    "extract.mc_grid_cols": "16",
    "extract.mc_grid_rows": "16",
    "extract.pca_components": "64",
    "forest.n_trees": "100",
    "forest.max_depth": "0",
    "forest.min_samples_leaf": "1",
    "forest.features_per_split": "0",  # 0 picks ceil(sqrt(dimension))
    "forest.seed": "42",
    "evaluate.policy": "all",  # all | sampled
    "evaluate.imposter_k": "4",
    "evaluate.imposter_seed": "0",
    "evaluate.target_fmr": "0.01",
    "synth.classes": "20",
    "synth.samples": "10",
    "synth.seed": "7",
    "synth.width": "128",
    "synth.height": "128",
    "verify.threshold": "auto",  # auto reads the evaluation report's operating point
    "output.dir": "out",
}

_KEY_RE = re.compile(r"^[a-z][a-z0-9_]*(\.[a-z][a-z0-9_]*)+$")


@dataclass
class Config:
    values: dict[str, str] = field(default_factory=lambda: dict(DEFAULTS))

    def get(self, key: str) -> str:
        if key not in self.values:
            raise InvalidParamError(f"unknown config key {key!r}")
        return self.values[key]

    def get_int(self, key: str) -> int:
        raw = self.get(key)
        try:
            return int(raw)
        except ValueError:
            raise InvalidParamError(f"{key} must be an integer, got {raw!r}") from None

    def get_float(self, key: str) -> float:
        raw = self.get(key)
        try:
            return float(raw)
        except ValueError:
            raise InvalidParamError(f"{key} must be a number, got {raw!r}") from None

    def get_path(self, key: str) -> Path:
        return Path(self.get(key))

    def set(self, key: str, value: str) -> None:
        if key not in DEFAULTS:
            raise ParseError(f"unknown config key {key!r}")
        self.values[key] = value


def default_config() -> Config:
    return Config()


def parse_config(text: str) -> Config:
    cfg = default_config()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParseError(f"line {lineno}: expected `key = value`, got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not _KEY_RE.match(key):
            raise ParseError(f"line {lineno}: malformed key {key!r}")
        if key not in DEFAULTS:
            raise ParseError(f"line {lineno}: unknown config key {key!r}")
        cfg.values[key] = value
    return cfg


def format_config(cfg: Config) -> str:
    lines = [f"{key} = {cfg.values[key]}" for key in DEFAULTS]
    return "\n".join(lines) + "\n"


def load_config(path: str | Path) -> Config:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    return parse_config(path.read_text(encoding="utf-8"))


def save_config(path: str | Path, cfg: Config) -> None:
    Path(path).write_text(format_config(cfg), encoding="utf-8")


def apply_overrides(cfg: Config, pairs: list[str]) -> None:
    """Apply CLI leftovers of the form --key=value."""
    for pair in pairs:
        if not pair.startswith("--") or "=" not in pair:
            raise ParseError(f"overrides look like --key=value, got {pair!r}")
        key, _, value = pair[2:].partition("=")
        cfg.set(key.strip(), value.strip())
