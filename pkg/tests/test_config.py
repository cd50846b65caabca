"""Config grammar, defaults, round-tripping, and override handling."""

import pytest

from veinforge.config import (
    DEFAULTS,
    apply_overrides,
    default_config,
    format_config,
    load_config,
    parse_config,
    save_config,
)
from veinforge.errors import InvalidParamError, ParseError


def test_defaults_cover_every_key():
    cfg = default_config()
    assert set(cfg.values) == set(DEFAULTS)
    assert cfg.get("extract.method") == "lbp"
    assert cfg.get_int("forest.n_trees") == 100
    assert cfg.get_float("split.fraction") == 0.67
    assert cfg.get_int("enhance.width") == 256
    assert cfg.get_int("enhance.height") == 256


def test_parse_overlays_defaults():
    cfg = parse_config("forest.n_trees = 7\n\n# comment\nsynth.classes = 3\n")
    assert cfg.get_int("forest.n_trees") == 7
    assert cfg.get_int("synth.classes") == 3
    assert cfg.get_int("forest.seed") == 42  # untouched default


def test_values_may_contain_spaces_and_equals():
    cfg = parse_config("dataset.manifest = /data/my set/manifest.csv\n")
    assert cfg.get("dataset.manifest") == "/data/my set/manifest.csv"
    cfg = parse_config("dataset.manifest = a=b.csv\n")
    assert cfg.get("dataset.manifest") == "a=b.csv"


def test_round_trip_is_lossless():
    cfg = default_config()
    cfg.set("enhance.clip_limit", "3.25")
    cfg.set("dataset.manifest", "some/where else.csv")
    again = parse_config(format_config(cfg))
    assert again.values == cfg.values
    assert format_config(again) == format_config(cfg)


def test_file_round_trip(tmp_path):
    cfg = default_config()
    cfg.set("synth.seed", "123")
    path = tmp_path / "pipeline.cfg"
    save_config(path, cfg)
    assert load_config(path).values == cfg.values


def test_unknown_key_rejected():
    with pytest.raises(ParseError):
        parse_config("forest.n_tres = 7\n")
    with pytest.raises(ParseError):
        default_config().set("nope.nope", "1")


def test_malformed_lines_rejected():
    with pytest.raises(ParseError):
        parse_config("just some words\n")
    with pytest.raises(ParseError):
        parse_config("UPPER.case = 1\n")
    with pytest.raises(ParseError):
        parse_config("nodots = 1\n")


def test_typed_accessors_validate():
    cfg = parse_config("forest.n_trees = many\n")
    with pytest.raises(InvalidParamError):
        cfg.get_int("forest.n_trees")
    cfg = parse_config("split.fraction = half\n")
    with pytest.raises(InvalidParamError):
        cfg.get_float("split.fraction")
    with pytest.raises(InvalidParamError):
        cfg.get("not.a.key")


def test_apply_overrides():
    cfg = default_config()
    apply_overrides(cfg, ["--forest.n_trees=9", "--output.dir=elsewhere"])
    assert cfg.get_int("forest.n_trees") == 9
    assert cfg.get("output.dir") == "elsewhere"
    with pytest.raises(ParseError):
        apply_overrides(cfg, ["--forest.n_trees"])
    with pytest.raises(ParseError):
        apply_overrides(cfg, ["forest.n_trees=9"])
    with pytest.raises(ParseError):
        apply_overrides(cfg, ["--no.such.key=1"])


def test_missing_config_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "absent.cfg")
