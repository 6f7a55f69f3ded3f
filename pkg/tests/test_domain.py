import io
import json
import zipfile

import numpy as np
import pytest

from cems import (
    PvParams,
    config_to_dict,
    config_to_json,
    generate_synthetic_community,
    load_community_config,
    replication_config,
    validate_config,
)
from cems.domain import (
    ConfigError,
    InvalidConfigError,
    ParseError,
    SchemaError,
    archetype_counts,
    default_peak_limit,
    default_t_in_initial,
    parse_big_m_policy,
)

from conftest import make_community, make_ess, make_home, make_hvac, random_small_config


# -- loading and round trips ------------------------------------------------

def test_json_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    cfg = random_small_config(rng)
    text = config_to_json(cfg)
    again = load_community_config(text)
    assert again == cfg
    path = tmp_path / "community.json"
    path.write_text(text)
    assert load_community_config(str(path)) == cfg
    assert load_community_config(text.encode()) == cfg
    assert load_community_config(io.BytesIO(text.encode())) == cfg


def test_replication_dataset_loads_and_validates():
    cfg = replication_config()
    assert cfg.horizon_slots == 24
    assert len(cfg.homes) == 10
    report = validate_config(cfg)
    assert report.ok
    assert not report.errors
    counts = archetype_counts(cfg)
    assert counts == {"pv+ess": 3, "pv": 2, "ess": 2, "bare": 3}


def test_csv_bundle_round_trip(tmp_path):
    cfg = replication_config()
    doc = config_to_dict(cfg)
    series = doc.pop("series")
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as z:
        z.writestr("community.json", json.dumps(doc))
        for name, values in series.items():
            rows = "\n".join(f"{i + 1},{v}" for i, v in enumerate(values))
            z.writestr(f"{name}.csv", f"slot,value\n{rows}\n")
    assert load_community_config(buf.getvalue(), format="csv-bundle") == cfg


def test_csv_bundle_requires_community_json():
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as z:
        z.writestr("other.json", "{}")
    with pytest.raises(SchemaError):
        load_community_config(buf.getvalue(), format="csv-bundle")


def test_malformed_json_raises_parse_error():
    with pytest.raises(ParseError):
        load_community_config("{not json")


def test_missing_file_raises_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_community_config(str(tmp_path / "nope.json"))


# -- validation -------------------------------------------------------------

def _doc(mutate=None):
    doc = config_to_dict(replication_config())
    if mutate:
        mutate(doc)
    return json.dumps(doc)


def test_validate_reports_paths_in_order():
    def mutate(doc):
        doc["homes"][2]["ess"] = {
            "level_min": 2.0, "level_max": 1.0, "level_initial": 5.0,
            "charge_rate_max": -1.0, "discharge_rate_max": 2.0, "efficiency": 0.9,
        }
        doc["series"]["buy_price"][3] = -4.0

    with pytest.raises(InvalidConfigError) as exc:
        load_community_config(_doc(mutate))
    errors = exc.value.report.errors
    assert errors
    paths = [path for path, _ in errors]
    # community-level issues come before per-home ones
    assert any("buy_price" in p for p in paths)
    assert any(p.startswith("homes[2].ess") for p in paths)
    first_home = next(i for i, p in enumerate(paths) if p.startswith("homes"))
    assert all(p.startswith("homes") for p in paths[first_home:])


def test_validate_rejects_duplicate_ids():
    def mutate(doc):
        doc["homes"][1]["id"] = doc["homes"][0]["id"]

    with pytest.raises(InvalidConfigError) as exc:
        load_community_config(_doc(mutate))
    assert any("duplicate" in msg for _, msg in exc.value.report.errors)


def test_wrong_series_length_rejected_at_parse():
    def mutate(doc):
        doc["series"]["ghi"] = doc["series"]["ghi"][:-1]

    with pytest.raises(SchemaError):
        load_community_config(_doc(mutate))


def test_validate_rejects_alpha_out_of_band():
    def mutate(doc):
        doc["community"]["alpha"] = 1.4

    with pytest.raises(InvalidConfigError):
        load_community_config(_doc(mutate))


def test_validate_warns_on_load_above_community_peak():
    home = make_home("big", 2, fixed_load=[300.0, 300.0], peak_limit=400.0)
    cfg = make_community([home], [2.0, 2.0], community_peak=10.0)
    report = validate_config(cfg)
    assert report.ok
    assert report.warnings


def test_defaults():
    assert default_t_in_initial(66.2, 75.2) == pytest.approx(70.7)
    ess = make_ess(charge_rate_max=2.0)
    assert default_peak_limit(10.0, [1.0, 3.0], ess, 1.0) == pytest.approx(10.0 + 3.0 + 2.0)


def test_big_m_policy_parsing_and_validation(replication):
    from dataclasses import replace

    assert parse_big_m_policy("derived") is None
    assert parse_big_m_policy("fixed:1e9") == pytest.approx(1e9)
    assert parse_big_m_policy("fixed:250") == pytest.approx(250.0)
    assert parse_big_m_policy("fixed:zzz") is None
    # an unknown policy string is a validation error, not a parse crash
    report = validate_config(replace(replication, big_m_policy="loose"))
    assert not report.ok
    assert any("big_m_policy" in path for path, _ in report.errors)


# -- synthetic generation ---------------------------------------------------

def test_generation_zero_jitter_reproduces_template(replication):
    out = generate_synthetic_community(10, seed=3, template=replication,
                                       load_jitter=0.0)
    assert out == replication


def test_generation_cycles_template_in_order(replication):
    out = generate_synthetic_community(23, seed=3, template=replication)
    assert len(out.homes) == 23
    for i, home in enumerate(out.homes):
        assert home.archetype == replication.homes[i % 10].archetype
    # recycled ids get a numbered suffix
    assert out.homes[10].id != out.homes[0].id
    assert len({h.id for h in out.homes}) == 23


def test_generation_counts_at_500(replication):
    out = generate_synthetic_community(500, seed=0, template=replication,
                                       load_jitter=0.0)
    assert archetype_counts(out) == {"pv+ess": 150, "pv": 100, "ess": 100,
                                     "bare": 150}


def test_generation_jitter_bounds_and_determinism(replication):
    a = generate_synthetic_community(30, seed=11, template=replication,
                                     load_jitter=0.2)
    b = generate_synthetic_community(30, seed=11, template=replication,
                                     load_jitter=0.2)
    c = generate_synthetic_community(30, seed=12, template=replication,
                                     load_jitter=0.2)
    assert a == b
    assert a != c
    for i, home in enumerate(a.homes):
        base = replication.homes[i % 10].fixed_load
        ratio = home.fixed_load / base
        assert np.all(ratio >= 0.8 - 1e-12)
        assert np.all(ratio <= 1.2 + 1e-12)
    assert a.community_peak == pytest.approx(replication.community_peak * 3.0)
    # the template itself is untouched
    assert replication == replication_config()


def test_generation_scales_peak_with_size(replication):
    half = generate_synthetic_community(5, seed=1, template=replication)
    assert half.community_peak == pytest.approx(replication.community_peak * 0.5)
    report = validate_config(half)
    assert report.ok


def test_pv_params_round_trip_through_dict():
    home = make_home("p", 3, pv=PvParams(panel_area=7.5, efficiency=0.19),
                     fixed_load=[0.5, 0.5, 0.5])
    cfg = make_community([home], [2.0, 3.0, 4.0], ghi=[0.1, 0.5, 0.2])
    assert load_community_config(config_to_json(cfg)) == cfg
