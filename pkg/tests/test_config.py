import json

import numpy as np
import pytest

from exotic_limits.config import ConfigError, load_config, parse_quantity, resolve_config
from exotic_limits.geometry import MAGIC_ANGLE


class TestQuantityParsing:
    @pytest.mark.parametrize(
        "raw,dimension,expected",
        [
            ("9.3um", "length", 9.3e-6),
            ("718nm", "length", 718e-9),
            ("1.953kHz", "frequency", 1953.0),
            ("-32deg", "angle", np.deg2rad(-32)),
            ("20G", "field", 2e-3),
            ("0.5pT", "field", 0.5e-12),
            ("1.4nT", "field", 1.4e-9),
            ("291.9h", "time", 291.9 * 3600),
            ("10ms", "time", 0.01),
            (6.8e30, "dimensionless", 6.8e30),
            ("978um", "length", 978e-6),
        ],
    )
    def test_accepted_forms(self, raw, dimension, expected):
        assert parse_quantity(raw, dimension) == pytest.approx(expected, rel=1e-12)

    def test_bad_unit_names_dimension(self):
        with pytest.raises(ConfigError, match="length"):
            parse_quantity("9.3kg", "length", key="gap_min")

    def test_garbage_rejected(self):
        with pytest.raises(ConfigError):
            parse_quantity("not-a-number", "length", key="radius")


class TestResolve:
    def test_empty_overrides_give_paper_defaults(self):
        cfg = resolve_config({})
        geom = cfg.geometry()
        assert geom.sphere.radius == pytest.approx(978e-6)
        assert geom.kinematics.gap_min == pytest.approx(9.3e-6)
        assert geom.kinematics.amplitude == pytest.approx(718e-9)
        assert geom.kinematics.frequency == pytest.approx(1953.0)
        assert geom.slab.extent == (pytest.approx(660e-6), pytest.approx(661e-6))
        assert geom.slab.axis_angle == pytest.approx(MAGIC_ANGLE, abs=0)
        assert cfg.mc().pair_count == 1 << 20
        assert cfg.chain().calibration_constant == pytest.approx(2.29e5)
        assert len(cfg.budget_rows) == 9

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="not_a_key"):
            resolve_config({"not_a_key": 1})

    def test_negative_gap_names_key(self):
        with pytest.raises(ConfigError, match="gap_min"):
            resolve_config({"gap_min": "-1um"})

    def test_mc_override_reflected(self):
        cfg = resolve_config({"mc_pairs": 65536})
        assert cfg.mc().pair_count == 65536
        assert cfg.resolved()["mc_pairs"] == 65536

    def test_non_integer_pairs_rejected(self):
        with pytest.raises(ConfigError, match="mc_pairs"):
            resolve_config({"mc_pairs": 2.5})

    def test_bad_convention_rejected(self):
        with pytest.raises(ConfigError, match="channel_convention"):
            resolve_config({"channel_convention": "sideways"})

    def test_budget_row_overrides(self):
        rows = [
            {"name": "distance", "kind": "kernel", "parameter": "gap_min",
             "sigma": "0.5um"},
        ]
        cfg = resolve_config({"budget_rows": rows})
        assert len(cfg.budget_rows) == 1
        assert cfg.budget_rows[0].sigma == pytest.approx(0.5e-6)

    def test_budget_row_validation(self):
        with pytest.raises(ConfigError, match="budget_rows"):
            resolve_config({"budget_rows": [{"kind": "kernel"}]})
        with pytest.raises(ConfigError, match="unknown keys"):
            resolve_config({"budget_rows": [
                {"name": "x", "kind": "phase", "sigma": "9deg", "bogus": 1}
            ]})
        with pytest.raises(ConfigError, match="kernel parameter"):
            resolve_config({"budget_rows": [
                {"name": "x", "kind": "kernel", "parameter": "nope", "sigma": 1.0}
            ]})


class TestLoadConfig:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.json")

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text("")
        cfg = load_config(path)
        assert cfg.geometry().sphere.radius == pytest.approx(978e-6)

    def test_valid_file_roundtrip(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"gap_min": "12um", "seed": 7}))
        cfg = load_config(path)
        assert cfg.geometry().kinematics.gap_min == pytest.approx(12e-6)
        assert cfg.mc().seed == 7

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_config(path)

    def test_non_object_rejected(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="object"):
            load_config(path)

    def test_none_gives_defaults(self):
        cfg = load_config(None)
        assert cfg.mc().seed == 23
