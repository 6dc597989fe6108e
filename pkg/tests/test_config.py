import json

import pytest

from pfge.config import apply_overrides, config_from_dict, iterations_per_epoch, load_config
from pfge.errors import ConfigurationError


def base_doc(**updates):
    doc = {
        "seed": 1,
        "output_dir": "runs/demo",
        "dataset": {"kind": "two_spirals", "n_per_class": 50},
        "model": {"sizes": [2, 16, 2]},
        "batch_size": 25,
        "algorithm": "pfge",
        "schedule": {"cycle_epochs": 2},
        "budget": {"total_epochs": 40, "record_epochs": 10},
    }
    doc.update(updates)
    return doc


class TestDefaults:
    def test_fills_defaults(self):
        cfg = config_from_dict(base_doc())
        assert cfg.run_id == "pfge-seed1"
        assert cfg.optimizer["momentum"] == 0.9
        assert cfg.optimizer["weight_decay"] == 5e-4
        assert cfg.ece_bins == 15
        assert cfg.last_k is None
        assert cfg.document["schedule"]["alpha1"] == 0.05
        assert cfg.document["dataset"]["test_seed"] == 2
        assert str(cfg.w0_path) == "runs/demo/w0.ckpt"

    def test_explicit_values_kept(self):
        doc = base_doc(run_id="custom", last_k=4)
        doc["schedule"]["alpha1"] = 0.1
        cfg = config_from_dict(doc)
        assert cfg.run_id == "custom"
        assert cfg.last_k == 4
        assert cfg.document["schedule"]["alpha1"] == 0.1

    def test_batch_size_defaults_to_128(self):
        doc = base_doc()
        del doc["batch_size"]
        assert config_from_dict(doc).batch_size == 128


class TestValidation:
    def test_missing_required_field(self):
        doc = base_doc()
        del doc["model"]
        with pytest.raises(ConfigurationError, match="model"):
            config_from_dict(doc)

    def test_bad_algorithm(self):
        with pytest.raises(ConfigurationError, match="algorithm"):
            config_from_dict(base_doc(algorithm="swag"))

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigurationError):
            config_from_dict(base_doc(mystery_field=3))

    def test_dataset_kind_fields_required(self):
        doc = base_doc(dataset={"kind": "csv", "train_path": "train.csv"})
        with pytest.raises(ConfigurationError, match="test_path"):
            config_from_dict(doc)

    def test_error_names_field_path(self):
        doc = base_doc()
        doc["schedule"]["alpha1"] = -1
        with pytest.raises(ConfigurationError, match="alpha1"):
            config_from_dict(doc)


class TestResolution:
    def test_epoch_conversion(self):
        cfg = config_from_dict(base_doc())
        e = iterations_per_epoch(100, cfg.batch_size)
        assert e == 4
        sched = cfg.resolve_schedule(e)
        budget = cfg.resolve_budget(e)
        assert sched.cycle_len == 8
        assert budget.total_iters == 160
        assert budget.record_period == 40

    def test_iteration_denominated_fields(self):
        doc = base_doc()
        doc["schedule"] = {"cycle_len": 6}
        doc["budget"] = {"total_iters": 36, "record_period": 12}
        cfg = config_from_dict(doc)
        assert cfg.resolve_schedule(4).cycle_len == 6
        assert cfg.resolve_budget(4).total_iters == 36

    def test_both_denominations_rejected(self):
        doc = base_doc()
        doc["schedule"] = {"cycle_len": 6, "cycle_epochs": 2}
        cfg = config_from_dict(doc)
        with pytest.raises(ConfigurationError, match="exactly one"):
            cfg.resolve_schedule(4)

    def test_pfge_needs_record(self):
        doc = base_doc()
        doc["budget"] = {"total_epochs": 40}
        cfg = config_from_dict(doc)
        with pytest.raises(ConfigurationError, match="record"):
            cfg.resolve_budget(4)

    def test_record_ignored_for_other_algorithms(self):
        cfg = config_from_dict(base_doc(algorithm="fge"))
        assert cfg.resolve_budget(4).record_period is None


class TestOverrides:
    def test_dotted_override(self):
        doc = apply_overrides(base_doc(), ["schedule.alpha1=0.2", "algorithm=fge"])
        assert doc["schedule"]["alpha1"] == 0.2
        assert doc["algorithm"] == "fge"

    def test_json_values(self):
        doc = apply_overrides(base_doc(), ["last_k=null", "model.sizes=[2,8,2]"])
        assert doc["last_k"] is None
        assert doc["model"]["sizes"] == [2, 8, 2]

    def test_string_fallback(self):
        doc = apply_overrides(base_doc(), ["run_id=trial-a"])
        assert doc["run_id"] == "trial-a"

    def test_malformed_override(self):
        with pytest.raises(ConfigurationError):
            apply_overrides(base_doc(), ["oops"])


class TestLoadConfig:
    def test_load_with_overrides(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(base_doc()))
        cfg = load_config(path, ["seed=7"])
        assert cfg.seed == 7
        assert cfg.run_id == "pfge-seed7"

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{")
        with pytest.raises(ConfigurationError, match="invalid JSON"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_config(tmp_path / "none.json")
