import json

import pytest

from adtnsim.config import apply_overrides, config_from_dict, load_config
from adtnsim.keyring import ConfigurationError
from adtnsim.node import Scheduler
from conftest import scenario


class TestParsing:
    def test_defaults(self):
        cfg = config_from_dict({"nodes": {"count": 2},
                                "groups": [{"id": "A", "members": [0, 1]}]})
        assert cfg.frame_size == 1024
        assert cfg.policies.scheduler is Scheduler.FIFO

    def test_toml_and_json_equivalent(self, tmp_path):
        toml_path = tmp_path / "s.toml"
        toml_path.write_text(
            'seed = 3\ntotal_ticks = 50\n'
            '[nodes]\ncount = 2\n'
            '[[groups]]\nid = "A"\nmembers = [0, 1]\n'
        )
        json_path = tmp_path / "s.json"
        json_path.write_text(json.dumps({
            "seed": 3, "total_ticks": 50, "nodes": {"count": 2},
            "groups": [{"id": "A", "members": [0, 1]}],
        }))
        assert load_config(toml_path).resolved() == load_config(json_path).resolved()

    def test_resolved_round_trip(self):
        cfg = config_from_dict(scenario())
        again = config_from_dict(cfg.resolved())
        assert again.resolved() == cfg.resolved()
        assert again.run_id() == cfg.run_id()

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigurationError, match="typo_field"):
            config_from_dict(scenario(typo_field=1))

    def test_unknown_policy_rejected(self):
        with pytest.raises(ConfigurationError, match="policies"):
            config_from_dict(scenario(policies={"nope": 1}))


class TestValidation:
    def test_unknown_group_member_named(self):
        bad = scenario(groups=[{"id": "A", "members": [0, 99]}])
        with pytest.raises(ConfigurationError, match=r"groups\['A'\].members"):
            config_from_dict(bad)

    def test_traffic_unknown_node(self):
        bad = scenario(traffic=[{"tick": 0, "node": 42, "payload": "x"}])
        with pytest.raises(ConfigurationError, match=r"traffic\[0\].node"):
            config_from_dict(bad)

    def test_traffic_payload_xor_size(self):
        bad = scenario(traffic=[{"tick": 0, "node": 0,
                                 "payload": "x", "payload_size": 4}])
        with pytest.raises(ConfigurationError, match="exactly one"):
            config_from_dict(bad)

    def test_frame_size_floor(self):
        with pytest.raises(ConfigurationError, match="frame_size"):
            config_from_dict(scenario(frame_size=32))

    def test_oversize_traffic_payload(self):
        bad = scenario(traffic=[{"tick": 0, "node": 0, "payload_size": 4000}])
        with pytest.raises(ConfigurationError, match="max_payload"):
            config_from_dict(bad)

    def test_jammer_needs_radius(self):
        bad = scenario(adversaries=[{"type": "jammer", "radius": 0.0}])
        with pytest.raises(ConfigurationError, match="radius"):
            config_from_dict(bad)

    def test_adversary_unknown_key_group(self):
        bad = scenario(adversaries=[{"type": "passive", "keys": ["Z"]}])
        with pytest.raises(ConfigurationError, match="unknown group 'Z'"):
            config_from_dict(bad)

    def test_node_override_unknown_field(self):
        bad = scenario(node_overrides=[{"node": 0, "warp_speed": 9}])
        with pytest.raises(ConfigurationError, match="warp_speed"):
            config_from_dict(bad)


class TestOverrides:
    def test_dotted_set(self):
        raw = apply_overrides(scenario(), ["policies.tx_period=5", "seed=9"])
        cfg = config_from_dict(raw)
        assert cfg.policies.tx_period == 5
        assert cfg.seed == 9

    def test_string_values_pass_through(self):
        raw = apply_overrides(scenario(), ["policies.scheduler=least-popular"])
        cfg = config_from_dict(raw)
        assert cfg.policies.scheduler is Scheduler.LEAST_POPULAR

    def test_bad_override_shape(self):
        with pytest.raises(ConfigurationError, match="key=value"):
            apply_overrides(scenario(), ["oops"])


class TestDerived:
    def test_group_keys_deterministic_and_distinct(self):
        cfg = config_from_dict(scenario())
        assert cfg.group_key("A").key == cfg.group_key("A").key
        assert cfg.group_key("A").key != cfg.group_key("B").key

    def test_node_policy_overrides_merge(self):
        cfg = config_from_dict(
            scenario(node_overrides=[{"node": 1, "tx_period": 9}])
        )
        assert cfg.policies_for(1).tx_period == 9
        assert cfg.policies_for(0).tx_period == 2
