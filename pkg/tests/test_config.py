from pathlib import Path

import numpy as np
import pytest

from wsndetect.config import ConfigError, ExperimentConfig, load_config, parse_kv, parse_phi_grid

CONFIGS = Path(__file__).resolve().parents[1] / "src" / "wsndetect" / "configs"


def test_parse_kv_comments_and_errors():
    assert parse_kv("# c\n\na.b = 1\n") == {"a.b": "1"}
    with pytest.raises(ConfigError):
        parse_kv("novalue\n")
    with pytest.raises(ConfigError):
        parse_kv("a=1\na=2\n")


def test_phi_grid():
    np.testing.assert_array_equal(parse_phi_grid("0:360:90"), [0, 90, 180, 270])
    np.testing.assert_array_equal(parse_phi_grid("10, 20"), [10, 20])
    with pytest.raises(ConfigError):
        parse_phi_grid("0:10")


@pytest.mark.parametrize("name", ["paper_fig1.cfg", "paper_fig3.cfg", "paper_fig4.cfg"])
def test_shipped_configs_load(name):
    cfg = load_config(CONFIGS / name)
    assert cfg.L == 20


def test_fig_configs_pin_reference_parameters():
    fig3, fig4 = load_config(CONFIGS / "paper_fig3.cfg"), load_config(CONFIGS / "paper_fig4.cfg")
    assert fig3.cov_known and not fig4.cov_known
    for cfg in (fig3, fig4):
        assert (cfg.n_sensors, cfg.target_edges, cfg.rho, cfg.n_it, cfg.side) == (10, 20, 0.3, 20, 100.0)


def test_explicit_covariance(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("model.theta1 = 1, 2\nmodel.cov = 2, 0.5, 0.5, 1\n")
    cfg = load_config(p)
    assert cfg.n_sensors == 2
    np.testing.assert_array_equal(cfg.model().cov, [[2, 0.5], [0.5, 1]])


@pytest.mark.parametrize(
    "text",
    [
        "model.bogus = 1\n",
        "model.rho = 1.2\n",
        "model.theta1 = 1, 2\nmodel.n_sensors = 3\n",
        "model.cov = 1, 2, 3\nmodel.theta1 = 1\n",
        "model.L = abc\n",
        "consensus.n_it = 0\n",
        "experiment.statistics = foo\n",
        "model.cov_known = maybe\n",
        "model.cov_known = false\nmodel.L = 5\n",
    ],
)
def test_invalid_configs(tmp_path, text):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    with pytest.raises(ConfigError):
        load_config(p)


def test_missing_network_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("network.file = nothere.txt\n")
    with pytest.raises(FileNotFoundError):
        load_config(p)


def test_with_updates_validates():
    with pytest.raises(ConfigError):
        ExperimentConfig().with_updates(n_trials=0)
