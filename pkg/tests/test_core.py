"""Data types, config serialization, and validation."""

import numpy as np
import pytest

from gtsne import (
    ConfigError,
    Dataset,
    EmbedConfig,
    Embedding,
    center_columns,
    check_config,
    config_to_text,
    parse_config_text,
    resolve_config,
    validate_config,
)
from gtsne.core import parse_config_items


class TestDataset:
    def test_coerces_to_float64(self):
        ds = Dataset(x=[[1, 2], [3, 4]])
        assert ds.x.dtype == np.float64
        assert ds.n == 2 and ds.dim == 2

    def test_rejects_single_point(self):
        with pytest.raises(ValueError, match="at least 2 points"):
            Dataset(x=np.ones((1, 3)))

    def test_rejects_wrong_ndim(self):
        with pytest.raises(ValueError, match="2-D"):
            Dataset(x=np.ones(5))

    def test_rejects_non_finite(self):
        x = np.ones((3, 2))
        x[1, 1] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            Dataset(x=x)

    def test_labels_length_checked(self):
        with pytest.raises(ValueError, match="labels"):
            Dataset(x=np.ones((3, 2)), labels=[0, 1])

    def test_labels_coerced_to_int64(self):
        ds = Dataset(x=np.ones((3, 2)), labels=[0.0, 1.0, 2.0])
        assert ds.labels.dtype == np.int64
        assert list(ds.labels) == [0, 1, 2]


class TestEmbedding:
    def test_accepts_matrix(self):
        e = Embedding(y=np.zeros((4, 2)))
        assert e.n == 4 and e.dim == 2

    def test_rejects_non_finite(self):
        y = np.zeros((2, 2))
        y[0, 0] = np.inf
        with pytest.raises(ValueError, match="non-finite"):
            Embedding(y=y)


class TestConfigDefaults:
    def test_stock_defaults(self):
        cfg = EmbedConfig()
        assert cfg.perplexity == 30.0
        assert cfg.alpha == 1e-2
        assert cfg.beta == 5e-2
        assert cfg.n_clusters == 90
        assert cfg.out_dims == 2
        assert cfg.init_stddev == 1e-2
        assert cfg.learning_rate == 200.0
        assert cfg.momentum_initial == 0.5
        assert cfg.momentum_final == 0.8
        assert cfg.momentum_switch_iter == 250
        assert cfg.n_iter == 1000
        assert cfg.bh_theta == 0.5
        assert cfg.gradient_mode == "exact"

    def test_shape_dependent_fields_start_unset(self):
        cfg = EmbedConfig()
        assert cfg.pca_dims is None
        assert cfg.n_neighbors is None


class TestConfigText:
    def test_round_trip_equality(self):
        cfg = EmbedConfig(perplexity=12.5, alpha=0.1 + 0.2, seed=42, pca_dims=7)
        text = config_to_text(cfg)
        assert parse_config_text(text) == cfg

    def test_round_trip_is_byte_stable(self):
        cfg = EmbedConfig(alpha=1.0 / 3.0, beta=0.07, learning_rate=199.99)
        text = config_to_text(cfg)
        assert config_to_text(parse_config_text(text)) == text

    def test_none_and_bool_spelling(self):
        text = config_to_text(EmbedConfig())
        assert "pca_dims = none" in text
        assert "pca_center = true" in text

    def test_comments_and_blanks_skipped(self):
        items = parse_config_items("# a comment\n\nseed = 5\n")
        assert items == {"seed": 5}

    def test_unknown_key_names_line(self):
        with pytest.raises(ValueError, match="line 2.*sigma"):
            parse_config_items("seed = 1\nsigma = 3\n")

    def test_bad_value_names_line(self):
        with pytest.raises(ValueError, match="line 1"):
            parse_config_items("perplexity = thirty\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(ValueError, match="key = value"):
            parse_config_items("perplexity 30\n")


class TestResolve:
    def test_neighbor_default_is_three_perplexity(self):
        cfg = resolve_config(EmbedConfig(perplexity=10.0), n=200, d_in=5)
        assert cfg.n_neighbors == 30

    def test_neighbor_default_capped_at_n_minus_1(self):
        cfg = resolve_config(EmbedConfig(perplexity=30.0), n=50, d_in=5)
        assert cfg.n_neighbors == 49

    def test_pca_default_is_min_50_d(self):
        assert resolve_config(EmbedConfig(), n=100, d_in=3).pca_dims == 3
        assert resolve_config(EmbedConfig(), n=1000, d_in=80).pca_dims == 50

    def test_explicit_values_kept(self):
        cfg = resolve_config(
            EmbedConfig(n_neighbors=12, pca_dims=4), n=100, d_in=10
        )
        assert cfg.n_neighbors == 12 and cfg.pca_dims == 4


class TestValidate:
    def test_defaults_valid_on_three_line_walk_shape(self):
        assert validate_config(EmbedConfig(), n=2100, d_in=3) == []

    def test_perplexity_must_undercut_neighbors(self):
        bad = validate_config(
            EmbedConfig(perplexity=30.0, n_neighbors=30), n=2100, d_in=3
        )
        assert len(bad) == 1
        assert "< n_neighbors" in bad[0]

    def test_oversized_cluster_count_reported(self):
        bad = validate_config(EmbedConfig(n_clusters=90), n=50, d_in=5)
        assert any("n_clusters=90" in msg for msg in bad)

    def test_all_violations_reported_not_just_first(self):
        cfg = EmbedConfig(
            perplexity=-1.0, alpha=-0.5, n_clusters=1, learning_rate=0.0
        )
        bad = validate_config(cfg, n=100, d_in=5)
        assert len(bad) >= 4

    def test_map_dimension_restricted(self):
        bad = validate_config(EmbedConfig(out_dims=4, pca_dims=10), n=100, d_in=20)
        assert any("out_dims=4" in msg for msg in bad)

    def test_map_must_be_narrower_than_reduction(self):
        bad = validate_config(EmbedConfig(out_dims=3, pca_dims=3), n=100, d_in=20)
        assert any("pca_dims" in msg for msg in bad)

    def test_gradient_mode_membership(self):
        bad = validate_config(EmbedConfig(gradient_mode="fast"), n=100, d_in=5)
        assert any("gradient_mode" in msg for msg in bad)

    def test_check_config_raises_with_violation_list(self):
        with pytest.raises(ConfigError) as exc:
            check_config(EmbedConfig(n_clusters=1), n=100, d_in=5)
        assert any("n_clusters" in v for v in exc.value.violations)

    def test_check_config_returns_resolved(self):
        cfg = check_config(EmbedConfig(), n=2100, d_in=3)
        assert cfg.pca_dims == 3
        assert cfg.n_neighbors == 90


class TestCenterColumns:
    def test_zero_matrix_unchanged(self):
        centered, means = center_columns(np.zeros((4, 3)))
        assert np.all(centered == 0) and np.all(means == 0)

    def test_single_row_centers_to_zero(self):
        centered, means = center_columns(np.array([[2.0, -3.0, 7.0]]))
        assert np.all(centered == 0)
        assert np.array_equal(means, [2.0, -3.0, 7.0])

    def test_two_row_hand_case(self):
        centered, means = center_columns(np.array([[1.0, 2.0], [3.0, 4.0]]))
        assert np.array_equal(centered, [[-1.0, -1.0], [1.0, 1.0]])
        assert np.array_equal(means, [2.0, 3.0])

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="non-finite"):
            center_columns(np.array([[1.0, np.inf]]))
