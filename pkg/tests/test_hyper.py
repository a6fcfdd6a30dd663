import json

import numpy as np
import pytest

import steindisc as sd
from steindisc.discrepancy import RPhiSDConfig


class TestMedianDistance:
    def test_two_points(self):
        s = sd.SampleSet(np.array([[0.0, 0.0], [0.0, 3.0]]))
        assert sd.median_distance(s, 2) == 3.0
        assert sd.median_distance(s, 1) == 3.0

    def test_duplicated_dataset_unchanged(self):
        rng = np.random.default_rng(0)
        pts = rng.standard_normal((40, 2))
        m1 = sd.median_distance(sd.SampleSet(pts), 2, seed=1)
        m2 = sd.median_distance(sd.SampleSet(np.vstack([pts, pts])), 2, seed=1)
        # zero distances from duplicates are excluded, so the median moves
        # only through the subsampling, not toward zero
        assert abs(m1 - m2) < 0.35 * m1

    def test_standard_normal_value(self):
        # median |X - X'| = sqrt(2) * Phi^{-1}(3/4) ~ 0.954, confirmed by
        # direct simulation before freezing
        s = sd.sample_alternative("gaussian", {"dim": 1}, 10 ** 4, seed=2)
        med = sd.median_distance(s, 2, subsample_size=10 ** 4, seed=0)
        assert abs(med - 0.9539) < 0.05 * 0.9539

    def test_identical_points_error(self):
        s = sd.SampleSet(np.ones((5, 2)))
        with pytest.raises(ValueError):
            sd.median_distance(s, 2)

    def test_norm_validation(self):
        s = sd.SampleSet(np.array([[0.0], [1.0]]))
        with pytest.raises(ValueError):
            sd.median_distance(s, 3)


class TestDefaultConfig:
    def test_gamma_quarter_constants(self, small_sample):
        cfg = sd.default_config(0.25, 1, "l1_imq", sample=small_sample)
        assert abs(cfg.alpha - 1.0 / 12.0) < 1e-15
        assert abs(cfg.lambda_bar - 23.0 / 24.0) < 1e-15
        assert abs(cfg.xi - 0.16) < 1e-15

    def test_d10_derivation(self):
        s = sd.SampleSet(np.random.default_rng(1).standard_normal((50, 10)))
        cfg = sd.default_config(0.25, 10, "l1_imq", sample=s)
        assert abs(cfg.xi_under - 16.0 / 105.0) < 1e-12
        assert abs(cfg.beta_prime - (-32.8125)) < 1e-12
        assert abs(cfg.r - 1.0) < 1e-12
        assert abs(cfg.proposal_exponent - (-5.25)) < 1e-12

    def test_rbm_overrides_match_preset(self, small_sample):
        med2 = sd.median_distance(small_sample, 2)
        over = sd.default_config(0.25, 1, "l1_imq", sample=small_sample,
                                 overrides={"c": 10 * med2, "df": 2.5})
        preset = sd.default_config(0.25, 1, "l1_imq", sample=small_sample, preset="rbm")
        assert np.isclose(over.c, preset.c, rtol=1e-12)
        assert over.df == preset.df == 2.5

    def test_sample_quality_preset_fixed_constants(self):
        cfg = sd.default_config(0.25, 2, "l1_imq", preset="sample-quality")
        assert cfg.c == 1.0 and cfg.c_rule == "fixed"
        cfg2 = sd.default_config(0.25, 2, "l2_sechexp", preset="sample-quality")
        assert np.isclose(cfg2.a, 1.0 / np.sqrt(2 * np.pi), rtol=1e-14)

    def test_xi_strictly_between(self, small_sample):
        for family in ("l1_imq",):
            for gamma in (0.05, 0.25, 1.0):
                cfg = sd.default_config(gamma, 3, family,
                                        sample=sd.SampleSet(
                                            np.random.default_rng(0).standard_normal((30, 3))))
                assert cfg.xi_under < cfg.xi < 1.0

    def test_invalid_inputs(self, small_sample):
        with pytest.raises(ValueError):
            sd.default_config(-0.1, 1, "l1_imq", sample=small_sample)
        with pytest.raises(ValueError):
            sd.default_config(0.25, 1, "l3_imq", sample=small_sample)
        with pytest.raises(ValueError):
            sd.default_config(0.25, 1, "l1_imq", sample=small_sample,
                              overrides={"nope": 1})
        with pytest.raises(ValueError):
            sd.default_config(0.25, 1, "l1_imq")  # median needs a sample

    def test_json_materializes_derived_fields(self, small_sample):
        cfg = sd.default_config(0.25, 1, "l2_sechexp", sample=small_sample)
        doc = json.loads(cfg.to_json())
        for key in ("alpha", "lambda_bar", "xi", "kappa", "a_feature",
                    "proposal_exponent"):
            assert key in doc


class TestRefit:
    def test_median_rule_refits(self, small_sample):
        cfg = sd.default_config(0.25, 1, "l1_imq", sample=small_sample, seed=0)
        rng = np.random.default_rng(5)
        wide = sd.SampleSet(5.0 * rng.standard_normal((80, 1)))
        new = sd.refit_config(cfg, wide, seed=1)
        assert new.c > 2.0 * cfg.c
        assert np.isclose(new.c_prime, new.lambda_bar * new.c / 2.0, rtol=1e-12)

    def test_fixed_rule_untouched(self):
        cfg = sd.default_config(0.25, 1, "l1_imq", preset="sample-quality", seed=0)
        rng = np.random.default_rng(6)
        wide = sd.SampleSet(5.0 * rng.standard_normal((80, 1)))
        assert sd.refit_config(cfg, wide, seed=1).c == cfg.c
