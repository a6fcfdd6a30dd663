import json

import numpy as np
import pytest

import steindisc as sd
from steindisc.discrepancy import RPhiSDConfig
from steindisc.features import FeatureSpec, applied_feature
from steindisc.proposals import log_density, sample as draw


@pytest.fixture(scope="module")
def point_sample():
    return sd.SampleSet(np.zeros((1, 1)))


class TestConfig:
    def test_json_round_trip(self, small_sample):
        cfg = sd.default_config(0.25, 1, "l1_imq", sample=small_sample, seed=3)
        back = RPhiSDConfig.from_dict(json.loads(cfg.to_json()))
        assert back == cfg

    def test_validate_catches_tampering(self, small_sample):
        cfg = sd.default_config(0.25, 1, "l1_imq", sample=small_sample)
        cfg.xi = 0.2
        with pytest.raises(ValueError):
            cfg.validate()

    def test_r_override(self, small_sample):
        cfg = sd.default_config(0.25, 1, "l1_imq", sample=small_sample,
                                overrides={"r": 1.5})
        assert np.isclose(cfg.r, 1.5, rtol=1e-12)
        # proposal exponent is invariant to the r/beta' split
        assert np.isclose(cfg.proposal_exponent, -(1 + cfg.df) / 2.0, rtol=1e-12)


class TestRphisd:
    def test_m1_degenerate_formula(self, gauss1, point_sample):
        cfg = sd.default_config(0.25, 1, "l1_imq", sample=point_sample,
                                overrides={"c": 1.0}, M=1, seed=5)
        res = sd.rphisd(point_sample, gauss1, cfg)
        prop = cfg.proposal(point_sample.mean)
        z = draw(prop, 1, np.random.default_rng(5))
        a = applied_feature(point_sample, gauss1, cfg.feature_spec(point_sample.mean), z[0])
        want = abs(a[0]) * np.exp(-log_density(prop, z[0]) / cfg.r)
        assert np.isclose(res.value, want, rtol=1e-12)

    def test_permutation_bitwise(self, gauss5):
        rng = np.random.default_rng(1)
        pts = rng.standard_normal((64, 5))
        perm = rng.permutation(64)
        c1 = sd.default_config(0.25, 5, "l2_sechexp", sample=sd.SampleSet(pts), seed=9)
        c2 = sd.default_config(0.25, 5, "l2_sechexp", sample=sd.SampleSet(pts[perm]), seed=9)
        v1 = sd.rphisd(sd.SampleSet(pts), gauss5, c1)
        v2 = sd.rphisd(sd.SampleSet(pts[perm]), gauss5, c2)
        assert v1.value == v2.value

    def test_same_seed_bitwise(self, gauss1, small_sample):
        cfg = sd.default_config(0.25, 1, "l1_imq", sample=small_sample, seed=21)
        assert sd.rphisd(small_sample, gauss1, cfg).value == \
            sd.rphisd(small_sample, gauss1, cfg).value

    def test_value_squared_is_per_dim_sum(self, gauss5):
        rng = np.random.default_rng(2)
        s = sd.SampleSet(rng.standard_normal((40, 5)))
        cfg = sd.default_config(0.25, 5, "l1_imq", sample=s, seed=1)
        res = sd.rphisd(s, gauss5, cfg)
        assert np.isclose(res.value ** 2, res.per_dim.sum(), rtol=1e-12)
        assert np.all(res.per_dim >= 0)

    def test_off_target_scaled_value_grows(self, gauss1):
        # for draws not from the target, N * value^2 grows with N
        meds = {}
        for n in (500, 1000, 2000):
            vals = []
            for rep in range(20):
                rng = np.random.default_rng((n, rep))
                s = sd.SampleSet(rng.laplace(0, 1 / np.sqrt(2), (n, 1)))
                cfg = sd.default_config(0.25, 1, "l1_imq", sample=s, seed=rep)
                vals.append(n * sd.rphisd(s, gauss1, cfg).value ** 2)
            meds[n] = np.median(vals)
        assert meds[500] < meds[1000] < meds[2000]

    def test_draw_order_does_not_change_bits(self, gauss5):
        # per-dimension means use exact summation, so reordering the frozen
        # draws (and their weights with them) cannot move a single bit
        from hypothesis import given, settings, strategies as st

        rng = np.random.default_rng(3)
        s = sd.SampleSet(rng.standard_normal((30, 5)))
        cfg = sd.default_config(0.25, 5, "l1_imq", sample=s, seed=2, M=16)
        z = draw(cfg.proposal(s.mean), cfg.M, np.random.default_rng(2))

        @settings(max_examples=20, deadline=None)
        @given(st.randoms(use_true_random=False))
        def check(r):
            order = list(range(cfg.M))
            r.shuffle(order)
            a = sd.rphisd(s, sd.gaussian_model(5), cfg, z_draws=z)
            b = sd.rphisd(s, sd.gaussian_model(5), cfg, z_draws=z[order])
            assert a.value == b.value

        check()

    def test_result_json_fields(self, gauss1, small_sample):
        cfg = sd.default_config(0.25, 1, "l1_imq", sample=small_sample, seed=2)
        doc = json.loads(sd.rphisd(small_sample, gauss1, cfg).to_json())
        assert set(doc) == {"value", "per_dim", "r", "M", "seed", "elapsed_s"}


class TestQuadratureOracle:
    def test_point_mass_closed_form(self, gauss1, point_sample):
        # |Q(T Phi)(z)|^2 = z^2 (1+z^2)^-3 whose integral over R is pi/8
        spec = FeatureSpec("imq", c_prime=1.0, beta_prime=-0.5)
        per = sd.phisd_quadrature_per_dim(point_sample, gauss1, spec, r=2.0)
        assert np.isclose(per[0], np.pi / 8.0, rtol=1e-9)
        assert np.isclose(sd.phisd_quadrature(point_sample, gauss1, spec, 2.0),
                          np.sqrt(np.pi / 8.0), rtol=1e-9)

    def test_two_dim_closed_form(self):
        # point mass at the origin in D=2 with F = (1+|u|^2)^(-2):
        # each per-dim integral is 16 int z_d^2 (1+|z|^2)^(-6) dz = 2 pi/5
        # (polar coordinates, confirmed symbolically)
        model = sd.gaussian_model(2)
        s = sd.SampleSet(np.zeros((1, 2)))
        spec = FeatureSpec("imq", c_prime=1.0, beta_prime=-2.0)
        per = sd.phisd_quadrature_per_dim(s, model, spec, r=2.0)
        assert np.allclose(per, 2.0 * np.pi / 5.0, rtol=1e-6)

    def test_rejects_high_dim(self, gauss5):
        s = sd.SampleSet(np.zeros((1, 5)))
        spec = FeatureSpec("imq", c_prime=1.0, beta_prime=-3.0)
        with pytest.raises(ValueError):
            sd.phisd_quadrature(s, gauss5, spec, 1.0)

    def test_importance_mean_matches_quadrature(self, gauss1):
        rng = np.random.default_rng(3)
        s = sd.SampleSet(rng.standard_normal((25, 1)))
        cfg = sd.default_config(0.25, 1, "l1_imq", sample=s, seed=0)
        per = sd.phisd_quadrature_per_dim(s, gauss1, cfg.feature_spec(s.mean), cfg.r)
        diag = sd.second_moment_diagnostic(s, gauss1, cfg, 40_000, seed=8)
        se = np.sqrt((diag["second"] - diag["mean"] ** 2) / 40_000)
        assert np.all(np.abs(diag["mean"] - per) < 3.0 * se)


class TestSecondMomentDiagnostic:
    def test_requires_enough_draws(self, gauss1, small_sample):
        cfg = sd.default_config(0.25, 1, "l1_imq", sample=small_sample)
        with pytest.raises(ValueError):
            sd.second_moment_diagnostic(small_sample, gauss1, cfg, 10)

    def test_bounded_weights_give_c1_moments(self, gauss1, small_sample):
        # when the weight function is bounded, E[Y^2] <= sup(Y) E[Y], so the
        # ratio at gamma = 1 is controlled by the weight bound
        from steindisc._backends import stein_feature_sums
        cfg = sd.default_config(0.25, 1, "l2_sechexp", sample=small_sample, seed=4)
        prop = cfg.proposal(small_sample.mean)
        z = draw(prop, 5000, np.random.default_rng(4))
        spec = cfg.feature_spec(small_sample.mean)
        kind, p1, p2 = spec.backend_args()
        pts = small_sample.canonical_points()
        a = stein_feature_sums(pts, gauss1.score(pts), z, small_sample.mean,
                               kind, p1, p2, spec.tilt.backend_a()) / small_sample.n
        y = np.abs(a[:, 0]) ** cfg.r * np.exp(-log_density(prop, z))
        d = sd.second_moment_diagnostic(small_sample, gauss1, cfg, 5000, seed=4)
        assert d["second"][0] <= y.max() * d["mean"][0] * (1 + 1e-9)
        assert np.all(d["ratio_gamma"] > 0)

    def test_scale_invariance(self, gauss1):
        # scaling points and bandwidths jointly leaves the ratios invariant
        # up to Monte Carlo error for the scale-free sech family
        rng = np.random.default_rng(9)
        pts = rng.standard_normal((100, 1))
        s1 = sd.SampleSet(pts)
        cfg1 = sd.default_config(0.25, 1, "l1_imq", sample=s1, seed=7)
        d1 = sd.second_moment_diagnostic(s1, gauss1, cfg1, 20_000, seed=7)

        scale = 3.0
        s2 = sd.SampleSet(pts * scale)
        scaled_model = sd.ScoreModel(dim=1, score=lambda x: -np.asarray(x) / scale ** 2,
                                     label="scaled-gaussian")
        cfg2 = sd.default_config(0.25, 1, "l1_imq", sample=s2, seed=7,
                                 overrides={"c": cfg1.c * scale})
        d2 = sd.second_moment_diagnostic(s2, scaled_model, cfg2, 20_000, seed=7)
        # Y scales by a power of `scale`; the gamma-ratio picks up the scale
        # only through E[Y]^gamma, so compare the dimensionless spread
        r1 = d1["second"] / d1["mean"] ** 2
        r2 = d2["second"] / d2["mean"] ** 2
        assert np.allclose(r1, r2, rtol=0.2)


class TestEfficiency:
    def test_reference_against_itself(self, gauss5):
        rng = np.random.default_rng(5)
        s = sd.SampleSet(rng.standard_normal((50, 5)))
        rows = sd.efficiency_experiment(s, gauss5, [0.25], [3000], trials=5,
                                        family="l1_imq", seed=0, reference_m=3000)
        assert rows[0]["prob"] == 1.0

    def test_threads_do_not_change_table(self, gauss1):
        rng = np.random.default_rng(8)
        s = sd.SampleSet(rng.standard_normal((80, 1)))
        kw = dict(gammas=[0.25], m_grid=[2, 6], trials=12, family="l1_imq",
                  seed=3, preset="sample-quality")
        assert sd.efficiency_experiment(s, gauss1, **kw, threads=1) == \
            sd.efficiency_experiment(s, gauss1, **kw, threads=4)

    def test_monotone_in_m(self, gauss1):
        rng = np.random.default_rng(6)
        s = sd.SampleSet(rng.standard_normal((200, 1)))
        rows = sd.efficiency_experiment(s, gauss1, [0.25], [1, 4, 16], trials=60,
                                        family="l1_imq", seed=1, preset="gof")
        probs = [r["prob"] for r in rows]
        assert probs[0] <= probs[1] + 0.1 and probs[1] <= probs[2] + 0.1
        assert probs[2] >= 0.9

    @pytest.mark.xfail(reason="the L1-before-L2 efficiency ordering does not hold "
                              "for this construction; kept as a characterization test",
                       strict=False)
    def test_l1_reaches_threshold_first(self, gauss1):
        rng = np.random.default_rng(7)
        s = sd.SampleSet(rng.standard_normal((300, 1)))
        grid = [1, 2, 5, 10, 20, 40]

        def crossing(family):
            rows = sd.efficiency_experiment(s, gauss1, [0.25], grid, trials=150,
                                            family=family, seed=2, preset="gof")
            for r in rows:
                if r["prob"] >= 0.95:
                    return r["M"]
            return np.inf

        assert crossing("l1_imq") < crossing("l2_sechexp")
